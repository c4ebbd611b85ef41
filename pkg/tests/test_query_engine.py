"""
Tests for exact top-k evaluation and the MaxScore processor.
"""

import numpy as np
import pytest

from thresholdkit.exceptions import ArgumentError, ContractViolationError
from thresholdkit.services.estimators import estimate_with_lookups, with_quantile_backup
from thresholdkit.services.query_engine import (
    exact_threshold,
    exact_topk,
    maxscore_topk,
)


@pytest.fixture
def two_term_index(make_index):
    """t1: (0,2),(1,1); t2: (1,1),(2,3)."""
    return make_index({"t1": [(0, 2), (1, 1)], "t2": [(1, 1), (2, 3)]})


def _naive_topk(index, query, k):
    """Per-document score table, sorted by score then docID."""
    table = {}
    for doc in range(index.document_count):
        score = sum(index.lookup(term, doc) or 0 for term in query.terms)
        if score > 0:
            table[doc] = score
    entries = sorted(table.items(), key=lambda item: (-item[1], item[0]))[:k]
    return entries, entries[-1][1] if len(entries) == k else 0


class TestExactTopK:
    """Test suite for exact_topk and exact_threshold."""

    def test_hand_enumeration(self, two_term_index):
        """Test scores 2, 2 and 3 with a docID tiebreak."""
        query = two_term_index.resolve_query("t1 t2")

        result = exact_topk(two_term_index, query, 2)

        assert result.entries == [(2, 3), (0, 2)]
        assert result.threshold == 2
        assert exact_threshold(two_term_index, query, 2) == 2

    def test_underfull(self, two_term_index):
        """Test that fewer matches than k give threshold 0."""
        query = two_term_index.resolve_query("t1 t2")

        result = exact_topk(two_term_index, query, 5)

        assert result.entries == [(2, 3), (0, 2), (1, 2)]
        assert result.threshold == 0

    def test_single_term(self, make_index):
        """Test that a single-term threshold is the k-th largest impact."""
        index = make_index({"t": [(0, 4), (1, 8), (2, 6), (3, 1)]})

        assert exact_threshold(index, index.resolve_query("t"), 3) == 4

    def test_empty_query(self, two_term_index):
        """Test that an all-unknown query has threshold 0."""
        query = two_term_index.resolve_query("nothing here")

        assert exact_topk(two_term_index, query, 1).entries == []
        assert exact_threshold(two_term_index, query, 1) == 0

    def test_invalid_k(self, two_term_index):
        """Test that k must be positive."""
        with pytest.raises(ArgumentError):
            exact_topk(two_term_index, two_term_index.resolve_query("t1"), 0)

    def test_matches_naive_table(self, index, multi_term_queries):
        """Test exact_topk against a per-document score table."""
        for query in multi_term_queries[:40]:
            for k in (1, 10, 100):
                entries, threshold = _naive_topk(index, query, k)
                result = exact_topk(index, query, k)
                assert result.entries == entries
                assert result.threshold == threshold

    def test_stored_thresholds_agree(self, index, store):
        """Test that every stored quantile equals the exact threshold."""
        for key in list(store.quantiles)[::5]:
            query = index.query_for_terms(key)
            for k in store.k_values:
                assert exact_threshold(index, query, k) == store.threshold(key, k)


class TestMaxScore:
    """Test suite for maxscore_topk."""

    def test_zero_threshold_is_exact(self, index, multi_term_queries):
        """Test that an unseeded run returns the exact top-k."""
        for query in multi_term_queries:
            for k in (10, 100):
                exact = exact_topk(index, query, k)
                result, stats = maxscore_topk(index, query, k)
                assert result.threshold == exact.threshold
                assert sorted(result.scores, reverse=True) == exact.scores
                assert stats.documents_evaluated >= len(result.entries)

    def test_seeded_thresholds_agree(self, index, store, multi_term_queries):
        """Test thresholds and work for seeds 0, an estimate and the exact value."""
        for query in multi_term_queries:
            k = 10
            exact = exact_threshold(index, query, k)
            estimate = with_quantile_backup(
                estimate_with_lookups(store, index, query, k, 500, 100),
                store,
                query,
                k,
            ).value
            assert 0 <= estimate <= exact

            work = []
            for seed in (0, estimate, exact):
                result, stats = maxscore_topk(index, query, k, seed, validate=True)
                assert result.threshold == exact
                work.append(stats.postings_scored)
            assert work[0] >= work[1] >= work[2]

    def test_single_term(self, make_index):
        """Test the degenerate one-list partition."""
        index = make_index({"t": [(0, 4), (1, 8), (2, 6), (3, 1)]})
        query = index.resolve_query("t")

        result, stats = maxscore_topk(index, query, 2)

        assert result.entries == [(1, 8), (2, 6)]
        assert result.threshold == 6
        assert stats.postings_scored <= 4

    def test_ties_keep_smaller_docids(self, make_index):
        """Test that equal scores resolve to the smaller docIDs."""
        index = make_index({"t": [(0, 5), (1, 5), (2, 5), (3, 5)]})

        result, _ = maxscore_topk(index, index.resolve_query("t"), 2)

        assert result.entries == [(0, 5), (1, 5)]

    def test_underfull_returns_initial_threshold(self, two_term_index):
        """Test that fewer than k matches return the seed."""
        query = two_term_index.resolve_query("t1 t2")

        result, _ = maxscore_topk(two_term_index, query, 5, 0)

        assert result.threshold == 0
        assert len(result.entries) == 3

    def test_validation_catches_unsafe_seed(self, two_term_index):
        """Test that a seed above the exact threshold is reported."""
        query = two_term_index.resolve_query("t1 t2")

        with pytest.raises(ContractViolationError):
            maxscore_topk(two_term_index, query, 2, 3, validate=True)

    def test_invalid_arguments(self, two_term_index):
        """Test that k and the seed are range checked."""
        query = two_term_index.resolve_query("t1 t2")

        with pytest.raises(ArgumentError):
            maxscore_topk(two_term_index, query, 0)
        with pytest.raises(ArgumentError):
            maxscore_topk(two_term_index, query, 2, -1)

    def test_random_lists(self, make_index):
        """Test random posting lists against the exhaustive engine."""
        rng = np.random.default_rng(17)
        postings = {}
        for term in range(5):
            docs = np.sort(rng.choice(500, size=rng.integers(20, 200), replace=False))
            impacts = rng.integers(1, 50, size=docs.size)
            postings[f"t{term}"] = list(zip(docs.tolist(), impacts.tolist(), strict=True))
        index = make_index(postings, document_count=500)
        query = index.resolve_query("t0 t1 t2 t3 t4")

        for k in (1, 5, 25, 400):
            exact = exact_threshold(index, query, k)
            result, _ = maxscore_topk(index, query, k)
            assert result.threshold == exact
