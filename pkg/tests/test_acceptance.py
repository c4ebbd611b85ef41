"""
Collection-scale sweeps: safety, dominance, exactness, MaxScore work, MUF
ordering and latency on a 10k-document Zipfian corpus.
"""

import statistics
import time

import pytest

from thresholdkit.models.estimate_models import Budget, EstimationMethod, MethodConfig
from thresholdkit.services.catalog_service import (
    assign_depths,
    custom_policy,
    mine_subsets,
    single_term_catalog,
)
from thresholdkit.services.estimators import (
    estimate_combine_scores,
    estimate_quantile,
    estimate_remove_duplicates,
    estimate_with_lookups,
    with_quantile_backup,
)
from thresholdkit.services.eval_service import (
    EvaluationService,
    compute_muf,
    length_bucket,
    read_queries,
)
from thresholdkit.services.index_builder import build_index
from thresholdkit.services.prefix_service import build_store
from thresholdkit.services.query_engine import exact_threshold, maxscore_topk
from thresholdkit.services.synthetic import generate_corpus, generate_query_log

pytestmark = pytest.mark.slow

DOCUMENTS = 10_000
VOCABULARY = 3000
K_GRID = (10, 100, 1000)
AB_GRID = (100, 1000, 5000)
MIN_QUERIES = 500


@pytest.fixture(scope="module")
def collection(tmp_path_factory):
    """Index, mined store and held-out multi-term queries at collection scale."""
    root = tmp_path_factory.mktemp("collection")
    generate_corpus(root / "corpus.tsv", DOCUMENTS, VOCABULARY, mean_length=60, seed=5)
    generate_query_log(root / "train.txt", 3000, VOCABULARY, seed=6)
    generate_query_log(root / "test.txt", 900, VOCABULARY, seed=7)

    index = build_index(root / "corpus.tsv")
    stats = mine_subsets(root / "train.txt", index, 4)
    catalog = assign_depths(
        stats, custom_policy((10_000, 10_000, 4000, 3000)), max(K_GRID)
    )
    store = build_store(index, catalog, K_GRID, threads=4)
    queries = [
        (query_id, query)
        for query_id, query in read_queries(root / "test.txt", index)
        if len(query) >= 2
    ][:520]
    return index, store, queries


@pytest.fixture(scope="module")
def collection_queries(collection):
    """The held-out queries without their ids."""
    _, _, queries = collection
    assert len(queries) >= MIN_QUERIES
    return [query for _, query in queries]


class TestCollectionSafety:
    """Every estimator against the oracle over the full budget grid."""

    def test_never_overestimates(self, collection, collection_queries):
        """Test quantile, RD, CS and lookups for k, ab and lb across the grid."""
        index, store, _ = collection
        violations = []
        for position, query in enumerate(collection_queries):
            for k in K_GRID:
                exact = exact_threshold(index, query, k)
                if estimate_quantile(store, query, k).value > exact:
                    violations.append((position, k, "quantile"))
                for ab in AB_GRID:
                    rd = estimate_remove_duplicates(store, query, k, ab).value
                    cs = estimate_combine_scores(store, query, k, ab)[0].value
                    if max(rd, cs) > exact:
                        violations.append((position, k, ab, "rd/cs"))
                    for lb in (0, ab // 2, ab):
                        lookups = estimate_with_lookups(store, index, query, k, ab, lb)
                        if lookups.value > exact:
                            violations.append((position, k, ab, lb, "lookups"))

        assert violations == []

    def test_backed_ladder(self, collection, collection_queries):
        """Test quantile <= RD <= CS <= lookups after the backup, with lb = ab."""
        index, store, _ = collection
        violations = []
        for position, query in enumerate(collection_queries):
            for k in K_GRID:
                quantile = estimate_quantile(store, query, k).value
                for ab in AB_GRID:
                    estimates = (
                        estimate_remove_duplicates(store, query, k, ab),
                        estimate_combine_scores(store, query, k, ab)[0],
                        estimate_with_lookups(store, index, query, k, ab, ab),
                    )
                    rd, cs, lookups = (
                        with_quantile_backup(estimate, store, query, k).value
                        for estimate in estimates
                    )
                    if not quantile <= rd <= cs <= lookups:
                        violations.append((position, k, ab))

        assert violations == []

    def test_full_depth_is_exact(self, collection, collection_queries):
        """Test that full single-term prefixes with ab = lb = postings are exact."""
        index, _, _ = collection
        store = build_store(index, single_term_catalog(index), K_GRID, threads=4)
        misses = []
        for position, query in enumerate(collection_queries[:220]):
            ab = sum(len(index.posting_list(term)) for term in query.terms)
            for k in K_GRID:
                estimate = estimate_with_lookups(store, index, query, k, ab, ab)
                if estimate.value != exact_threshold(index, query, k):
                    misses.append((position, k))

        assert misses == []

    def test_stored_thresholds_are_exact(self, collection):
        """Test stored quantiles of a spread of subsets against the oracle."""
        index, store, _ = collection
        keys = list(store.quantiles)[:: max(1, len(store.quantiles) // 300)]
        for key in keys:
            query = index.query_for_terms(key)
            for k in K_GRID:
                assert store.threshold(key, k) == exact_threshold(index, query, k)


class TestCollectionMaxScore:
    """MaxScore seeded with no, estimated and exact thresholds."""

    def test_threshold_and_work(self, collection, collection_queries):
        """Test oracle thresholds, monotone work and savings from the estimate."""
        index, store, _ = collection
        mismatches = 0
        non_monotone = 0
        unseeded_work = []
        seeded_work = []
        for query in collection_queries:
            exact = exact_threshold(index, query, 10)
            estimate = with_quantile_backup(
                estimate_with_lookups(store, index, query, 10, 1000, 1000), store, query, 10
            ).value
            work = []
            for theta in (0, estimate, exact):
                result, stats = maxscore_topk(index, query, 10, theta)
                mismatches += result.threshold != exact
                work.append(stats.postings_scored)
            non_monotone += not work[0] >= work[1] >= work[2]
            unseeded_work.append(work[0])
            seeded_work.append(work[1])

        assert mismatches == 0
        assert non_monotone == 0
        assert statistics.mean(seeded_work) < statistics.mean(unseeded_work)


class TestCollectionMuf:
    """MUF ordering between the quantile and lookups estimators."""

    def test_lookups_gain_grows_with_length(self, test_config, collection):
        """Test that lookups beat quantile, more so on queries of 4+ terms."""
        index, store, queries = collection
        service = EvaluationService(test_config, index, store)
        quantile_report, quantile_records = service.evaluate(
            queries, 10, MethodConfig(method=EstimationMethod.QUANTILE)
        )
        lookups_report, lookups_records = service.evaluate(
            queries,
            10,
            MethodConfig(method=EstimationMethod.LOOKUPS, budget=Budget(ab=1000, lb=1000)),
        )

        def muf(records, buckets):
            return compute_muf(
                record for record in records if length_bucket(record.query_length) in buckets
            ).muf

        assert quantile_report.overestimate_rate == 0.0
        assert lookups_report.overestimate_rate == 0.0
        assert lookups_report.muf >= quantile_report.muf
        short_gap = muf(lookups_records, {"2"}) - muf(quantile_records, {"2"})
        long_gap = muf(lookups_records, {"4", "5+"}) - muf(quantile_records, {"4", "5+"})
        assert long_gap >= short_gap


class TestCollectionLatency:
    """Estimation time at the largest budgets."""

    def test_median_under_ten_milliseconds(self, collection, collection_queries):
        """Test the median lookups estimate at ab = lb = 5000."""
        index, store, _ = collection
        for query in collection_queries[:20]:
            estimate_with_lookups(store, index, query, 10, 5000, 5000)

        timings = []
        for query in collection_queries:
            started = time.perf_counter_ns()
            estimate_with_lookups(store, index, query, 10, 5000, 5000)
            timings.append(time.perf_counter_ns() - started)

        assert statistics.median(timings) < 10_000_000
