"""
Tests for the synthetic corpus and query log generators.
"""

import numpy as np
import pytest

from thresholdkit.exceptions import ArgumentError
from thresholdkit.services.synthetic import (
    QUERY_LENGTH_WEIGHTS,
    generate_corpus,
    generate_query_log,
    zipf_probabilities,
)


class TestGenerateCorpus:
    """Test suite for generate_corpus."""

    def test_line_format(self, tmp_path):
        """Test document names, tabs and vocabulary."""
        path = tmp_path / "corpus.tsv"

        assert generate_corpus(path, 50, 30, mean_length=5, seed=1) == 50

        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 50
        for doc, line in enumerate(lines):
            name, text = line.split("\t")
            assert name == f"d{doc}"
            assert text
            assert all(0 <= int(word[1:]) < 30 for word in text.split())

    def test_seeded(self, tmp_path):
        """Test that equal seeds give equal files and other seeds differ."""
        paths = [tmp_path / f"{i}.tsv" for i in range(3)]
        for path, seed in zip(paths, (4, 4, 5), strict=True):
            generate_corpus(path, 40, 30, mean_length=8, seed=seed)

        assert paths[0].read_bytes() == paths[1].read_bytes()
        assert paths[0].read_bytes() != paths[2].read_bytes()

    def test_invalid_arguments(self, tmp_path):
        """Test that sizes must be positive."""
        with pytest.raises(ArgumentError):
            generate_corpus(tmp_path / "c.tsv", 0, 30)


class TestGenerateQueryLog:
    """Test suite for generate_query_log."""

    def test_queries(self, tmp_path):
        """Test query lengths, distinct words and the skipped head."""
        path = tmp_path / "log.txt"

        generate_query_log(path, 300, 100, skip_top=10, seed=2)

        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 300
        for line in lines:
            words = line.split()
            assert 1 <= len(words) <= len(QUERY_LENGTH_WEIGHTS)
            assert len(set(words)) == len(words)
            assert all(int(word[1:]) >= 10 for word in words)

    def test_vocabulary_too_small(self, tmp_path):
        """Test that the vocabulary must exceed the skipped head."""
        with pytest.raises(ArgumentError):
            generate_query_log(tmp_path / "log.txt", 10, 15, skip_top=10)


class TestZipfProbabilities:
    """Test suite for zipf_probabilities."""

    def test_normalized_and_decreasing(self):
        """Test that weights sum to one and fall with rank."""
        weights = zipf_probabilities(50, 1.1, skip=3)

        assert weights.sum() == pytest.approx(1.0)
        assert np.all(weights[:3] == 0)
        assert np.all(np.diff(weights[3:]) < 0)
