"""
Seeded Zipfian corpora and query logs for desk-scale experiments.
"""

from pathlib import Path

import numpy as np
import structlog

from ..exceptions import ArgumentError

logger = structlog.get_logger(__name__)

# Relative frequency of query lengths 1..6.
QUERY_LENGTH_WEIGHTS = (0.15, 0.3, 0.25, 0.15, 0.1, 0.05)


def vocabulary_words(size: int) -> list[str]:
    """Word strings by popularity rank: w0, w1, ..."""
    return [f"w{rank}" for rank in range(size)]


def zipf_probabilities(size: int, exponent: float, skip: int = 0) -> np.ndarray:
    """Zipf weights over ranks; the `skip` most popular ranks get zero mass."""
    ranks = np.arange(1, size + 1, dtype=np.float64)
    weights = ranks**-exponent
    weights[:skip] = 0.0
    return weights / weights.sum()


def generate_corpus(
    path: str | Path,
    documents: int,
    vocabulary: int,
    *,
    mean_length: int = 60,
    exponent: float = 1.1,
    seed: int = 20240521,
) -> int:
    """Write `doc<TAB>text` lines with Zipf-distributed words.

    Returns the number of documents written.
    """
    if documents < 1 or vocabulary < 1 or mean_length < 1:
        raise ArgumentError("documents, vocabulary and mean_length must be positive")

    rng = np.random.default_rng(seed)
    words = np.array(vocabulary_words(vocabulary))
    probabilities = zipf_probabilities(vocabulary, exponent)
    lengths = rng.poisson(mean_length, size=documents) + 1

    with open(path, "w", encoding="utf-8") as handle:
        for doc, length in enumerate(lengths.tolist()):
            tokens = words[rng.choice(vocabulary, size=length, p=probabilities)]
            handle.write(f"d{doc}\t{' '.join(tokens.tolist())}\n")

    logger.info(
        "Synthetic corpus written",
        path=str(path),
        documents=documents,
        vocabulary=vocabulary,
        seed=seed,
    )
    return documents


def generate_query_log(
    path: str | Path,
    queries: int,
    vocabulary: int,
    *,
    exponent: float = 0.9,
    skip_top: int = 10,
    seed: int = 20240521,
) -> int:
    """Write one query per line, 1 to 6 distinct words each.

    Query words follow a flatter Zipf law than documents and avoid the
    `skip_top` most common words.
    """
    if queries < 0 or vocabulary <= skip_top + len(QUERY_LENGTH_WEIGHTS):
        raise ArgumentError("vocabulary too small for the query generator")

    rng = np.random.default_rng(seed)
    words = np.array(vocabulary_words(vocabulary))
    probabilities = zipf_probabilities(vocabulary, exponent, skip_top)
    length_choices = np.arange(1, len(QUERY_LENGTH_WEIGHTS) + 1)
    lengths = rng.choice(length_choices, size=queries, p=QUERY_LENGTH_WEIGHTS)

    with open(path, "w", encoding="utf-8") as handle:
        for length in lengths.tolist():
            picks = rng.choice(vocabulary, size=length, replace=False, p=probabilities)
            handle.write(" ".join(words[picks].tolist()) + "\n")

    logger.info("Synthetic query log written", path=str(path), queries=queries, seed=seed)
    return queries
