"""
Raw term scoring models and global linear quantization.

All functions operate on aligned numpy arrays for one term's postings. The
arithmetic order is fixed so that a scalar re-implementation produces
bit-identical floats.
"""

import math

import numpy as np


def bm25_raw(
    tf: np.ndarray,
    doc_len: np.ndarray,
    df: int,
    n_docs: int,
    avg_len: float,
    k1: float,
    b: float,
) -> np.ndarray:
    """BM25 contribution of one term for each posting.

    Uses the non-negative idf variant log(1 + (N - df + 0.5) / (df + 0.5)).
    """
    idf = math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))
    tf = tf.astype(np.float64)
    norm = k1 * (1.0 - b + b * (doc_len.astype(np.float64) / avg_len))
    return (tf * (k1 + 1.0)) / (tf + norm) * idf


def qld_raw(
    tf: np.ndarray,
    doc_len: np.ndarray,
    collection_freq: int,
    collection_len: int,
    mu: float,
) -> np.ndarray:
    """Query likelihood with Dirichlet smoothing, per posting.

    Values can be negative for long documents; callers drop non-positive
    scores before quantization.
    """
    p_collection = collection_freq / collection_len
    tf = tf.astype(np.float64)
    doc_len = doc_len.astype(np.float64)
    return np.log(1.0 + tf / (mu * p_collection)) + np.log(mu / (doc_len + mu))


def quantize(raw: np.ndarray, global_max: float, bits: int) -> np.ndarray:
    """Map positive raw scores to integer impacts in [1, 2^bits - 1]."""
    scale = float((1 << bits) - 1)
    impacts = np.floor(raw / global_max * scale)
    return np.maximum(impacts, 1.0).astype(np.uint16)
