"""
Deterministic 64-bit hashing for document sampling and index fingerprints.
"""

import hashlib
import struct

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(values: np.ndarray) -> np.ndarray:
    """Vectorized SplitMix64 finalizer over a uint64 array (wrapping)."""
    z = values.astype(np.uint64) + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def hash64(seed: int, docs: np.ndarray) -> np.ndarray:
    """Hash (seed, docID) pairs; independent of iteration order."""
    seeded = splitmix64(np.array([seed & _MASK64], dtype=np.uint64))
    return splitmix64(docs.astype(np.uint64) ^ seeded[0])


def inclusion_mask(seed: int, document_count: int, rate: float) -> np.ndarray:
    """Boolean mask of documents whose hash64 / 2^64 falls below rate."""
    cutoff = int(rate * float(1 << 64))
    if cutoff > _MASK64:
        return np.ones(document_count, dtype=bool)
    hashes = hash64(seed, np.arange(document_count, dtype=np.uint64))
    return hashes < np.uint64(cutoff)


def fingerprint64(*fields: int | float | str) -> int:
    """Stable 64-bit digest over a sequence of scalar fields."""
    digest = hashlib.blake2b(digest_size=8)
    for value in fields:
        if isinstance(value, int):
            digest.update(struct.pack("<Bq", 0, int(value)))
        elif isinstance(value, float):
            digest.update(struct.pack("<Bd", 1, value))
        else:
            encoded = value.encode("utf-8")
            digest.update(struct.pack("<BI", 2, len(encoded)) + encoded)
    return int.from_bytes(digest.digest(), "little")
