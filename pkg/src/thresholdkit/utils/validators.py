"""
Input validation utilities for indexes, subsets and estimation arguments.
"""

from collections.abc import Sequence

import numpy as np

from ..exceptions import ArgumentError

MAX_SUBSET_SIZE = 4
MAX_IMPACT = 65535


def is_strictly_ascending(values: np.ndarray | Sequence[int]) -> bool:
    """Check that a sequence of docIDs is strictly ascending."""
    array = np.asarray(values)
    if array.size < 2:
        return True
    return bool(np.all(array[1:] > array[:-1]))


def is_valid_subset_key(key: Sequence[int], max_size: int = MAX_SUBSET_SIZE) -> bool:
    """Validate a subset key: 1..max_size strictly ascending term IDs."""
    if not 1 <= len(key) <= max_size:
        return False

    if any(term < 0 for term in key):
        return False

    return is_strictly_ascending(list(key))


def validate_sample_rate(rate: float) -> None:
    """Sampling rates live in (0, 1]."""
    if not 0 < rate <= 1:
        raise ArgumentError(f"Invalid sample rate: {rate}")


def validate_quant_bits(bits: int) -> None:
    """Quantization uses between 1 and 16 bits."""
    if not 1 <= bits <= 16:
        raise ArgumentError(f"Invalid quantization bits: {bits}")


def validate_max_subset_size(size: int | None) -> None:
    """Subset size restrictions are within 1..4 when given."""
    if size is not None and not 1 <= size <= MAX_SUBSET_SIZE:
        raise ArgumentError(f"Invalid subset size limit: {size}")


def validate_budget(ab: int, lb: int) -> None:
    """Access budget is positive; lookup budget never exceeds it."""
    if ab < 1:
        raise ArgumentError(f"Invalid access budget: {ab}")

    if lb < 0 or lb > ab:
        raise ArgumentError(f"Invalid lookup budget {lb} for access budget {ab}")
