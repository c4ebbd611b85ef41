"""
Binomial tail bounds for sampled threshold estimation.

A top-k' estimate on a document sample overestimates the top-k threshold
exactly when at least k' of the k - 1 documents scoring above the k-th land
in the sample, so the overestimate probability is a binomial upper tail.
"""

from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from ..exceptions import ArgumentError


def overestimate_probability(k: int, k_prime: int, s: float) -> float:
    """P(Binomial(k - 1, s) >= k'), summed in log space."""
    if not 0 < s < 1:
        raise ArgumentError(f"Sample rate must lie in (0, 1): {s}")
    if k_prime < 1:
        raise ArgumentError(f"k_prime must be positive: {k_prime}")
    if k_prime >= k:
        return 0.0

    n = k - 1
    i = np.arange(k_prime, k, dtype=np.float64)
    log_terms = (
        gammaln(n + 1)
        - gammaln(i + 1)
        - gammaln(n - i + 1)
        + i * np.log(s)
        + (n - i) * np.log1p(-s)
    )
    return float(min(1.0, np.exp(logsumexp(log_terms))))


@lru_cache(maxsize=1024)
def choose_k_prime(k: int, s: float, epsilon: float) -> int:
    """Smallest k' >= 1 whose overestimate probability is at most epsilon."""
    if k < 1:
        raise ArgumentError(f"k must be positive: {k}")
    if epsilon <= 0:
        raise ArgumentError(f"epsilon must be positive: {epsilon}")
    if s >= 1:
        return k
    if epsilon >= 1:
        return 1

    # The tail shrinks as k' grows, so the first qualifying k' is the answer.
    low, high = 1, k
    while low < high:
        middle = (low + high) // 2
        if overestimate_probability(k, middle, s) <= epsilon:
            high = middle
        else:
            low = middle + 1
    return low
