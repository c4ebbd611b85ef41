"""
In-memory prefix store: quantile records and score-descending prefixes.
"""

from functools import cached_property
from typing import NamedTuple

import numpy as np

from .catalog_models import SubsetKey


class QuantileRecord:
    """Disjunctive top-k thresholds th(s, k) for one subset."""

    __slots__ = ("subset", "thresholds")

    def __init__(self, subset: SubsetKey, thresholds: dict[int, int]):
        self.subset = subset
        self.thresholds = dict(sorted(thresholds.items()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuantileRecord):
            return NotImplemented
        return self.subset == other.subset and self.thresholds == other.thresholds

    def __repr__(self) -> str:
        return f"QuantileRecord({self.subset}, {self.thresholds})"


class Prefix:
    """Top conjunctive results of a subset with per-term scores.

    Entries are ordered by total descending, ties by ascending docID.
    """

    def __init__(self, subset: SubsetKey, docs: np.ndarray, scores: np.ndarray):
        self.subset = subset
        self.docs = np.ascontiguousarray(docs, dtype=np.uint32)
        self.scores = np.ascontiguousarray(scores, dtype=np.uint16).reshape(
            self.docs.size, len(subset)
        )

    def __len__(self) -> int:
        return int(self.docs.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Prefix):
            return NotImplemented
        return (
            self.subset == other.subset
            and np.array_equal(self.docs, other.docs)
            and np.array_equal(self.scores, other.scores)
        )

    def __repr__(self) -> str:
        return f"Prefix({self.subset}, entries={len(self)})"

    @cached_property
    def totals(self) -> np.ndarray:
        return self.scores.sum(axis=1, dtype=np.int64)

    @cached_property
    def rows(self) -> list[tuple[int, int, tuple[int, ...]]]:
        """Entries as (total, doc, term_scores) tuples for the merge loops."""
        return [
            (total, doc, tuple(scores))
            for total, doc, scores in zip(
                self.totals.tolist(),
                self.docs.tolist(),
                self.scores.tolist(),
                strict=True,
            )
        ]

    def entries(self) -> list[tuple[int, list[int]]]:
        """Entries as (doc, term_scores) pairs."""
        return [(doc, list(scores)) for _, doc, scores in self.rows]


class SubsetMatch(NamedTuple):
    """A stored subset contained in a query."""

    key: SubsetKey
    has_prefix: bool


class PrefixStore:
    """Quantile table and prefixes keyed by subset, tied to one index."""

    def __init__(
        self,
        k_values: tuple[int, ...],
        quantiles: dict[SubsetKey, QuantileRecord],
        prefixes: dict[SubsetKey, Prefix],
        policy_name: str,
        index_fingerprint: int,
    ):
        self.k_values = tuple(sorted(k_values))
        self.quantiles = dict(sorted(quantiles.items(), key=lambda item: _order(item[0])))
        self.prefixes = dict(sorted(prefixes.items(), key=lambda item: _order(item[0])))
        self.policy_name = policy_name
        self.index_fingerprint = index_fingerprint

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PrefixStore):
            return NotImplemented
        return (
            self.k_values == other.k_values
            and self.policy_name == other.policy_name
            and self.index_fingerprint == other.index_fingerprint
            and self.quantiles == other.quantiles
            and self.prefixes == other.prefixes
        )

    def __repr__(self) -> str:
        return (
            f"PrefixStore(subsets={len(self.quantiles)}, "
            f"prefixes={len(self.prefixes)}, k={self.k_values})"
        )

    @cached_property
    def max_subset_size(self) -> int:
        return max((len(key) for key in self.quantiles), default=0)

    def has_prefix(self, key: SubsetKey) -> bool:
        return key in self.prefixes

    def threshold(self, key: SubsetKey, k: int) -> int:
        return self.quantiles[key].thresholds[k]


def _order(key: SubsetKey) -> tuple[int, SubsetKey]:
    return len(key), key
