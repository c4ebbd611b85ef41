"""
Safe top-k threshold estimators over a prefix store.

Every estimator here returns a lower bound of the exact threshold: prefix
entries carry true impacts, accumulators only ever hold scores of terms the
document really contains, and the quantile table stores exact thresholds of
subsets of the query.
"""

import heapq
import time
from collections.abc import Iterator
from dataclasses import dataclass, field
from itertools import islice

import numpy as np
import structlog

from ..exceptions import ArgumentError
from ..models.catalog_models import SubsetKey
from ..models.estimate_models import Estimate, EstimationMethod
from ..models.index_models import ImpactIndex, Query
from ..models.prefix_models import PrefixStore
from ..utils.validators import validate_budget
from .prefix_service import matching_subsets

logger = structlog.get_logger(__name__)

# (-total, doc, subset size, subset key, term scores)
MergedEntry = tuple[int, int, int, SubsetKey, tuple[int, ...]]


@dataclass(slots=True)
class Accumulator:
    """Partial score of one document over the query terms seen so far."""

    doc: int
    partial: int = 0
    known: dict[int, int] = field(default_factory=dict)

    def add(self, term: int, score: int) -> None:
        """Add a term score once; later sources must agree with the first."""
        previous = self.known.get(term)
        if previous is None:
            self.known[term] = score
            self.partial += score
        else:
            assert previous == score, (
                f"conflicting scores {previous} and {score} for term {term}, doc {self.doc}"
            )


def _check_k(k: int) -> None:
    if k < 1:
        raise ArgumentError(f"k must be positive: {k}")


def _quantile_value(
    store: PrefixStore, query: Query, k: int, max_size: int | None
) -> int:
    return max(
        (store.threshold(match.key, k) for match in matching_subsets(store, query, max_size)),
        default=0,
    )


def _prefix_stream(store: PrefixStore, key: SubsetKey) -> Iterator[MergedEntry]:
    size = len(key)
    for total, doc, scores in store.prefixes[key].rows:
        yield -total, doc, size, key, scores


def merged_entries(
    store: PrefixStore, query: Query, max_size: int | None = None
) -> Iterator[MergedEntry]:
    """All matching prefix entries in global descending-total order.

    Ties go to the smaller docID, then the smaller subset.
    """
    streams = [
        _prefix_stream(store, match.key)
        for match in matching_subsets(store, query, max_size)
        if match.has_prefix
    ]
    return heapq.merge(*streams)


def kth_highest(values: list[int], k: int) -> int:
    """k-th largest value, or 0 when fewer than k values exist."""
    if len(values) < k:
        return 0
    return heapq.nlargest(k, values)[-1]


def estimate_quantile(
    store: PrefixStore, query: Query, k: int, *, max_size: int | None = None
) -> Estimate:
    """Maximum stored th(s, k) over the stored subsets of the query."""
    started = time.perf_counter_ns()
    if k not in store.k_values:
        raise ArgumentError(f"k={k} is not in the store's quantile grid {store.k_values}")
    value = _quantile_value(store, query, k, max_size)
    return Estimate(
        value=value,
        method=EstimationMethod.QUANTILE,
        elapsed_ns=time.perf_counter_ns() - started,
    )


def estimate_remove_duplicates(
    store: PrefixStore,
    query: Query,
    k: int,
    ab: int,
    *,
    max_size: int | None = None,
) -> Estimate:
    """Total of the k-th distinct document in the merged prefixes."""
    started = time.perf_counter_ns()
    _check_k(k)
    validate_budget(ab, 0)

    seen: set[int] = set()
    used = 0
    value = 0
    for neg_total, doc, *_ in islice(merged_entries(store, query, max_size), ab):
        used += 1
        if doc in seen:
            continue
        seen.add(doc)
        if len(seen) == k:
            value = -neg_total
            break

    return Estimate(
        value=value,
        method=EstimationMethod.REMOVE_DUPLICATES,
        ab_used=used,
        elapsed_ns=time.perf_counter_ns() - started,
    )


def _combine(
    store: PrefixStore, query: Query, ab: int, max_size: int | None
) -> tuple[dict[int, Accumulator], int]:
    accumulators: dict[int, Accumulator] = {}
    used = 0
    for _, doc, _, key, scores in islice(merged_entries(store, query, max_size), ab):
        used += 1
        accumulator = accumulators.get(doc)
        if accumulator is None:
            accumulator = accumulators[doc] = Accumulator(doc)
        for term, score in zip(key, scores, strict=True):
            accumulator.add(term, score)
    return accumulators, used


def estimate_combine_scores(
    store: PrefixStore,
    query: Query,
    k: int,
    ab: int,
    *,
    max_size: int | None = None,
) -> tuple[Estimate, dict[int, Accumulator]]:
    """k-th highest accumulated partial score after ab prefix entries."""
    started = time.perf_counter_ns()
    _check_k(k)
    validate_budget(ab, 0)

    accumulators, used = _combine(store, query, ab, max_size)
    value = kth_highest([acc.partial for acc in accumulators.values()], k)
    estimate = Estimate(
        value=value,
        method=EstimationMethod.COMBINE_SCORES,
        ab_used=used,
        elapsed_ns=time.perf_counter_ns() - started,
    )
    return estimate, accumulators


def fill_from_index(
    index: ImpactIndex, query: Query, accumulators: dict[int, Accumulator], lb: int
) -> int:
    """Look up missing term scores for the lb best accumulators.

    Candidates are ranked by partial descending, docID ascending. Each term
    is probed once with its docIDs sorted ascending. Returns the number of
    accumulators selected.
    """
    if lb <= 0 or not accumulators:
        return 0
    selected = heapq.nsmallest(
        lb, accumulators.values(), key=lambda acc: (-acc.partial, acc.doc)
    )
    selected.sort(key=lambda acc: acc.doc)

    for term in query.sorted_terms:
        missing = [acc for acc in selected if term not in acc.known]
        if not missing:
            continue
        impacts = index.batch_impacts(term, np.array([acc.doc for acc in missing]))
        for acc, impact in zip(missing, impacts.tolist(), strict=True):
            if impact:
                acc.add(term, impact)
    return len(selected)


def estimate_with_lookups(
    store: PrefixStore,
    index: ImpactIndex,
    query: Query,
    k: int,
    ab: int,
    lb: int,
    *,
    max_size: int | None = None,
) -> Estimate:
    """Combine Scores followed by index lookups for the top lb accumulators."""
    started = time.perf_counter_ns()
    _check_k(k)
    validate_budget(ab, lb)

    accumulators, used = _combine(store, query, ab, max_size)
    looked_up = fill_from_index(index, query, accumulators, lb)
    value = kth_highest([acc.partial for acc in accumulators.values()], k)
    return Estimate(
        value=value,
        method=EstimationMethod.LOOKUPS,
        ab_used=used,
        lb_used=looked_up,
        elapsed_ns=time.perf_counter_ns() - started,
    )


def backup_k(store: PrefixStore, k: int) -> int | None:
    """Smallest grid k at or above k; its thresholds never exceed th(s, k)."""
    for grid_k in store.k_values:
        if grid_k >= k:
            return grid_k
    return None


def with_quantile_backup(
    primary: Estimate,
    store: PrefixStore,
    query: Query,
    k: int,
    *,
    max_size: int | None = None,
) -> Estimate:
    """Max of the primary estimate and the quantile estimate."""
    started = time.perf_counter_ns()
    grid_k = backup_k(store, k)
    quantile = 0 if grid_k is None else _quantile_value(store, query, grid_k, max_size)
    elapsed = primary.elapsed_ns + time.perf_counter_ns() - started
    if quantile > primary.value:
        return primary.model_copy(
            update={"value": quantile, "backed_by_quantile": True, "elapsed_ns": elapsed}
        )
    return primary.model_copy(update={"elapsed_ns": elapsed})
