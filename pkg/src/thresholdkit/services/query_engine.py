"""
Exact disjunctive top-k evaluation and a MaxScore processor that accepts an
initial threshold.

Scores are integer sums of impacts; ties are broken by ascending docID.
"""

import heapq
import time
from bisect import bisect_left
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
import structlog

from ..exceptions import ArgumentError, ContractViolationError
from ..models.index_models import ImpactIndex, Query

logger = structlog.get_logger(__name__)


@dataclass(frozen=True, slots=True)
class TopKResult:
    """Top-k (doc, score) entries and the k-th score (0 when underfull)."""

    entries: list[tuple[int, int]]
    threshold: int

    @property
    def scores(self) -> list[int]:
        return [score for _, score in self.entries]


@dataclass(slots=True)
class EngineStats:
    """Work counters of one MaxScore run."""

    postings_scored: int = 0
    documents_evaluated: int = 0
    heap_insertions: int = 0
    elapsed_ns: int = 0


def disjunctive_scores(
    index: ImpactIndex, terms: Iterable[int]
) -> tuple[np.ndarray, np.ndarray]:
    """Merge the term lists by docID and sum impacts per document.

    Returns docID-ascending arrays of matching documents and their scores.
    Memory is proportional to the query's postings, not to the collection.
    """
    lists = [index.lists[term] for term in terms]
    if not lists:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    if len(lists) == 1:
        return lists[0].docs.astype(np.int64), lists[0].impacts.astype(np.int64)

    docs = np.concatenate([plist.docs for plist in lists]).astype(np.int64)
    impacts = np.concatenate([plist.impacts for plist in lists]).astype(np.int64)
    order = np.argsort(docs, kind="stable")
    docs = docs[order]
    impacts = impacts[order]
    starts = np.flatnonzero(np.concatenate(([True], docs[1:] != docs[:-1])))
    return docs[starts], np.add.reduceat(impacts, starts)


def top_entries(docs: np.ndarray, scores: np.ndarray, k: int) -> list[tuple[int, int]]:
    """The k best (doc, score) pairs by score descending, docID ascending."""
    if docs.size > k:
        kth = np.partition(scores, docs.size - k)[docs.size - k]
        keep = scores >= kth
        docs = docs[keep]
        scores = scores[keep]
    order = np.lexsort((docs, -scores))[:k]
    return list(zip(docs[order].tolist(), scores[order].tolist(), strict=True))


def exact_topk(index: ImpactIndex, query: Query, k: int) -> TopKResult:
    """Exhaustive disjunctive top-k over all query term lists."""
    if k < 1:
        raise ArgumentError(f"k must be positive: {k}")
    docs, scores = disjunctive_scores(index, query.sorted_terms)
    entries = top_entries(docs, scores, k)
    threshold = entries[-1][1] if len(entries) == k else 0
    return TopKResult(entries=entries, threshold=threshold)


def exact_threshold(index: ImpactIndex, query: Query, k: int) -> int:
    """The exact top-k threshold of a query (0 when fewer than k match)."""
    return exact_topk(index, query, k).threshold


def _first_essential(upper_bounds: list[int], theta: int) -> int:
    """Index of the first term whose cumulative bound exceeds theta."""
    for position, bound in enumerate(upper_bounds):
        if bound > theta:
            return position
    return len(upper_bounds)


def maxscore_topk(
    index: ImpactIndex,
    query: Query,
    k: int,
    initial_threshold: int = 0,
    *,
    validate: bool = False,
) -> tuple[TopKResult, EngineStats]:
    """MaxScore document-at-a-time top-k seeded with an initial threshold.

    The caller guarantees 0 <= initial_threshold <= exact threshold. Terms
    are ordered by max impact; those whose cumulative bound cannot beat the
    running threshold are non-essential and only probed for candidates.
    postings_scored counts traversed essential postings plus probe hits.
    """
    if k < 1:
        raise ArgumentError(f"k must be positive: {k}")
    if initial_threshold < 0:
        raise ArgumentError(f"initial threshold must be non-negative: {initial_threshold}")

    stats = EngineStats()
    started = time.perf_counter_ns()

    terms = sorted(query.terms, key=lambda term: (index.max_impact(term), term))
    doc_lists: list[list[int]] = []
    impact_lists: list[list[int]] = []
    for term in terms:
        docs, impacts = index.lists[term].as_lists()
        doc_lists.append(docs)
        impact_lists.append(impacts)
    lengths = [len(docs) for docs in doc_lists]

    upper_bounds: list[int] = []
    running = 0
    for term in terms:
        running += index.max_impact(term)
        upper_bounds.append(running)

    positions = [0] * len(terms)
    heap: list[tuple[int, int]] = []
    theta = initial_threshold
    first_essential = _first_essential(upper_bounds, theta)

    while first_essential < len(terms):
        current = -1
        for i in range(first_essential, len(terms)):
            if positions[i] < lengths[i]:
                doc = doc_lists[i][positions[i]]
                if current < 0 or doc < current:
                    current = doc
        if current < 0:
            break

        score = 0
        for i in range(first_essential, len(terms)):
            position = positions[i]
            if position < lengths[i] and doc_lists[i][position] == current:
                score += impact_lists[i][position]
                positions[i] = position + 1
                stats.postings_scored += 1

        for i in range(first_essential - 1, -1, -1):
            if score + upper_bounds[i] <= theta:
                break
            position = bisect_left(doc_lists[i], current, positions[i])
            positions[i] = position
            if position < lengths[i] and doc_lists[i][position] == current:
                score += impact_lists[i][position]
                stats.postings_scored += 1

        stats.documents_evaluated += 1
        if score <= theta:
            continue
        if len(heap) < k:
            heapq.heappush(heap, (score, -current))
            stats.heap_insertions += 1
        elif score > heap[0][0]:
            heapq.heapreplace(heap, (score, -current))
            stats.heap_insertions += 1
        if len(heap) == k and heap[0][0] > theta:
            theta = heap[0][0]
            first_essential = _first_essential(upper_bounds, theta)

    entries = sorted(((-neg_doc, score) for score, neg_doc in heap), key=_entry_order)
    threshold = heap[0][0] if len(heap) == k else initial_threshold
    stats.elapsed_ns = time.perf_counter_ns() - started
    result = TopKResult(entries=entries, threshold=threshold)

    if validate:
        expected = exact_threshold(index, query, k)
        if expected != threshold:
            logger.error(
                "MaxScore threshold mismatch",
                expected=expected,
                returned=threshold,
                initial_threshold=initial_threshold,
            )
            raise ContractViolationError(
                f"MaxScore returned {threshold}, exact threshold is {expected}"
            )
    return result, stats


def _entry_order(entry: tuple[int, int]) -> tuple[int, int]:
    doc, score = entry
    return -score, doc
