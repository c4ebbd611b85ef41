"""
Prefix store construction, subset matching and size accounting.

Quantile thresholds use disjunctive scores of a subset; prefixes hold the top
documents of the conjunctive query on the subset, with every term score.
"""

from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations

import numpy as np
import structlog
from pydantic import BaseModel, Field
from tqdm import tqdm

from ..exceptions import ArgumentError
from ..models.catalog_models import CatalogEntry, SubsetKey
from ..models.index_models import ImpactIndex, Query
from ..models.prefix_models import Prefix, PrefixStore, QuantileRecord, SubsetMatch
from ..utils.codec import encode_store_sections
from ..utils.validators import is_valid_subset_key, validate_max_subset_size
from .query_engine import exact_topk

logger = structlog.get_logger(__name__)


class StoreSizeReport(BaseModel):
    """Serialized byte counts per store section."""

    header: int = Field(0, description="Metadata and k-grid")
    dictionary: int = Field(0, description="Subset keys, flags and blob offsets")
    quantiles: int = Field(0, description="Quantile table")
    prefixes_by_size: dict[int, int] = Field(
        default_factory=dict, description="Prefix blob bytes per subset size"
    )
    checksum: int = Field(0, description="Trailing CRC32")

    @property
    def prefixes(self) -> int:
        return sum(self.prefixes_by_size.values())

    @property
    def total(self) -> int:
        return self.header + self.dictionary + self.quantiles + self.prefixes + self.checksum


def quantile_record(index: ImpactIndex, key: SubsetKey, k_values: Sequence[int]) -> QuantileRecord:
    """th(s, k) for every k from one exhaustive top-max(k) run."""
    result = exact_topk(index, index.query_for_terms(key), max(k_values))
    scores = result.scores
    thresholds = {k: scores[k - 1] if len(scores) >= k else 0 for k in k_values}
    return QuantileRecord(key, thresholds)


def conjunctive_prefix(index: ImpactIndex, key: SubsetKey, depth: int) -> Prefix:
    """Top `depth` documents containing every term of the subset."""
    lists = [index.lists[term] for term in key]
    docs = lists[0].docs
    for plist in lists[1:]:
        docs = np.intersect1d(docs, plist.docs, assume_unique=True)

    scores = np.empty((docs.size, len(key)), dtype=np.int64)
    for column, plist in enumerate(lists):
        scores[:, column] = plist.impacts[np.searchsorted(plist.docs, docs)]

    totals = scores.sum(axis=1)
    order = np.lexsort((docs, -totals))[:depth]
    return Prefix(key, docs[order], scores[order])


def _build_subset(
    index: ImpactIndex, key: SubsetKey, depth: int, k_values: Sequence[int]
) -> tuple[QuantileRecord, Prefix | None]:
    record = quantile_record(index, key, k_values)
    prefix = conjunctive_prefix(index, key, depth) if depth > 0 else None
    return record, prefix


def _resolves(index: ImpactIndex, key: SubsetKey) -> bool:
    return is_valid_subset_key(key) and all(0 <= term < index.term_count for term in key)


def build_store(
    index: ImpactIndex,
    catalog: Iterable[CatalogEntry],
    k_values: Iterable[int],
    quantile_subsets: Iterable[SubsetKey] | None = None,
    *,
    policy_name: str = "custom",
    threads: int = 1,
    show_progress: bool = False,
) -> PrefixStore:
    """Materialize quantile records and prefixes for a catalog.

    quantile_subsets receive a quantile record only. Subsets whose terms do
    not resolve in the index are skipped and counted.
    """
    grid = tuple(sorted(set(k_values)))
    if not grid or grid[0] < 1:
        raise ArgumentError(f"k values must be positive: {grid}")
    if threads < 1:
        raise ArgumentError(f"threads must be positive: {threads}")

    depths: dict[SubsetKey, int] = {}
    for key in quantile_subsets or ():
        depths.setdefault(tuple(key), 0)
    for entry in catalog:
        depths[entry.key] = max(entry.depth, depths.get(entry.key, 0))

    work = [(key, depth) for key, depth in depths.items() if _resolves(index, key)]
    skipped = len(depths) - len(work)
    if skipped:
        logger.warning("Skipped catalog subsets missing from index", skipped=skipped)

    def run(item: tuple[SubsetKey, int]) -> tuple[QuantileRecord, Prefix | None]:
        return _build_subset(index, item[0], item[1], grid)

    progress = tqdm(total=len(work), desc="subsets", unit="subset", disable=not show_progress)
    with progress, ThreadPoolExecutor(max_workers=threads) as pool:
        results = []
        for result in pool.map(run, work):
            results.append(result)
            progress.update()

    quantiles = {record.subset: record for record, _ in results}
    prefixes = {prefix.subset: prefix for _, prefix in results if prefix is not None}
    store = PrefixStore(grid, quantiles, prefixes, policy_name, index.fingerprint())
    logger.info(
        "Prefix store built",
        policy=policy_name,
        subsets=len(quantiles),
        prefixes=len(prefixes),
        entries=sum(len(prefix) for prefix in prefixes.values()),
        skipped=skipped,
    )
    return store


def matching_subsets(
    store: PrefixStore, query: Query, max_size: int | None = None
) -> list[SubsetMatch]:
    """Stored subsets contained in the query, ordered by (size, key)."""
    validate_max_subset_size(max_size)
    limit = min(max_size or store.max_subset_size, store.max_subset_size, len(query))
    terms = query.sorted_terms
    matches: list[SubsetMatch] = []
    for size in range(1, limit + 1):
        for key in combinations(terms, size):
            if key in store.quantiles:
                matches.append(SubsetMatch(key, store.has_prefix(key)))
    return matches


def store_size_report(store: PrefixStore) -> StoreSizeReport:
    """Exact serialized size of each section."""
    sections = encode_store_sections(store)
    return StoreSizeReport(
        header=len(sections.header),
        dictionary=len(sections.dictionary),
        quantiles=len(sections.quantiles),
        prefixes_by_size={size: len(blob) for size, blob in sections.prefixes.items()},
        checksum=4,
    )
