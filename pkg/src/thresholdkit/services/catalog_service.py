"""
Subset catalog: query-log mining, depth assignment and named space policies.
"""

import math
from collections import Counter
from collections.abc import Iterable, Mapping
from itertools import combinations
from pathlib import Path

import structlog

from ..exceptions import ArgumentError, CatalogFormatError
from ..models.catalog_models import (
    CatalogEntry,
    DepthPolicy,
    FrequencyTier,
    SubsetKey,
    SubsetStats,
)
from ..models.index_models import ImpactIndex
from ..utils.text import tokenize
from ..utils.validators import MAX_SUBSET_SIZE

logger = structlog.get_logger(__name__)

CONFIG_NAMES = ("huge", "large", "medium", "small")

_TIERS = (
    FrequencyTier(min_frequency=100, depth_multiplier=1.0),
    FrequencyTier(min_frequency=10, depth_multiplier=0.5),
    FrequencyTier(min_frequency=1, depth_multiplier=0.25),
)


def named_config(name: str) -> DepthPolicy:
    """Depth policy for one of the named space configurations.

    huge keeps every subset up to size 4 at full depth. large drops
    quadruples and keeps only triples seen at least 50 times. medium and
    small keep singles and pairs with shrinking depths and rising floors.
    """
    if name == "huge":
        return DepthPolicy(
            name=name, base_depths={1: 10000, 2: 10000, 3: 4000, 4: 3000}
        )
    if name == "large":
        return DepthPolicy(
            name=name,
            base_depths={1: 4000, 2: 4000, 3: 2000},
            tiers=_TIERS,
            min_frequency_to_keep={3: 50},
        )
    if name == "medium":
        return DepthPolicy(
            name=name,
            base_depths={1: 2000, 2: 2000},
            tiers=_TIERS,
            min_frequency_to_keep={2: 2},
        )
    if name == "small":
        return DepthPolicy(
            name=name,
            base_depths={1: 1000, 2: 1000},
            tiers=(
                FrequencyTier(min_frequency=100, depth_multiplier=1.0),
                FrequencyTier(min_frequency=10, depth_multiplier=0.5),
                FrequencyTier(min_frequency=1, depth_multiplier=0.2),
            ),
            min_frequency_to_keep={2: 5},
        )
    raise ArgumentError(f"Unknown configuration {name!r}; expected one of {CONFIG_NAMES}")


def custom_policy(depths: Iterable[int]) -> DepthPolicy:
    """Flat policy from per-size depths, e.g. (10000, 10000, 4000, 3000)."""
    values = list(depths)
    if not 1 <= len(values) <= MAX_SUBSET_SIZE:
        raise ArgumentError(f"Expected 1 to {MAX_SUBSET_SIZE} depths, got {len(values)}")
    try:
        return DepthPolicy(
            base_depths={size: depth for size, depth in enumerate(values, start=1)}
        )
    except ValueError as e:
        raise ArgumentError(f"Invalid depths {values}: {e}") from e


def _capped_terms(terms: set[int], index: ImpactIndex, max_terms: int) -> list[int]:
    """Keep the rarest terms (shortest lists, then lowest TermId)."""
    ordered = sorted(terms, key=lambda term: (len(index.lists[term]), term))
    return sorted(ordered[:max_terms])


def mine_subsets(
    log_path: str | Path,
    index: ImpactIndex,
    max_size: int,
    min_freq: Mapping[int, int] | None = None,
    *,
    max_terms: int = 12,
) -> list[SubsetStats]:
    """Count every subset of every log query, sizes 1..max_size.

    Frequency is the number of log lines containing the subset. Words absent
    from the index dictionary are dropped before expansion.
    """
    if not 1 <= max_size <= MAX_SUBSET_SIZE:
        raise ArgumentError(f"max_size must lie in 1..{MAX_SUBSET_SIZE}: {max_size}")
    min_freq = dict(min_freq or {})

    counts: Counter[SubsetKey] = Counter()
    lines = 0
    capped = 0
    with open(log_path, encoding="utf-8") as handle:
        for raw_line in handle:
            words = tokenize(raw_line)
            if not words:
                continue
            lines += 1
            terms = {
                term
                for term in (index.term_dictionary.get(word) for word in words)
                if term is not None
            }
            if len(terms) > max_terms:
                capped += 1
                ordered = _capped_terms(terms, index, max_terms)
            else:
                ordered = sorted(terms)
            for size in range(1, min(max_size, len(ordered)) + 1):
                counts.update(combinations(ordered, size))

    stats = [
        SubsetStats(key=key, frequency=frequency)
        for key, frequency in counts.items()
        if frequency >= min_freq.get(len(key), 1)
    ]
    stats.sort(key=lambda item: (item.size, item.key))
    logger.info(
        "Query log mined",
        path=str(log_path),
        queries=lines,
        capped_queries=capped,
        subsets=len(stats),
    )
    return stats


def assign_depths(
    stats: Iterable[SubsetStats], policy: DepthPolicy, k_max: int
) -> list[CatalogEntry]:
    """Attach prefix depths; subsets the policy does not cover are dropped."""
    entries: list[CatalogEntry] = []
    dropped = 0
    for item in stats:
        base = policy.base_depths.get(item.size)
        multiplier = policy.multiplier_for(item.frequency)
        floor = policy.min_frequency_to_keep.get(item.size, 0)
        if base is None or multiplier is None or item.frequency < floor:
            dropped += 1
            continue
        depth = max(k_max, math.floor(base * multiplier))
        entries.append(CatalogEntry(stats=item, depth=depth))

    logger.debug(
        "Depths assigned", policy=policy.name, kept=len(entries), dropped=dropped
    )
    return entries


def single_term_catalog(index: ImpactIndex, depth: int | None = None) -> list[CatalogEntry]:
    """One entry per index term; depth None means the whole list."""
    return [
        CatalogEntry(
            stats=SubsetStats(key=(term,), frequency=1),
            depth=len(plist) if depth is None else depth,
        )
        for term, plist in enumerate(index.lists)
    ]


def write_catalog(entries: Iterable[CatalogEntry], index: ImpactIndex, path: str | Path) -> int:
    """Dump `terms<TAB>frequency<TAB>depth` lines using term strings."""
    written = 0
    with open(path, "w", encoding="utf-8") as handle:
        for entry in entries:
            words = ",".join(index.terms[term] for term in entry.key)
            handle.write(f"{words}\t{entry.stats.frequency}\t{entry.depth}\n")
            written += 1
    logger.info("Catalog written", path=str(path), entries=written)
    return written


def read_catalog(path: str | Path, index: ImpactIndex) -> list[CatalogEntry]:
    """Load a catalog dump against an index; unknown terms drop the entry."""
    entries: list[CatalogEntry] = []
    unresolved = 0
    with open(path, encoding="utf-8") as handle:
        for line_number, raw_line in enumerate(handle, start=1):
            line = raw_line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise CatalogFormatError(f"line {line_number}: expected 3 catalog fields")
            words, frequency, depth = fields
            terms = [index.term_dictionary.get(word) for word in words.split(",")]
            if any(term is None for term in terms):
                unresolved += 1
                continue
            try:
                stats = SubsetStats(
                    key=tuple(sorted(term for term in terms if term is not None)),
                    frequency=int(frequency),
                )
                entries.append(CatalogEntry(stats=stats, depth=int(depth)))
            except ValueError as e:
                raise CatalogFormatError(f"line {line_number}: {e}") from e

    if unresolved:
        logger.warning("Catalog entries not in index", skipped=unresolved)
    entries.sort(key=lambda entry: (len(entry.key), entry.key))
    return entries
