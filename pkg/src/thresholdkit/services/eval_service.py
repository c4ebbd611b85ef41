"""
Evaluation harness: MUF and overestimate rates, budget usage, latency
percentiles, MaxScore benchmarks and CSV output.
"""

import csv
import time
from collections import defaultdict
from collections.abc import Iterable, Sequence
from pathlib import Path

import anyio
import numpy as np
import structlog
from anyio import to_thread

from ..config import Config
from ..exceptions import ArgumentError, StoreCompatibilityError
from ..models.estimate_models import Estimate, EstimationMethod, MethodConfig
from ..models.eval_models import (
    CSV_COLUMNS,
    BenchRow,
    EvalRecord,
    EvalReport,
    MufSummary,
)
from ..models.index_models import ImpactIndex, Query
from ..models.prefix_models import PrefixStore
from .estimators import (
    estimate_combine_scores,
    estimate_quantile,
    estimate_remove_duplicates,
    estimate_with_lookups,
    with_quantile_backup,
)
from .query_engine import exact_threshold, maxscore_topk
from .sampling import estimate_sampled

logger = structlog.get_logger(__name__)

BENCH_SOURCES = ("zero", "quantile", "lookups", "exact")
LENGTH_BUCKETS = ("1", "2", "3", "4", "5+")
WARMUP_QUERIES = 10


def length_bucket(length: int) -> str:
    return str(length) if length < 5 else "5+"


def compute_muf(records: Iterable[EvalRecord]) -> MufSummary:
    """Mean of estimate/exact over non-overestimating records with exact > 0.

    The overestimate rate is taken over all records with exact > 0. Records
    with exact = 0 are excluded and counted; with no eligible record the MUF
    is None.
    """
    ratios: list[float] = []
    scored = 0
    overestimates = 0
    excluded = 0
    for record in records:
        if record.exact <= 0:
            excluded += 1
            continue
        scored += 1
        if record.overestimate:
            overestimates += 1
        elif record.ratio is not None:
            ratios.append(record.ratio)

    return MufSummary(
        muf=float(np.mean(ratios)) if ratios else None,
        overestimate_rate=overestimates / scored if scored else None,
        eligible=len(ratios),
        excluded_zero_exact=excluded,
    )


def read_queries(path: str | Path, index: ImpactIndex) -> list[tuple[int, Query]]:
    """Queries of a one-per-line file, numbered from 0 over non-blank lines."""
    queries: list[tuple[int, Query]] = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                queries.append((len(queries), index.resolve_query(line)))
    return queries


def run_estimate(
    config: MethodConfig,
    index: ImpactIndex,
    store: PrefixStore,
    query: Query,
    k: int,
    *,
    sample_index: ImpactIndex | None = None,
    sample_store: PrefixStore | None = None,
) -> Estimate:
    """Run one configured estimator, applying the quantile backup if asked."""
    ab, lb = config.budget.ab, config.budget.lb
    max_size = config.max_subset_size
    method = config.method

    if method is EstimationMethod.SAMPLED:
        if sample_index is None or sample_store is None or config.sample_plan is None:
            raise ArgumentError("the sampled method needs a sample index and store")
        return estimate_sampled(
            sample_store,
            sample_index,
            query,
            k,
            ab,
            lb,
            config.sample_plan,
            max_size=max_size,
        )

    if method is EstimationMethod.QUANTILE:
        return estimate_quantile(store, query, k, max_size=max_size)
    if method is EstimationMethod.REMOVE_DUPLICATES:
        estimate = estimate_remove_duplicates(store, query, k, ab, max_size=max_size)
    elif method is EstimationMethod.COMBINE_SCORES:
        estimate, _ = estimate_combine_scores(store, query, k, ab, max_size=max_size)
    else:
        estimate = estimate_with_lookups(store, index, query, k, ab, lb, max_size=max_size)

    if config.backup:
        estimate = with_quantile_backup(estimate, store, query, k, max_size=max_size)
    return estimate


class EvaluationService:
    """Runs estimator configurations over query sets against one index."""

    def __init__(
        self,
        config: Config,
        index: ImpactIndex,
        store: PrefixStore,
        *,
        sample_index: ImpactIndex | None = None,
        sample_store: PrefixStore | None = None,
    ):
        self.config = config
        self.index = index
        self.store = store
        self.sample_index = sample_index
        self.sample_store = sample_store
        self._check_fingerprints()

    def _check_fingerprints(self) -> None:
        pairs = [("store", self.index, self.store)]
        if self.sample_index is not None and self.sample_store is not None:
            pairs.append(("sample store", self.sample_index, self.sample_store))
        for label, index, store in pairs:
            if index.fingerprint() != store.index_fingerprint:
                logger.error(
                    "Fingerprint mismatch, evaluation aborted",
                    artifact=label,
                    store=f"{store.index_fingerprint:016x}",
                    index=f"{index.fingerprint():016x}",
                )
                raise StoreCompatibilityError(f"{label} was built against a different index")

    def _estimate(self, method: MethodConfig, query: Query, k: int) -> Estimate:
        return run_estimate(
            method,
            self.index,
            self.store,
            query,
            k,
            sample_index=self.sample_index,
            sample_store=self.sample_store,
        )

    def _record(
        self, query_id: int, query: Query, k: int, method: MethodConfig
    ) -> EvalRecord:
        estimate = self._estimate(method, query, k)
        exact = exact_threshold(self.index, query, k)
        return EvalRecord.create(
            query_id=query_id,
            query_length=len(query),
            k=k,
            method=method.method.value,
            estimate=estimate.value,
            exact=exact,
            ab_used=estimate.ab_used,
            lb_used=estimate.lb_used,
            time_ns=estimate.elapsed_ns,
        )

    def select(
        self, queries: Sequence[tuple[int, Query]], include_single_term: bool = False
    ) -> list[tuple[int, Query]]:
        """Drop empty queries, and single-term ones unless asked to keep them."""
        minimum = 1 if include_single_term else 2
        return [(query_id, query) for query_id, query in queries if len(query) >= minimum]

    async def evaluate_async(
        self,
        queries: Sequence[tuple[int, Query]],
        k: int,
        method: MethodConfig,
        *,
        include_single_term: bool = False,
    ) -> tuple[EvalReport, list[EvalRecord]]:
        """Evaluate concurrently on worker threads capped by config.threads."""
        selected = self.select(queries, include_single_term)
        for _, query in selected[:WARMUP_QUERIES]:
            self._estimate(method, query, k)

        limiter = anyio.CapacityLimiter(self.config.threads)
        records: list[EvalRecord] = []

        async def run_one(query_id: int, query: Query) -> None:
            record = await to_thread.run_sync(
                self._record, query_id, query, k, method, limiter=limiter
            )
            records.append(record)

        async with anyio.create_task_group() as group:
            for query_id, query in selected:
                group.start_soon(run_one, query_id, query)

        records.sort(key=lambda record: record.query_id)
        report = build_report(records, method, k)
        logger.info(
            "Evaluation finished",
            method=method.method.value,
            k=k,
            queries=report.query_count,
            muf=report.muf,
            overestimate_rate=report.overestimate_rate,
        )
        return report, records

    def evaluate(
        self,
        queries: Sequence[tuple[int, Query]],
        k: int,
        method: MethodConfig,
        *,
        include_single_term: bool = False,
    ) -> tuple[EvalReport, list[EvalRecord]]:
        """Blocking wrapper around evaluate_async."""

        async def run() -> tuple[EvalReport, list[EvalRecord]]:
            return await self.evaluate_async(
                queries, k, method, include_single_term=include_single_term
            )

        return anyio.run(run)

    def bench_maxscore(
        self,
        queries: Sequence[tuple[int, Query]],
        k: int,
        sources: Sequence[str] = BENCH_SOURCES,
        lookups: MethodConfig | None = None,
    ) -> list[BenchRow]:
        """MaxScore work per initial-threshold source.

        Net saving is the engine time saved against the zero source minus
        the time spent producing the estimate.
        """
        unknown = set(sources) - set(BENCH_SOURCES)
        if unknown:
            raise ArgumentError(f"Unknown threshold sources: {sorted(unknown)}")
        lookups = lookups or MethodConfig(method=EstimationMethod.LOOKUPS)
        selected = self.select(queries)

        work: dict[str, list[tuple[int, int, int, int]]] = defaultdict(list)
        mismatches: dict[str, int] = defaultdict(int)
        for _, query in selected:
            exact = exact_threshold(self.index, query, k)
            for source in dict.fromkeys(("zero", *sources)):
                initial, estimation_ns = self._initial_threshold(source, query, k, lookups)
                result, stats = maxscore_topk(self.index, query, k, initial)
                if result.threshold != exact:
                    mismatches[source] += 1
                work[source].append(
                    (
                        stats.postings_scored,
                        stats.documents_evaluated,
                        stats.elapsed_ns,
                        estimation_ns,
                    )
                )

        baseline = np.array([row[2] for row in work["zero"]], dtype=np.float64)
        rows: list[BenchRow] = []
        for source in sources:
            values = np.array(work[source], dtype=np.float64).reshape(-1, 4)
            if values.size == 0:
                continue
            saving = baseline - values[:, 2] - values[:, 3]
            rows.append(
                BenchRow(
                    source=source,
                    queries=len(values),
                    mean_postings_scored=float(values[:, 0].mean()),
                    mean_documents_evaluated=float(values[:, 1].mean()),
                    mean_engine_ns=float(values[:, 2].mean()),
                    mean_estimation_ns=float(values[:, 3].mean()),
                    mean_net_saving_ns=float(saving.mean()),
                    threshold_mismatches=mismatches[source],
                )
            )
        logger.info("MaxScore benchmark finished", queries=len(selected), k=k)
        return rows

    def _initial_threshold(
        self, source: str, query: Query, k: int, lookups: MethodConfig
    ) -> tuple[int, int]:
        started = time.perf_counter_ns()
        if source == "zero":
            return 0, 0
        if source == "exact":
            value = exact_threshold(self.index, query, k)
            return value, time.perf_counter_ns() - started
        if source == "quantile":
            empty = Estimate(value=0, method=EstimationMethod.QUANTILE)
            estimate = with_quantile_backup(empty, self.store, query, k)
            return estimate.value, time.perf_counter_ns() - started
        estimate = run_estimate(lookups, self.index, self.store, query, k)
        return estimate.value, time.perf_counter_ns() - started


def build_report(
    records: Sequence[EvalRecord], method: MethodConfig, k: int
) -> EvalReport:
    """Aggregate records of one (method, k) configuration."""
    overall = compute_muf(records)
    by_length: dict[str, list[EvalRecord]] = defaultdict(list)
    for record in records:
        by_length[length_bucket(record.query_length)].append(record)

    times = np.array([record.time_ns for record in records], dtype=np.float64)
    uses_prefixes = method.method is not EstimationMethod.QUANTILE
    return EvalReport(
        method=method.method.value,
        k=k,
        ab=method.budget.ab if uses_prefixes else None,
        lb=method.budget.lb if uses_prefixes else None,
        muf=overall.muf,
        overestimate_rate=overall.overestimate_rate,
        mean_ab_used=float(np.mean([r.ab_used for r in records])) if records else 0.0,
        mean_lb_used=float(np.mean([r.lb_used for r in records])) if records else 0.0,
        query_count=len(records),
        excluded_zero_exact=overall.excluded_zero_exact,
        latency_p50_ns=float(np.percentile(times, 50)) if times.size else 0.0,
        latency_p95_ns=float(np.percentile(times, 95)) if times.size else 0.0,
        muf_by_length={
            bucket: compute_muf(by_length[bucket])
            for bucket in LENGTH_BUCKETS
            if bucket in by_length
        },
    )


def _format_ratio(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def write_csv(records: Iterable[EvalRecord], path: str | Path) -> int:
    """Write records under the fixed column header; returns the row count."""
    rows = 0
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow(
                [
                    record.query_id,
                    record.query_length,
                    record.k,
                    record.method,
                    record.estimate,
                    record.exact,
                    _format_ratio(record.ratio),
                    "true" if record.overestimate else "false",
                    record.ab_used,
                    record.lb_used,
                    record.time_ns,
                ]
            )
            rows += 1
    logger.info("Records written", path=str(path), rows=rows)
    return rows


def read_csv_records(path: str | Path) -> list[EvalRecord]:
    """Parse a file produced by write_csv."""
    records: list[EvalRecord] = []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"Unexpected CSV header: {reader.fieldnames}")
        for row in reader:
            records.append(
                EvalRecord(
                    query_id=int(row["query_id"]),
                    query_length=int(row["qlen"]),
                    k=int(row["k"]),
                    method=row["method"],
                    estimate=int(row["estimate"]),
                    exact=int(row["exact"]),
                    ratio=float(row["ratio"]) if row["ratio"] else None,
                    overestimate=row["overestimate"] == "true",
                    ab_used=int(row["ab_used"]),
                    lb_used=int(row["lb_used"]),
                    time_ns=int(row["time_ns"]),
                )
            )
    return records


REPORT_COLUMNS = (
    "method",
    "k",
    "ab",
    "lb",
    "muf",
    "overestimate_rate",
    "mean_ab_used",
    "mean_lb_used",
    "query_count",
    "excluded_zero_exact",
    "latency_p50_ns",
    "latency_p95_ns",
    *(f"muf_len_{bucket}" for bucket in LENGTH_BUCKETS),
)


def _report_row(report: EvalReport) -> list[str]:
    def optional(value: int | None) -> str:
        return "" if value is None else str(value)

    row = [
        report.method,
        str(report.k),
        optional(report.ab),
        optional(report.lb),
        _format_ratio(report.muf),
        _format_ratio(report.overestimate_rate),
        f"{report.mean_ab_used:.2f}",
        f"{report.mean_lb_used:.2f}",
        str(report.query_count),
        str(report.excluded_zero_exact),
        f"{report.latency_p50_ns:.0f}",
        f"{report.latency_p95_ns:.0f}",
    ]
    for bucket in LENGTH_BUCKETS:
        summary = report.muf_by_length.get(bucket)
        row.append(_format_ratio(summary.muf if summary else None))
    return row


def write_report_csv(reports: Iterable[EvalReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        writer.writerows(_report_row(report) for report in reports)


def format_report(reports: Sequence[EvalReport]) -> str:
    """Aligned text table of reports, one line per configuration."""
    table = [list(REPORT_COLUMNS)] + [
        [cell or "-" for cell in _report_row(report)] for report in reports
    ]
    widths = [max(len(row[i]) for row in table) for i in range(len(REPORT_COLUMNS))]
    return "\n".join(
        "  ".join(cell.rjust(width) for cell, width in zip(row, widths, strict=True))
        for row in table
    )


def format_bench(rows: Sequence[BenchRow]) -> str:
    """Aligned text table of MaxScore benchmark rows."""
    header = [
        "source",
        "queries",
        "postings",
        "documents",
        "engine_ns",
        "estimation_ns",
        "net_saving_ns",
        "mismatches",
    ]
    table = [header] + [
        [
            row.source,
            str(row.queries),
            f"{row.mean_postings_scored:.1f}",
            f"{row.mean_documents_evaluated:.1f}",
            f"{row.mean_engine_ns:.0f}",
            f"{row.mean_estimation_ns:.0f}",
            f"{row.mean_net_saving_ns:.0f}",
            str(row.threshold_mismatches),
        ]
        for row in rows
    ]
    widths = [max(len(line[i]) for line in table) for i in range(len(header))]
    return "\n".join(
        "  ".join(cell.rjust(width) for cell, width in zip(line, widths, strict=True))
        for line in table
    )
