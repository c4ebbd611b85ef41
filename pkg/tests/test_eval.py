"""
Tests for the evaluation harness, MaxScore benchmarks and CSV output.
"""

import csv

import numpy as np
import pytest

from thresholdkit.exceptions import ArgumentError, StoreCompatibilityError
from thresholdkit.models.estimate_models import (
    Budget,
    EstimationMethod,
    MethodConfig,
    SamplePlan,
)
from thresholdkit.models.eval_models import CSV_COLUMNS, EvalRecord
from thresholdkit.models.prefix_models import PrefixStore
from thresholdkit.services.eval_service import (
    REPORT_COLUMNS,
    EvaluationService,
    build_report,
    compute_muf,
    format_bench,
    format_report,
    length_bucket,
    read_csv_records,
    run_estimate,
    write_csv,
    write_report_csv,
)
from thresholdkit.services.index_builder import sample_index
from thresholdkit.services.query_engine import exact_threshold, maxscore_topk

SAFE_METHODS = [
    EstimationMethod.QUANTILE,
    EstimationMethod.REMOVE_DUPLICATES,
    EstimationMethod.COMBINE_SCORES,
    EstimationMethod.LOOKUPS,
]


def _records(estimates, exacts, lengths=None):
    lengths = lengths or [2] * len(estimates)
    return [
        EvalRecord.create(
            query_id=i, query_length=length, k=10, method="lookups", estimate=e, exact=x
        )
        for i, (e, x, length) in enumerate(zip(estimates, exacts, lengths, strict=True))
    ]


@pytest.fixture
def service(test_config, index, store):
    """Evaluation service over the session artifacts."""
    return EvaluationService(test_config, index, store)


class TestComputeMuf:
    """Test suite for compute_muf."""

    def test_mean_ratio(self):
        """Test two records at 0.9 and 1.0."""
        summary = compute_muf(_records([9, 10], [10, 10]))

        assert summary.muf == pytest.approx(0.95)
        assert summary.overestimate_rate == 0.0

    def test_all_overestimating(self):
        """Test that no eligible record leaves the MUF undefined."""
        summary = compute_muf(_records([11], [10]))

        assert summary.muf is None
        assert summary.overestimate_rate == 1.0

    def test_ideal(self):
        """Test that exact estimates give MUF 1."""
        assert compute_muf(_records([3, 7, 12], [3, 7, 12])).muf == 1.0

    def test_zero_exact_excluded(self):
        """Test that records with exact 0 are counted but not scored."""
        summary = compute_muf(_records([0, 5], [0, 10]))

        assert summary.muf == pytest.approx(0.5)
        assert summary.excluded_zero_exact == 1
        assert summary.eligible == 1

    def test_no_records(self):
        """Test the empty input."""
        summary = compute_muf([])

        assert summary.muf is None
        assert summary.overestimate_rate is None

    def test_matches_reference(self):
        """Test random records against a direct evaluation of the definition."""
        rng = np.random.default_rng(41)
        exacts = rng.integers(0, 50, size=500).tolist()
        estimates = [max(0, x + int(rng.integers(-20, 3))) for x in exacts]

        summary = compute_muf(_records(estimates, exacts))

        scored = [(e, x) for e, x in zip(estimates, exacts, strict=True) if x > 0]
        kept = [e / x for e, x in scored if e <= x]
        assert summary.muf == pytest.approx(sum(kept) / len(kept))
        assert summary.overestimate_rate == pytest.approx(
            sum(e > x for e, x in scored) / len(scored)
        )


class TestBuildReport:
    """Test suite for build_report."""

    def test_length_breakdown_recombines(self):
        """Test that eligible-weighted bucket MUFs equal the overall MUF."""
        rng = np.random.default_rng(43)
        exacts = rng.integers(1, 40, size=300).tolist()
        estimates = [max(0, x - int(rng.integers(0, 10))) for x in exacts]
        lengths = rng.integers(1, 8, size=300).tolist()
        config = MethodConfig(method=EstimationMethod.LOOKUPS)

        report = build_report(_records(estimates, exacts, lengths), config, 10)

        weighted = sum(s.muf * s.eligible for s in report.muf_by_length.values())
        eligible = sum(s.eligible for s in report.muf_by_length.values())
        assert weighted / eligible == pytest.approx(report.muf, abs=1e-12)
        assert set(report.muf_by_length) <= {"1", "2", "3", "4", "5+"}

    def test_quantile_reports_no_budget(self):
        """Test that the quantile method leaves ab and lb empty."""
        config = MethodConfig(method=EstimationMethod.QUANTILE)

        report = build_report(_records([1], [1]), config, 10)

        assert report.ab is None
        assert report.lb is None

    def test_length_bucket(self):
        """Test bucket labels."""
        assert [length_bucket(n) for n in (1, 2, 4, 5, 9)] == ["1", "2", "4", "5+", "5+"]


class TestCsv:
    """Test suite for per-query and report CSV files."""

    def test_empty(self, tmp_path):
        """Test that no records give a header-only file."""
        path = tmp_path / "records.csv"

        assert write_csv([], path) == 0
        assert path.read_text(encoding="utf-8") == ",".join(CSV_COLUMNS) + "\n"

    def test_one_record(self, tmp_path):
        """Test the formatting of a single row."""
        path = tmp_path / "records.csv"

        write_csv(_records([9], [10]), path)

        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 2
        assert lines[1] == "0,2,10,lookups,9,10,0.900000,false,0,0,0"

    def test_round_trip(self, tmp_path):
        """Test that parsing an emitted file recovers every field."""
        path = tmp_path / "records.csv"
        records = _records([9, 3, 11, 0], [10, 4, 10, 0], [2, 3, 5, 7])

        write_csv(records, path)

        assert read_csv_records(path) == records

    def test_bad_header(self, tmp_path):
        """Test that foreign CSV files are rejected."""
        path = tmp_path / "records.csv"
        path.write_text("a,b\n1,2\n", encoding="utf-8")

        with pytest.raises(ValueError):
            read_csv_records(path)

    def test_report_csv(self, tmp_path):
        """Test the report columns and an undefined MUF cell."""
        path = tmp_path / "report.csv"
        config = MethodConfig(method=EstimationMethod.LOOKUPS, budget=Budget(ab=50, lb=5))
        report = build_report(_records([11], [10]), config, 10)

        write_report_csv([report], path)

        with open(path, encoding="utf-8", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert tuple(rows[0]) == REPORT_COLUMNS
        assert rows[0]["muf"] == ""
        assert rows[0]["overestimate_rate"] == "1.000000"
        assert rows[0]["ab"] == "50"
        assert "lookups" in format_report([report])


class TestEvaluationService:
    """Test suite for EvaluationService."""

    def test_fingerprint_mismatch(self, test_config, index):
        """Test that a foreign store aborts before any work."""
        foreign = PrefixStore((10,), {}, {}, "custom", 0)

        with pytest.raises(StoreCompatibilityError):
            EvaluationService(test_config, index, foreign)

    def test_select_drops_single_terms(self, service, queries):
        """Test default query selection."""
        selected = service.select(queries)

        assert all(len(query) >= 2 for _, query in selected)
        assert len(service.select(queries, include_single_term=True)) >= len(selected)

    def test_stored_subsets_are_exact(self, service, index, store):
        """Test that the quantile method is exact on stored subsets."""
        keys = [key for key in store.quantiles if len(key) >= 2][:40]
        queries = [(i, index.query_for_terms(key)) for i, key in enumerate(keys)]
        config = MethodConfig(method=EstimationMethod.QUANTILE)

        report, records = service.evaluate(queries, 10, config)

        assert report.muf in (1.0, None)
        assert report.overestimate_rate in (0.0, None)
        assert all(record.estimate == record.exact for record in records)

    @pytest.mark.parametrize("method", SAFE_METHODS)
    def test_safe_methods_never_overestimate(self, service, queries, method):
        """Test every safe method over the log queries."""
        config = MethodConfig(method=method, budget=Budget(ab=300, lb=100))

        report, records = service.evaluate(queries, 10, config)

        assert not any(record.overestimate for record in records)
        assert report.overestimate_rate in (0.0, None)
        assert report.query_count == len(records) == len(service.select(queries))
        assert [r.query_id for r in records] == sorted(r.query_id for r in records)

    def test_lookups_muf_not_below_quantile(self, service, queries):
        """Test that backed lookups never lose to the quantile method."""
        quantile, _ = service.evaluate(
            queries, 10, MethodConfig(method=EstimationMethod.QUANTILE)
        )
        lookups, _ = service.evaluate(
            queries,
            10,
            MethodConfig(
                method=EstimationMethod.LOOKUPS, budget=Budget(ab=1000, lb=1000)
            ),
        )

        assert lookups.muf >= quantile.muf
        for bucket, summary in quantile.muf_by_length.items():
            if summary.muf is not None:
                assert lookups.muf_by_length[bucket].muf >= summary.muf

    @pytest.mark.asyncio
    async def test_evaluate_async(self, service, queries):
        """Test the async entry point directly."""
        config = MethodConfig(method=EstimationMethod.LOOKUPS)

        report, records = await service.evaluate_async(queries, 100, config)

        assert report.k == 100
        assert all(record.k == 100 for record in records)

    def test_budgets_are_reported(self, service, queries):
        """Test that mean budget usage stays within the configured budgets."""
        config = MethodConfig(
            method=EstimationMethod.LOOKUPS, budget=Budget(ab=50, lb=20), backup=False
        )

        report, _ = service.evaluate(queries, 10, config)

        assert report.ab == 50
        assert report.lb == 20
        assert 0 < report.mean_ab_used <= 50
        assert report.mean_lb_used <= 20

    def test_sampled_method(self, test_config, index, store, queries):
        """Test that the sampled method runs on the identity sample."""
        sample = sample_index(index, 1.0, seed=3)
        service = EvaluationService(
            test_config, index, store, sample_index=sample, sample_store=store
        )
        config = MethodConfig(
            method=EstimationMethod.SAMPLED,
            budget=Budget(ab=300, lb=100),
            sample_plan=SamplePlan.create(10, 1.0, 1e-4),
        )

        report, records = service.evaluate(queries, 10, config)

        assert report.method == "sampled"
        assert not any(record.overestimate for record in records)

    def test_sampled_needs_sample_artifacts(self, index, store, queries):
        """Test that running the sampled method without samples fails."""
        config = MethodConfig(
            method=EstimationMethod.SAMPLED,
            sample_plan=SamplePlan.create(10, 0.05, 1e-2),
        )

        with pytest.raises(ArgumentError):
            run_estimate(config, index, store, queries[0][1], 10)

    def test_sampled_needs_plan(self):
        """Test that a sampled configuration requires a plan."""
        with pytest.raises(ValueError):
            MethodConfig(method=EstimationMethod.SAMPLED)


class TestBenchMaxScore:
    """Test suite for bench_maxscore."""

    def test_sources_agree_and_save_work(self, service, queries):
        """Test thresholds and postings across threshold sources."""
        lookups = MethodConfig(method=EstimationMethod.LOOKUPS, budget=Budget(ab=300, lb=300))

        rows = {row.source: row for row in service.bench_maxscore(queries, 10, lookups=lookups)}

        assert set(rows) == {"zero", "quantile", "lookups", "exact"}
        assert all(row.threshold_mismatches == 0 for row in rows.values())
        assert rows["exact"].mean_postings_scored <= rows["zero"].mean_postings_scored
        assert rows["lookups"].mean_postings_scored <= rows["quantile"].mean_postings_scored
        assert rows["lookups"].mean_postings_scored < rows["zero"].mean_postings_scored
        assert rows["zero"].mean_estimation_ns == 0
        assert "net_saving_ns" in format_bench(list(rows.values()))

    def test_per_query_monotone(self, index, service, queries):
        """Test that the exact seed never scores more postings than zero."""
        for _, query in service.select(queries)[:50]:
            exact = exact_threshold(index, query, 10)
            _, zero = maxscore_topk(index, query, 10, 0)
            _, seeded = maxscore_topk(index, query, 10, exact)
            assert seeded.postings_scored <= zero.postings_scored

    def test_subset_of_sources(self, service, queries):
        """Test that only requested sources are reported."""
        rows = service.bench_maxscore(queries[:20], 10, ["exact"])

        assert [row.source for row in rows] == ["exact"]

    def test_unknown_source(self, service, queries):
        """Test that unknown sources are argument errors."""
        with pytest.raises(ArgumentError):
            service.bench_maxscore(queries, 10, ["oracle"])
