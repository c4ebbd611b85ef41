"""
Data models for evaluation records, reports and MaxScore benchmarks.
"""

from pydantic import BaseModel, ConfigDict, Field

CSV_COLUMNS = (
    "query_id",
    "qlen",
    "k",
    "method",
    "estimate",
    "exact",
    "ratio",
    "overestimate",
    "ab_used",
    "lb_used",
    "time_ns",
)


class EvalRecord(BaseModel):
    """One query's estimate compared with the exact threshold."""

    query_id: int
    query_length: int
    k: int
    method: str
    estimate: int
    exact: int
    ratio: float | None = Field(None, description="estimate / exact when exact > 0")
    overestimate: bool
    ab_used: int = 0
    lb_used: int = 0
    time_ns: int = 0

    model_config = ConfigDict(frozen=True)

    @classmethod
    def create(
        cls,
        query_id: int,
        query_length: int,
        k: int,
        method: str,
        estimate: int,
        exact: int,
        ab_used: int = 0,
        lb_used: int = 0,
        time_ns: int = 0,
    ) -> "EvalRecord":
        return cls(
            query_id=query_id,
            query_length=query_length,
            k=k,
            method=method,
            estimate=estimate,
            exact=exact,
            ratio=estimate / exact if exact > 0 else None,
            overestimate=estimate > exact,
            ab_used=ab_used,
            lb_used=lb_used,
            time_ns=time_ns,
        )


class MufSummary(BaseModel):
    """Mean under-prediction fraction and overestimate rate over records."""

    muf: float | None = Field(None, description="None when no record is eligible")
    overestimate_rate: float | None = None
    eligible: int = Field(0, description="Non-overestimating records with exact > 0")
    excluded_zero_exact: int = 0


class EvalReport(BaseModel):
    """Aggregates of one estimator configuration over a query set."""

    method: str
    k: int
    ab: int | None = None
    lb: int | None = None
    muf: float | None
    overestimate_rate: float | None
    mean_ab_used: float
    mean_lb_used: float
    query_count: int
    excluded_zero_exact: int
    latency_p50_ns: float
    latency_p95_ns: float
    muf_by_length: dict[str, MufSummary] = Field(default_factory=dict)


class BenchRow(BaseModel):
    """MaxScore work and time for one initial-threshold source."""

    source: str
    queries: int
    mean_postings_scored: float
    mean_documents_evaluated: float
    mean_engine_ns: float
    mean_estimation_ns: float
    mean_net_saving_ns: float = Field(
        0.0, description="Engine time saved versus the zero source minus estimation"
    )
    threshold_mismatches: int = 0
