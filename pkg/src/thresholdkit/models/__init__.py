"""
Data models for the thresholdkit package.
"""

from .catalog_models import (
    CatalogEntry,
    DepthPolicy,
    FrequencyTier,
    SubsetKey,
    SubsetStats,
)
from .estimate_models import (
    Budget,
    Estimate,
    EstimationMethod,
    MethodConfig,
    SamplePlan,
)
from .eval_models import BenchRow, EvalRecord, EvalReport, MufSummary
from .index_models import (
    ImpactIndex,
    PostingList,
    QuantizationMeta,
    Query,
    ScorerKind,
)
from .prefix_models import Prefix, PrefixStore, QuantileRecord, SubsetMatch

__all__ = [
    "BenchRow",
    "Budget",
    "CatalogEntry",
    "DepthPolicy",
    "Estimate",
    "EstimationMethod",
    "EvalRecord",
    "EvalReport",
    "FrequencyTier",
    "ImpactIndex",
    "MethodConfig",
    "MufSummary",
    "PostingList",
    "Prefix",
    "PrefixStore",
    "QuantileRecord",
    "QuantizationMeta",
    "Query",
    "SamplePlan",
    "ScorerKind",
    "SubsetKey",
    "SubsetMatch",
    "SubsetStats",
]
