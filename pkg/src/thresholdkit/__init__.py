"""
thresholdkit - top-k threshold estimation for disjunctive queries.

Builds quantized impact indexes, quantile tables and score prefixes, and
estimates top-k thresholds that can seed dynamic pruning engines such as
MaxScore.
"""

__version__ = "0.1.0"

from .config import Config
from .models import Estimate, ImpactIndex, PrefixStore, Query
from .services import (
    EvaluationService,
    build_index,
    build_store,
    estimate_with_lookups,
    exact_threshold,
    maxscore_topk,
)

__all__ = [
    "Config",
    "Estimate",
    "EvaluationService",
    "ImpactIndex",
    "PrefixStore",
    "Query",
    "build_index",
    "build_store",
    "estimate_with_lookups",
    "exact_threshold",
    "maxscore_topk",
]
