"""
Services for the thresholdkit package.
"""

from .catalog_service import assign_depths, mine_subsets, named_config
from .estimators import (
    estimate_combine_scores,
    estimate_quantile,
    estimate_remove_duplicates,
    estimate_with_lookups,
    with_quantile_backup,
)
from .eval_service import EvaluationService, compute_muf, write_csv
from .index_builder import build_index, load_precomputed, sample_index
from .prefix_service import build_store, matching_subsets, store_size_report
from .query_engine import exact_threshold, exact_topk, maxscore_topk
from .sampling import choose_k_prime, estimate_sampled, overestimate_probability

__all__ = [
    "EvaluationService",
    "assign_depths",
    "build_index",
    "build_store",
    "choose_k_prime",
    "compute_muf",
    "estimate_combine_scores",
    "estimate_quantile",
    "estimate_remove_duplicates",
    "estimate_sampled",
    "estimate_with_lookups",
    "exact_threshold",
    "exact_topk",
    "load_precomputed",
    "matching_subsets",
    "maxscore_topk",
    "mine_subsets",
    "named_config",
    "overestimate_probability",
    "sample_index",
    "store_size_report",
    "with_quantile_backup",
    "write_csv",
]
