"""
Sampled threshold estimation.

A top-k' estimate on a document sample serves as a top-k estimate for the
full collection. It is not safe: it overestimates with probability at most
the plan's epsilon.
"""

import math
import time

import structlog

from ..exceptions import ArgumentError
from ..models.estimate_models import Estimate, EstimationMethod, SamplePlan
from ..models.index_models import ImpactIndex, Query
from ..models.prefix_models import PrefixStore
from ..utils.binomial import choose_k_prime, overestimate_probability
from .estimators import estimate_with_lookups, with_quantile_backup

logger = structlog.get_logger(__name__)

__all__ = [
    "check_sample_rate",
    "choose_k_prime",
    "estimate_sampled",
    "overestimate_probability",
]


def check_sample_rate(sample_index: ImpactIndex, plan: SamplePlan) -> None:
    """Reject a plan whose rate differs from the one the sample was drawn at."""
    if not math.isclose(sample_index.sample_rate, plan.rate, rel_tol=1e-9):
        raise ArgumentError(
            f"sample plan assumes rate {plan.rate}, "
            f"but the sample index was drawn at rate {sample_index.sample_rate}"
        )


def estimate_sampled(
    sample_store: PrefixStore,
    sample_index: ImpactIndex,
    query: Query,
    k: int,
    ab: int,
    lb: int,
    plan: SamplePlan,
    *,
    max_size: int | None = None,
) -> Estimate:
    """Backed lookups estimate at k' on the sample artifacts.

    The query is re-resolved by its words, since sampling renumbers terms.
    """
    started = time.perf_counter_ns()
    if plan.k != k:
        raise ArgumentError(f"sample plan was made for k={plan.k}, not k={k}")
    check_sample_rate(sample_index, plan)

    sample_query = sample_index.resolve_query(query.words)
    if plan.k_prime > sample_index.document_count:
        logger.warning(
            "Sample too small for k_prime",
            k_prime=plan.k_prime,
            sample_documents=sample_index.document_count,
        )
        return Estimate(
            value=0,
            method=EstimationMethod.SAMPLED,
            elapsed_ns=time.perf_counter_ns() - started,
        )

    inner = estimate_with_lookups(
        sample_store,
        sample_index,
        sample_query,
        plan.k_prime,
        ab,
        lb,
        max_size=max_size,
    )
    backed = with_quantile_backup(
        inner, sample_store, sample_query, plan.k_prime, max_size=max_size
    )
    return backed.model_copy(
        update={
            "method": EstimationMethod.SAMPLED,
            "elapsed_ns": time.perf_counter_ns() - started,
        }
    )
