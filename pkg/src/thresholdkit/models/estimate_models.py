"""
Data models for threshold estimates, budgets and sampling plans.
"""

from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..utils.binomial import choose_k_prime, overestimate_probability


class EstimationMethod(StrEnum):
    """Estimator names as they appear in CSV output."""

    QUANTILE = "quantile"
    REMOVE_DUPLICATES = "rd"
    COMBINE_SCORES = "cs"
    LOOKUPS = "lookups"
    SAMPLED = "sampled"


class Budget(BaseModel):
    """Access budget (prefix entries) and lookup budget (accumulators)."""

    ab: int = Field(..., ge=1, description="Max prefix entries processed")
    lb: int = Field(0, ge=0, description="Max accumulators receiving lookups")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_lookup_budget(self) -> "Budget":
        if self.lb > self.ab:
            raise ValueError(f"lookup budget {self.lb} exceeds access budget {self.ab}")
        return self

    @classmethod
    def from_ratio(cls, ab: int, lookup_ratio: float) -> "Budget":
        """Budget whose lb is a fraction of ab."""
        if not 0 <= lookup_ratio <= 1:
            raise ValueError(f"Invalid lookup ratio: {lookup_ratio}")
        return cls(ab=ab, lb=int(ab * lookup_ratio))


class Estimate(BaseModel):
    """A top-k threshold estimate with budget accounting."""

    value: int = Field(..., ge=0, description="Estimated k-th score")
    method: EstimationMethod
    ab_used: int = Field(0, ge=0, description="Prefix entries processed")
    lb_used: int = Field(0, ge=0, description="Accumulators looked up")
    backed_by_quantile: bool = Field(
        False, description="Whether the quantile backup supplied the value"
    )
    elapsed_ns: int = Field(0, ge=0, description="Wall time of the estimate")

    model_config = ConfigDict(frozen=True)


class SamplePlan(BaseModel):
    """Sampling rate, overestimate tolerance and the derived k'."""

    rate: float = Field(..., gt=0, le=1)
    epsilon: float = Field(..., gt=0)
    k: int = Field(..., ge=1)
    k_prime: int = Field(..., ge=1)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_bound(self) -> "SamplePlan":
        if self.k_prime > self.k:
            raise ValueError("k_prime cannot exceed k")
        if self.rate < 1:
            bound = overestimate_probability(self.k, self.k_prime, self.rate)
            if bound > self.epsilon:
                raise ValueError(
                    f"k_prime {self.k_prime} gives overestimate probability "
                    f"{bound:.3g} above epsilon {self.epsilon}"
                )
        elif self.k_prime != self.k:
            raise ValueError("a full sample requires k_prime == k")
        return self

    @classmethod
    def create(cls, k: int, rate: float, epsilon: float) -> "SamplePlan":
        """Plan with the smallest k' meeting the overestimate bound."""
        return cls(
            rate=rate, epsilon=epsilon, k=k, k_prime=choose_k_prime(k, rate, epsilon)
        )


class MethodConfig(BaseModel):
    """An estimator with its budgets, as run by the evaluation harness."""

    method: EstimationMethod
    budget: Budget = Field(default_factory=lambda: Budget(ab=1000, lb=0))
    backup: bool = Field(True, description="Apply the quantile backup")
    max_subset_size: int | None = Field(None, ge=1, le=4)
    sample_plan: SamplePlan | None = None

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_plan(self) -> "MethodConfig":
        if self.method is EstimationMethod.SAMPLED and self.sample_plan is None:
            raise ValueError("the sampled method needs a sample plan")
        return self