"""
Data models for mined query-log subsets and their prefix depth policies.
"""

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..utils.validators import MAX_SUBSET_SIZE, is_valid_subset_key

SubsetKey = tuple[int, ...]


class SubsetStats(BaseModel):
    """A term subset and the number of log queries containing it."""

    key: SubsetKey = Field(..., description="Strictly ascending term IDs")
    frequency: int = Field(..., ge=1, description="Log queries containing the key")

    model_config = ConfigDict(frozen=True)

    @field_validator("key")
    @classmethod
    def _check_key(cls, key: SubsetKey) -> SubsetKey:
        if not is_valid_subset_key(key):
            raise ValueError(f"Invalid subset key: {key}")
        return key

    @property
    def size(self) -> int:
        return len(self.key)


class FrequencyTier(BaseModel):
    """Depth multiplier applied to subsets at or above a log frequency."""

    min_frequency: int = Field(..., ge=1)
    depth_multiplier: float = Field(..., gt=0, le=1)

    model_config = ConfigDict(frozen=True)


class DepthPolicy(BaseModel):
    """Per-size base depths scaled by frequency tiers."""

    name: str = Field("custom", description="Policy name recorded in stores")
    base_depths: dict[int, int] = Field(..., description="Subset size -> depth")
    tiers: tuple[FrequencyTier, ...] = Field(
        (FrequencyTier(min_frequency=1, depth_multiplier=1.0),),
        description="Sorted descending by min_frequency",
    )
    min_frequency_to_keep: dict[int, int] = Field(
        default_factory=dict, description="Subset size -> minimum log frequency"
    )

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_policy(self) -> "DepthPolicy":
        if not self.base_depths:
            raise ValueError("policy needs at least one subset size")
        for size, depth in self.base_depths.items():
            if not 1 <= size <= MAX_SUBSET_SIZE:
                raise ValueError(f"subset size {size} outside 1..{MAX_SUBSET_SIZE}")
            if depth < 1:
                raise ValueError(f"depth for size {size} must be positive")
        if not self.tiers:
            raise ValueError("policy needs at least one frequency tier")
        thresholds = [tier.min_frequency for tier in self.tiers]
        if thresholds != sorted(thresholds, reverse=True) or len(set(thresholds)) != len(
            thresholds
        ):
            raise ValueError("tiers must be strictly descending by min_frequency")
        multipliers = [tier.depth_multiplier for tier in self.tiers]
        if multipliers != sorted(multipliers, reverse=True):
            raise ValueError("tier multipliers must not grow as frequency falls")
        return self

    @property
    def max_size(self) -> int:
        return max(self.base_depths)

    def multiplier_for(self, frequency: int) -> float | None:
        """Multiplier of the highest tier reached, or None below every tier."""
        for tier in self.tiers:
            if frequency >= tier.min_frequency:
                return tier.depth_multiplier
        return None


class CatalogEntry(BaseModel):
    """A subset selected for a prefix, with its materialization depth."""

    stats: SubsetStats
    depth: int = Field(..., ge=0, description="Prefix entries to materialize")

    model_config = ConfigDict(frozen=True)

    @property
    def key(self) -> SubsetKey:
        return self.stats.key
