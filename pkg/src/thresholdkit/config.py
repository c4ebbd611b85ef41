"""
Configuration management for thresholdkit.
"""

import os
from dataclasses import dataclass, field
from typing import Any


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(part) for part in raw.split(",") if part.strip())


@dataclass
class Config:
    """Configuration for index building, estimation and evaluation."""

    # Scoring models
    bm25_k1: float = field(default_factory=lambda: float(os.getenv("BM25_K1", "0.9")))
    bm25_b: float = field(default_factory=lambda: float(os.getenv("BM25_B", "0.4")))
    qld_mu: float = field(default_factory=lambda: float(os.getenv("QLD_MU", "1000")))

    # Quantization
    quant_bits: int = field(default_factory=lambda: int(os.getenv("QUANT_BITS", "8")))

    # Quantile grid and sampling
    k_values: tuple[int, ...] = field(
        default_factory=lambda: _int_list(os.getenv("K_VALUES", "10,100,1000"))
    )
    sample_epsilon: float = field(
        default_factory=lambda: float(os.getenv("SAMPLE_EPSILON", "1e-4"))
    )
    seed: int = field(
        default_factory=lambda: int(os.getenv("DEFAULT_SEED", "20240521"))
    )

    # Query log mining
    max_log_query_terms: int = field(
        default_factory=lambda: int(os.getenv("MAX_LOG_QUERY_TERMS", "12"))
    )

    # Worker threads for store builds and evaluation
    threads: int = field(default_factory=lambda: int(os.getenv("THREADS", "1")))

    # Logging configuration
    log_level: str = field(default_factory=lambda: os.getenv("LOG_LEVEL", "INFO"))

    def to_dict(self) -> dict[str, Any]:
        """Convert config to dictionary."""
        return {
            "bm25_k1": self.bm25_k1,
            "bm25_b": self.bm25_b,
            "qld_mu": self.qld_mu,
            "quant_bits": self.quant_bits,
            "k_values": list(self.k_values),
            "sample_epsilon": self.sample_epsilon,
            "seed": self.seed,
            "max_log_query_terms": self.max_log_query_terms,
            "threads": self.threads,
            "log_level": self.log_level,
        }

    @classmethod
    def from_env(cls) -> "Config":
        """Create config from environment variables."""
        return cls()

    def validate(self) -> None:
        """Validate configuration values."""
        if self.bm25_k1 <= 0:
            raise ValueError(f"Invalid BM25 k1: {self.bm25_k1}")

        if not 0 <= self.bm25_b <= 1:
            raise ValueError(f"Invalid BM25 b: {self.bm25_b}")

        if self.qld_mu <= 0:
            raise ValueError(f"Invalid QLD mu: {self.qld_mu}")

        if not 1 <= self.quant_bits <= 16:
            raise ValueError(f"Invalid quantization bits: {self.quant_bits}")

        if not self.k_values or any(k < 1 for k in self.k_values):
            raise ValueError(f"Invalid k values: {self.k_values}")

        if not 0 < self.sample_epsilon < 1:
            raise ValueError(f"Invalid sampling epsilon: {self.sample_epsilon}")

        if self.seed < 0:
            raise ValueError(f"Invalid seed: {self.seed}")

        if self.max_log_query_terms < 1:
            raise ValueError(
                f"Invalid log query term cap: {self.max_log_query_terms}"
            )

        if self.threads < 1:
            raise ValueError(f"Invalid thread count: {self.threads}")

        if self.log_level not in ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]:
            raise ValueError(f"Invalid log level: {self.log_level}")


# Global config instance
config = Config()
