"""Application configuration."""

import os
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings.

    Every field can be overridden with a ``MISBELIEF_``-prefixed environment
    variable (``MISBELIEF_THREADS=4``) or a ``.env`` file.
    """

    model_config = SettingsConfigDict(
        env_prefix="MISBELIEF_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",  # Allow extra env vars without error
    )

    # Parallelism
    threads: int = Field(
        default=0,
        ge=0,
        description="Cap on internal worker threads (0 = one per CPU)",
    )

    # Numerical tolerances
    pd_tol: float = Field(
        default=1e-10,
        gt=0,
        description="Relative positive-definiteness tolerance: the smallest eigenvalue "
        "must exceed pd_tol times the largest eigenvalue (floored at 1)",
    )
    rank_tol: float = Field(
        default=1e-10,
        gt=0,
        description="Relative singular-value tolerance for the full-column-rank check on M",
    )
    symmetry_tol: float = Field(
        default=1e-10,
        gt=0,
        description="Relative tolerance for symmetry of covariance matrices",
    )
    max_dim: int = Field(
        default=64,
        ge=1,
        description="Upper bound on the signal dimension D and fundamentals count L",
    )
    max_condition: float = Field(
        default=1e12,
        gt=1,
        description="Largest condition number of M'Σ⁻¹M accepted before refusing to solve",
    )
    classification_tol: float = Field(
        default=1e-12,
        ge=0,
        description="Biases smaller than this (times max(1, |Δ|)) classify as unbiased",
    )

    # Numeric KL oracle
    oracle_starts: int = Field(
        default=5,
        ge=1,
        description="Multi-start count: one closed-form-seeded start plus random ones",
    )
    oracle_max_iter: int = Field(default=2000, ge=1, description="Quasi-Newton iterations per start")
    oracle_gtol: float = Field(
        default=1e-8,
        gt=0,
        description="Gradient-norm tolerance, scaled by (1 + |objective|)",
    )
    oracle_seed: int = Field(default=0, ge=0, description="Seed for the oracle's random starts")
    oracle_start_scale: float = Field(
        default=0.5,
        gt=0,
        description="Spread of the random oracle starts around the true parameters",
    )

    # Simulation
    prior_precision: float = Field(
        default=1e-6,
        gt=0,
        description="Diffuse prior precision (times identity) for Case I posterior simulation",
    )

    # Logging
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(
        default="WARNING",
        description="Log level",
    )
    log_format: Literal["console", "json"] = Field(
        default="console",
        description="Renderer for log lines (always written to stderr)",
    )

    def resolved_threads(self) -> int:
        """Effective worker count, resolving 0 to the CPU count."""
        if self.threads > 0:
            return self.threads
        return os.cpu_count() or 1


# Global settings instance
settings = Settings()
