"""Configuration settings for the packing-rounding toolkit."""
import os
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Parallelism
    ppack_workers: Optional[int] = Field(None, ge=1)  # PPACK_WORKERS; None = all cores

    # Numerical tolerances and guards
    feasibility_tolerance: float = 1e-9
    enumeration_budget: int = 10_000_000  # brute-force supports before refusing

    # Engine caps
    default_max_steps: int = 1_000_000
    default_max_resamples: int = 1_000_000

    # Output
    results_dir: str = "./results"
    log_level: str = "INFO"

    tool_version: str = "1.0.0"

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=False,
        extra="ignore"
    )

    def worker_count(self) -> int:
        """Effective number of parallel workers."""
        return self.ppack_workers or os.cpu_count() or 1


settings = Settings()

# Every bound that says "log" is evaluated with the natural logarithm.
LOG_BASE = "e"
