"""
Configuration settings for the estimation toolkit.
Loads environment variables and provides numerical defaults.
"""

import logging
import os
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Toolkit settings loaded from GWLE_-prefixed environment variables.
    """

    # Application
    APP_NAME: str = "gwle"
    VERSION: str = "1.0.0"
    BUILD: str = Field(default="local")

    # Logging
    LOG_LEVEL: str = Field(default="WARNING")

    # Concurrency
    THREADS: Optional[int] = Field(default=None, ge=1)

    # Local solves
    CONDITION_THRESHOLD: float = Field(default=1e12, gt=1.0)
    WEIGHT_FLOOR: float = Field(default=1e-300, ge=0.0)
    DEFAULT_RIDGE: float = Field(default=0.0, ge=0.0)

    # Quadrature
    QUADRATURE_EPSABS: float = Field(default=1e-12, gt=0.0)
    QUADRATURE_EPSREL: float = Field(default=1e-12, gt=0.0)
    QUADRATURE_LIMIT: int = Field(default=200, ge=50)
    GAUSSIAN_RADIUS: float = Field(default=9.0, gt=0.0)

    # Bandwidth selection
    CV_TIE_RTOL: float = Field(default=1e-9, ge=0.0)

    model_config = SettingsConfigDict(
        env_prefix="GWLE_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """
        Normalize the level name and reject names logging does not know.
        """
        level = v.strip().upper()
        if not isinstance(getattr(logging, level, None), int):
            raise ValueError(f"LOG_LEVEL must be a logging level name, got '{v}'")
        return level

    def worker_count(self, override: Optional[int] = None) -> int:
        """
        Resolve the worker cap: explicit flag, then GWLE_THREADS, then CPU count.

        Args:
            override: Value of the --threads flag, if given

        Returns:
            Positive worker count
        """
        if override is not None:
            if override < 1:
                raise ValueError("thread count must be at least 1")
            return override
        if self.THREADS is not None:
            return self.THREADS
        return os.cpu_count() or 1


# Create global settings instance
settings = Settings()
