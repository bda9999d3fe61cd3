"""
Application settings and configuration management.

This module provides centralized configuration management using Pydantic Settings,
which loads configuration from ``QCONG_``-prefixed environment variables and an
optional .env file, with validation and type conversion.
"""

from functools import lru_cache
from pathlib import Path

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


DEFAULT_REGISTRY_PATH = Path(__file__).resolve().parent.parent / "registry" / "identities.json"


class Settings(BaseSettings):
    """Engine settings with automatic environment variable loading."""

    model_config = SettingsConfigDict(
        env_prefix="QCONG_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application settings
    app_name: str = "qcong"
    app_version: str = "1.0.0"
    log_level: str = "WARNING"
    log_format: str = "console"

    # Series engine
    max_trunc: int = 1_000_000
    default_order: int = 500
    sparse_cutoff: int = 48
    fft_limb_bits: int = 10

    # Batch verification
    max_workers: int = 4
    registry_path: Path = DEFAULT_REGISTRY_PATH
    cache_max_entries: int = 32

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level is one of the standard levels."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"Log level must be one of: {valid_levels}")
        return v.upper()

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        """Validate the log renderer name."""
        if v.lower() not in ("console", "json"):
            raise ValueError("Log format must be 'console' or 'json'")
        return v.lower()

    @field_validator("max_trunc")
    @classmethod
    def validate_max_trunc(cls, v: int) -> int:
        """Validate the global truncation cap is usable."""
        if not 1_000 <= v <= 50_000_000:
            raise ValueError("max_trunc must be between 1000 and 50000000")
        return v

    @field_validator("default_order")
    @classmethod
    def validate_default_order(cls, v: int) -> int:
        """Validate the default verification order."""
        if v < 1:
            raise ValueError("default_order must be positive")
        return v

    @field_validator("max_workers")
    @classmethod
    def validate_max_workers(cls, v: int) -> int:
        """Validate worker count is reasonable."""
        if not 1 <= v <= 64:
            raise ValueError("max_workers must be between 1 and 64")
        return v

    @field_validator("fft_limb_bits")
    @classmethod
    def validate_fft_limb_bits(cls, v: int) -> int:
        """Limbs wider than 12 bits lose exactness at 10^6 coefficients."""
        if not 4 <= v <= 12:
            raise ValueError("fft_limb_bits must be between 4 and 12")
        return v

    @field_validator("sparse_cutoff", "cache_max_entries")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("value must be positive")
        return v


@lru_cache()
def get_settings() -> Settings:
    """
    Get the settings instance.

    The instance is cached; call ``get_settings.cache_clear()`` after changing
    environment variables to pick up new values.

    Returns:
        Settings: The engine settings instance
    """
    return Settings()
