"""
Pytest configuration and shared fixtures for testing.

This module provides the shared testing infrastructure:
- Test settings and settings-cache hygiene
- Reference values of b'_5(n) from the combinatorial oracle
- The packaged identity registry
"""

import os
from unittest.mock import patch

import pytest

from src.config.settings import Settings, get_settings
from src.services.cache_service import get_series_cache
from src.services.identity_registry import get_registry
from src.services.partition_oracle import bprime_table


# opening coefficients of sum b'_5(n) q^n
BPRIME5_OPENING = [1, 1, 1, 2, 2, 2, 3, 4, 4, 6, 7, 8, 10, 12, 14, 16, 19, 22, 26]

PARTITION_NUMBERS = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30]


@pytest.fixture
def test_settings() -> Settings:
    """Create test settings with small, fast values."""
    return Settings(
        log_level="DEBUG",
        max_trunc=200_000,
        default_order=300,
        max_workers=2,
        app_version="1.0.0-test",
    )


@pytest.fixture
def env_settings():
    """Patch QCONG_ environment variables and rebuild the cached settings."""

    def _apply(**values: str):
        patcher = patch.dict(os.environ, {f"QCONG_{k.upper()}": v for k, v in values.items()})
        patcher.start()
        get_settings.cache_clear()
        return patcher

    patchers = []

    def factory(**values: str) -> Settings:
        patchers.append(_apply(**values))
        return get_settings()

    yield factory
    for patcher in patchers:
        patcher.stop()
    get_settings.cache_clear()


@pytest.fixture(scope="session")
def bprime5_table():
    """b'_5(0..2000) counted directly by the knapsack oracle."""
    return bprime_table(5, 2000)


@pytest.fixture(scope="session")
def registry():
    """The packaged identity registry."""
    return get_registry()


@pytest.fixture
def fresh_cache():
    """An empty process-wide series cache."""
    cache = get_series_cache()
    cache.clear()
    yield cache
    cache.clear()

