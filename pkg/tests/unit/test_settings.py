"""
Unit tests for configuration and settings.

These tests cover defaults, QCONG_ environment variables, validation of
engine limits and the cached settings accessor.
"""

import os
from unittest.mock import patch

import pytest
from pydantic import ValidationError

from src.config.settings import DEFAULT_REGISTRY_PATH, Settings, get_settings


class TestSettings:
    """Test the Settings configuration class."""

    def test_default_settings_creation(self):
        """Defaults need no environment at all."""
        with patch.dict(os.environ, {}, clear=True):
            settings = Settings(_env_file=None)

            assert settings.app_name == "qcong"
            assert settings.log_level == "WARNING"
            assert settings.log_format == "console"
            assert settings.max_trunc == 1_000_000
            assert settings.default_order == 500
            assert settings.sparse_cutoff == 48
            assert settings.fft_limb_bits == 10
            assert settings.max_workers == 4
            assert settings.registry_path == DEFAULT_REGISTRY_PATH

    def test_settings_from_environment_variables(self):
        """QCONG_ variables override the defaults."""
        env_vars = {
            "QCONG_LOG_LEVEL": "debug",
            "QCONG_LOG_FORMAT": "JSON",
            "QCONG_MAX_TRUNC": "2000000",
            "QCONG_DEFAULT_ORDER": "800",
            "QCONG_MAX_WORKERS": "8",
        }

        with patch.dict(os.environ, env_vars):
            settings = Settings(_env_file=None)

            assert settings.log_level == "DEBUG"
            assert settings.log_format == "json"
            assert settings.max_trunc == 2_000_000
            assert settings.default_order == 800
            assert settings.max_workers == 8

    def test_unprefixed_variables_ignored(self):
        """Only prefixed variables are read."""
        with patch.dict(os.environ, {"MAX_WORKERS": "16"}, clear=True):
            assert Settings(_env_file=None).max_workers == 4

    def test_log_level_validation(self):
        """Only standard levels are accepted."""
        with pytest.raises(ValidationError):
            Settings(log_level="LOUD")

    def test_log_format_validation(self):
        """console or json."""
        with pytest.raises(ValidationError):
            Settings(log_format="xml")

    @pytest.mark.parametrize("value", [999, 50_000_001])
    def test_max_trunc_bounds(self, value):
        """The truncation cap stays in a workable range."""
        with pytest.raises(ValidationError):
            Settings(max_trunc=value)

    @pytest.mark.parametrize("value", [0, 65])
    def test_max_workers_bounds(self, value):
        """Between 1 and 64 workers."""
        with pytest.raises(ValidationError):
            Settings(max_workers=value)

    @pytest.mark.parametrize("value", [3, 13])
    def test_fft_limb_bits_bounds(self, value):
        """Limb width keeps float convolutions exact."""
        with pytest.raises(ValidationError):
            Settings(fft_limb_bits=value)

    def test_positive_fields(self):
        """Cutoffs and cache size must be positive."""
        with pytest.raises(ValidationError):
            Settings(sparse_cutoff=0)
        with pytest.raises(ValidationError):
            Settings(cache_max_entries=0)

    def test_fixture_settings(self, test_settings):
        """The shared fixture builds a small configuration."""
        assert test_settings.max_trunc == 200_000
        assert test_settings.log_level == "DEBUG"


class TestGetSettings:
    """The cached accessor."""

    def test_cached_instance(self):
        """Repeated calls return the same object."""
        get_settings.cache_clear()
        assert get_settings() is get_settings()

    def test_cache_clear_picks_up_environment(self, env_settings):
        """Clearing the cache rereads the environment."""
        settings = env_settings(max_workers="3", default_order="250")
        assert settings.max_workers == 3
        assert settings.default_order == 250
