"""
Tests for settings and per-run configuration
"""

import pytest
from pydantic import ValidationError

from config import AppConfig, QuadratureSettings, Settings, settings
from exceptions import ConfigurationError
from services.geometry import rho_crit
from services.quadconfig import QuadConfig, Scheme, UpsampleMode


class TestQuadConfig:
    def test_strings_are_coerced(self):
        cfg = QuadConfig(mode="upsample-direct", scheme="ho")
        assert cfg.mode == UpsampleMode.UPSAMPLE_DIRECT
        assert cfg.scheme == Scheme.HO

    @pytest.mark.parametrize("kwargs", [
        {"mode": "bogus"},
        {"scheme": "fast"},
        {"n": 0},
        {"n": 65},
        {"n": 16, "upsample_factor": 5},
        {"tolerance": 0.0},
        {"tolerance": 1.5},
        {"critical_radius": 0.9},
        {"distance_multiplier": 0.0},
        {"newton_max_iter": 0},
    ])
    def test_invalid_values(self, kwargs):
        with pytest.raises(ConfigurationError) as exc:
            QuadConfig(**kwargs)
        assert exc.value.details["field"] in kwargs

    def test_critical_radius(self):
        assert QuadConfig(n=16, tolerance=1e-10).rho_eps == rho_crit(1e-10, 16)
        cfg = QuadConfig(n=16, critical_radius=3.0)
        assert cfg.rho_eps == 3.0
        assert abs(cfg.direct_band_radius - 3.0 ** 0.5) < 1e-15

    def test_upsampled_node_count(self):
        assert QuadConfig(n=16, upsample_factor=2).upsampled_n == 32


class TestEnvironment:
    def test_prefixed_variables(self, monkeypatch):
        monkeypatch.setenv("SSQ_N", "12")
        monkeypatch.setenv("SSQ_UPSAMPLE_MODE", "none")
        monkeypatch.setenv("APP_MAX_WORKERS", "2")
        assert QuadratureSettings().n == 12
        assert QuadratureSettings().upsample_mode == "none"
        assert AppConfig().max_workers == 2

    @pytest.mark.parametrize("name,value", [
        ("SSQ_TOLERANCE", "2"),
        ("SSQ_N", "100"),
        ("SSQ_UPSAMPLE_MODE", "sometimes"),
    ])
    def test_invalid_environment(self, monkeypatch, name, value):
        monkeypatch.setenv(name, value)
        with pytest.raises(ValidationError):
            QuadratureSettings()

    def test_settings_singleton_reload(self, monkeypatch):
        assert Settings() is settings
        original = settings.quad.n
        monkeypatch.setenv("SSQ_N", "8")
        settings.reload()
        try:
            assert settings.quad.n == 8
            assert QuadConfig().n == 8
        finally:
            monkeypatch.delenv("SSQ_N")
            settings.reload()
        assert settings.quad.n == original
