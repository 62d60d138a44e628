"""
Shared fixtures for the quadrature tests
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add backend directory to path
backend_dir = Path(__file__).parent.parent / "backend"
if str(backend_dir) not in sys.path:
    sys.path.insert(0, str(backend_dir))
tests_dir = Path(__file__).parent
if str(tests_dir) not in sys.path:
    sys.path.insert(0, str(tests_dir))

from services.geometry import ParamCurve, build_panel, line_curve, parabola_curve
from services.quadconfig import QuadConfig, UpsampleMode


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow experiment tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size experiment runs, enabled with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def squiggle_curve() -> ParamCurve:
    """Smooth open space curve on [-1, 1]"""
    return ParamCurve(
        dim=3,
        func=lambda t: np.column_stack([t, 0.3 * np.sin(1.5 * t), 0.2 * np.cos(t)]),
        deriv=lambda t: np.column_stack([np.ones_like(t), 0.45 * np.cos(1.5 * t), -0.2 * np.sin(t)]),
        domain=(-1.0, 1.0),
        name="squiggle",
    )


@pytest.fixture
def cfg():
    return QuadConfig(n=16, mode=UpsampleMode.NONE, tolerance=1e-10)


@pytest.fixture
def line_panel():
    return build_panel(line_curve(2), (-1.0, 1.0), 16)


@pytest.fixture
def parabola_panel():
    return build_panel(parabola_curve(0.25), (-1.0, 1.0), 16)


@pytest.fixture
def line_panel_3d():
    return build_panel(line_curve(3), (-1.0, 1.0), 16)


@pytest.fixture
def squiggle_panel():
    return build_panel(squiggle_curve(), (-1.0, 1.0), 16)
