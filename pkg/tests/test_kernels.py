"""
Tests for kernel splits against real-variable kernels
"""

import numpy as np
import pytest

from exceptions import GeometryError
from services.geometry import adaptive_panelize, fourier_curve_3d, starfish_curve
from services.kernels import (
    cauchy_gradient_2d, dlp_kernel_2d, doublet, gradient_kernel_2d, hypersingular_r4_2d, laplace_dlp_2d,
    laplace_slp_log_2d, r4_kernel_2d, slender_body_kernel, slender_body_split, slp_kernel_2d, stokeslet,
)
from services.specialquad import QuadConfig, Scheme, near_eval

DIRECT = QuadConfig(n=16, scheme=Scheme.DIRECT)


@pytest.fixture(scope="module")
def starfish_nodes():
    panels = adaptive_panelize(starfish_curve(), 1e-10, 16)
    y = np.concatenate([p.y for p in panels])
    t = np.concatenate([p.dy / p.speed[:, None] for p in panels])
    w = np.concatenate([p.arc_weights for p in panels])
    return panels, y, np.column_stack([-t[:, 1], t[:, 0]]), w


def _per_panel(panels, values):
    offsets = np.cumsum([0] + [p.n for p in panels])
    return [values[offsets[i]:offsets[i + 1]] for i in range(len(panels))]


TARGETS = [np.array([0.1, 0.2]), np.array([2.5, -1.0])]


@pytest.mark.parametrize("x", TARGETS)
def test_double_layer_split(starfish_nodes, x):
    panels, y, normals, w = starfish_nodes
    rho = np.sin(y[:, 0]) + y[:, 1]
    value = near_eval(panels, x, laplace_dlp_2d(), _per_panel(panels, rho), DIRECT)
    ref = np.sum(w * rho * dlp_kernel_2d(x, y, normals))
    assert abs(value - ref) < 1e-12 * np.sum(np.abs(w * rho * dlp_kernel_2d(x, y, normals)))


@pytest.mark.parametrize("x", TARGETS)
def test_single_layer_split(starfish_nodes, x):
    panels, y, _, w = starfish_nodes
    rho = np.cos(y[:, 1])
    value = near_eval(panels, x, laplace_slp_log_2d(), _per_panel(panels, rho), DIRECT)
    ref = np.sum(w * rho * slp_kernel_2d(x, y))
    assert abs(value - ref) < 1e-12 * np.sum(np.abs(w * rho * slp_kernel_2d(x, y)))


@pytest.mark.parametrize("x", TARGETS)
def test_gradient_split(starfish_nodes, x):
    panels, y, _, w = starfish_nodes
    rho = 1.0 + y[:, 0] ** 2
    value = near_eval(panels, x, cauchy_gradient_2d(), _per_panel(panels, rho), DIRECT)
    ref = np.sum((w * rho)[:, None] * gradient_kernel_2d(x, y), axis=0)
    assert abs(value - complex(ref[0], ref[1])) < 1e-12 * np.sum(w * rho / np.linalg.norm(y - x, axis=1))


@pytest.mark.parametrize("x", TARGETS)
def test_r4_split(starfish_nodes, x):
    panels, y, normals, w = starfish_nodes
    f = np.column_stack([y[:, 1], 1.0 - y[:, 0]])
    value = near_eval(panels, x, hypersingular_r4_2d(), _per_panel(panels, f), DIRECT)
    terms = w[:, None] * r4_kernel_2d(x, y, normals, f)
    ref = np.sum(terms, axis=0)
    assert abs(value - complex(ref[0], ref[1])) < 1e-12 * np.sum(np.abs(terms))


def test_slender_body_split():
    panels = adaptive_panelize(fourier_curve_3d(), 1e-6, 16)
    y = np.concatenate([p.y for p in panels])
    w = np.concatenate([p.arc_weights for p in panels])
    x = np.array([0.4, 0.25, -0.3])
    eps = 1e-2
    value = near_eval(panels, x, slender_body_split(eps), [p.y for p in panels], DIRECT)
    terms = w[:, None] * slender_body_kernel(x, y, y, eps)
    assert value.shape == (3,)
    assert np.allclose(value, terms.sum(axis=0), rtol=0, atol=1e-12 * np.sum(np.abs(terms)))


class TestStokesKernels:
    def test_stokeslet_on_the_axis(self):
        assert np.allclose(stokeslet([1.0, 0.0, 0.0]), np.diag([2.0, 1.0, 1.0]))

    def test_doublet_on_the_axis(self):
        assert np.allclose(doublet([1.0, 0.0, 0.0]), np.diag([-2.0, 1.0, 1.0]))

    def test_symmetry(self):
        r = np.array([0.3, -0.7, 0.2])
        assert np.allclose(stokeslet(r), stokeslet(r).T)
        assert np.allclose(doublet(r), doublet(-r))

    def test_doublet_is_half_the_laplacian_of_the_stokeslet(self):
        r = np.array([0.6, -0.5, 0.62])
        h = 1e-4
        lap = -6.0 * stokeslet(r)
        for axis in range(3):
            e = np.zeros(3)
            e[axis] = h
            lap = lap + stokeslet(r + e) + stokeslet(r - e)
        lap /= h * h
        assert np.allclose(0.5 * lap, doublet(r), rtol=0, atol=1e-6)

    def test_singular_at_the_origin(self):
        with pytest.raises(GeometryError):
            stokeslet(np.zeros(3))
        with pytest.raises(GeometryError):
            doublet(np.zeros(3))

    def test_fiber_radius_must_be_positive(self):
        with pytest.raises(GeometryError):
            slender_body_split(0.0)

    def test_split_powers(self):
        split = slender_body_split(1e-3)
        assert split.powers == (1, 3, 5)
        assert split.eps == 1e-3
        assert hypersingular_r4_2d().powers == (2, 1)
        assert laplace_slp_log_2d().powers == (None,)
