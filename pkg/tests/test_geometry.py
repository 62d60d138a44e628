"""
Tests for curves, panels and adaptive panelization
"""

import math

import numpy as np
import pytest

from exceptions import ConfigurationError, GeometryError, PanelizationError
from services.geometry import (
    adaptive_panelize, bernstein_radius, build_panel, circle_curve, endpoint_frame,
    eval_poly_complex, eval_poly_complex_with_derivative, fourier_curve_3d, gauss_legendre,
    legendre_fit, line_curve, parabola_curve, rho_crit, significant_coeffs, starfish_curve,
    upsample_panel,
)


class TestGaussLegendre:
    def test_weights_sum_to_two(self):
        for n in (1, 2, 16, 64):
            _, w = gauss_legendre(n)
            assert abs(w.sum() - 2.0) < 1e-14

    def test_out_of_range_node_counts(self):
        with pytest.raises(ConfigurationError):
            gauss_legendre(0)
        with pytest.raises(ConfigurationError):
            gauss_legendre(65)

    def test_nodes_are_read_only(self):
        t, _ = gauss_legendre(8)
        with pytest.raises(ValueError):
            t[0] = 0.0


class TestBernsteinRadius:
    def test_points_on_the_interval(self):
        assert bernstein_radius(0.3) == 1.0
        assert bernstein_radius(-1.0) == 1.0

    def test_real_point_outside(self):
        assert abs(bernstein_radius(2.0) - (2 + math.sqrt(3))) < 1e-14
        assert abs(bernstein_radius(-2.0) - (2 + math.sqrt(3))) < 1e-14

    @pytest.mark.parametrize("rho", [1.1, 1.8, 3.0])
    def test_points_on_an_ellipse(self, rho):
        theta = np.linspace(0.1, 2 * np.pi, 13)
        t = 0.5 * (rho * np.exp(1j * theta) + np.exp(-1j * theta) / rho)
        assert np.allclose(bernstein_radius(t), rho, rtol=1e-13)

    def test_worked_value(self):
        assert abs(bernstein_radius(0.3 + 0.2j) - 1.2309) < 1e-3

    def test_rho_crit(self):
        assert abs(rho_crit(1e-10, 16) - 10 ** 0.3125) < 1e-12
        with pytest.raises(ConfigurationError):
            rho_crit(0.0, 16)
        with pytest.raises(ConfigurationError):
            rho_crit(1.5, 16)


class TestPanels:
    def test_circle_panel_length(self):
        panel = build_panel(circle_curve(), (0.0, math.pi), 16)
        assert abs(panel.h - math.pi) < 1e-13
        assert np.allclose(panel.curvature, 1.0, atol=1e-10)

    def test_endpoints_and_frame(self, parabola_panel):
        frame = endpoint_frame(parabola_panel)
        g_minus, g_plus = parabola_panel.complex_endpoints
        assert abs(frame.to_local(g_minus) + 1) < 1e-15
        assert abs(frame.to_local(g_plus) - 1) < 1e-15
        assert abs(frame.to_global(frame.to_local(0.2 + 0.4j)) - (0.2 + 0.4j)) < 1e-15

    def test_legendre_expansion_matches_curve_off_the_axis(self, parabola_panel):
        t = 0.3 + 0.4j
        value = eval_poly_complex(parabola_panel.complex_coeffs, t)
        assert abs(value - (t + 0.25j * t * t)) < 1e-13
        _, der = eval_poly_complex_with_derivative(parabola_panel.complex_coeffs, t)
        assert abs(der - (1 + 0.5j * t)) < 1e-12

    def test_legendre_fit_keeps_sixteen_terms(self):
        t, _ = gauss_legendre(32)
        assert legendre_fit(np.cos(t)).shape[0] == 16
        assert legendre_fit(np.cos(t), max_terms=None).shape[0] == 32

    def test_schwarz_preimage_of_the_parabola(self):
        # gamma'(t) = 1 + 2ik t vanishes at t = i/(2k)
        panel = build_panel(parabola_curve(0.25), (-1.0, 1.0), 16)
        assert abs(panel.t_star - 2j) < 1e-10

    @pytest.mark.parametrize("k", [0.25, 0.5, 1.0])
    def test_schwarz_preimage_ignores_round_off_tail(self, k):
        panel = build_panel(parabola_curve(k), (-1.0, 1.0), 16)
        assert abs(panel.t_star - 0.5j / k) < 1e-13

    def test_significant_coeffs(self):
        c = np.array([1.0, 0.5j, 1e-17, 3e-16j, 2e-17])
        assert np.array_equal(significant_coeffs(c), np.array([1.0, 0.5j]))
        assert np.array_equal(significant_coeffs(np.array([1.0, 1e-18, 0.2])), np.array([1.0, 0.0, 0.2]))

    def test_straight_panel_has_no_schwarz_point(self, line_panel):
        assert line_panel.t_star is None

    def test_degenerate_interval(self):
        with pytest.raises(GeometryError):
            build_panel(line_curve(2), (0.5, 0.5), 16)

    def test_upsampling_keeps_geometry(self, parabola_panel):
        up = upsample_panel(parabola_panel, 32)
        assert up.n == 32
        expected = up.t + 0.25j * up.t ** 2
        assert np.allclose(up.tau, expected, atol=1e-14)
        assert abs(up.h - parabola_panel.h) < 1e-13
        with pytest.raises(GeometryError):
            upsample_panel(parabola_panel, 8)

    def test_panel_resample_of_density(self, parabola_panel):
        density = parabola_panel.y[:, 0] ** 3
        up = parabola_panel.resample(density, 32)
        t, _ = gauss_legendre(32)
        assert np.allclose(up, t ** 3, atol=1e-14)


class TestAdaptivePanelization:
    def test_circle_covers_the_perimeter(self):
        panels = adaptive_panelize(circle_curve(), 1e-10, 16)
        assert abs(sum(p.h for p in panels) - 2 * math.pi) < 1e-12
        assert panels[0].a == 0.0 and panels[-1].b == 2 * math.pi

    def test_coarse_starfish(self):
        panels = adaptive_panelize(starfish_curve(), 1e-6, 16)
        assert 4 < len(panels) <= 8

    def test_fine_starfish(self):
        panels = adaptive_panelize(starfish_curve(), 1e-14, 16)
        assert 16 < len(panels) <= 40

    def test_neighbors_differ_by_at_most_a_factor_two(self):
        panels = adaptive_panelize(starfish_curve(), 1e-12, 16)
        lengths = [p.b - p.a for p in panels]
        for i in range(len(lengths)):
            left, right = lengths[i - 1], lengths[i]
            assert max(left, right) <= 2.0 * min(left, right) * (1 + 1e-12)

    def test_panels_are_contiguous(self):
        panels = adaptive_panelize(starfish_curve(), 1e-10, 16)
        for left, right in zip(panels[:-1], panels[1:]):
            assert left.b == right.a

    def test_depth_cap(self):
        with pytest.raises(PanelizationError):
            adaptive_panelize(starfish_curve(), 1e-14, 16, max_depth=2)

    def test_space_curve(self):
        curve = fourier_curve_3d()
        panels = adaptive_panelize(curve, 1e-6, 16)
        assert all(p.dim == 3 for p in panels)
        assert np.allclose(curve.evaluate(0.0), curve.evaluate(1.0), atol=1e-12)
        assert panels[-1].b == 1.0
