"""
Tests for preimage root finding and target classification
"""

import logging

import numpy as np
import pytest

from conftest import squiggle_curve
from exceptions import OnCurveError, RootFindingError
from services.geometry import bernstein_radius, build_panel, parabola_curve
from services.quadconfig import QuadConfig, UpsampleMode
from services.rootfind import (
    Basis, FallbackCounter, RootMethod, SquaredDistanceProblem, TargetKind, all_roots_companion,
    classify_target, fallback_counter, newton_preimage_2d, root_3d,
)


class TestPlanarPreimage:
    def test_straight_panel_preimage_is_the_target(self, line_panel, cfg):
        pre = newton_preimage_2d(line_panel, 0.3 + 0.2j, cfg)
        assert pre.converged
        assert abs(pre.t0 - (0.3 + 0.2j)) < 1e-14

    @pytest.mark.parametrize("t_star", [0.2 + 0.1j, -0.6 - 0.05j, 0.9 + 0.3j])
    def test_parabola_preimage(self, parabola_panel, cfg, t_star):
        zeta = t_star + 0.25j * t_star ** 2
        pre = newton_preimage_2d(parabola_panel, zeta, cfg)
        assert pre.converged
        assert pre.method == RootMethod.NEWTON
        assert abs(pre.t0 - t_star) < 1e-12
        assert abs(pre.rho - bernstein_radius(t_star)) < 1e-10


class TestCompanionRoots:
    def test_monomial_basis(self):
        roots = [1.0, 2.0, -0.5j]
        coeffs = np.polynomial.polynomial.polyfromroots(roots)
        found = sorted(all_roots_companion(coeffs, Basis.MONOMIAL), key=lambda r: (r.real, r.imag))
        expected = sorted(roots, key=lambda r: (complex(r).real, complex(r).imag))
        assert np.allclose(found, expected, atol=1e-12)

    def test_legendre_basis(self):
        roots = [0.3 + 0.2j, -0.7, 1.5j, 0.1]
        coeffs = np.polynomial.legendre.legfromroots(roots)
        found = all_roots_companion(coeffs, Basis.LEGENDRE)
        for r in roots:
            assert min(abs(f - r) for f in found) < 1e-11

    def test_constant_has_no_roots(self):
        with pytest.raises(RootFindingError):
            all_roots_companion(np.array([2.0]))


class TestSpaceCurveRoots:
    def test_line_root_is_exact(self, line_panel_3d, cfg):
        pre = root_3d(line_panel_3d, np.array([0.3, 0.2, 0.0]), cfg)
        assert pre.converged
        assert abs(pre.t0 - (0.3 + 0.2j)) < 1e-13

    def test_root_is_stored_in_the_upper_half_plane(self, line_panel_3d, cfg):
        pre = root_3d(line_panel_3d, np.array([-0.4, 0.0, -0.05]), cfg)
        assert pre.t0.imag > 0

    @pytest.mark.parametrize("d", [1e-1, 1e-2, 1e-3])
    def test_curved_panel_root_zeroes_the_squared_distance(self, squiggle_panel, cfg, d):
        j = 5
        tangent = squiggle_panel.dy[j] / squiggle_panel.speed[j]
        normal = np.cross(tangent, np.array([0.0, 0.0, 1.0]))
        normal /= np.linalg.norm(normal)
        x = squiggle_panel.y[j] + d * normal
        pre = root_3d(squiggle_panel, x, cfg)
        assert pre.converged
        value, _ = SquaredDistanceProblem(squiggle_panel.coeffs, x).evaluate(pre.t0)
        assert abs(value) < 1e-12
        assert abs(pre.t0.real - squiggle_panel.t[j]) < 10 * d


class TestClassification:
    def test_far_target(self, parabola_panel, cfg):
        assert classify_target(parabola_panel, np.array([5.0, 5.0]), cfg).kind == TargetKind.FAR

    def test_near_target_outside_the_ellipse_is_far(self, parabola_panel, cfg):
        # rho of t0 = 1.5i is about 3.3, above rho_eps = 10^0.3125
        t = 1.5j
        zeta = t + 0.25j * t ** 2
        tc = classify_target(parabola_panel, np.array([zeta.real, zeta.imag]), cfg)
        assert tc.kind == TargetKind.FAR
        assert tc.preimage is not None and tc.preimage.converged

    def test_special_target(self, parabola_panel, cfg):
        t = 0.1 + 0.05j
        zeta = t + 0.25j * t ** 2
        tc = classify_target(parabola_panel, np.array([zeta.real, zeta.imag]), cfg)
        assert tc.kind == TargetKind.SPECIAL
        assert abs(tc.preimage.t0 - t) < 1e-12

    def test_upsampled_direct_band(self, parabola_panel):
        cfg = QuadConfig(n=16, mode=UpsampleMode.UPSAMPLE_DIRECT, critical_radius=4.0)
        # rho(0.9i) = 0.9 + sqrt(1.81), between sqrt(4) and 4
        t = 0.9j
        zeta = t + 0.25j * t ** 2
        tc = classify_target(parabola_panel, np.array([zeta.real, zeta.imag]), cfg)
        assert tc.kind == TargetKind.NEAR_DIRECT_UPSAMPLED

    def test_target_on_a_node(self, parabola_panel, cfg):
        with pytest.raises(OnCurveError):
            classify_target(parabola_panel, parabola_panel.y[3], cfg)

    def test_target_on_the_curve_between_nodes(self, line_panel, cfg):
        with pytest.raises(OnCurveError):
            classify_target(line_panel, np.array([0.1234, 0.0]), cfg)

    def test_root_failure_falls_back_to_direct(self, caplog):
        panel = build_panel(parabola_curve(1.0), (-1.0, 1.0), 16)
        cfg = QuadConfig(n=16, mode=UpsampleMode.NONE, newton_max_iter=1)
        before = fallback_counter.get("root_failure")
        with caplog.at_level(logging.WARNING, logger="services.rootfind"):
            tc = classify_target(panel, np.array([0.35, 0.4]), cfg)
        assert tc.kind == TargetKind.FAR
        assert not tc.preimage.converged
        assert fallback_counter.get("root_failure") == before + 1
        assert "Root finding failed" in caplog.text


def test_fallback_counter():
    counter = FallbackCounter()
    counter.increment("muller")
    counter.increment("muller", 2)
    assert counter.get("muller") == 3
    assert counter.snapshot() == {"muller": 3}
    counter.reset()
    assert counter.get("muller") == 0


@pytest.mark.slow
def test_space_curve_roots_over_many_near_targets(squiggle_panel, cfg):
    rng = np.random.default_rng(7)
    count = 10_000
    curve = squiggle_curve()
    t = rng.uniform(-1.1, 1.1, count)
    tangent = curve.derivative(t)
    tangent /= np.linalg.norm(tangent, axis=1)[:, None]
    v = rng.standard_normal((count, 3))
    v -= np.sum(v * tangent, axis=1)[:, None] * tangent
    v /= np.linalg.norm(v, axis=1)[:, None]
    targets = curve.evaluate(t) + 10 ** rng.uniform(-8, -1, count)[:, None] * v

    converged = 0
    misclassified = []
    for x in targets:
        problem = SquaredDistanceProblem(squiggle_panel.coeffs, x)
        tc = classify_target(squiggle_panel, x, cfg)
        pre = tc.preimage
        if pre is not None and pre.converged:
            converged += 1
            assert abs(problem.evaluate(pre.t0)[0]) <= 1e-12 * squiggle_panel.h
        roots = all_roots_companion(problem.legendre_coefficients(), Basis.LEGENDRE)
        true_rho = min(bernstein_radius(r) for r in roots)
        if tc.kind == TargetKind.FAR and true_rho < 0.9 * cfg.rho_eps:
            misclassified.append(x)
    assert converged >= 0.999 * count
    assert misclassified == []
