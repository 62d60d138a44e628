"""
Tests for the space-curve integrals P^m_k
"""

import numpy as np
import pytest

from exceptions import RecurrenceDomainError
from oracles import graded_quad, mp_integral, singularity_scale
from services.recur3d import (RECURRENCE_RHO, RootPairGeom, pvec_m1, pvectors, pvectors_quadrature,
                              root_radius)

N = 16

ROOTS = [
    0.3 + 0.1j,
    -0.7 + 0.02j,
    0.5 + 1e-3j,
    0.0 + 0.8j,
    1.05 + 0.05j,
    -1.3 + 0.1j,
]


def _reference(t0, m, integrand_abs=False, n=N):
    center, delta = singularity_scale(t0)
    k = np.arange(n)

    def integrand(t):
        values = t[:, None] ** k[None, :] / (np.abs(t - t0) ** m)[:, None]
        return np.abs(values) if integrand_abs else values

    return graded_quad(integrand, center, delta)


@pytest.mark.parametrize("t0", ROOTS)
@pytest.mark.parametrize("m", [1, 3, 5])
def test_against_graded_quadrature(t0, m):
    values = pvectors(t0, N).get(m)
    ref = _reference(t0, m)
    scale = _reference(t0, m, integrand_abs=True)
    tol = 1e-11 if abs(t0.real) <= 1 else 1e-10
    assert np.all(np.abs(values - ref) <= tol * scale)


@pytest.mark.parametrize("t0", [0.3 + 0.1j, 1.3 + 0.1j])
def test_conjugate_root_gives_the_same_vectors(t0):
    a = pvectors(t0, N)
    b = pvectors(np.conj(t0), N)
    for m in (1, 3, 5):
        assert np.array_equal(a.get(m), b.get(m))


def test_values_are_real_and_positive_for_odd_powers_of_one():
    p = pvectors(0.2 + 0.05j, N)
    for m in (1, 3, 5):
        assert p.get(m).dtype == float
        assert p.get(m)[0] > 0


def test_real_root_outside_the_interval():
    # int dt / |t - 2| = log 3
    assert abs(pvec_m1(2.0, 1)[0] - np.log(3.0)) < 1e-14


def test_root_on_the_interval_is_rejected():
    with pytest.raises(RecurrenceDomainError):
        pvectors(0.25, N)


def test_cone_ratio():
    assert RootPairGeom.from_root(0.5 + 0.1j).cone_ratio() == np.inf
    assert abs(RootPairGeom.from_root(1.5 + 0.1j).cone_ratio() - 0.2) < 1e-14


@pytest.mark.parametrize("t0", [0.5 + 1e-3j, 0.98 + 1e-4j, 1.2 + 0.01j])
def test_first_entries_against_mpmath(t0):
    import mpmath

    p = pvectors(t0, 4)
    for m in (1, 3, 5):
        for k in range(4):
            ref = mp_integral(
                lambda t: t ** k / ((t - t0.real) ** 2 + mpmath.mpf(t0.imag) ** 2) ** (mpmath.mpf(m) / 2), t0)
            scale = mp_integral(
                lambda t: abs(t) ** k / ((t - t0.real) ** 2 + mpmath.mpf(t0.imag) ** 2) ** (mpmath.mpf(m) / 2), t0)
            assert abs(p.get(m)[k] - ref.real) <= 1e-12 * scale.real


SWEEP_REAL = np.linspace(-1.9, 1.9, 20)
SWEEP_IMAG = np.logspace(-8, 0, 9)


def _sweep_tolerance(t0, m):
    # m=5 just above the interior of [-1, 1] loses about a digit to cancellation
    if m == 5 and abs(t0.real) < 1 and t0.imag < 1e-6:
        return 1e-9
    return 1e-10


@pytest.mark.parametrize("m", [1, 3, 5])
def test_sweep_over_root_locations(m):
    worst = 0.0
    worst_root = None
    for t_r in SWEEP_REAL:
        for t_i in SWEEP_IMAG:
            t0 = complex(t_r, t_i)
            error = np.max(np.abs(pvectors(t0, N).get(m) - _reference(t0, m))
                           / _reference(t0, m, integrand_abs=True))
            error /= _sweep_tolerance(t0, m)
            if error > worst:
                worst, worst_root = error, t0
    assert worst <= 1.0, f"error {worst:.2f}x over tolerance at t0={worst_root}"


@pytest.mark.parametrize("t0", [2.0 + 5e-5j, -2.0 + 5e-5j, 1.6 + 0.01j, 0.0 + 0.9j])
def test_far_roots_use_direct_quadrature(t0):
    assert root_radius(t0) >= RECURRENCE_RHO
    quad = pvectors_quadrature(t0, N)
    values = pvectors(t0, N)
    for m in (1, 3, 5):
        assert np.array_equal(values.get(m), quad.get(m))
        ref = _reference(t0, m)
        scale = _reference(t0, m, integrand_abs=True)
        assert np.all(np.abs(quad.get(m) - ref) <= 1e-12 * scale)


def test_root_radius():
    assert abs(root_radius(2.0) - (2.0 + np.sqrt(3.0))) < 1e-14
    assert abs(root_radius(1j) - (1.0 + np.sqrt(2.0))) < 1e-14
    assert root_radius(0.5 + 1e-3j) < RECURRENCE_RHO
