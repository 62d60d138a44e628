"""
Reference integrals independent of the recurrences

Composite Gauss-Legendre with breakpoints graded geometrically toward the
projection of a complex singularity onto [a, b]. Each piece is at least its
own length away from the singularity, so a fixed high order converges to
double precision.
"""

import numpy as np

ORDER = 24


def graded_breakpoints(center: float, delta: float, a: float = -1.0, b: float = 1.0,
                       ratio: float = 2.0) -> np.ndarray:
    c = min(max(center, a), b)
    delta = max(delta, 1e-15)
    points = {a, b}
    step = delta
    while c + step < b:
        points.add(c + step)
        step *= ratio
    step = delta
    while c - step > a:
        points.add(c - step)
        step *= ratio
    if a < c < b:
        points.add(c)
    return np.array(sorted(points))


def graded_quad(func, center: float, delta: float, a: float = -1.0, b: float = 1.0, order: int = ORDER):
    """Integral of func over [a, b]; func maps an array of t to values along axis 0"""
    x, w = np.polynomial.legendre.leggauss(order)
    bps = graded_breakpoints(center, delta, a, b)
    total = 0.0
    for lo, hi in zip(bps[:-1], bps[1:]):
        t = lo + 0.5 * (hi - lo) * (x + 1.0)
        total = total + 0.5 * (hi - lo) * np.tensordot(w, func(t), axes=(0, 0))
    return total


def singularity_scale(t0: complex) -> tuple:
    """(center, distance) of a complex singularity relative to [-1, 1]"""
    t0 = complex(t0)
    if abs(t0.real) <= 1.0:
        return t0.real, abs(t0.imag)
    return float(np.sign(t0.real)), float(np.hypot(abs(t0.real) - 1.0, t0.imag))


def relative_error(value, reference, scale) -> float:
    return float(np.max(np.abs(np.asarray(value) - np.asarray(reference))) / scale)


def mp_integral(func, t0, dps: int = 30) -> complex:
    """
    High-precision integral over [-1, 1] with mpmath tanh-sinh quadrature.

    func takes and returns mpmath numbers; the interval is split at the
    projection of t0 so the near-singular peak sits on a breakpoint.
    """
    import mpmath

    center, delta = singularity_scale(t0)
    with mpmath.workdps(dps):
        points = [-1]
        for p in (center - delta, center, center + delta):
            if -1 < p < 1 and p not in points:
                points.append(mpmath.mpf(p))
        points.append(1)
        return complex(mpmath.quad(func, points))
