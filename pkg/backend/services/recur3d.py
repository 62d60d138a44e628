"""
Integrals P^m_k(t0) = int_{-1}^{1} t^{k-1} / |t - t0|^m dt for m = 1, 3, 5

|t - t0|^2 = (t - t_r)^2 + t_i^2 for real t, so the integrand is real and
the root pair {t0, conj(t0)} enters only through t_r and |t_i|. Where the
closed forms cancel catastrophically (t_i small relative to the distance to
an endpoint) the first integral is taken from a Taylor series instead.

Errors in the upward recurrence grow like |t0|^k, so roots with Bernstein
radius at least RECURRENCE_RHO get all three vectors from a single
Gauss-Legendre rule sized to that radius instead.
"""

import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from pathlib import Path

import numpy as np

# Add backend directory to path
backend_dir = Path(__file__).parent.parent
if str(backend_dir) not in sys.path:
    sys.path.insert(0, str(backend_dir))

from exceptions import RecurrenceDomainError
from services.geometry import bernstein_radius

S1_TERMS = 11
S3_TERMS = 30
S5_TERMS = 50
S3_CONE = 0.6
S5_CONE = 0.7
RECURRENCE_RHO = 1.5
MAX_RULE = 400

# sqrt(1 + x^2) - 1 = sum_{n>=1} a_n x^{2n}
_S1_COEFFS = np.array([
    float(Fraction((-1) ** n * comb(2 * n, n), (1 - 2 * n) * 4 ** n))
    for n in range(1, S1_TERMS + 1)
])
# antiderivative of (s^2 + t_i^2)^{-3/2}, expanded in (t_i/s)^2
_S3_COEFFS = np.array([
    float(Fraction(-1, 4) ** (n + 1) * comb(2 * n + 2, n + 1))
    for n in range(S3_TERMS)
])
# antiderivative of (s^2 + t_i^2)^{-5/2}, expanded in (t_i/s)^2
_S5_COEFFS = np.array([
    float(Fraction((-1) ** (n + 1) * (4 * n * n + 8 * n + 3), 3 * (n + 2) * 2 ** (2 * n + 1)) * comb(2 * n, n))
    for n in range(S5_TERMS)
])


def _horner(coeffs: np.ndarray, y: float) -> float:
    acc = 0.0
    for c in coeffs[::-1]:
        acc = acc * y + c
    return acc


@dataclass(frozen=True)
class RootPairGeom:
    """Derived quantities of a root pair t0, conj(t0)"""

    t_r: float
    t_i: float
    b: float
    c: float
    d: float
    u1: float
    u2: float

    @classmethod
    def from_root(cls, t0) -> "RootPairGeom":
        t0 = complex(t0)
        t_r, t_i = t0.real, abs(t0.imag)
        if t_i == 0 and abs(t_r) <= 1:
            raise RecurrenceDomainError(t0)
        return cls(
            t_r=t_r, t_i=t_i,
            b=-2.0 * t_r, c=t_r * t_r + t_i * t_i, d=t_i * t_i,
            u1=math.hypot(1.0 + t_r, t_i), u2=math.hypot(1.0 - t_r, t_i),
        )

    def cone_ratio(self) -> float:
        """t_i / (|t_r| - 1), or inf when |t_r| <= 1"""
        excess = abs(self.t_r) - 1.0
        return self.t_i / excess if excess > 0 else math.inf


@dataclass
class PVectors:
    """P^1, P^3, P^5 for k = 1..n"""

    p1: np.ndarray
    p3: np.ndarray
    p5: np.ndarray

    def get(self, m: int) -> np.ndarray:
        return {1: self.p1, 3: self.p3, 5: self.p5}[m]


def _s3(s: float, t_i: float) -> float:
    y = (t_i / s) ** 2
    return abs(s) / s ** 3 * _horner(_S3_COEFFS, y)


def _s5(s: float, t_i: float) -> float:
    y = (t_i / s) ** 2
    return abs(s) / s ** 5 * _horner(_S5_COEFFS, y)


def pvec_m1(t0, n: int) -> np.ndarray:
    """P^1_k for k = 1..n"""
    g = RootPairGeom.from_root(t0)
    tra = abs(g.t_r)
    upper = math.log(1.0 + tra + math.hypot(1.0 + tra, g.t_i))
    if 4.0 * g.t_i < 1.0 - tra:
        x = g.t_i / (1.0 - tra)
        lower = math.log((1.0 - tra) * _horner(_S1_COEFFS, x * x) * x * x)
    else:
        lower = math.log(-1.0 + tra + math.hypot(-1.0 + tra, g.t_i))
    p = np.empty(n)
    p[0] = upper - lower
    if n > 1:
        p[1] = g.u2 - g.u1 - 0.5 * g.b * p[0]
    for k in range(2, n):
        p[k] = (g.u2 - (-1) ** (k - 1) * g.u1 + 0.5 * (1 - 2 * k) * g.b * p[k - 1]
                - (k - 1) * g.c * p[k - 2]) / k
    return p


def pvec_m3(t0, n: int, p1: np.ndarray) -> np.ndarray:
    """P^3_k for k = 1..n from the P^1 vector"""
    g = RootPairGeom.from_root(t0)
    ratio = g.cone_ratio()
    p = np.empty(n)
    if 0.0 <= ratio < S3_CONE:
        p[0] = _s3(1.0 - g.t_r, g.t_i) - _s3(-1.0 - g.t_r, g.t_i)
    else:
        p[0] = ((g.b + 2.0) / g.u2 - (g.b - 2.0) / g.u1) / (2.0 * g.d)
    if n > 1:
        p[1] = 1.0 / g.u1 - 1.0 / g.u2 - 0.5 * g.b * p[0]
    for k in range(2, n):
        p[k] = p1[k - 2] - g.b * p[k - 1] - g.c * p[k - 2]
    return p


def pvec_m5(t0, n: int, p3: np.ndarray, p3_1: float = None) -> np.ndarray:
    """P^5_k for k = 1..n from the P^3 vector"""
    g = RootPairGeom.from_root(t0)
    p3_1 = p3[0] if p3_1 is None else p3_1
    ratio = g.cone_ratio()
    p = np.empty(n)
    if 0.0 <= ratio < S5_CONE:
        p[0] = _s5(1.0 - g.t_r, g.t_i) - _s5(-1.0 - g.t_r, g.t_i)
    else:
        p[0] = ((g.b + 2.0) / (2.0 * g.u2 ** 3) - (g.b - 2.0) / (2.0 * g.u1 ** 3) + 2.0 * p3_1) / (3.0 * g.d)
    if n > 1:
        p[1] = 1.0 / (3.0 * g.u1 ** 3) - 1.0 / (3.0 * g.u2 ** 3) - 0.5 * g.b * p[0]
    for k in range(2, n):
        p[k] = p3[k - 2] - g.b * p[k - 1] - g.c * p[k - 2]
    return p


def root_radius(t0) -> float:
    """Bernstein radius of t0 as a float"""
    return float(bernstein_radius(complex(t0)))


@lru_cache(maxsize=32)
def _rule(order: int):
    return np.polynomial.legendre.leggauss(order)


def pvectors_quadrature(t0, n: int) -> PVectors:
    """
    P vectors from a Gauss-Legendre rule with rho^-order <= 1e-18.

    The integrand is analytic inside the Bernstein ellipse through t0, so
    this converges at twice that rate; the margin absorbs the growth of
    |t - t0|^-5 toward the singularity.
    """
    g = RootPairGeom.from_root(t0)
    rho = root_radius(complex(g.t_r, g.t_i))
    order = min(MAX_RULE, max(2 * n, math.ceil(18.0 / math.log10(rho))))
    t, w = _rule(order)
    inv = 1.0 / np.sqrt((t - g.t_r) ** 2 + g.d)
    mono = np.vander(t, n, increasing=True)
    return PVectors(
        p1=(w * inv) @ mono,
        p3=(w * inv ** 3) @ mono,
        p5=(w * inv ** 5) @ mono,
    )


def pvectors(t0, n: int, m_max: int = 5) -> PVectors:
    """All P vectors up to m_max (1, 3 or 5) with n entries each"""
    if root_radius(t0) >= RECURRENCE_RHO:
        return pvectors_quadrature(t0, n)
    p1 = pvec_m1(t0, n)
    p3 = pvec_m3(t0, n, p1) if m_max >= 3 else np.full(n, np.nan)
    p5 = pvec_m5(t0, n, p3) if m_max >= 5 else np.full(n, np.nan)
    return PVectors(p1=p1, p3=p3, p5=p5)
