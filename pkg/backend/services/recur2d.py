"""
Exact monomial integrals on the standard panel [-1, 1] for planar kernels

    p^m_k(z) = int_{-1}^{1} t^{k-1} / (t - z)^m dt
    q_k(z)   = int_{-1}^{1} t^{k-1} log(t - z) dt

computed by upward recurrence. The winding number N accounts for a curved
path of integration that passes on the other side of z than [-1, 1] does.
"""

import cmath
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np

# Add backend directory to path
backend_dir = Path(__file__).parent.parent
if str(backend_dir) not in sys.path:
    sys.path.insert(0, str(backend_dir))

from exceptions import BranchError, RecurrenceDomainError
from services.geometry import ComplexPanelFrame, Panel, endpoint_frame

TWO_PI_I = 2j * math.pi


def _checked(z) -> complex:
    z = complex(z)
    if z.imag == 0:
        if abs(z.real) <= 1:
            raise RecurrenceDomainError(z)
        # fix the branch of log(t - z) for real z outside the interval
        z = complex(z.real, 0.0)
    return z


def p_m1(z, n: int, N: int = 0) -> np.ndarray:
    """p^1_k for k = 1..n"""
    z = _checked(z)
    p = np.empty(n, dtype=complex)
    p[0] = cmath.log(1 - z) - cmath.log(-1 - z) + TWO_PI_I * N
    for k in range(1, n):
        p[k] = z * p[k - 1] + (1 - (-1) ** k) / k
    return p


def p_m(z, m: int, n: int, lower: np.ndarray) -> np.ndarray:
    """p^m_k for k = 1..n from the p^{m-1} vector"""
    if m < 2:
        raise ValueError("p_m handles m >= 2; use p_m1 for m = 1")
    z = _checked(z)
    p = np.empty(n, dtype=complex)
    p[0] = ((1 - z) ** (1 - m) - (-1 - z) ** (1 - m)) / (1 - m)
    for k in range(1, n):
        p[k] = z * p[k - 1] + lower[k - 1]
    return p


def q_log(z, n: int, p1: np.ndarray, N: int = 0) -> np.ndarray:
    """
    q_k for k = 1..n; p1 must hold p^1_1..p^1_{n+1} computed with the same N.

    Principal logs are used at the endpoints. A different branch only shifts
    every q_k by 2 pi i times the k-th monomial moment.
    """
    z = _checked(z)
    if len(p1) < n + 1:
        raise ValueError(f"q_log needs {n + 1} values of p^1, got {len(p1)}")
    log_plus = cmath.log(1 - z) + TWO_PI_I * N
    log_minus = cmath.log(-1 - z)
    k = np.arange(1, n + 1)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    return (log_plus - sign * log_minus - p1[1:n + 1]) / k


@dataclass
class MonomialIntegrals2D:
    """Monomial integrals for one singularity location"""

    n: int
    z: complex
    N: int = 0
    p: Dict[int, np.ndarray] = field(default_factory=dict)
    q: Optional[np.ndarray] = None

    def recurrence_residual(self) -> float:
        """max |p^1_{k+1} - z p^1_k - (1 - (-1)^k)/k|"""
        p1 = self.p[1]
        k = np.arange(1, len(p1))
        rhs = (1 - (-1.0) ** k) / k
        return float(np.max(np.abs(p1[1:] - self.z * p1[:-1] - rhs), initial=0.0))


def monomial_integrals_2d(z, n: int, m_max: int = 1, log: bool = False, N: int = 0) -> MonomialIntegrals2D:
    """p^m for m = 1..m_max and optionally q, all of length n"""
    length = n + 1 if log else n
    result = MonomialIntegrals2D(n=n, z=complex(z), N=N)
    result.p[1] = p_m1(z, length, N)
    for m in range(2, m_max + 1):
        result.p[m] = p_m(z, m, length, result.p[m - 1])
    if log:
        result.q = q_log(z, n, result.p[1], N)
    for m in result.p:
        result.p[m] = result.p[m][:n]
    return result


def _segment_distance(z: complex, a: complex, b: complex) -> float:
    d = b - a
    if d == 0:
        return abs(z - a)
    s = ((z - a) * d.conjugate()).real / abs(d) ** 2
    s = min(1.0, max(0.0, s))
    return abs(z - (a + s * d))


def winding_number(panel: Panel, zeta: complex, frame: Optional[ComplexPanelFrame] = None,
                   max_depth: int = 60) -> int:
    """
    Winding number about zeta of the loop made of the panel traversed forward
    and its chord traversed back, in the endpoint frame.

    Argument increments are summed over a polygon refined until every segment
    is short compared with its distance to zeta.
    """
    frame = frame or endpoint_frame(panel)
    zt = complex(frame.to_local(zeta))
    coeffs = panel.complex_coeffs
    scale = 1e-14

    def point(t):
        return complex(frame.to_local(np.polynomial.legendre.legval(t, coeffs)))

    ts = np.linspace(-1.0, 1.0, 4 * panel.n + 1)
    pts = [point(t) for t in ts]
    stack = [(ts[i], ts[i + 1], pts[i], pts[i + 1], 0) for i in range(len(ts) - 2, -1, -1)]
    total = 0.0
    while stack:
        ta, tb, pa, pb, depth = stack.pop()
        dist = _segment_distance(zt, pa, pb)
        if dist < scale:
            raise BranchError(zeta, dist)
        if abs(pb - pa) > 0.5 * dist and depth < max_depth:
            tm = 0.5 * (ta + tb)
            pm = point(tm)
            stack.append((tm, tb, pm, pb, depth + 1))
            stack.append((ta, tm, pa, pm, depth + 1))
            continue
        total += cmath.phase((pb - zt) / (pa - zt))
    total += cmath.phase((pts[0] - zt) / (pts[-1] - zt))
    return int(round(total / (2 * math.pi)))
