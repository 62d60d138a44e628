"""
Curves, panels and the Bernstein-radius machinery

A Panel is one curve segment carrying an n-point Gauss-Legendre rule on the
standard interval [-1, 1]. Derivatives and speeds are taken with respect to
the standard parameter, so w_j * speed_j is the arc-length weight of node j.
"""

import json
import logging
import sys
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.linalg import lu_factor, lu_solve

# Add backend directory to path
backend_dir = Path(__file__).parent.parent
if str(backend_dir) not in sys.path:
    sys.path.insert(0, str(backend_dir))

from config import settings
from exceptions import ConfigurationError, GeometryError, PanelizationError
from services.interpolation import gl_interp_matrix

logger = logging.getLogger(__name__)

GL_MAX_NODES = 64
LEGENDRE_TERMS = 16
FOURIER_CURVE_PATH = backend_dir / "data" / "fourier_curve.json"


@lru_cache(maxsize=64)
def _gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]"""
    if not 1 <= int(n) <= GL_MAX_NODES:
        raise ConfigurationError("n", n, f"node count must lie in [1, {GL_MAX_NODES}]")
    return _gauss_legendre(int(n))


@dataclass(frozen=True)
class ParamCurve:
    """Parametrized curve g: domain -> R^d with derivative g'"""

    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    domain: Tuple[float, float]
    periodic: bool = False
    name: str = "curve"
    # Analytic continuation gamma(t) for complex t (planar curves only)
    complex_func: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigurationError("dim", self.dim, "curves live in 2 or 3 dimensions")
        if not self.domain[0] < self.domain[1]:
            raise GeometryError(f"Empty parameter domain {self.domain}")

    def evaluate(self, t) -> np.ndarray:
        """Points g(t) as an (m, d) array"""
        return np.asarray(self.func(np.atleast_1d(np.asarray(t, dtype=float))), dtype=float)

    def derivative(self, t) -> np.ndarray:
        """Derivatives g'(t) as an (m, d) array"""
        return np.asarray(self.deriv(np.atleast_1d(np.asarray(t, dtype=float))), dtype=float)

    @classmethod
    def planar(cls, gamma: Callable, dgamma: Callable, domain: Tuple[float, float],
               periodic: bool = False, name: str = "curve") -> "ParamCurve":
        """Build a 2D curve from a complex-valued parametrization"""
        def func(t):
            z = gamma(t)
            return np.column_stack([z.real, z.imag])

        def deriv(t):
            z = dgamma(t)
            return np.column_stack([z.real, z.imag])

        return cls(dim=2, func=func, deriv=deriv, domain=domain, periodic=periodic,
                   name=name, complex_func=gamma)


def line_curve(dim: int = 2, direction=None, origin=None,
               domain: Tuple[float, float] = (-1.0, 1.0)) -> ParamCurve:
    """Straight line g(t) = origin + t * direction"""
    u = np.zeros(dim) if direction is None else np.asarray(direction, dtype=float)
    if direction is None:
        u[0] = 1.0
    o = np.zeros(dim) if origin is None else np.asarray(origin, dtype=float)
    if dim == 2:
        zu = complex(u[0], u[1])
        zo = complex(o[0], o[1])
        return ParamCurve.planar(
            lambda t: zo + zu * np.asarray(t),
            lambda t: zu * np.ones_like(np.asarray(t), dtype=complex),
            domain, name="line"
        )
    return ParamCurve(
        dim=dim,
        func=lambda t: o[None, :] + t[:, None] * u[None, :],
        deriv=lambda t: np.repeat(u[None, :], len(t), axis=0),
        domain=domain,
        name="line",
    )


def parabola_curve(k: float) -> ParamCurve:
    """Parabolic panel g(t) = (t, k t^2) on [-1, 1]"""
    return ParamCurve.planar(
        lambda t: t + 1j * k * np.asarray(t) ** 2,
        lambda t: 1.0 + 2j * k * np.asarray(t),
        (-1.0, 1.0), name=f"parabola(k={k:g})"
    )


def circle_curve(radius: float = 1.0) -> ParamCurve:
    """Counterclockwise circle, periodic on [0, 2pi]"""
    return ParamCurve.planar(
        lambda t: radius * np.exp(1j * np.asarray(t)),
        lambda t: 1j * radius * np.exp(1j * np.asarray(t)),
        (0.0, 2 * np.pi), periodic=True, name="circle"
    )


def starfish_curve(amplitude: float = 0.3, arms: int = 5) -> ParamCurve:
    """Starfish (1 + a cos(arms t)) e^{it}, counterclockwise"""
    def gamma(t):
        t = np.asarray(t)
        return (1 + amplitude * np.cos(arms * t)) * np.exp(1j * t)

    def dgamma(t):
        t = np.asarray(t)
        return (-amplitude * arms * np.sin(arms * t) + 1j * (1 + amplitude * np.cos(arms * t))) * np.exp(1j * t)

    return ParamCurve.planar(gamma, dgamma, (0.0, 2 * np.pi), periodic=True, name="starfish")


def fourier_curve_3d(path: Optional[Path] = None) -> ParamCurve:
    """
    Closed space curve g(t) = Re sum_k c_k / (offset + |k|) e^{2 pi i k t}, t in [0, 1)

    The complex coefficients c_k are read from the committed table so that
    every run sees the same curve.
    """
    with open(path or FOURIER_CURVE_PATH, "r", encoding="utf-8") as fh:
        table = json.load(fh)
    modes = int(table["modes"])
    ks = np.arange(-modes, modes + 1)
    c = np.asarray(table["real"]) + 1j * np.asarray(table["imag"])
    a = c / (table["decay_offset"] + np.abs(ks))[None, :]

    def func(t):
        e = np.exp(2j * np.pi * np.outer(t, ks))
        return (e @ a.T).real

    def deriv(t):
        e = np.exp(2j * np.pi * np.outer(t, ks)) * (2j * np.pi * ks)[None, :]
        return (e @ a.T).real

    return ParamCurve(dim=3, func=func, deriv=deriv, domain=(0.0, 1.0), periodic=True, name="fourier3d")


@lru_cache(maxsize=64)
def _legendre_lu(n: int):
    nodes, _ = _gauss_legendre(n)
    return lu_factor(np.polynomial.legendre.legvander(nodes, n - 1))


def legendre_fit(samples: np.ndarray, max_terms: Optional[int] = LEGENDRE_TERMS) -> np.ndarray:
    """
    Legendre coefficients of the interpolant through samples at the GL nodes.

    Solves the n x n interpolation system, then keeps the first max_terms
    coefficients (None keeps all n). Trailing sample dimensions are fitted
    componentwise; coefficients come back along axis 0.
    """
    samples = np.asarray(samples)
    n = samples.shape[0]
    gauss_legendre(n)
    coeffs = lu_solve(_legendre_lu(n), samples)
    if max_terms is not None:
        coeffs = coeffs[:min(n, max_terms)]
    return coeffs


def _legendre_basis(m: int, t):
    vals = [1.0] * m
    ders = [0.0] * m
    if m > 1:
        vals[1] = t
        ders[1] = 1.0
    for k in range(1, m - 1):
        vals[k + 1] = ((2 * k + 1) * t * vals[k] - k * vals[k - 1]) / (k + 1)
        ders[k + 1] = ders[k - 1] + (2 * k + 1) * vals[k]
    return vals, ders


def eval_poly_complex(coeffs: np.ndarray, t) -> complex:
    """Value of sum_k c_k P_k(t) at a (possibly complex) scalar t"""
    return eval_poly_complex_with_derivative(coeffs, t)[0]


def eval_poly_complex_with_derivative(coeffs: np.ndarray, t):
    """Value and t-derivative of a Legendre series at a scalar t"""
    c = np.asarray(coeffs)
    vals, ders = _legendre_basis(c.shape[0], t)
    val = np.tensordot(np.asarray(vals), c, axes=(0, 0))
    der = np.tensordot(np.asarray(ders), c, axes=(0, 0))
    return val[()], der[()]


def bernstein_radius(t):
    """rho(t) = |t + sqrt(t^2 - 1)| with the branch giving rho >= 1; 1 on [-1, 1]"""
    z = np.asarray(t, dtype=complex)
    s = np.sqrt(z - 1) * np.sqrt(z + 1)
    rho = np.abs(z + s)
    with np.errstate(divide="ignore"):
        rho = np.maximum(rho, 1.0 / rho)
    on_interval = (z.imag == 0) & (np.abs(z.real) <= 1)
    rho = np.where(on_interval, 1.0, rho)
    return float(rho) if rho.ndim == 0 else rho


def rho_crit(eps: float, n: int) -> float:
    """Critical Bernstein radius eps^(-1/(2n))"""
    if not 0.0 < eps < 1.0:
        raise ConfigurationError("tolerance", eps, "must lie in (0, 1)")
    return float(eps ** (-1.0 / (2 * n)))


@dataclass(frozen=True, eq=False)
class Panel:
    """One panel with its Gauss-Legendre data and polynomial expansions"""

    dim: int
    a: float
    b: float
    n: int
    t: np.ndarray
    w: np.ndarray
    y: np.ndarray          # (n, d)
    dy: np.ndarray         # (n, d), d/dt on [-1, 1]
    ddy: np.ndarray        # (n, d)
    speed: np.ndarray      # (n,)
    coeffs: np.ndarray     # (min(n,16), d)
    dcoeffs: np.ndarray    # (min(n,16), d)
    h: float
    endpoints: np.ndarray  # (2, d): g(a), g(b)
    t_star: Optional[complex] = None

    @property
    def arc_weights(self) -> np.ndarray:
        return self.w * self.speed

    def map_parameter(self, t):
        return self.a + 0.5 * (self.b - self.a) * (np.asarray(t) + 1.0)

    def resample(self, values: np.ndarray, m: int) -> np.ndarray:
        """Interpolate node data onto m Gauss-Legendre nodes"""
        if m == self.n:
            return np.asarray(values).copy()
        return np.tensordot(gl_interp_matrix(self.n, m), np.asarray(values), axes=(1, 0))

    # Complex views, planar panels only

    @property
    def tau(self) -> np.ndarray:
        return self.y[:, 0] + 1j * self.y[:, 1]

    @property
    def dtau(self) -> np.ndarray:
        return self.dy[:, 0] + 1j * self.dy[:, 1]

    @property
    def unit_tangent(self) -> np.ndarray:
        return self.dtau / self.speed

    @property
    def normal(self) -> np.ndarray:
        """nu = i gamma'/|gamma'|; points outward for clockwise traversal"""
        return 1j * self.unit_tangent

    @property
    def curvature(self) -> np.ndarray:
        d1 = self.dtau
        d2 = self.ddy[:, 0] + 1j * self.ddy[:, 1]
        return (np.conj(d1) * d2).imag / self.speed ** 3

    @property
    def complex_coeffs(self) -> np.ndarray:
        return self.coeffs[:, 0] + 1j * self.coeffs[:, 1]

    @property
    def complex_dcoeffs(self) -> np.ndarray:
        return self.dcoeffs[:, 0] + 1j * self.dcoeffs[:, 1]

    @property
    def complex_endpoints(self) -> Tuple[complex, complex]:
        return (complex(self.endpoints[0, 0], self.endpoints[0, 1]),
                complex(self.endpoints[1, 0], self.endpoints[1, 1]))


@dataclass(frozen=True)
class ComplexPanelFrame:
    """Affine map s(tau) = (tau - tau0)/s0 sending the panel endpoints to -1, +1"""

    s0: complex
    tau0: complex

    def to_local(self, tau):
        return (np.asarray(tau) - self.tau0) / self.s0

    def to_global(self, z):
        return self.tau0 + self.s0 * np.asarray(z)


def _panel_from_samples(dim, a, b, t, w, y, dy, ddy, endpoints, t_star=None) -> Panel:
    speed = np.linalg.norm(dy, axis=1)
    if np.any(speed == 0):
        raise GeometryError("Curve is not regular on the panel (vanishing speed)",
                            {"interval": (a, b)})
    return Panel(
        dim=dim, a=float(a), b=float(b), n=len(t), t=t, w=w,
        y=y, dy=dy, ddy=ddy, speed=speed,
        coeffs=legendre_fit(y), dcoeffs=legendre_fit(dy),
        h=float(np.dot(w, speed)), endpoints=endpoints, t_star=t_star,
    )


def build_panel(curve: ParamCurve, interval: Tuple[float, float], n: int) -> Panel:
    """Sample the curve on [a, b] at n Gauss-Legendre nodes and fit expansions"""
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise GeometryError(f"Degenerate panel interval [{a}, {b}]", {"interval": (a, b)})
    t, w = gauss_legendre(n)
    s = a + 0.5 * (b - a) * (t + 1.0)
    jac = 0.5 * (b - a)
    y = curve.evaluate(s)
    dy = curve.derivative(s) * jac
    full = legendre_fit(dy, max_terms=None)
    ddy = np.polynomial.legendre.legval(t, np.polynomial.legendre.legder(full)).T if n > 1 \
        else np.zeros_like(dy)
    panel = _panel_from_samples(curve.dim, a, b, t, w, y, dy, ddy.reshape(dy.shape),
                                curve.evaluate([a, b]))
    if curve.dim == 2:
        panel = replace(panel, t_star=schwarz_preimage(panel))
    return panel


def endpoint_frame(panel: Panel) -> ComplexPanelFrame:
    """Endpoint frame of a planar panel"""
    if panel.dim != 2:
        raise GeometryError("Endpoint frames exist for planar panels only")
    g_minus, g_plus = panel.complex_endpoints
    s0 = 0.5 * (g_plus - g_minus)
    if s0 == 0:
        raise GeometryError("Panel endpoints coincide", {"endpoint": g_minus})
    return ComplexPanelFrame(s0=s0, tau0=0.5 * (g_plus + g_minus))


def significant_coeffs(coeffs: np.ndarray, rel: float = 1e-14) -> np.ndarray:
    """Zero coefficients below rel * max|c| and drop the vanishing tail"""
    c = np.asarray(coeffs, dtype=complex)
    if c.size == 0:
        return c
    c = np.where(np.abs(c) > rel * np.max(np.abs(c)), c, 0)
    nonzero = np.flatnonzero(c)
    return c[:nonzero[-1] + 1] if nonzero.size else c[:1]


def schwarz_preimage(panel: Panel, max_iter: Optional[int] = None) -> Optional[complex]:
    """
    Root of the gamma' expansion nearest 0 by Newton, or None.

    Round-off coefficients are dropped first: at |t| ~ 2 the high Legendre
    polynomials amplify them by ~1e9.
    """
    c = significant_coeffs(panel.complex_dcoeffs)
    if c.shape[0] < 2:
        return None
    t = 0j
    for _ in range(max_iter or settings.quad.newton_max_iter):
        val, der = eval_poly_complex_with_derivative(c, t)
        if der == 0:
            return None
        dt = val / der
        t = t - dt
        if not np.isfinite(t):
            return None
        if abs(dt) < 1e-13:
            return complex(t)
    return None


def _resolution_samples(curve: ParamCurve, a: float, b: float, n: int) -> np.ndarray:
    t, _ = gauss_legendre(n)
    d = curve.derivative(a + 0.5 * (b - a) * (t + 1.0)) * 0.5 * (b - a)
    if curve.dim == 2:
        return d[:, 0] + 1j * d[:, 1]
    return np.linalg.norm(d, axis=1)


def _is_resolved(curve: ParamCurve, a: float, b: float, n: int, eps: float) -> bool:
    if n < 3:
        return True
    c = np.abs(legendre_fit(_resolution_samples(curve, a, b, n), max_terms=None))
    return max(c[-2], c[-1]) < eps * np.max(c)


def _level_restrict(intervals: List[Tuple[float, float]], periodic: bool) -> List[Tuple[float, float]]:
    intervals = sorted(intervals)
    changed = True
    while changed:
        changed = False
        out = []
        count = len(intervals)
        for i, (a, b) in enumerate(intervals):
            length = b - a
            neighbors = []
            if i > 0 or periodic:
                neighbors.append(intervals[i - 1])
            if i < count - 1 or periodic:
                neighbors.append(intervals[(i + 1) % count])
            if count > 1 and any(length > 2.0 * (nb[1] - nb[0]) * (1 + 1e-12) for nb in neighbors):
                mid = 0.5 * (a + b)
                out.extend([(a, mid), (mid, b)])
                changed = True
            else:
                out.append((a, b))
        intervals = out
    return intervals


def adaptive_panelize(curve: ParamCurve, eps_panel: float, n: int,
                      max_depth: Optional[int] = None) -> List[Panel]:
    """
    Bisect the parameter domain until every panel resolves the curve, then
    balance neighbors to a length ratio of at most 2.

    The resolution test looks at the last two Legendre coefficients of gamma'
    for planar curves and of the speed |g'| for space curves.
    """
    max_depth = max_depth or settings.quad.max_depth_panelize
    gauss_legendre(n)
    stack = [(curve.domain[0], curve.domain[1], 0)]
    leaves = []
    while stack:
        a, b, depth = stack.pop()
        if _is_resolved(curve, a, b, n, eps_panel):
            leaves.append((a, b))
            continue
        if depth >= max_depth:
            raise PanelizationError(depth, (a, b))
        mid = 0.5 * (a + b)
        stack.append((mid, b, depth + 1))
        stack.append((a, mid, depth + 1))
    intervals = _level_restrict(leaves, curve.periodic)
    logger.debug("Panelized %s into %d panels (eps_panel=%g, n=%d)",
                 curve.name, len(intervals), eps_panel, n)
    return [build_panel(curve, iv, n) for iv in intervals]


def upsample_panel(panel: Panel, m: int) -> Panel:
    """Interpolate geometry and derivatives componentwise onto m nodes"""
    if m < panel.n:
        raise GeometryError(f"Cannot upsample a {panel.n}-node panel to {m} nodes")
    if m == panel.n:
        return panel
    t, w = gauss_legendre(m)
    mat = gl_interp_matrix(panel.n, m)
    return _panel_from_samples(
        panel.dim, panel.a, panel.b, t, w,
        mat @ panel.y, mat @ panel.dy, mat @ panel.ddy,
        panel.endpoints, t_star=panel.t_star,
    )
