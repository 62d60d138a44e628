"""
Preimage root finding and target classification

The preimage of a target is the complex parameter t0 where the analytically
continued panel map meets the target: gamma(t0) = zeta in 2D, or a root of
the squared distance R(t)^2 in 3D. Root finders are interchangeable
strategies tried in order until one converges.
"""

import cmath
import logging
import sys
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigvals

# Add backend directory to path
backend_dir = Path(__file__).parent.parent
if str(backend_dir) not in sys.path:
    sys.path.insert(0, str(backend_dir))

from exceptions import OnCurveError, RootFindingError
from services.geometry import (
    Panel,
    bernstein_radius,
    endpoint_frame,
    eval_poly_complex_with_derivative,
)
from services.quadconfig import QuadConfig, UpsampleMode

logger = logging.getLogger(__name__)

STEP_TOL = 1e-13
RESIDUAL_TOL_2D = 1e-14
MULLER_SEED_OFFSET = 0.05j


class RootMethod(Enum):
    """Method that produced a preimage"""
    NEWTON = "newton"
    MULLER = "muller"
    COMPANION = "companion"
    NONE = "none"


class TargetKind(Enum):
    """Quadrature treatment for a (panel, target) pair"""
    FAR = "far"
    NEAR_DIRECT_UPSAMPLED = "near_direct_upsampled"
    SPECIAL = "special"


class Basis(Enum):
    """Polynomial basis of a coefficient vector"""
    LEGENDRE = "legendre"
    MONOMIAL = "monomial"


@dataclass
class Preimage:
    """Complex preimage of a target with convergence diagnostics"""
    t0: complex
    converged: bool
    iterations: int
    method: RootMethod
    rho: float
    residual: float = float("nan")


@dataclass
class TargetClass:
    """Classification of one target against one panel"""
    kind: TargetKind
    preimage: Optional[Preimage] = None
    min_distance: float = float("nan")


class FallbackCounter:
    """Thread-safe tallies of root-finding fallbacks"""

    def __init__(self):
        self._lock = threading.Lock()
        self._counts: Dict[str, int] = {}

    def increment(self, name: str, amount: int = 1):
        with self._lock:
            self._counts[name] = self._counts.get(name, 0) + amount

    def get(self, name: str) -> int:
        with self._lock:
            return self._counts.get(name, 0)

    def snapshot(self) -> Dict[str, int]:
        with self._lock:
            return dict(self._counts)

    def reset(self):
        with self._lock:
            self._counts.clear()


# Global counter instance
fallback_counter = FallbackCounter()


class PreimageProblem(ABC):
    """A polynomial whose root near the real interval is sought"""

    residual_tol: float = 0.0

    @abstractmethod
    def evaluate(self, t: complex) -> Tuple[complex, complex]:
        """Value and derivative at t"""
        pass

    @abstractmethod
    def legendre_coefficients(self) -> np.ndarray:
        """Legendre coefficients of the polynomial"""
        pass


class PlanarPreimageProblem(PreimageProblem):
    """Q(t) = P_n[gamma](t) - zeta"""

    def __init__(self, coeffs: np.ndarray, zeta: complex, scale: float):
        self.coeffs = np.asarray(coeffs, dtype=complex)
        self.zeta = complex(zeta)
        self.residual_tol = RESIDUAL_TOL_2D * scale

    def evaluate(self, t):
        val, der = eval_poly_complex_with_derivative(self.coeffs, t)
        return complex(val) - self.zeta, complex(der)

    def legendre_coefficients(self) -> np.ndarray:
        c = self.coeffs.copy()
        c[0] -= self.zeta
        return c


class SquaredDistanceProblem(PreimageProblem):
    """R(t)^2 = sum_i (P_n[g_i](t) - x_i)^2 with real coefficients"""

    def __init__(self, coeffs: np.ndarray, x: np.ndarray):
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.x = np.asarray(x, dtype=float)

    def evaluate(self, t):
        val, der = eval_poly_complex_with_derivative(self.coeffs, t)
        diff = np.asarray(val) - self.x
        return complex(np.sum(diff * diff)), complex(2.0 * np.sum(diff * np.asarray(der)))

    def legendre_coefficients(self) -> np.ndarray:
        leg = np.polynomial.legendre
        total = np.zeros(1)
        for i in range(self.coeffs.shape[1]):
            c = self.coeffs[:, i].copy()
            c[0] -= self.x[i]
            total = leg.legadd(total, leg.legmul(c, c))
        return total


class RootFinder(ABC):
    """Abstract base class for root-finding strategies"""

    @abstractmethod
    def get_method(self) -> RootMethod:
        pass

    @abstractmethod
    def find(self, problem: PreimageProblem, t_init: complex, max_iter: int) -> Preimage:
        pass


class NewtonRootFinder(RootFinder):
    """Newton iteration with step and residual stopping"""

    def get_method(self) -> RootMethod:
        return RootMethod.NEWTON

    def find(self, problem, t_init, max_iter):
        t = complex(t_init)
        f = complex("nan")
        for it in range(1, max_iter + 1):
            f, df = problem.evaluate(t)
            if abs(f) <= problem.residual_tol:
                return _preimage(t, True, it, RootMethod.NEWTON, abs(f))
            if df == 0:
                break
            dt = f / df
            t = t - dt
            if not cmath.isfinite(t):
                break
            if abs(dt) < STEP_TOL:
                return _preimage(t, True, it, RootMethod.NEWTON, abs(problem.evaluate(t)[0]))
        return _preimage(t, False, max_iter, RootMethod.NEWTON, abs(f))


class MullerRootFinder(RootFinder):
    """Muller's method from three seeds around the initial guess"""

    def get_method(self) -> RootMethod:
        return RootMethod.MULLER

    def find(self, problem, t_init, max_iter):
        x0 = complex(t_init) + MULLER_SEED_OFFSET
        x1 = complex(t_init) - MULLER_SEED_OFFSET
        x2 = complex(t_init)
        f0, f1, f2 = (problem.evaluate(x)[0] for x in (x0, x1, x2))
        for it in range(1, max_iter + 1):
            h1, h2 = x1 - x0, x2 - x1
            if h1 == 0 or h2 == 0 or h1 + h2 == 0:
                break
            d1, d2 = (f1 - f0) / h1, (f2 - f1) / h2
            a = (d2 - d1) / (h2 + h1)
            b = a * h2 + d2
            disc = cmath.sqrt(b * b - 4.0 * a * f2)
            den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
            if den == 0:
                break
            dx = -2.0 * f2 / den
            x0, x1, x2 = x1, x2, x2 + dx
            f0, f1, f2 = f1, f2, problem.evaluate(x2)[0]
            if not cmath.isfinite(x2):
                break
            if abs(dx) < STEP_TOL * max(1.0, abs(x2)) or abs(f2) <= problem.residual_tol:
                return _preimage(x2, True, it, RootMethod.MULLER, abs(f2))
        return _preimage(x2, False, max_iter, RootMethod.MULLER, abs(f2))


class CompanionRootFinder(RootFinder):
    """All roots from a companion matrix; keeps the one nearest the interval"""

    def get_method(self) -> RootMethod:
        return RootMethod.COMPANION

    def find(self, problem, t_init, max_iter):
        roots = all_roots_companion(problem.legendre_coefficients(), Basis.LEGENDRE)
        if not roots:
            return _preimage(complex(t_init), False, 0, RootMethod.COMPANION, float("nan"))
        best = min(roots, key=lambda r: (bernstein_radius(r), abs(r - t_init)))
        return _preimage(best, True, 1, RootMethod.COMPANION, abs(problem.evaluate(best)[0]))


class PreimageSolver:
    """
    Tries root finders in a preferred order, falling back on failure
    """

    def __init__(self):
        self.finders: List[RootFinder] = [
            NewtonRootFinder(),
            MullerRootFinder(),
            CompanionRootFinder(),
        ]

    def get_finder(self, method: RootMethod) -> Optional[RootFinder]:
        for finder in self.finders:
            if finder.get_method() == method:
                return finder
        return None

    def solve(self, problem: PreimageProblem, t_init: complex,
              order: Sequence[RootMethod], cfg: QuadConfig) -> Preimage:
        result = None
        for method in order:
            finder = self.get_finder(method)
            if finder is None:
                continue
            max_iter = cfg.muller_max_iter if method == RootMethod.MULLER else cfg.newton_max_iter
            try:
                result = finder.find(problem, t_init, max_iter)
            except (np.linalg.LinAlgError, RootFindingError) as e:
                logger.debug("Root finder %s raised: %s", method.value, e)
                continue
            if result.converged:
                return result
            logger.debug("Root finder %s did not converge from t_init=%s", method.value, t_init)
        return result or _preimage(complex(t_init), False, 0, RootMethod.NONE, float("nan"))


# Global solver instance
preimage_solver = PreimageSolver()


def _preimage(t, converged, iterations, method, residual) -> Preimage:
    t = complex(t)
    rho = bernstein_radius(t) if cmath.isfinite(t) else float("inf")
    return Preimage(t0=t, converged=converged, iterations=iterations,
                    method=method, rho=rho, residual=float(residual))


def _trim(coeffs: np.ndarray) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex)
    if c.size == 0:
        return c
    tol = 1e-14 * np.max(np.abs(c))
    last = len(c) - 1
    while last > 0 and abs(c[last]) <= tol:
        last -= 1
    return c[:last + 1]


def all_roots_companion(coefficients: np.ndarray, basis: Basis = Basis.LEGENDRE,
                        polish_steps: int = 2) -> List[complex]:
    """
    All roots of a polynomial given by its coefficients.

    Legendre input is converted to monomial form by sampling at Chebyshev
    points and refitting; each eigenvalue of the monomial companion matrix is
    then polished by Newton steps on the original coefficients.
    """
    basis = Basis(basis)
    c = _trim(coefficients)
    deg = len(c) - 1
    if deg < 1:
        raise RootFindingError("Polynomial of degree 0 has no roots",
                               {"coefficients": list(np.asarray(coefficients))})

    if basis == Basis.LEGENDRE:
        x = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
        vals = np.polynomial.legendre.legval(x, c)
        mono = np.linalg.solve(np.polynomial.polynomial.polyvander(x, deg).astype(complex), vals)

        def evaluate(t):
            return eval_poly_complex_with_derivative(c, t)
    else:
        mono = c
        dmono = np.polynomial.polynomial.polyder(c)

        def evaluate(t):
            return (np.polynomial.polynomial.polyval(t, c),
                    np.polynomial.polynomial.polyval(t, dmono))

    companion = np.zeros((deg, deg), dtype=complex)
    if deg > 1:
        companion[1:, :-1] = np.eye(deg - 1)
    companion[:, -1] = -mono[:-1] / mono[-1]
    roots = []
    for r in eigvals(companion):
        r = complex(r)
        for _ in range(polish_steps):
            f, df = evaluate(r)
            if df == 0:
                break
            candidate = r - complex(f) / complex(df)
            if abs(evaluate(candidate)[0]) <= abs(f):
                r = candidate
        roots.append(r)
    return roots


def newton_preimage_2d(panel: Panel, zeta: complex, cfg: QuadConfig) -> Preimage:
    """Newton on P_n[gamma](t) - zeta, started at the endpoint-frame image of zeta"""
    if panel.dim != 2:
        raise RootFindingError("newton_preimage_2d needs a planar panel")
    frame = endpoint_frame(panel)
    t_init = complex(frame.to_local(zeta))
    problem = PlanarPreimageProblem(panel.complex_coeffs, zeta, abs(frame.s0))
    return NewtonRootFinder().find(problem, t_init, cfg.newton_max_iter)


def initial_guess_3d(panel: Panel, x: np.ndarray) -> complex:
    """Root of the straight-line model through the two nodes nearest x"""
    dist = np.linalg.norm(panel.y - x[None, :], axis=1)
    j, k = np.argsort(dist)[:2]
    gj, gk = panel.y[j], panel.y[k]
    tj, tk = panel.t[j], panel.t[k]
    chord = gk - gj
    ratio = np.dot(x - gj, chord) / np.dot(chord, chord)
    real = tj + ratio * (tk - tj)
    modulus = abs(tk - tj) * dist[j] / np.linalg.norm(chord)
    imag = np.sqrt(max(modulus ** 2 - (real - tj) ** 2, 0.0))
    return complex(real, max(imag, 1e-10))


def root_3d(panel: Panel, x, cfg: QuadConfig) -> Preimage:
    """Root pair of R(t)^2 nearest the interval, stored with Im t0 >= 0"""
    if panel.dim != 3:
        raise RootFindingError("root_3d needs a space-curve panel")
    x = np.asarray(x, dtype=float)
    t_init = initial_guess_3d(panel, x)
    problem = SquaredDistanceProblem(panel.coeffs, x)
    result = preimage_solver.solve(problem, t_init, (RootMethod.NEWTON, RootMethod.MULLER), cfg)
    if result.method == RootMethod.MULLER and result.converged:
        fallback_counter.increment("muller")
    if result.t0.imag < 0:
        result.t0 = result.t0.conjugate()
    return result


def _planar_preimage(panel: Panel, zeta: complex, cfg: QuadConfig) -> Preimage:
    pre = newton_preimage_2d(panel, zeta, cfg)
    if not cfg.companion_fallback:
        return pre
    near_schwarz = (panel.t_star is not None
                    and bernstein_radius(panel.t_star) <= cfg.schwarz_factor * cfg.rho_eps)
    if pre.converged and not near_schwarz:
        return pre
    fallback_counter.increment("companion")
    logger.debug("Companion roots for zeta=%s (newton converged=%s, schwarz near=%s)",
                 zeta, pre.converged, near_schwarz)
    frame = endpoint_frame(panel)
    problem = PlanarPreimageProblem(panel.complex_coeffs, zeta, abs(frame.s0))
    alt = CompanionRootFinder().find(problem, complex(frame.to_local(zeta)), 0)
    return alt if alt.converged else pre


def classify_target(panel: Panel, target, cfg: QuadConfig) -> TargetClass:
    """Far, near with upsampled direct rule, or special quadrature"""
    if panel.dim == 2:
        zeta = complex(target[0], target[1]) if np.ndim(target) else complex(target)
        min_dist = float(np.min(np.abs(panel.tau - zeta)))
    else:
        x = np.asarray(target, dtype=float)
        min_dist = float(np.min(np.linalg.norm(panel.y - x[None, :], axis=1)))

    if min_dist >= cfg.distance_multiplier * panel.h:
        return TargetClass(TargetKind.FAR, None, min_dist)
    if min_dist <= 1e-14 * panel.h:
        raise OnCurveError(target, min_dist, "target coincides with a panel node")

    pre = _planar_preimage(panel, zeta, cfg) if panel.dim == 2 else root_3d(panel, x, cfg)
    if not pre.converged:
        fallback_counter.increment("root_failure")
        logger.warning("Root finding failed for target %s (panel [%g, %g]); using the direct rule",
                       target, panel.a, panel.b)
        return TargetClass(TargetKind.FAR, pre, min_dist)
    if abs(pre.t0.imag) <= 1e-14 and abs(pre.t0.real) <= 1.0:
        raise OnCurveError(target, min_dist, "preimage lies on the parameter interval")
    if pre.rho >= cfg.rho_eps:
        return TargetClass(TargetKind.FAR, pre, min_dist)
    if cfg.mode == UpsampleMode.UPSAMPLE_DIRECT and pre.rho >= cfg.direct_band_radius:
        return TargetClass(TargetKind.NEAR_DIRECT_UPSAMPLED, pre, min_dist)
    return TargetClass(TargetKind.SPECIAL, pre, min_dist)
