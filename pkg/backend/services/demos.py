"""
Experiment drivers: parabola panel, starfish Dirichlet problem, slender fiber

Each driver builds its geometry, evaluates a layer potential with the
near-evaluation pipeline and measures relative errors against an exact or
adaptive reference. Results are ErrorGrid and BenchRecord values that the
writers below turn into CSV or JSON.
"""

import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, solve

# Add backend directory to path
backend_dir = Path(__file__).parent.parent
if str(backend_dir) not in sys.path:
    sys.path.insert(0, str(backend_dir))

from config import settings
from exceptions import ConfigurationError, QuadratureError
from services.geometry import (
    Panel,
    ParamCurve,
    adaptive_panelize,
    build_panel,
    fourier_curve_3d,
    parabola_curve,
    starfish_curve,
)
from services.kernels import laplace_dlp_2d, slender_body_split
from services.quadconfig import QuadConfig, Scheme, UpsampleMode
from services.refquad import AdaptiveStats, adaptive_field
from services.rootfind import classify_target, fallback_counter
from services.specialquad import EvaluationStats, evaluate_field, ssq_weights_2d, ssq_weights_3d

logger = logging.getLogger(__name__)

STARFISH_SOURCE = 3.0 + 3.0j
STARFISH_NEAR_RE = (1.66 * math.pi, 1.76 * math.pi)
STARFISH_NEAR_IM_MAX = 0.15
SLENDER_SLICE = (-1.4, 1.4, 0.25)
SLENDER_REFERENCE_N = 18
SLENDER_REFERENCE_EPS = 5e-14
BENCH_MIN_RATE = 1e5


@dataclass
class ErrorGrid:
    """Pointwise relative errors on a grid of targets"""

    points: np.ndarray      # (N, 2) or (N, 3)
    errors: np.ndarray      # (N,)
    scheme: str
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return float(np.max(self.errors)) if len(self.errors) else 0.0

    def summary(self) -> Dict[str, Any]:
        return {
            "scheme": self.scheme,
            "points": int(len(self.errors)),
            "max_error": self.max_error,
            "median_error": float(np.median(self.errors)) if len(self.errors) else 0.0,
            **self.meta,
        }


@dataclass
class BenchRecord:
    """One row of a near-evaluation benchmark"""

    d: Optional[float]
    eps_panel: Optional[float]
    scheme: str
    n_eval: int
    t_eval: float
    t_weights: float
    max_error: Optional[float]
    targets: int
    seed: int
    t_interp: float = 0.0
    rate: Optional[float] = None
    n_far_eval: int = 0


def parse_grid(text: str) -> Tuple[int, int]:
    """'WxH' -> (W, H)"""
    try:
        width, height = (int(part) for part in str(text).lower().split("x"))
    except ValueError:
        raise ConfigurationError("grid", text, "expected WxH, e.g. 60x60")
    if width < 1 or height < 1:
        raise ConfigurationError("grid", text, "grid dimensions must be positive")
    return width, height


def rectangular_grid(xlim: Tuple[float, float], ylim: Tuple[float, float], shape: Tuple[int, int]) -> np.ndarray:
    """Uniform W x H grid as an (W*H, 2) array"""
    xs = np.linspace(xlim[0], xlim[1], shape[0])
    ys = np.linspace(ylim[0], ylim[1], shape[1])
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def starfish_interior(points: np.ndarray, amplitude: float = 0.3, arms: int = 5) -> np.ndarray:
    """Mask of points strictly inside the starfish r < 1 + a cos(arms theta)"""
    r = np.hypot(points[:, 0], points[:, 1])
    theta = np.arctan2(points[:, 1], points[:, 0])
    return r < 1.0 + amplitude * np.cos(arms * theta)


def graded_boundary_grid(curve: ParamCurve, re_range: Tuple[float, float], im_range: Tuple[float, float],
                         shape: Tuple[int, int], logarithmic: bool = True) -> np.ndarray:
    """
    Images gamma(t) of a rectangle of complex parameters.

    Im t > 0 lies inside a counterclockwise curve; with logarithmic=True the
    Im t samples are log-spaced so the grid is graded toward the boundary.
    """
    if curve.complex_func is None:
        raise ConfigurationError("curve", curve.name, "needs an analytic continuation")
    re = np.linspace(re_range[0], re_range[1], shape[0])
    if logarithmic:
        im = np.logspace(math.log10(im_range[0]), math.log10(im_range[1]), shape[1])
    else:
        im = np.linspace(im_range[0], im_range[1], shape[1])
    t = (re[:, None] + 1j * im[None, :]).ravel()
    z = curve.complex_func(t)
    return np.column_stack([z.real, z.imag])


def xz_slice(limits: Tuple[float, float, float], shape: Tuple[int, int]) -> np.ndarray:
    """Points (x, y0, z) on a square in the plane y = y0"""
    lo, hi, y0 = limits
    xz = rectangular_grid((lo, hi), (lo, hi), shape)
    return np.column_stack([xz[:, 0], np.full(len(xz), y0), xz[:, 1]])


def relative_errors(values: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """|u - u_ref| normalized by max |u_ref| over the grid"""
    values = np.asarray(values)
    reference = np.asarray(reference)
    if reference.ndim == 2:
        diff = np.linalg.norm(values - reference, axis=1)
        scale = np.max(np.linalg.norm(reference, axis=1))
    else:
        diff = np.abs(values - reference)
        scale = np.max(np.abs(reference))
    return diff / scale if scale > 0 else diff


def nodes_of(panels: Sequence[Panel]) -> Tuple[np.ndarray, np.ndarray]:
    """Concatenated node points and arc-length weights"""
    return np.concatenate([p.y for p in panels]), np.concatenate([p.arc_weights for p in panels])


def split_by_panel(values: np.ndarray, panels: Sequence[Panel]) -> List[np.ndarray]:
    offsets = np.cumsum([0] + [p.n for p in panels])
    return [values[offsets[i]:offsets[i + 1]] for i in range(len(panels))]


def dlp_matrix(panels: Sequence[Panel]) -> np.ndarray:
    """
    Nystrom matrix of the normalized double layer operator on the curve.

    Off-diagonal entries are the plain product rule; the diagonal is the
    smooth on-curve limit -curvature / (4 pi) times the node weight.
    """
    points, weights = nodes_of(panels)
    tangents = np.concatenate([p.dy / p.speed[:, None] for p in panels])
    normals = np.column_stack([-tangents[:, 1], tangents[:, 0]])
    curvature = np.concatenate([p.curvature for p in panels])

    r = points[None, :, :] - points[:, None, :]
    r2 = np.sum(r * r, axis=2)
    np.fill_diagonal(r2, 1.0)
    mat = np.sum(r * normals[None, :, :], axis=2) / r2 * weights[None, :] / (2.0 * math.pi)
    np.fill_diagonal(mat, -curvature * weights / (4.0 * math.pi))
    return mat


def solve_interior_dirichlet(panels: Sequence[Panel], boundary_values: np.ndarray) -> np.ndarray:
    """Density rho with (-1/2 + D) rho = boundary_values"""
    mat = dlp_matrix(panels) - 0.5 * np.eye(len(boundary_values))
    try:
        return solve(mat, boundary_values)
    except (LinAlgError, ValueError) as e:
        raise QuadratureError(f"Nystrom solve failed: {e}", {"size": len(boundary_values)})


def starfish_exact(points: np.ndarray) -> np.ndarray:
    """log|3 + 3i - zeta|, harmonic inside the starfish"""
    return np.log(np.abs(STARFISH_SOURCE - (points[:, 0] + 1j * points[:, 1])))


def demo_parabola(k: float, n: int = 16, scheme: Scheme = Scheme.SSQ, grid: Optional[str] = None,
                  mode: UpsampleMode = UpsampleMode.NONE,
                  xlim: Tuple[float, float] = (-1.5, 1.5),
                  ylim: Tuple[float, float] = (-1.5, 1.5)) -> ErrorGrid:
    """
    Double layer potential of the density y1 * y2 on the panel (t, k t^2).

    Special quadrature is applied across the whole grid, well beyond where
    the plain rule is already accurate.
    """
    if k < 0:
        raise ConfigurationError("k", k, "curvature parameter must be nonnegative")
    shape = parse_grid(grid or settings.demo.grid)
    cfg = QuadConfig(n=n, scheme=scheme, mode=mode, critical_radius=1e6, distance_multiplier=1e6)
    panel = build_panel(parabola_curve(k), (-1.0, 1.0), n)
    density = [panel.y[:, 0] * panel.y[:, 1]]
    split = laplace_dlp_2d()

    points = rectangular_grid(xlim, ylim, shape)
    on_curve = (np.abs(points[:, 1] - k * points[:, 0] ** 2) < 1e-12) & (np.abs(points[:, 0]) <= 1.0)
    points = points[~on_curve]

    logger.info("Parabola k=%g n=%d scheme=%s on %d points", k, n, cfg.scheme.value, len(points))
    stats = EvaluationStats()
    values = evaluate_field([panel], points, split, density, cfg, stats)
    reference = adaptive_field([panel], points, split, density)
    return ErrorGrid(
        points=points,
        errors=relative_errors(values, reference),
        scheme=cfg.scheme.value,
        meta={"demo": "parabola", "k": k, "n": n, "mode": cfg.mode.value, **stats.to_dict()},
    )


def demo_starfish(eps_panel: float = 1e-6, mode: UpsampleMode = UpsampleMode.UPSAMPLE,
                  grid: Optional[str] = None, scheme: Scheme = Scheme.SSQ, n: int = 16,
                  region: str = "global", near_min: float = 1e-3,
                  critical_radius: Optional[float] = None) -> ErrorGrid:
    """
    Interior Dirichlet problem on the starfish with exact solution
    log|3 + 3i - zeta|, solved through a double layer density.

    region is "global" (uniform grid over the domain) or "near" (images of
    a complex parameter rectangle graded toward the boundary down to
    distance near_min).
    """
    shape = parse_grid(grid or settings.demo.grid)
    if critical_radius is None:
        critical_radius = 1.8 if eps_panel >= 1e-8 else 3.0
    cfg = QuadConfig(n=n, mode=mode, scheme=scheme, critical_radius=critical_radius)
    curve = starfish_curve()
    panels = adaptive_panelize(curve, eps_panel, n)
    points, _ = nodes_of(panels)
    rho = solve_interior_dirichlet(panels, starfish_exact(points))
    logger.info("Starfish eps_panel=%g: %d panels, density solved", eps_panel, len(panels))

    if region == "global":
        targets = rectangular_grid((-1.4, 1.4), (-1.4, 1.4), shape)
        targets = targets[starfish_interior(targets)]
    elif region == "near":
        targets = graded_boundary_grid(curve, STARFISH_NEAR_RE, (near_min, STARFISH_NEAR_IM_MAX),
                                       shape, logarithmic=near_min < 1e-3)
    else:
        raise ConfigurationError("region", region, "expected global or near")

    stats = EvaluationStats()
    values = evaluate_field(panels, targets, laplace_dlp_2d(normalized=True),
                            split_by_panel(rho, panels), cfg, stats)
    return ErrorGrid(
        points=targets,
        errors=relative_errors(values, starfish_exact(targets)),
        scheme=cfg.scheme.value,
        meta={"demo": "starfish", "region": region, "eps_panel": eps_panel, "panels": len(panels),
              "mode": cfg.mode.value, "rho_eps": cfg.rho_eps, **stats.to_dict()},
    )


def _random_targets_at_distance(curve: ParamCurve, d: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Curve point plus a random direction in its normal plane, scaled to d"""
    t = rng.uniform(curve.domain[0], curve.domain[1], count)
    base = curve.evaluate(t)
    tangent = curve.derivative(t)
    tangent /= np.linalg.norm(tangent, axis=1)[:, None]
    v = rng.standard_normal((count, 3))
    v -= np.sum(v * tangent, axis=1)[:, None] * tangent
    v /= np.linalg.norm(v, axis=1)[:, None]
    return base + d * v


def demo_slender(eps_panel: float = 1e-10, distances: Sequence[float] = (1e-2, 1e-3, 1e-4),
                 targets: int = 100, seed: Optional[int] = None, grid: Optional[str] = None,
                 n: int = 16, eps: Optional[float] = None,
                 with_slice: bool = True) -> Tuple[List[BenchRecord], Optional[ErrorGrid]]:
    """
    Slender-body velocity around the closed Fourier fiber with force f(y) = y.

    For every distance d, random targets at distance d are evaluated with
    the singularity swap pipeline and with adaptive quadrature on the same
    panels; both are compared with adaptive quadrature on a finer
    18-point reference discretization.
    """
    seed = settings.demo.seed if seed is None else seed
    eps = settings.demo.slender_radius if eps is None else eps
    rng = np.random.default_rng(seed)
    curve = fourier_curve_3d()
    split = slender_body_split(eps)
    cfg = QuadConfig(n=n, mode=UpsampleMode.UPSAMPLE, critical_radius=3.0)

    panels = adaptive_panelize(curve, eps_panel, n)
    ref_panels = adaptive_panelize(curve, SLENDER_REFERENCE_EPS, SLENDER_REFERENCE_N)
    force = [p.y for p in panels]
    ref_force = [p.y for p in ref_panels]
    logger.info("Slender fiber: %d panels (eps_panel=%g), %d reference panels",
                len(panels), eps_panel, len(ref_panels))

    records = []
    for d in distances:
        x = _random_targets_at_distance(curve, d, targets, rng)
        reference = adaptive_field(ref_panels, x, split, ref_force)

        ssq_stats = EvaluationStats()
        u_ssq = evaluate_field(panels, x, split, force, cfg, ssq_stats)
        ada_stats = AdaptiveStats()
        u_ada = adaptive_field(panels, x, split, force, stats=ada_stats)

        records.append(BenchRecord(
            d=d, eps_panel=eps_panel, scheme="ssq", n_eval=ssq_stats.n_eval, n_far_eval=ssq_stats.n_far_eval,
            t_eval=ssq_stats.t_eval, t_weights=ssq_stats.t_weights,
            max_error=float(np.max(relative_errors(u_ssq, reference))), targets=targets, seed=seed,
        ))
        records.append(BenchRecord(
            d=d, eps_panel=eps_panel, scheme="adaptive", n_eval=ada_stats.n_eval, n_far_eval=ada_stats.n_far_eval,
            t_eval=ada_stats.t_eval, t_weights=0.0, t_interp=ada_stats.t_interp,
            max_error=float(np.max(relative_errors(u_ada, reference))), targets=targets, seed=seed,
        ))
        logger.info("d=%g: ssq err %.2e (N_eval %d), adaptive err %.2e (N_eval %d), ratio %.1f",
                    d, records[-2].max_error, ssq_stats.n_eval, records[-1].max_error, ada_stats.n_eval,
                    ada_stats.n_eval / max(ssq_stats.n_eval, 1))

    slice_grid = None
    if with_slice:
        pts = xz_slice(SLENDER_SLICE, parse_grid(grid or settings.demo.grid))
        stats = EvaluationStats()
        u = evaluate_field(panels, pts, split, force, cfg, stats)
        reference = adaptive_field(ref_panels, pts, split, ref_force)
        slice_grid = ErrorGrid(
            points=pts,
            errors=relative_errors(u, reference),
            scheme="ssq",
            meta={"demo": "slender", "eps_panel": eps_panel, "panels": len(panels), "eps": eps,
                  "rho_eps": cfg.rho_eps, **stats.to_dict()},
        )
    return records, slice_grid


def bench(n: int = 16, targets: int = 2000, seed: Optional[int] = None, dim: int = 2) -> BenchRecord:
    """
    Throughput of root finding plus weight computation for near targets.

    Targets are drawn inside the Bernstein ellipse of the critical radius,
    so every one is classified special.
    """
    seed = settings.demo.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    cfg = QuadConfig(n=n, mode=UpsampleMode.NONE)
    if dim == 2:
        curve = parabola_curve(0.3)
    elif dim == 3:
        curve = ParamCurve(
            dim=3,
            func=lambda t: np.column_stack([t, 0.3 * t ** 2, 0.2 * t ** 3]),
            deriv=lambda t: np.column_stack([np.ones_like(t), 0.6 * t, 0.6 * t ** 2]),
            domain=(-1.0, 1.0),
            name="twisted",
        )
    else:
        raise ConfigurationError("dim", dim, "expected 2 or 3")
    panel = build_panel(curve, (-1.0, 1.0), n)

    # targets at random parameters inside the Bernstein ellipse, lifted off the curve
    rho = rng.uniform(1.05, min(cfg.rho_eps, 2.0), targets)
    theta = rng.uniform(0.1, math.pi - 0.1, targets)
    t_target = 0.5 * (rho * np.exp(1j * theta) + np.exp(-1j * theta) / rho)
    base = curve.evaluate(t_target.real)
    offset = t_target.imag * np.linalg.norm(curve.derivative(t_target.real), axis=1)
    if dim == 2:
        normal = curve.derivative(t_target.real)[:, ::-1] * np.array([-1.0, 1.0])
    else:
        normal = np.cross(curve.derivative(t_target.real), np.array([0.0, 0.0, 1.0]))
    normal /= np.linalg.norm(normal, axis=1)[:, None]
    points = base + offset[:, None] * normal

    start = time.perf_counter()
    done = 0
    for x in points:
        tc = classify_target(panel, x, cfg)
        if tc.preimage is None or not tc.preimage.converged:
            continue
        if dim == 2:
            ssq_weights_2d(panel, complex(x[0], x[1]), tc.preimage, 1, cfg)
        else:
            ssq_weights_3d(panel, x, tc.preimage, 1, cfg)
        done += 1
    elapsed = time.perf_counter() - start
    rate = done / elapsed if elapsed > 0 else float("inf")
    if rate < BENCH_MIN_RATE:
        logger.warning("Weight throughput %.3g targets/s is below %.0e targets/s", rate, BENCH_MIN_RATE)
    logger.info("Computed %d weight sets in %.3fs (%d root failures so far)",
                done, elapsed, fallback_counter.get("root_failure"))
    return BenchRecord(
        d=None, eps_panel=None, scheme="ssq", n_eval=done * n, t_eval=0.0, t_weights=elapsed,
        max_error=None, targets=done, seed=seed, rate=rate,
    )


def _default_path(name: str, suffix: str) -> Path:
    out = Path(settings.demo.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / f"{name}.{suffix}"


def write_grid_csv(grid: ErrorGrid, path: Optional[Path] = None) -> Path:
    """CSV with header x,y[,z],E_rel"""
    path = Path(path) if path else _default_path(grid.meta.get("demo", "grid"), "csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = ["x", "y", "z"][:grid.points.shape[1]] + ["E_rel"]
    data = np.column_stack([grid.points, grid.errors])
    np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")
    logger.info("Wrote %d rows to %s", len(data), path)
    return path


def write_grid_json(grid: ErrorGrid, path: Optional[Path] = None) -> Path:
    path = Path(path) if path else _default_path(grid.meta.get("demo", "grid"), "json")
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {**grid.summary(), "points": grid.points.tolist(), "errors": grid.errors.tolist()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
    return path


def write_records_json(records: Sequence[BenchRecord], path: Optional[Path] = None) -> Path:
    """JSON array of BenchRecord objects"""
    path = Path(path) if path else _default_path("bench", "json")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([asdict(r) for r in records], fh, indent=2)
    logger.info("Wrote %d records to %s", len(records), path)
    return path


def write_records_csv(records: Sequence[BenchRecord], path: Optional[Path] = None) -> Path:
    path = Path(path) if path else _default_path("bench", "csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(asdict(records[0]).keys()) if records else []
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(names) + "\n")
        for record in records:
            row = asdict(record)
            fh.write(",".join("" if row[k] is None else str(row[k]) for k in names) + "\n")
    return path
