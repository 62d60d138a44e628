"""
Target-specific quadrature weights and the near-evaluation pipeline

Weight vectors are taken with respect to arc length: for a panel with node
samples g_j of a smooth function,

    sum_j lambda_j g_j  ~  int g(y) K_m(y, x) ds(y)

where K_m is one of the split kernels (see services.kernels). Far targets get
the plain product rule; near targets get Helsing-Ojala weights (planar
only) or singularity swap weights built from exact monomial integrals.
"""

import logging
import sys
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

# Add backend directory to path
backend_dir = Path(__file__).parent.parent
if str(backend_dir) not in sys.path:
    sys.path.insert(0, str(backend_dir))

from exceptions import ConfigurationError, OnCurveError, VandermondeError
from services.async_wrapper import async_executor
from services.geometry import Panel, endpoint_frame, upsample_panel
from services.interpolation import gl_interp_matrix
from services.kernels import KernelSplit, NodeData
from services.quadconfig import QuadConfig, Scheme, UpsampleMode
from services.recur2d import monomial_integrals_2d, winding_number
from services.recur3d import pvectors
from services.rootfind import Preimage, TargetKind, classify_target

logger = logging.getLogger(__name__)

__all__ = [
    "QuadConfig", "Scheme", "UpsampleMode", "WeightVector", "EvaluationStats",
    "vandermonde_solve", "direct_weights", "ho_weights_2d", "ssq_weights_2d",
    "ssq_weights_3d", "fold_weights", "direct_sum", "panel_contribution", "near_eval",
    "evaluate_field",
]

CHORD_NUDGE = 1e-13j


@dataclass
class WeightVector:
    """Weights for one (panel, target, kernel) triple"""

    values: np.ndarray
    power: Optional[int]    # None for the log kernel
    scheme: Scheme
    dim: int = 2

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def kernel_tag(self) -> str:
        return "log" if self.power is None else f"m{self.power}"

    def apply(self, samples: np.ndarray):
        """Weighted sum over nodes; samples may carry trailing dimensions"""
        return np.tensordot(self.values, np.asarray(samples), axes=(0, 0))


@dataclass
class EvaluationStats:
    """
    Counters and timings of a near-evaluation run.

    n_eval counts kernel evaluations on panels that needed upsampled or
    special weights; everything summed with the plain rule goes to
    n_far_eval.
    """

    n_eval: int = 0
    n_far_eval: int = 0
    n_targets: int = 0
    n_far: int = 0
    n_near_direct: int = 0
    n_special: int = 0
    t_weights: float = 0.0
    t_eval: float = 0.0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record(self, kind: TargetKind):
        if kind == TargetKind.FAR:
            self.n_far += 1
        elif kind == TargetKind.NEAR_DIRECT_UPSAMPLED:
            self.n_near_direct += 1
        else:
            self.n_special += 1

    def merge(self, other: "EvaluationStats"):
        with self._lock:
            self.n_eval += other.n_eval
            self.n_far_eval += other.n_far_eval
            self.n_targets += other.n_targets
            self.n_far += other.n_far
            self.n_near_direct += other.n_near_direct
            self.n_special += other.n_special
            self.t_weights += other.t_weights
            self.t_eval += other.t_eval

    def to_dict(self) -> Dict[str, float]:
        return {
            "n_eval": self.n_eval,
            "n_far_eval": self.n_far_eval,
            "n_targets": self.n_targets,
            "n_far": self.n_far,
            "n_near_direct": self.n_near_direct,
            "n_special": self.n_special,
            "t_weights": self.t_weights,
            "t_eval": self.t_eval,
        }


def vandermonde_solve(nodes: np.ndarray, rhs: np.ndarray, transposed: bool = False) -> np.ndarray:
    """
    Solve the monomial Vandermonde system A c = f, or A^T lam = p when
    transposed, where A[i, j] = nodes[i]**j.

    Bjorck-Pereyra recurrences, O(n^2). rhs may be a matrix whose columns
    are solved together.
    """
    x = np.asarray(nodes)
    b = np.array(rhs, dtype=np.result_type(x, np.asarray(rhs), float))
    count = len(x)
    if b.shape[0] != count:
        raise VandermondeError(f"{count} nodes but {b.shape[0]} right-hand side rows")
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    if np.any(diff == 0):
        raise VandermondeError("nodes must be distinct")

    vector = b.ndim == 1
    if vector:
        b = b[:, None]
    xc = x[:, None]
    deg = count - 1

    if transposed:
        for k in range(deg):
            b[k + 1:] -= x[k] * b[k:deg]
        for k in range(deg - 1, -1, -1):
            b[k + 1:] /= xc[k + 1:] - xc[:deg - k]
            b[k:deg] -= b[k + 1:]
    else:
        for k in range(deg):
            b[k + 1:] = (b[k + 1:] - b[k:deg]) / (xc[k + 1:] - xc[:deg - k])
        for k in range(deg - 1, -1, -1):
            b[k:deg] -= x[k] * b[k + 1:]
    return b[:, 0] if vector else b


def _kernel_values(panel: Panel, target, power: Optional[int]) -> np.ndarray:
    if panel.dim == 2:
        z = panel.tau - complex(target[0], target[1])
        if np.any(z == 0):
            raise OnCurveError(target, 0.0, "target coincides with a panel node")
        return np.log(z) if power is None else z ** (-power)
    r = np.linalg.norm(panel.y - np.asarray(target, dtype=float)[None, :], axis=1)
    if np.any(r == 0):
        raise OnCurveError(target, 0.0, "target coincides with a panel node")
    return r ** (-float(power))


def direct_weights(panel: Panel, target, power: Optional[int]) -> WeightVector:
    """lambda_j = w_j |g'(t_j)| K(x, y_j)"""
    values = panel.arc_weights * _kernel_values(panel, target, power)
    return WeightVector(values=values, power=power, scheme=Scheme.DIRECT, dim=panel.dim)


def ho_weights_2d(panel: Panel, zeta, power: Optional[int], cfg: Optional[QuadConfig] = None) -> WeightVector:
    """Helsing-Ojala weights: interpolation in the complex endpoint frame"""
    zeta = complex(zeta)
    frame = endpoint_frame(panel)
    z = complex(frame.to_local(zeta))
    if z.imag == 0 and abs(z.real) <= 1:
        z += CHORD_NUDGE
    nodes = frame.to_local(panel.tau)
    winding = winding_number(panel, zeta, frame)
    ints = monomial_integrals_2d(z, panel.n, m_max=power or 1, log=power is None, N=winding)
    rhs = ints.q if power is None else ints.p[power]
    lam = vandermonde_solve(nodes, rhs, transposed=True)

    s0 = frame.s0
    if power is None:
        lam_dtau = s0 * lam + panel.w * panel.dtau * np.log(s0)
    else:
        lam_dtau = s0 ** (1 - power) * lam
    values = lam_dtau * np.conj(panel.unit_tangent)
    return WeightVector(values=values, power=power, scheme=Scheme.HO, dim=2)


def _check_preimage(t0: complex, target):
    if abs(t0.imag) <= 1e-14 and abs(t0.real) <= 1.0:
        raise OnCurveError(target, None, f"preimage {t0} lies on the parameter interval")


def _continuous_log_ratio(panel: Panel, zeta: complex, t0: complex) -> np.ndarray:
    """log(Q(t_j)/(t_j - t0)) continuous along the panel, matching log(Q) at the first node"""
    q = panel.tau - zeta
    d = panel.t - t0
    ratio = q / d
    logs = np.log(np.abs(ratio)) + 1j * np.unwrap(np.angle(ratio))
    shift = np.angle(q[0]) - np.angle(d[0]) - logs[0].imag
    return logs + 2j * np.pi * np.round(shift / (2 * np.pi))


def ssq_weights_2d(panel: Panel, zeta, preimage: Preimage, power: Optional[int],
                   cfg: Optional[QuadConfig] = None) -> WeightVector:
    """Singularity swap weights for a planar panel"""
    zeta = complex(zeta)
    t0 = complex(preimage.t0)
    _check_preimage(t0, zeta)
    ints = monomial_integrals_2d(t0, panel.n, m_max=power or 1, log=power is None)
    rhs = ints.q if power is None else ints.p[power]
    lam = vandermonde_solve(panel.t, rhs, transposed=True)

    if power is None:
        values = panel.speed * (lam + panel.w * _continuous_log_ratio(panel, zeta, t0))
    else:
        values = panel.speed * lam * ((panel.t - t0) / (panel.tau - zeta)) ** power
    return WeightVector(values=values, power=power, scheme=Scheme.SSQ, dim=2)


def ssq_weights_3d(panel: Panel, x, preimage: Preimage, power: int,
                   cfg: Optional[QuadConfig] = None) -> WeightVector:
    """Singularity swap weights for 1/|x - y|^m on a space-curve panel, m in {1, 3, 5}"""
    if power not in (1, 3, 5):
        raise ConfigurationError("power", power, "space-curve kernels use m = 1, 3 or 5")
    x = np.asarray(x, dtype=float)
    t0 = complex(preimage.t0)
    _check_preimage(t0, x)
    rhs = pvectors(t0, panel.n, m_max=power).get(power)
    lam = vandermonde_solve(panel.t, rhs, transposed=True)
    model = np.abs(panel.t - t0) ** 2
    true = np.sum((panel.y - x[None, :]) ** 2, axis=1)
    values = lam * panel.speed * (model / true) ** (0.5 * power)
    return WeightVector(values=values, power=power, scheme=Scheme.SSQ, dim=3)


def fold_weights(weights, n: int) -> np.ndarray:
    """Map weights on an upsampled node set back onto the n original nodes"""
    values = weights.values if isinstance(weights, WeightVector) else np.asarray(weights)
    if len(values) == n:
        return values.copy()
    return gl_interp_matrix(n, len(values)).T @ values


def _node_data(panel: Panel, density: np.ndarray, target) -> NodeData:
    return NodeData(
        points=panel.y,
        tangents=panel.dy / panel.speed[:, None],
        density=np.asarray(density),
        target=np.asarray(target, dtype=float),
    )


def _assemble(split: KernelSplit, data: NodeData, weights: Dict[Optional[int], WeightVector]):
    total = split.zero()
    for term in split.terms:
        total = total + term.combine(weights[term.power].apply(term.prefactor(data)))
    return total


def as_target(target, dim: int) -> np.ndarray:
    if dim == 2 and np.ndim(target) == 0:
        z = complex(target)
        return np.array([z.real, z.imag])
    return np.asarray(target, dtype=float)


def panel_contribution(panel: Panel, target, split: KernelSplit, density: np.ndarray,
                       cfg: QuadConfig, stats: Optional[EvaluationStats] = None):
    """Contribution of one panel to the split integral at one target"""
    stats = stats if stats is not None else EvaluationStats()
    x = as_target(target, panel.dim)
    start = time.perf_counter()

    if cfg.scheme == Scheme.DIRECT:
        kind, preimage, work = TargetKind.FAR, None, panel
    else:
        tc = classify_target(panel, x, cfg)
        kind, preimage, work = tc.kind, tc.preimage, panel
        if kind == TargetKind.NEAR_DIRECT_UPSAMPLED or (
                kind == TargetKind.SPECIAL and (panel.dim == 3 or cfg.mode != UpsampleMode.NONE)):
            work = upsample_panel(panel, cfg.upsampled_n)
            density = panel.resample(density, cfg.upsampled_n)
    stats.record(kind)

    weights = {}
    for power in split.powers:
        if kind != TargetKind.SPECIAL:
            weights[power] = direct_weights(work, x, power)
        elif panel.dim == 3:
            weights[power] = ssq_weights_3d(work, x, preimage, power, cfg)
        elif cfg.scheme == Scheme.HO:
            weights[power] = ho_weights_2d(work, complex(x[0], x[1]), power, cfg)
        else:
            weights[power] = ssq_weights_2d(work, complex(x[0], x[1]), preimage, power, cfg)
    mid = time.perf_counter()
    value = _assemble(split, _node_data(work, density, x), weights)
    stats.t_weights += mid - start
    stats.t_eval += time.perf_counter() - mid
    if kind == TargetKind.FAR:
        stats.n_far_eval += work.n
    else:
        stats.n_eval += work.n
    return value


def direct_sum(split: KernelSplit, points: np.ndarray, tangents: np.ndarray, arc_weights: np.ndarray,
               density: np.ndarray, target):
    """Plain product rule over loose nodes, before finalize"""
    x = np.asarray(target, dtype=float)
    data = NodeData(points=points, tangents=tangents, density=density, target=x)
    if split.dim == 2:
        z = points[:, 0] + 1j * points[:, 1] - complex(x[0], x[1])
        near = np.abs(z)
    else:
        near = np.linalg.norm(points - x[None, :], axis=1)
    if np.any(near == 0):
        raise OnCurveError(x, 0.0, "target coincides with a quadrature node")
    total = split.zero()
    kernels = {}
    for term in split.terms:
        if term.power not in kernels:
            if split.dim == 2:
                k = np.log(z) if term.is_log else z ** (-term.power)
            else:
                k = near ** (-float(term.power))
            kernels[term.power] = arc_weights * k
        total = total + term.combine(np.tensordot(kernels[term.power], term.prefactor(data), axes=(0, 0)))
    return total


def _validate(panels: Sequence[Panel], split: KernelSplit, densities: Sequence[np.ndarray], cfg: QuadConfig):
    if not panels:
        raise ConfigurationError("panels", 0, "at least one panel is required")
    if len(densities) != len(panels):
        raise ConfigurationError("densities", len(densities), f"expected one array per panel ({len(panels)})")
    if split.dim != panels[0].dim:
        raise ConfigurationError("split", split.name, f"kernel is {split.dim}D but panels are {panels[0].dim}D")
    if panels[0].dim == 3 and cfg.scheme == Scheme.HO:
        raise ConfigurationError("scheme", cfg.scheme.value, "Helsing-Ojala weights exist for planar panels only")


def near_eval(panels: Sequence[Panel], target, split: KernelSplit, densities: Sequence[np.ndarray],
              cfg: Optional[QuadConfig] = None, stats: Optional[EvaluationStats] = None):
    """Split integral at one target, summed over all panels with per-panel classification"""
    cfg = cfg or QuadConfig()
    _validate(panels, split, densities, cfg)
    local = EvaluationStats()
    total = split.zero()
    for panel, density in zip(panels, densities):
        total = total + panel_contribution(panel, target, split, density, cfg, local)
    local.n_targets += 1
    if stats is not None:
        stats.merge(local)
    return split.finalize(total)


class _FieldEvaluator:
    """Direct sum over far nodes plus special contributions from candidate panels"""

    def __init__(self, panels, split, densities, cfg):
        self.panels = list(panels)
        self.split = split
        self.cfg = cfg
        self.densities = [np.asarray(d) for d in densities]
        self.points = np.concatenate([p.y for p in self.panels])
        self.tangents = np.concatenate([p.dy / p.speed[:, None] for p in self.panels])
        self.arc_weights = np.concatenate([p.arc_weights for p in self.panels])
        self.density = np.concatenate(self.densities)
        self.owner = np.concatenate([np.full(p.n, i) for i, p in enumerate(self.panels)])
        self.offsets = np.cumsum([0] + [p.n for p in self.panels])
        self.tree = cKDTree(self.points)
        self.radius = cfg.distance_multiplier * max(p.h for p in self.panels)
        self.dim = self.panels[0].dim

    def _direct(self, x: np.ndarray, mask: np.ndarray):
        return direct_sum(self.split, self.points[mask], self.tangents[mask],
                          self.arc_weights[mask], self.density[mask], x)

    def candidates(self, x: np.ndarray) -> List[int]:
        if self.cfg.scheme == Scheme.DIRECT:
            return []
        nodes = self.tree.query_ball_point(x, self.radius)
        return sorted(set(self.owner[nodes].tolist()))

    def evaluate_chunk(self, chunk):
        stats = EvaluationStats()
        out = []
        for x in chunk:
            near = self.candidates(x)
            mask = np.ones(len(self.points), dtype=bool)
            for i in near:
                mask[self.offsets[i]:self.offsets[i + 1]] = False
            start = time.perf_counter()
            total = self._direct(x, mask) if np.any(mask) else self.split.zero()
            stats.t_eval += time.perf_counter() - start
            stats.n_far_eval += int(np.count_nonzero(mask))
            for i in near:
                total = total + panel_contribution(self.panels[i], x, self.split, self.densities[i],
                                                   self.cfg, stats)
            stats.n_targets += 1
            out.append(self.split.finalize(total))
        return out, stats


def evaluate_field(panels: Sequence[Panel], targets, split: KernelSplit, densities: Sequence[np.ndarray],
                   cfg: Optional[QuadConfig] = None, stats: Optional[EvaluationStats] = None) -> np.ndarray:
    """
    Split integral at many targets.

    Far panels are summed directly in one vectorized pass per target; panels
    with a node within distance_multiplier * h of the target (found with a
    k-d tree) go through the per-panel pipeline. Targets are split into
    chunks and evaluated on the shared worker pool.
    """
    cfg = cfg or QuadConfig()
    _validate(panels, split, densities, cfg)
    targets = np.asarray(targets)
    if panels[0].dim == 2 and np.iscomplexobj(targets):
        targets = np.column_stack([targets.real, targets.imag])
    targets = np.atleast_2d(np.asarray(targets, dtype=float))

    evaluator = _FieldEvaluator(panels, split, densities, cfg)
    results = async_executor.map_chunks(evaluator.evaluate_chunk, targets)
    values = []
    for chunk_values, chunk_stats in results:
        values.extend(chunk_values)
        if stats is not None:
            stats.merge(chunk_stats)
    logger.debug("Evaluated %s at %d targets over %d panels", split.name, len(targets), len(panels))
    return np.array(values)
