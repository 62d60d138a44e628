"""
Adaptive reference quadrature

Each panel is bisected in its standard parameter until every piece is at
least its own length away from the target; the pieces then get the plain
product rule. Geometry and density on a piece come from barycentric
interpolation of the parent panel's node data.
"""

import logging
import sys
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

# Add backend directory to path
backend_dir = Path(__file__).parent.parent
if str(backend_dir) not in sys.path:
    sys.path.insert(0, str(backend_dir))

from config import settings
from exceptions import ConfigurationError, OnCurveError
from services.async_wrapper import async_executor
from services.geometry import Panel, gauss_legendre
from services.interpolation import barycentric_interp
from services.kernels import KernelSplit
from services.specialquad import as_target, direct_sum

logger = logging.getLogger(__name__)

__all__ = ["AdaptiveStats", "adaptive_eval", "adaptive_field", "barycentric_interp"]


@dataclass
class AdaptiveStats:
    """
    Work counters of the adaptive reference quadrature.

    n_eval counts nodes on panels that needed at least one bisection;
    panels accepted as they are go to n_far_eval.
    """

    n_eval: int = 0
    n_far_eval: int = 0
    n_interp: int = 0
    max_depth: int = 0
    n_targets: int = 0
    t_eval: float = 0.0
    t_interp: float = 0.0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def merge(self, other: "AdaptiveStats"):
        with self._lock:
            self.n_eval += other.n_eval
            self.n_far_eval += other.n_far_eval
            self.n_interp += other.n_interp
            self.max_depth = max(self.max_depth, other.max_depth)
            self.n_targets += other.n_targets
            self.t_eval += other.t_eval
            self.t_interp += other.t_interp

    def to_dict(self) -> Dict[str, float]:
        return {
            "n_eval": self.n_eval,
            "n_far_eval": self.n_far_eval,
            "n_interp": self.n_interp,
            "max_depth": self.max_depth,
            "n_targets": self.n_targets,
            "t_eval": self.t_eval,
            "t_interp": self.t_interp,
        }


@dataclass
class _Leaves:
    points: List[np.ndarray] = field(default_factory=list)
    tangents: List[np.ndarray] = field(default_factory=list)
    weights: List[np.ndarray] = field(default_factory=list)
    density: List[np.ndarray] = field(default_factory=list)

    def add(self, y, dy, w, density):
        speed = np.linalg.norm(dy, axis=1)
        self.points.append(y)
        self.tangents.append(dy / speed[:, None])
        self.weights.append(w * speed)
        self.density.append(density)


def _refine_panel(panel: Panel, density: np.ndarray, x: np.ndarray, n: int,
                  max_depth: int, leaves: _Leaves, stats: AdaptiveStats):
    t, w = gauss_legendre(n)
    density = np.asarray(density)
    stack = [(-1.0, 1.0, 0)]
    while stack:
        alpha, beta, depth = stack.pop()
        half = 0.5 * (beta - alpha)
        if depth == 0 and n == panel.n:
            y, dy, dens = panel.y, panel.dy, density
        else:
            start = time.perf_counter()
            s = alpha + half * (t + 1.0)
            y = barycentric_interp(panel.y, panel.t, s)
            dy = barycentric_interp(panel.dy, panel.t, s) * half
            dens = barycentric_interp(density, panel.t, s)
            stats.t_interp += time.perf_counter() - start
            stats.n_interp += n
        h = float(np.dot(w, np.linalg.norm(dy, axis=1)))
        dist = float(np.min(np.linalg.norm(y - x[None, :], axis=1)))
        if dist >= h:
            stats.max_depth = max(stats.max_depth, depth)
            leaves.add(y, dy, w, dens)
            if depth == 0:
                stats.n_far_eval += n
            else:
                stats.n_eval += n
            continue
        if depth >= max_depth:
            raise OnCurveError(x, dist, f"adaptive refinement exceeded depth {max_depth}")
        mid = 0.5 * (alpha + beta)
        stack.append((mid, beta, depth + 1))
        stack.append((alpha, mid, depth + 1))


def adaptive_eval(panels: Sequence[Panel], target, split: KernelSplit, densities: Sequence[np.ndarray],
                  n: Optional[int] = None, stats: Optional[AdaptiveStats] = None,
                  max_depth: Optional[int] = None):
    """Split integral at one target by distance-driven bisection of every panel"""
    if len(densities) != len(panels):
        raise ConfigurationError("densities", len(densities), f"expected one array per panel ({len(panels)})")
    n = n or panels[0].n
    max_depth = max_depth or settings.quad.max_depth_adaptive
    x = as_target(target, panels[0].dim)

    local = AdaptiveStats()
    leaves = _Leaves()
    for panel, density in zip(panels, densities):
        _refine_panel(panel, density, x, n, max_depth, leaves, local)

    start = time.perf_counter()
    total = direct_sum(
        split,
        np.concatenate(leaves.points),
        np.concatenate(leaves.tangents),
        np.concatenate(leaves.weights),
        np.concatenate(leaves.density),
        x,
    )
    local.t_eval += time.perf_counter() - start
    local.n_targets += 1
    if stats is not None:
        stats.merge(local)
    return split.finalize(total)


def adaptive_field(panels: Sequence[Panel], targets, split: KernelSplit, densities: Sequence[np.ndarray],
                   n: Optional[int] = None, stats: Optional[AdaptiveStats] = None) -> np.ndarray:
    """adaptive_eval at many targets on the shared worker pool"""
    targets = np.asarray(targets)
    if panels[0].dim == 2 and np.iscomplexobj(targets):
        targets = np.column_stack([targets.real, targets.imag])
    targets = np.atleast_2d(np.asarray(targets, dtype=float))

    def run(chunk):
        local = AdaptiveStats()
        values = [adaptive_eval(panels, x, split, densities, n, local) for x in chunk]
        return values, local

    values = []
    for chunk_values, chunk_stats in async_executor.map_chunks(run, targets):
        values.extend(chunk_values)
        if stats is not None:
            stats.merge(chunk_stats)
    logger.debug("Adaptive reference for %s at %d targets", split.name, len(targets))
    return np.array(values)
