"""
Kernel splits and real-variable reference kernels

A split writes a kernel integral as a sum of terms

    scale * post( int prefactor(y) * K_m(y, x) ds(y) )

with K_m = 1/(tau - zeta)^m or log(tau - zeta) for planar curves and
K_m = 1/|x - y|^m for space curves. Prefactors are smooth functions of the
node data, so the special quadrature only ever sees K_m.
"""

import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Tuple

import numpy as np

# Add backend directory to path
backend_dir = Path(__file__).parent.parent
if str(backend_dir) not in sys.path:
    sys.path.insert(0, str(backend_dir))

from exceptions import GeometryError


class PostMap(Enum):
    """Map applied to the complex integral of a split term"""
    NEG_IMAG = "neg_imag"
    REAL = "real"
    CONJ = "conj"
    IDENTITY = "identity"

    def apply(self, value):
        if self == PostMap.NEG_IMAG:
            return -np.imag(value)
        if self == PostMap.REAL:
            return np.real(value)
        if self == PostMap.CONJ:
            return np.conj(value)
        return value


class KernelOutput(Enum):
    """Shape of the assembled kernel value"""
    REAL = "real"          # real scalar
    COMPLEX = "complex"    # planar vector as x + iy
    VECTOR = "vector"      # real 3-vector


@dataclass
class NodeData:
    """Per-node inputs to split prefactors"""

    points: np.ndarray      # (n, d)
    tangents: np.ndarray    # (n, d), unit
    density: np.ndarray     # (n,), (n, 2) or (n, 3); planar vectors may be complex (n,)
    target: np.ndarray      # (d,)

    @property
    def tau(self) -> np.ndarray:
        return self.points[:, 0] + 1j * self.points[:, 1]

    @property
    def zeta(self) -> complex:
        return complex(self.target[0], self.target[1])

    @property
    def unit_tangent(self) -> np.ndarray:
        return self.tangents[:, 0] + 1j * self.tangents[:, 1]

    @property
    def normal(self) -> np.ndarray:
        return 1j * self.unit_tangent

    @property
    def complex_density(self) -> np.ndarray:
        """Planar vector density as f1 + i f2"""
        f = np.asarray(self.density)
        if f.ndim == 2:
            return f[:, 0] + 1j * f[:, 1]
        return f.astype(complex)

    @property
    def separation(self) -> np.ndarray:
        """R = x - y at every node, (n, d)"""
        return np.asarray(self.target)[None, :] - self.points


@dataclass(frozen=True)
class SplitTerm:
    """One term of a kernel split; power None means the logarithmic kernel"""

    power: Optional[int]
    prefactor: Callable[[NodeData], np.ndarray]
    post: PostMap = PostMap.IDENTITY
    scale: complex = 1.0

    @property
    def is_log(self) -> bool:
        return self.power is None

    @property
    def tag(self) -> str:
        return "log" if self.is_log else f"m{self.power}"

    def combine(self, raw):
        """scale * post(raw)"""
        return self.scale * self.post.apply(raw)


@dataclass(frozen=True)
class KernelSplit:
    """A kernel written as a sum of split terms"""

    dim: int
    terms: Tuple[SplitTerm, ...]
    name: str = "kernel"
    output: KernelOutput = KernelOutput.REAL

    @property
    def powers(self) -> Tuple[Optional[int], ...]:
        """Distinct kernel tags used by the terms, in order of first use"""
        seen = []
        for term in self.terms:
            if term.power not in seen:
                seen.append(term.power)
        return tuple(seen)

    def finalize(self, total):
        if self.output == KernelOutput.REAL:
            return np.real(total)
        if self.output == KernelOutput.VECTOR:
            return np.real(np.asarray(total))
        return complex(total)

    def zero(self):
        if self.output == KernelOutput.VECTOR:
            return np.zeros(self.dim)
        return 0j


@dataclass(frozen=True)
class SlenderBodySplit(KernelSplit):
    """Stokeslet plus doublet with fiber radius eps, as I1 + I3 + I5"""

    eps: float = 0.0


# Planar splits

def laplace_dlp_2d(normalized: bool = False) -> KernelSplit:
    """
    Double layer potential int rho (y - x).n / |y - x|^2 ds = -Im int rho dtau / (tau - zeta)

    With normalized=True the value is divided by 2 pi, so a constant unit
    density gives -1 inside a counterclockwise curve.
    """
    scale = 1.0 / (2.0 * np.pi) if normalized else 1.0
    return KernelSplit(
        dim=2,
        terms=(SplitTerm(1, lambda d: d.density * d.unit_tangent, PostMap.NEG_IMAG, scale),),
        name="laplace_dlp" + ("_normalized" if normalized else ""),
    )


def laplace_slp_log_2d() -> KernelSplit:
    """int rho log|y - x| ds = -Im int rho conj(nu) log(tau - zeta) dtau"""
    return KernelSplit(
        dim=2,
        terms=(SplitTerm(None, lambda d: -1j * d.density, PostMap.NEG_IMAG),),
        name="laplace_slp",
    )


def cauchy_gradient_2d() -> KernelSplit:
    """int rho (y - x) / |y - x|^2 ds = conj( int rho conj(nu) i dtau / (tau - zeta) ), as x + iy"""
    return KernelSplit(
        dim=2,
        terms=(SplitTerm(1, lambda d: d.density.astype(complex), PostMap.CONJ),),
        name="cauchy_gradient",
        output=KernelOutput.COMPLEX,
    )


def hypersingular_r4_2d() -> KernelSplit:
    """int (f.R) R (R.n) / |R|^4 ds with R = y - x and vector density f, as x + iy"""
    quarter = 1.0 / 4j

    def conj_distance(d: NodeData):
        return np.conj(d.tau - d.zeta) * d.complex_density * d.unit_tangent

    def reflected(d: NodeData):
        f = d.complex_density
        nu_bar = np.conj(d.normal)
        return (np.conj(f) + f * nu_bar ** 2) * d.unit_tangent

    return KernelSplit(
        dim=2,
        terms=(
            SplitTerm(2, conj_distance, PostMap.CONJ, quarter),
            SplitTerm(1, reflected, PostMap.CONJ, quarter),
            SplitTerm(1, lambda d: d.complex_density * d.unit_tangent, PostMap.IDENTITY, -quarter),
        ),
        name="r4_kernel",
        output=KernelOutput.COMPLEX,
    )


# Space-curve split

def _projected(d: NodeData) -> np.ndarray:
    r = d.separation
    return r * np.sum(r * d.density, axis=1)[:, None]


def slender_body_split(eps: float) -> SlenderBodySplit:
    """I1 + I3 + I5 for the free-space slender-body velocity"""
    if not eps > 0:
        raise GeometryError(f"Fiber radius must be positive, got {eps}")
    half_eps2 = 0.5 * eps * eps
    return SlenderBodySplit(
        dim=3,
        terms=(
            SplitTerm(1, lambda d: np.asarray(d.density, dtype=float)),
            SplitTerm(3, lambda d: _projected(d) + half_eps2 * d.density),
            SplitTerm(5, lambda d: -3.0 * half_eps2 * _projected(d)),
        ),
        name="slender_body",
        output=KernelOutput.VECTOR,
        eps=eps,
    )


def stokeslet(r) -> np.ndarray:
    """S(R) = I/|R| + R R^T/|R|^3"""
    r = np.asarray(r, dtype=float)
    dist = np.linalg.norm(r)
    if dist == 0:
        raise GeometryError("Stokeslet is singular at R = 0")
    return np.eye(3) / dist + np.outer(r, r) / dist ** 3


def doublet(r) -> np.ndarray:
    """D(R) = I/|R|^3 - 3 R R^T/|R|^5"""
    r = np.asarray(r, dtype=float)
    dist = np.linalg.norm(r)
    if dist == 0:
        raise GeometryError("Doublet is singular at R = 0")
    return np.eye(3) / dist ** 3 - 3.0 * np.outer(r, r) / dist ** 5


# Real-variable reference kernels, evaluated per node

def dlp_kernel_2d(x, y: np.ndarray, normals: np.ndarray) -> np.ndarray:
    r = y - np.asarray(x)[None, :]
    return np.sum(r * normals, axis=1) / np.sum(r * r, axis=1)


def slp_kernel_2d(x, y: np.ndarray) -> np.ndarray:
    r = y - np.asarray(x)[None, :]
    return 0.5 * np.log(np.sum(r * r, axis=1))


def gradient_kernel_2d(x, y: np.ndarray) -> np.ndarray:
    r = y - np.asarray(x)[None, :]
    return r / np.sum(r * r, axis=1)[:, None]


def r4_kernel_2d(x, y: np.ndarray, normals: np.ndarray, f: np.ndarray) -> np.ndarray:
    r = y - np.asarray(x)[None, :]
    r2 = np.sum(r * r, axis=1)
    coef = np.sum(f * r, axis=1) * np.sum(r * normals, axis=1) / r2 ** 2
    return r * coef[:, None]


def slender_body_kernel(x, y: np.ndarray, f: np.ndarray, eps: float) -> np.ndarray:
    """(S(R) + eps^2/2 D(R)) f at every node, R = x - y"""
    r = np.asarray(x)[None, :] - y
    dist = np.linalg.norm(r, axis=1)
    rf = np.sum(r * f, axis=1)
    s = f / dist[:, None] + r * (rf / dist ** 3)[:, None]
    d = f / dist[:, None] ** 3 - 3.0 * r * (rf / dist ** 5)[:, None]
    return s + 0.5 * eps * eps * d
