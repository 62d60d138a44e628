"""
Barycentric Lagrange interpolation between Gauss-Legendre node sets
"""

from functools import lru_cache

import numpy as np


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    """Barycentric weights 1/prod(x_j - x_k), scaled to unit max magnitude"""
    x = np.asarray(nodes)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    return w / np.max(np.abs(w))


def barycentric_matrix(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Matrix E with E @ samples(src) = interpolant at dst (second barycentric form)"""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    w = barycentric_weights(src)
    diff = dst[:, None] - src[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    terms = w[None, :] / diff
    mat = terms / np.sum(terms, axis=1, keepdims=True)
    rows = np.any(exact, axis=1)
    if np.any(rows):
        mat[rows] = exact[rows].astype(float)
    return mat


def barycentric_interp(samples: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """
    Interpolate node samples from src to dst.

    samples may carry trailing dimensions (n, ...); interpolation acts on axis 0,
    so vector data is interpolated componentwise.
    """
    mat = barycentric_matrix(src, dst)
    return np.tensordot(mat, np.asarray(samples), axes=(1, 0))


@lru_cache(maxsize=128)
def _gl_interp_matrix(n: int, m: int) -> np.ndarray:
    src, _ = np.polynomial.legendre.leggauss(n)
    dst, _ = np.polynomial.legendre.leggauss(m)
    mat = barycentric_matrix(src, dst)
    mat.setflags(write=False)
    return mat


def gl_interp_matrix(n: int, m: int) -> np.ndarray:
    """Cached interpolation matrix from n-point to m-point Gauss-Legendre nodes"""
    return _gl_interp_matrix(int(n), int(m))


def resample(values: np.ndarray, n: int, m: int) -> np.ndarray:
    """Resample data given at n Gauss-Legendre nodes onto m nodes"""
    values = np.asarray(values)
    if m == n:
        return values.copy()
    return np.tensordot(gl_interp_matrix(n, m), values, axes=(1, 0))
