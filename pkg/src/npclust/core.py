"""Dense primitives shared by every algorithm: point validation, squared
distances, means, a Jacobi symmetric eigensolver and the RNG contract."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import njit, pick


def as_points(points, name: str = "points") -> np.ndarray:
    """Validate and return an ``(n, d)`` float64 array.

    One-dimensional input is read as ``n`` points in one dimension.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {X.shape}")
    n, d = X.shape
    if n < 1 or d < 1:
        raise ValueError(f"{name} must have at least one point and one dimension")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return np.ascontiguousarray(X)


def make_rng(seed) -> np.random.Generator:
    """Seeded generator; the same 64-bit seed always yields the same stream."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is not None:
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.PCG64(seed))


def sq_dist(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    diff = a - b
    return float(diff @ diff)


def sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """All squared distances between rows of ``X`` and rows of ``C``."""
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def mean(points) -> np.ndarray:
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise ValueError("mean of an empty set of points")
    return X.mean(axis=0)


def cluster_means(X: np.ndarray, z: np.ndarray, k: int) -> np.ndarray:
    """Mean of each cluster ``0..k-1``; every cluster must be non-empty."""
    counts = np.bincount(z, minlength=k)
    if np.any(counts[:k] == 0):
        raise ValueError("empty cluster id referenced")
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, z, X)
    return sums / counts[:k, None]


def compact_labels(z: np.ndarray) -> tuple[np.ndarray, int]:
    """Relabel ids to ``0..k-1`` keeping their relative order."""
    ids, inverse = np.unique(z, return_inverse=True)
    return inverse.astype(np.int64), len(ids)


# ---------------------------------------------------------------------------
# Cyclic Jacobi eigensolver


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # column i pairs with eigenvalues[i]
    sweeps: int


def _rotation(app, aqq, apq):
    theta = (aqq - app) / (2.0 * apq)
    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
    if theta < 0.0:
        t = -t
    c = 1.0 / np.sqrt(t * t + 1.0)
    return c, t * c


@njit
def _jacobi_numba(a, tol, max_sweeps):
    n = a.shape[0]
    v = np.eye(n)
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                if abs(a[p, q]) > off:
                    off = abs(a[p, q])
        if off < tol:
            return v, sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < tol:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return v, -1


def _jacobi_numpy(a, tol, max_sweeps):
    n = a.shape[0]
    v = np.eye(n)
    iu = np.triu_indices(n, 1)
    for sweep in range(max_sweeps):
        if n < 2 or np.abs(a[iu]).max() < tol:
            return v, sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < tol:
                    continue
                c, s = _rotation(a[p, p], a[q, q], apq)
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return v, -1


_jacobi = pick(_jacobi_numba, _jacobi_numpy)


def check_symmetric(A, name: str = "matrix") -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite values")
    if not np.array_equal(A, A.T):
        raise ValueError(f"{name} is not symmetric")
    return A


def sym_eig(A, rel_tol: float = 1e-12, max_sweeps: int = 100) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once every off-diagonal entry is below ``rel_tol * ||A||_F``.
    Eigenvalues come back in descending order.
    """
    A = check_symmetric(A)
    work = np.array(A, dtype=np.float64, order="C", copy=True)
    tol = rel_tol * np.linalg.norm(A)
    if tol == 0.0:
        tol = np.finfo(float).tiny
    v, sweeps = _jacobi(work, tol, max_sweeps)
    if sweeps < 0:
        raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    w = np.diag(work).copy()
    order = np.argsort(-w, kind="stable")
    return EigenDecomposition(w[order], np.ascontiguousarray(v[:, order]), sweeps)
