"""Spectral relaxation of the DP-means objective.

Writing a partition as a normalized indicator matrix Y (orthonormal
columns, 1/sqrt(n_c) on the members of cluster c), the penalized k-means
cost equals tr(K) - tr(Y^T (K - lam I) Y). Dropping the indicator
structure, the maximizer keeps every eigenvector of K whose eigenvalue
exceeds lam; the number of clusters falls out of the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import compact_labels, make_rng, sym_eig
from .dpmeans import Clustering, run_kmeans
from .kernel import check_kernel

ORTHO_TOL = 1e-10
NEAR_THRESHOLD = 1e-10


@dataclass(frozen=True)
class RelaxedSolution:
    Y: np.ndarray  # (n, m) kept eigenvectors
    kept_eigenvalues: np.ndarray
    relaxed_value: float
    near_threshold: np.ndarray  # eigenvalues within NEAR_THRESHOLD of lam, excluded

    @property
    def m(self) -> int:
        return self.Y.shape[1]


def normalized_indicator(assignments) -> np.ndarray:
    z, k = compact_labels(np.asarray(assignments))
    counts = np.bincount(z, minlength=k)
    Y = np.zeros((len(z), k))
    Y[np.arange(len(z)), z] = 1.0 / np.sqrt(counts[z])
    return Y


def trace_objective(K, Y, lam: float) -> float:
    K = np.asarray(K, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] != K.shape[0]:
        raise ValueError(f"shape mismatch: K is {K.shape}, Y is {Y.shape}")
    if np.abs(Y.T @ Y - np.eye(Y.shape[1])).max() > ORTHO_TOL:
        raise ValueError("Y does not have orthonormal columns")
    return float(np.trace(Y.T @ K @ Y) - lam * np.trace(Y.T @ Y))


def relax(K, lam: float) -> RelaxedSolution:
    if not np.isfinite(lam):
        raise ValueError("lambda must be finite")
    K = check_kernel(K)
    eig = sym_eig(K)
    e = eig.eigenvalues
    near = e[np.abs(e - lam) <= NEAR_THRESHOLD]
    keep = e > lam + NEAR_THRESHOLD
    return RelaxedSolution(
        Y=eig.eigenvectors[:, keep],
        kept_eigenvalues=e[keep],
        relaxed_value=float((e[keep] - lam).sum()),
        near_threshold=near,
    )


def round_relaxed(Y, seed=None, n_init: int = 10) -> Clustering:
    """Cluster the rows of the relaxed indicator into ``m`` groups.

    Rows are scaled to unit length (zero rows stay at the origin) and
    clustered with k-means, best of ``n_init`` seeded restarts. With no
    columns at all every point lands in one cluster.
    """
    Y = np.asarray(Y, dtype=np.float64)
    n = Y.shape[0]
    m = Y.shape[1] if Y.ndim == 2 else 0
    if m == 0:
        return Clustering(np.zeros(n, dtype=np.int64), np.zeros((1, 0)), 0.0, 0)
    norms = np.linalg.norm(Y, axis=1, keepdims=True)
    rows = np.divide(Y, norms, out=np.zeros_like(Y), where=norms > 0)
    return run_kmeans(rows, min(m, n), seed=make_rng(seed), n_init=n_init)


def spectral_dpmeans(K, lam: float, seed=None, n_init: int = 10) -> tuple[RelaxedSolution, Clustering]:
    sol = relax(K, lam)
    return sol, round_relaxed(sol.Y, seed=seed, n_init=n_init)


def eigengap_lambda(K, k: int) -> float:
    """Penalty halfway between the k-th and (k+1)-th largest eigenvalues,
    so the relaxation keeps exactly ``k`` eigenvectors."""
    K = check_kernel(K)
    n = len(K)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    e = sym_eig(K).eigenvalues
    if k == n:
        return float(e[-1]) - 1.0
    if e[k - 1] - e[k] <= 2 * NEAR_THRESHOLD:
        raise ValueError(f"eigenvalues {k} and {k + 1} coincide; no penalty separates them")
    return float(0.5 * (e[k - 1] + e[k]))
