"""Kernel-space DP-means with per-point weights.

Cluster centroids are never formed explicitly. The squared feature-space
distance from point x to the weighted mean of cluster c is

    K_xx - 2 sum_{i in c} w_i K_xi / s_c + sum_{i,j in c} w_i w_j K_ij / s_c^2

with s_c the total weight of c. Within a pass the implicit centroids stay
frozen at the memberships the pass started from (a cluster opened mid-pass
is centred on the point that opened it), mirroring the batched mean step of
explicit DP-means. With a linear kernel and unit weights the two runs take
identical decisions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._accel import njit, pick
from .core import as_points, check_symmetric, compact_labels, sym_eig

log = logging.getLogger(__name__)

PSD_TOL = 1e-8


@dataclass(frozen=True)
class KernelClustering:
    assignments: np.ndarray
    objective: float  # J(K, W) + lambda * k
    iterations: int
    converged: bool = True
    trace: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return int(self.assignments.max()) + 1


def check_kernel(K, psd_tol: float | None = None) -> np.ndarray:
    """Validate a Gram matrix; with ``psd_tol`` also require min eigenvalue >= -psd_tol."""
    K = check_symmetric(K, "kernel matrix")
    if psd_tol is not None:
        e_min = sym_eig(K).eigenvalues[-1]
        if e_min < -psd_tol:
            raise ValueError(f"kernel matrix is not PSD: smallest eigenvalue {e_min:.3g}")
    return np.ascontiguousarray(K)


def check_weights(w, n: int) -> np.ndarray:
    if w is None:
        return np.ones(n)
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.shape != (n,):
        raise ValueError(f"expected {n} weights, got {w.shape[0]}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("weights must be finite and positive")
    return w


def build_kernel(points, kind: str = "linear", bandwidth: float | None = None) -> np.ndarray:
    X = as_points(points)
    if kind == "linear":
        K = X @ X.T
    elif kind == "gaussian":
        if bandwidth is None or not bandwidth > 0:
            raise ValueError("gaussian kernel needs a positive bandwidth")
        sq = (X**2).sum(axis=1)
        D2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (X @ X.T), 0.0)
        K = np.exp(-D2 / (2.0 * bandwidth**2))
        np.fill_diagonal(K, 1.0)
    else:
        raise ValueError(f"unknown kernel {kind!r}")
    return np.ascontiguousarray((K + K.T) / 2.0)


def kernel_point_to_cluster_dist(K, w, point_index: int, members) -> float:
    members = np.asarray(members, dtype=np.int64).ravel()
    if members.size == 0:
        raise ValueError("empty member set")
    w = check_weights(w, len(K))
    wm = w[members]
    s = wm.sum()
    x = point_index
    return float(K[x, x] - 2.0 * (wm @ K[x, members]) / s + wm @ K[np.ix_(members, members)] @ wm / s**2)


def _cluster_stats(K, w, z, k):
    """U[x, c] = sum_{i in c} w_i K_xi, cluster weights s_c and t_c = sum w_i w_j K_ij."""
    Z = np.zeros((len(z), k))
    Z[np.arange(len(z)), z] = w
    U = K @ Z
    s = Z.sum(axis=0)
    t = (Z * U).sum(axis=0)
    return U, s, t


def weighted_kernel_objective(K, w, z) -> float:
    """J(K, W): weighted squared distance of every point to its implicit centroid."""
    z, k = compact_labels(np.asarray(z))
    _, s, t = _cluster_stats(K, w, z, k)
    return float(w @ np.diag(K) - (t / s).sum())


@njit
def _spawn_pass_numba(Dfrozen, diagK, K, w, order, lam, z, spawner):
    k0 = Dfrozen.shape[1]
    nsp = 0
    changed = False
    for t in range(order.shape[0]):
        x = order[t]
        best = np.inf
        arg = -1
        for c in range(k0):
            if Dfrozen[x, c] < best:
                best = Dfrozen[x, c]
                arg = c
        for q in range(nsp):
            y = spawner[q]
            dd = diagK[x] - 2.0 * K[x, y] + diagK[y]
            if dd < best:
                best = dd
                arg = k0 + q
        if w[x] * best > lam:
            spawner[nsp] = x
            arg = k0 + nsp
            nsp += 1
        if z[x] != arg:
            z[x] = arg
            changed = True
    return nsp, changed


def _spawn_pass_numpy(Dfrozen, diagK, K, w, order, lam, z, spawner):
    k0 = Dfrozen.shape[1]
    nsp = 0
    changed = False
    for x in order:
        arg = int(np.argmin(Dfrozen[x]))
        best = Dfrozen[x, arg]
        if nsp:
            ys = spawner[:nsp]
            dd = diagK[x] - 2.0 * K[x, ys] + diagK[ys]
            q = int(np.argmin(dd))
            if dd[q] < best:
                best, arg = dd[q], k0 + q
        if w[x] * best > lam:
            spawner[nsp] = x
            arg = k0 + nsp
            nsp += 1
        if z[x] != arg:
            z[x] = arg
            changed = True
    return nsp, changed


spawn_pass = pick(_spawn_pass_numba, _spawn_pass_numpy)


def run_weighted_kernel_dpmeans(
    K,
    w=None,
    lam: float = 1.0,
    order=None,
    max_iters: int = 1000,
    tol: float = 1e-9,
    check_psd: bool = False,
    initial=None,
) -> KernelClustering:
    """DP-means on a Gram matrix with point weights.

    A point opens a new singleton cluster when its weight times the distance
    to the nearest implicit centroid strictly exceeds ``lam``: a singleton has
    zero distortion and costs exactly ``lam``. ``initial`` seeds the
    partition; by default every point starts in one cluster.
    """
    K = check_kernel(K, PSD_TOL if check_psd else None)
    n = len(K)
    w = check_weights(w, n)
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError("lambda must be finite and positive")
    order = np.arange(n) if order is None else np.asarray(order, dtype=np.int64)
    if not np.array_equal(np.sort(order), np.arange(n)):
        raise ValueError("order must be a permutation of 0..n-1")
    diagK = np.ascontiguousarray(np.diag(K))

    if initial is None:
        z, k = np.zeros(n, dtype=np.int64), 1
    else:
        z, k = compact_labels(np.asarray(initial))
        if z.shape != (n,):
            raise ValueError(f"initial partition must have {n} labels")
    trace = [weighted_kernel_objective(K, w, z) + lam * k]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        k0 = int(z.max()) + 1
        U, s, t = _cluster_stats(K, w, z, k0)
        Dfrozen = np.ascontiguousarray(diagK[:, None] - 2.0 * U / s + t / s**2)
        spawner = np.empty(n, dtype=np.int64)
        _, changed = spawn_pass(Dfrozen, diagK, K, w, order, float(lam), z, spawner)
        z, k = compact_labels(z)
        trace.append(weighted_kernel_objective(K, w, z) + lam * k)
        log.debug("pass %d: k=%d objective=%.6g", it, k, trace[-1])
        if not changed or trace[-2] - trace[-1] < tol:
            converged = True
            break
    return KernelClustering(z, trace[-1], it, converged, trace)


def farthest_first_lambda_kernel(K, k: int, w=None) -> float:
    """Farthest-first penalty heuristic carried out in feature space."""
    K = check_kernel(K)
    n = len(K)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    w = check_weights(w, n)
    diagK = np.diag(K)
    S = w.sum()
    dmin = diagK - 2.0 * (K @ w) / S + (w @ K @ w) / S**2
    value = 0.0
    for _ in range(k):
        i = int(np.argmax(dmin))
        value = float(dmin[i])
        dmin = np.minimum(dmin, diagK - 2.0 * K[:, i] + K[i, i])
    return value
