"""DP-means, its penalized objective, the Lloyd k-means baseline and the
farthest-first penalty heuristic."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._accel import njit, pick
from .core import as_points, cluster_means, compact_labels, make_rng, sq_dists

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Clustering:
    assignments: np.ndarray
    centroids: np.ndarray
    objective: float
    iterations: int
    converged: bool = True
    trace: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.centroids)


def distortion(X: np.ndarray, z: np.ndarray, centroids: np.ndarray) -> float:
    diff = X - centroids[z]
    return float(np.einsum("ij,ij->", diff, diff))


def _labels_and_k(assignments, n: int) -> tuple[np.ndarray, int]:
    z = np.asarray(assignments)
    if z.shape != (n,):
        raise ValueError(f"expected {n} assignments, got shape {z.shape}")
    if not np.issubdtype(z.dtype, np.integer):
        raise ValueError("assignments must be integers")
    z = z.astype(np.int64)
    if z.min() < 0:
        raise ValueError("negative cluster id")
    return z, int(z.max()) + 1


def dpmeans_objective(points, clustering, lam: float) -> float:
    """Within-cluster squared error around member means plus ``lam`` per cluster.

    ``clustering`` is a ``Clustering`` or a plain assignment vector whose ids
    must cover ``0..k-1`` without gaps.
    """
    X = as_points(points)
    z = clustering.assignments if isinstance(clustering, Clustering) else clustering
    z, k = _labels_and_k(z, len(X))
    mu = cluster_means(X, z, k)
    return distortion(X, z, mu) + lam * k


# ---------------------------------------------------------------------------
# one sequential DP-means pass


@njit
def _dpmeans_pass_numba(X, order, centroids, k, z, lam):
    d = X.shape[1]
    changed = False
    for t in range(order.shape[0]):
        i = order[t]
        best = np.inf
        arg = -1
        for c in range(k):
            s = 0.0
            for j in range(d):
                diff = X[i, j] - centroids[c, j]
                s += diff * diff
            if s < best:
                best = s
                arg = c
        if best > lam:
            for j in range(d):
                centroids[k, j] = X[i, j]
            arg = k
            k += 1
        if z[i] != arg:
            z[i] = arg
            changed = True
    return k, changed


def _dpmeans_pass_numpy(X, order, centroids, k, z, lam):
    changed = False
    for i in order:
        diff = centroids[:k] - X[i]
        dist = np.einsum("ij,ij->i", diff, diff)
        arg = int(np.argmin(dist))
        if dist[arg] > lam:
            centroids[k] = X[i]
            arg = k
            k += 1
        if z[i] != arg:
            z[i] = arg
            changed = True
    return k, changed


dpmeans_pass = pick(_dpmeans_pass_numba, _dpmeans_pass_numpy)


def run_dpmeans(
    points,
    lam: float,
    max_iters: int = 1000,
    tol: float = 1e-9,
    shuffle: bool = False,
    seed=None,
) -> Clustering:
    """DP-means from a single cluster at the global mean.

    Points are visited in storage order unless ``shuffle`` is set, in which
    case one seeded permutation is drawn up front and reused on every pass.
    A point whose nearest centroid is strictly farther than ``lam`` opens a
    new cluster centred on itself, visible to the rest of the pass. Means
    are recomputed and empty clusters dropped at the end of each pass.
    """
    X = as_points(points)
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError("lambda must be finite and positive")
    if max_iters < 1:
        raise ValueError("max_iters must be positive")
    n, d = X.shape
    order = make_rng(seed).permutation(n) if shuffle else np.arange(n)
    z = np.zeros(n, dtype=np.int64)
    centroids = X.mean(axis=0, keepdims=True)
    trace = [distortion(X, z, centroids) + lam]

    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        buf = np.empty((len(centroids) + n, d))
        buf[: len(centroids)] = centroids
        _, changed = dpmeans_pass(X, order, buf, len(centroids), z, lam)
        z, k = compact_labels(z)
        centroids = cluster_means(X, z, k)
        trace.append(distortion(X, z, centroids) + lam * k)
        log.debug("pass %d: k=%d objective=%.6g", it, k, trace[-1])
        if not changed or trace[-2] - trace[-1] < tol:
            converged = True
            break

    return Clustering(z, centroids, trace[-1], it, converged, trace)


# ---------------------------------------------------------------------------
# k-means baseline


@njit
def _nearest_numba(X, C):
    n, d = X.shape
    z = np.empty(n, dtype=np.int64)
    dmin = np.empty(n)
    for i in range(n):
        best = np.inf
        arg = 0
        for c in range(C.shape[0]):
            s = 0.0
            for j in range(d):
                diff = X[i, j] - C[c, j]
                s += diff * diff
            if s < best:
                best = s
                arg = c
        z[i] = arg
        dmin[i] = best
    return z, dmin


def _nearest_numpy(X, C):
    D = sq_dists(X, C)
    z = D.argmin(axis=1)
    return z, D[np.arange(len(X)), z]


nearest_centroid = pick(_nearest_numba, _nearest_numpy)


def _farthest_first_seeds(X: np.ndarray, k: int, first: int) -> np.ndarray:
    chosen = [first]
    dmin = ((X - X[first]) ** 2).sum(axis=1)
    for _ in range(1, k):
        i = int(np.argmax(dmin))
        chosen.append(i)
        dmin = np.minimum(dmin, ((X - X[i]) ** 2).sum(axis=1))
    return X[chosen].copy()


def _lloyd(X, centroids, max_iters):
    n = len(X)
    k = len(centroids)
    z = None
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        z_new, dmin = nearest_centroid(X, centroids)
        counts = np.bincount(z_new, minlength=k)
        for c in np.flatnonzero(counts == 0):
            # steal the worst-fit point from a cluster that can spare it
            donors = counts[z_new] >= 2
            i = int(np.argmax(np.where(donors, dmin, -1.0)))
            counts[z_new[i]] -= 1
            z_new[i] = c
            counts[c] = 1
            dmin[i] = 0.0
        centroids = cluster_means(X, z_new, k)
        trace.append(distortion(X, z_new, centroids))
        if z is not None and np.array_equal(z, z_new):
            converged = True
            z = z_new
            break
        z = z_new
    return Clustering(z.astype(np.int64), centroids, trace[-1], it, converged, trace)


def run_kmeans(points, k: int, seed=None, max_iters: int = 300, n_init: int = 1) -> Clustering:
    """Lloyd iterations from a farthest-first initialization.

    The first seed point is drawn uniformly with ``seed``; the rest are
    chosen farthest-first. With ``n_init > 1`` the lowest-objective run wins.
    """
    X = as_points(points)
    n = len(X)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = make_rng(seed)
    best = None
    for _ in range(n_init):
        first = int(rng.integers(n))
        result = _lloyd(X, _farthest_first_seeds(X, k, first), max_iters)
        if best is None or result.objective < best.objective:
            best = result
    return best


def farthest_first_lambda(points, k: int) -> float:
    """Penalty that yields roughly ``k`` clusters.

    Starting from the global mean, ``k`` rounds each add the point farthest
    (in squared distance) from the current set; the maximum measured in the
    last round, before adding its point, is returned.
    """
    X = as_points(points)
    n = len(X)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    dmin = ((X - X.mean(axis=0)) ** 2).sum(axis=1)
    value = 0.0
    for _ in range(k):
        i = int(np.argmax(dmin))
        value = float(dmin[i])
        dmin = np.minimum(dmin, ((X - X[i]) ** 2).sum(axis=1))
    return value
