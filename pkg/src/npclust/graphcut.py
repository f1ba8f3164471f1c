"""Normalized-cut graph clustering with a per-cluster penalty instead of a
fixed cluster count.

With K = shift * D^-1 + D^-1 A D^-1 and weights W = D, the weighted kernel
k-means objective J(K, W) of any k-way partition equals

    shift * n + tr(D^-1/2 A D^-1/2) - (shift + 1) * k + NCut(A)

so weighted kernel DP-means with penalty lam minimizes NCut + lam' * k for
lam' = lam - shift - 1. Self-loops are rejected, which zeroes the trace.

Note that NCut >= 0 and k >= 1, so any lam' > 0 is minimized by a single
cluster; negative lam' (down to -1) is where splitting can pay off.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._accel import njit, pick
from .core import compact_labels, sym_eig
from .kernel import PSD_TOL, run_weighted_kernel_dpmeans

log = logging.getLogger(__name__)

SHIFT_MARGIN = 1e-6
DENSE_EIG_LIMIT = 500


@dataclass(frozen=True)
class SparseGraph:
    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    degrees: np.ndarray

    @classmethod
    def from_edges(cls, edges, n: int | None = None) -> "SparseGraph":
        """Undirected graph from ``(i, j, weight)`` rows, each edge listed once.

        Repeated edges are summed.
        """
        E = np.asarray(edges, dtype=np.float64).reshape(-1, 3) if len(edges) else np.zeros((0, 3))
        i = E[:, 0].astype(np.int64)
        j = E[:, 1].astype(np.int64)
        w = E[:, 2]
        if np.any(E[:, :2] != np.floor(E[:, :2])) or (len(i) and min(i.min(), j.min()) < 0):
            raise ValueError("vertex ids must be non-negative integers")
        if np.any(i == j):
            raise ValueError("self-loops are not allowed")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("edge weights must be finite and non-negative")
        if n is None:
            n = int(max(i.max(), j.max())) + 1 if len(i) else 0
        if len(i) and max(i.max(), j.max()) >= n:
            raise ValueError("vertex id out of range")
        A = sp.coo_matrix((w, (i, j)), shape=(n, n))
        return cls.from_sparse(A + A.T)

    @classmethod
    def from_sparse(cls, A) -> "SparseGraph":
        A = sp.csr_matrix(A, dtype=np.float64)
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        n = A.shape[0]
        if n < 1 or A.shape != (n, n):
            raise ValueError("adjacency must be square and non-empty")
        if A.diagonal().any():
            raise ValueError("self-loops are not allowed")
        if (A != A.T).nnz:
            raise ValueError("adjacency is not symmetric")
        if A.nnz and A.data.min() < 0:
            raise ValueError("edge weights must be non-negative")
        deg = np.asarray(A.sum(axis=1)).ravel()
        if np.any(deg <= 0):
            raise ValueError(f"isolated vertices: {np.flatnonzero(deg <= 0)[:10].tolist()}")
        return cls(n, A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data.copy(), deg)

    @classmethod
    def from_dense(cls, A) -> "SparseGraph":
        return cls.from_sparse(sp.csr_matrix(np.asarray(A, dtype=np.float64)))

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    def adjacency(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))

    def dense(self) -> np.ndarray:
        return self.adjacency().toarray()


def read_edge_list(path, n: int | None = None) -> SparseGraph:
    """Parse ``i j weight`` lines (0-indexed, weight optional, '#' comments)."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) not in (2, 3):
            raise ValueError(f"{path}:{lineno}: expected 'i j weight', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric field in {line!r}") from None
        rows.append((i, j, w))
    if not rows:
        raise ValueError(f"{path}: no edges")
    return SparseGraph.from_edges(rows, n)


def write_edge_list(graph: SparseGraph, path) -> None:
    A = sp.triu(graph.adjacency(), k=1).tocoo()
    with open(path, "w") as fh:
        for i, j, w in zip(A.row, A.col, A.data):
            fh.write(f"{i} {j} {w:.17g}\n")


def normalized_adjacency(graph: SparseGraph) -> np.ndarray:
    s = 1.0 / np.sqrt(graph.degrees)
    N = graph.dense() * s[:, None] * s[None, :]
    return (N + N.T) / 2


def min_normalized_eigenvalue(graph: SparseGraph) -> float:
    if graph.n <= DENSE_EIG_LIMIT:
        return float(sym_eig(normalized_adjacency(graph)).eigenvalues[-1])
    # large graphs stay sparse; Lanczos converges to full precision with tol=0
    s = sp.diags(1.0 / np.sqrt(graph.degrees))
    N = s @ graph.adjacency() @ s
    N = (N + N.T) / 2
    return float(spla.eigsh(N, k=1, which="SA", return_eigenvectors=False)[0])


def auto_shift(graph: SparseGraph) -> float:
    """Smallest shift making the ncut kernel PSD, plus a small margin."""
    return max(0.0, -min_normalized_eigenvalue(graph)) + SHIFT_MARGIN


def build_ncut_kernel(graph: SparseGraph, shift: float, check_psd: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``K = shift * D^-1 + D^-1 A D^-1`` and weights ``w = deg``."""
    if not shift >= 0:
        raise ValueError("shift must be non-negative")
    deg = graph.degrees
    K = graph.dense() / deg[:, None] / deg[None, :]
    K[np.diag_indices(graph.n)] += shift / deg
    K = (K + K.T) / 2
    if check_psd:
        # K is congruent to shift * I + D^-1/2 A D^-1/2
        e_min = min_normalized_eigenvalue(graph) + shift
        if e_min < -PSD_TOL:
            raise ValueError(
                f"ncut kernel is indefinite (min eigenvalue of shift*I + D^-1/2 A D^-1/2 is {e_min:.3g}); "
                f"use shift >= {auto_shift(graph):.6g}"
            )
    return K, deg.copy()


def _cluster_volumes(graph: SparseGraph, z: np.ndarray, k: int):
    vol = np.bincount(z, weights=graph.degrees, minlength=k)
    rows = np.repeat(np.arange(graph.n), np.diff(graph.indptr))
    inside = z[rows] == z[graph.indices]
    links_in = np.bincount(z[rows][inside], weights=graph.data[inside], minlength=k)
    return vol, links_in


def cut_objective(graph: SparseGraph, partition) -> float:
    """Sum over clusters of links leaving the cluster over the cluster's volume."""
    z = np.asarray(partition)
    if z.shape != (graph.n,):
        raise ValueError(f"expected {graph.n} labels, got shape {z.shape}")
    k = int(z.max()) + 1
    vol, links_in = _cluster_volumes(graph, z.astype(np.int64), k)
    if np.any(vol == 0):
        raise ValueError("empty cluster in partition")
    return float(((vol - links_in) / vol).sum())


@dataclass(frozen=True)
class ClusterCache:
    volume: float  # sum of member degrees
    internal_links: float  # sum of A_ij over ordered member pairs


def ncut_cluster_cache(graph: SparseGraph, members) -> ClusterCache:
    mask = np.zeros(graph.n, dtype=bool)
    mask[np.asarray(members, dtype=np.int64)] = True
    rows = np.repeat(np.arange(graph.n), np.diff(graph.indptr))
    inside = mask[rows] & mask[graph.indices]
    return ClusterCache(float(graph.degrees[mask].sum()), float(graph.data[inside].sum()))


def node_to_cluster_distance_sparse(graph: SparseGraph, shift: float, node: int, members, cache=None) -> float:
    """Kernel distance from ``node`` to a cluster's implicit centroid.

    Touches only the node's own edges plus the cached cluster volume and
    internal link weight; ``cache`` must describe ``members``.
    """
    members = np.asarray(members, dtype=np.int64)
    if members.size == 0:
        raise ValueError("empty member set")
    if cache is None:
        cache = ncut_cluster_cache(graph, members)
    lo, hi = graph.indptr[node], graph.indptr[node + 1]
    nbrs = graph.indices[lo:hi]
    links = float(graph.data[lo:hi][np.isin(nbrs, members)].sum())
    deg = graph.degrees[node]
    own = shift if node in set(members.tolist()) else 0.0
    vol = cache.volume
    return shift / deg - 2.0 * (own + links / deg) / vol + (shift * vol + cache.internal_links) / vol**2


# ---------------------------------------------------------------------------
# one batched pass over vertices using CSR adjacency


@njit
def _ncut_pass_numba(indptr, indices, data, deg, frozen, vol, links_in, shift, lam, order, z, spawner, spawn_of, acc):
    k0 = vol.shape[0]
    nsp = 0
    changed = False
    for t in range(order.shape[0]):
        x = order[t]
        for e in range(indptr[x], indptr[x + 1]):
            i = indices[e]
            acc[frozen[i]] += data[e]
            if spawn_of[i] >= 0:
                acc[k0 + spawn_of[i]] += data[e]
        base = shift / deg[x]
        best = np.inf
        arg = -1
        for c in range(k0):
            own = shift if frozen[x] == c else 0.0
            dd = base - 2.0 * (own + acc[c] / deg[x]) / vol[c] + (shift * vol[c] + links_in[c]) / (vol[c] * vol[c])
            if dd < best:
                best = dd
                arg = c
        for q in range(nsp):
            y = spawner[q]
            dd = base - 2.0 * (acc[k0 + q] / deg[x]) / deg[y] + shift / deg[y]
            if dd < best:
                best = dd
                arg = k0 + q
        for e in range(indptr[x], indptr[x + 1]):
            i = indices[e]
            acc[frozen[i]] = 0.0
            if spawn_of[i] >= 0:
                acc[k0 + spawn_of[i]] = 0.0
        if deg[x] * best > lam:
            spawner[nsp] = x
            spawn_of[x] = nsp
            arg = k0 + nsp
            nsp += 1
        if z[x] != arg:
            z[x] = arg
            changed = True
    return nsp, changed


def _ncut_pass_numpy(indptr, indices, data, deg, frozen, vol, links_in, shift, lam, order, z, spawner, spawn_of, acc):
    k0 = len(vol)
    nsp = 0
    changed = False
    frozen_const = (shift * vol + links_in) / vol**2
    for x in order:
        nb = indices[indptr[x] : indptr[x + 1]]
        wt = data[indptr[x] : indptr[x + 1]]
        links = np.bincount(frozen[nb], weights=wt, minlength=k0)
        own = np.zeros(k0)
        own[frozen[x]] = shift
        dist = shift / deg[x] - 2.0 * (own + links / deg[x]) / vol + frozen_const
        arg = int(np.argmin(dist))
        best = dist[arg]
        if nsp:
            sp_links = np.zeros(nsp)
            hit = spawn_of[nb] >= 0
            np.add.at(sp_links, spawn_of[nb][hit], wt[hit])
            ys = spawner[:nsp]
            dd = shift / deg[x] - 2.0 * (sp_links / deg[x]) / deg[ys] + shift / deg[ys]
            q = int(np.argmin(dd))
            if dd[q] < best:
                best, arg = dd[q], k0 + q
        if deg[x] * best > lam:
            spawner[nsp] = x
            spawn_of[x] = nsp
            arg = k0 + nsp
            nsp += 1
        if z[x] != arg:
            z[x] = arg
            changed = True
    return nsp, changed


ncut_pass = pick(_ncut_pass_numba, _ncut_pass_numpy)


@dataclass(frozen=True)
class NcutResult:
    assignments: np.ndarray
    penalized_cut: float  # NCut + lambda' * k
    cut: float
    shift: float
    lam: float  # kernel-space penalty lambda' + shift + 1
    iterations: int
    converged: bool = True
    trace: list = field(default_factory=list)  # penalized cut per pass
    kernel_trace: list = field(default_factory=list)  # J(K, W) + lam * k per pass

    @property
    def k(self) -> int:
        return int(self.assignments.max()) + 1


def run_penalized_ncut(
    graph: SparseGraph,
    lambda_prime: float,
    max_iters: int = 1000,
    shift: float | None = None,
    method: str = "sparse",
    initial=None,
    tol: float = 1e-9,
) -> NcutResult:
    """Minimize NCut + ``lambda_prime`` * k by weighted kernel DP-means.

    ``shift`` defaults to the smallest PSD-making value. ``method="dense"``
    runs the dense kernel path (O(n^2) memory); ``"sparse"`` touches each
    edge once per pass. ``initial`` seeds the partition (default: one
    cluster). Vertices are visited in id order.
    """
    if method not in ("sparse", "dense"):
        raise ValueError(f"unknown method {method!r}")
    explicit_shift = shift is not None
    shift = float(shift) if explicit_shift else auto_shift(graph)
    if not shift >= 0:
        raise ValueError("shift must be non-negative")
    lam = lambda_prime + shift + 1.0
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError(f"lambda' + shift + 1 must be positive, got {lam}")
    n = graph.n
    if initial is None:
        z = np.zeros(n, dtype=np.int64)
    else:
        z, _ = compact_labels(np.asarray(initial))
        if z.shape != (n,):
            raise ValueError(f"initial partition must have {n} labels")
    const = shift * n  # + tr(D^-1/2 A D^-1/2) = 0 without self-loops

    if method == "dense":
        K, w = build_ncut_kernel(graph, shift)
        res = _dense_run(K, w, lam, z, max_iters, tol)
        z, iters, converged, ktrace = res
    else:
        if explicit_shift:
            e_min = min_normalized_eigenvalue(graph) + shift
            if e_min < -PSD_TOL:
                raise ValueError(f"ncut kernel is indefinite for shift={shift}; use shift >= {auto_shift(graph):.6g}")
        z, iters, converged, ktrace = _sparse_run(graph, shift, lam, z, max_iters, tol)

    trace = [v - const for v in ktrace]
    k = int(z.max()) + 1
    cut = cut_objective(graph, z)
    return NcutResult(z, cut + lambda_prime * k, cut, shift, lam, iters, converged, trace, ktrace)


def _kernel_objective_from_cut(graph, z, shift, lam):
    k = int(z.max()) + 1
    return shift * graph.n - (shift + 1.0) * k + cut_objective(graph, z) + lam * k


def _dense_run(K, w, lam, z, max_iters, tol):
    res = run_weighted_kernel_dpmeans(K, w, lam, max_iters=max_iters, tol=tol, initial=z)
    return res.assignments, res.iterations, res.converged, res.trace


def _sparse_run(graph, shift, lam, z, max_iters, tol):
    n = graph.n
    order = np.arange(n)
    ktrace = [_kernel_objective_from_cut(graph, z, shift, lam)]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        k0 = int(z.max()) + 1
        vol, links_in = _cluster_volumes(graph, z, k0)
        frozen = z.copy()
        spawner = np.empty(n, dtype=np.int64)
        spawn_of = np.full(n, -1, dtype=np.int64)
        acc = np.zeros(k0 + n)
        _, changed = ncut_pass(
            graph.indptr, graph.indices, graph.data, graph.degrees, frozen, vol, links_in,
            shift, lam, order, z, spawner, spawn_of, acc,
        )
        z, _ = compact_labels(z)
        ktrace.append(_kernel_objective_from_cut(graph, z, shift, lam))
        log.debug("pass %d: k=%d objective=%.6g", it, int(z.max()) + 1, ktrace[-1])
        if not changed or ktrace[-2] - ktrace[-1] < tol:
            converged = True
            break
    return z, it, converged, ktrace
