"""Hard Gaussian HDP: local clusters per dataset tied to shared global
centroids, with a penalty per local and per global cluster.

Bookkeeping: all local clusters live in one table (``loc_ds`` dataset,
``loc_glob`` global id, ``loc_size`` member count), kept sorted by dataset
after each compaction so table order inside a dataset is the local id.
A local cluster that loses its last point mid-iteration is dropped at once.
A global cluster that loses its last local stays a candidate until the end
of the iteration, which keeps every move non-increasing for the objective.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._accel import njit, pick
from .core import as_points, compact_labels
from .dpmeans import farthest_first_lambda

log = logging.getLogger(__name__)

# step-4 decision codes
STAY, JOIN, NEW_LOCAL, NEW_GLOBAL = 0, 1, 2, 3


@dataclass(frozen=True)
class HdpState:
    local_assignments: list  # per dataset, local cluster id of each point
    associations: list  # per dataset, global id of each local cluster
    global_centroids: np.ndarray
    objective: float
    iterations: int = 0
    converged: bool = True
    trace: list = field(default_factory=list)
    step5_changes: list = field(default_factory=list)
    decisions: list | None = None

    @property
    def k_j(self) -> list[int]:
        return [len(v) for v in self.associations]

    @property
    def k(self) -> int:
        return sum(self.k_j)

    @property
    def g(self) -> int:
        return len(self.global_centroids)

    @property
    def global_assignments(self) -> list[np.ndarray]:
        return [v[z] for z, v in zip(self.local_assignments, self.associations)]


def as_collection(datasets) -> list[np.ndarray]:
    data = [as_points(x, name=f"dataset {j}") for j, x in enumerate(datasets)]
    if not data:
        raise ValueError("need at least one dataset")
    dims = {x.shape[1] for x in data}
    if len(dims) != 1:
        raise ValueError(f"datasets disagree on dimension: {sorted(dims)}")
    return data


def hdp_objective(datasets, state: HdpState, lambda_local: float, lambda_global: float) -> float:
    """Global k-means error around member means plus both cluster penalties."""
    data = as_collection(datasets)
    g = state.g
    labels = []
    for j, (x, z, v) in enumerate(zip(data, state.local_assignments, state.associations)):
        z = np.asarray(z)
        v = np.asarray(v)
        if len(z) != len(x):
            raise ValueError(f"dataset {j}: {len(x)} points but {len(z)} assignments")
        if len(z) and (z.min() < 0 or z.max() >= len(v)):
            raise ValueError(f"dataset {j}: local id without an association")
        if len(v) and (v.min() < 0 or v.max() >= g):
            raise ValueError(f"dataset {j}: dangling association to a missing global cluster")
        labels.append(v[z])
    X = np.vstack(data)
    lab = np.concatenate(labels)
    counts = np.bincount(lab, minlength=g)
    if np.any(counts == 0):
        raise ValueError("global cluster without members")
    sums = np.zeros((g, X.shape[1]))
    np.add.at(sums, lab, X)
    mu = sums / counts[:, None]
    diff = X - mu[lab]
    return float(np.einsum("ij,ij->", diff, diff)) + lambda_local * state.k + lambda_global * g


# ---------------------------------------------------------------------------
# step 4: per-point reassignment


@njit
def _step4_numba(X, ds_start, zl, loc_ds, loc_glob, loc_size, L, mu, G, lam_l, lam_g, assoc, kind, chosen, best_assoc):
    D = ds_start.shape[0] - 1
    d = X.shape[1]
    changed = False
    for j in range(D):
        for p in range(assoc.shape[0]):
            assoc[p] = 0
        for c in range(L):
            if loc_ds[c] == j and loc_size[c] > 0:
                assoc[loc_glob[c]] += 1
        for i in range(ds_start[j], ds_start[j + 1]):
            a = zl[i]
            pa = loc_glob[a]
            best = np.inf
            arg = -1
            braw = np.inf
            raw_arg = 0.0
            for p in range(G):
                s = 0.0
                for t in range(d):
                    diff = X[i, t] - mu[p, t]
                    s += diff * diff
                if assoc[p] > 0:
                    if s < braw:
                        braw = s
                    adj = s
                else:
                    adj = s + lam_l
                if adj < best:
                    best = adj
                    arg = p
                    raw_arg = s
            best_assoc[i] = braw
            if best > lam_l + lam_g:
                for t in range(d):
                    mu[G, t] = X[i, t]
                loc_ds[L] = j
                loc_glob[L] = G
                loc_size[L] = 0
                assoc[G] = 1
                target = L
                L += 1
                G += 1
                kind[i] = 3
                chosen[i] = 0.0
            elif arg == pa:
                kind[i] = 0
                chosen[i] = raw_arg
                continue
            elif assoc[arg] > 0:
                target = -1
                for c in range(L):
                    if loc_ds[c] == j and loc_glob[c] == arg and loc_size[c] > 0:
                        target = c
                        break
                kind[i] = 1
                chosen[i] = raw_arg
            else:
                loc_ds[L] = j
                loc_glob[L] = arg
                loc_size[L] = 0
                assoc[arg] += 1
                target = L
                L += 1
                kind[i] = 2
                chosen[i] = raw_arg
            loc_size[a] -= 1
            if loc_size[a] == 0:
                assoc[pa] -= 1
            loc_size[target] += 1
            zl[i] = target
            changed = True
    return L, G, changed


def _step4_numpy(X, ds_start, zl, loc_ds, loc_glob, loc_size, L, mu, G, lam_l, lam_g, assoc, kind, chosen, best_assoc):
    changed = False
    for j in range(len(ds_start) - 1):
        assoc[:] = 0
        live = np.flatnonzero((loc_ds[:L] == j) & (loc_size[:L] > 0))
        np.add.at(assoc, loc_glob[live], 1)
        for i in range(ds_start[j], ds_start[j + 1]):
            a = zl[i]
            pa = loc_glob[a]
            diff = mu[:G] - X[i]
            raw = np.einsum("ij,ij->i", diff, diff)
            used = assoc[:G] > 0
            adj = np.where(used, raw, raw + lam_l)
            arg = int(np.argmin(adj))
            best_assoc[i] = raw[used].min() if used.any() else np.inf
            if adj[arg] > lam_l + lam_g:
                mu[G] = X[i]
                loc_ds[L], loc_glob[L], loc_size[L] = j, G, 0
                assoc[G] = 1
                target = L
                L += 1
                G += 1
                kind[i], chosen[i] = NEW_GLOBAL, 0.0
            elif arg == pa:
                kind[i], chosen[i] = STAY, raw[arg]
                continue
            elif assoc[arg] > 0:
                hits = (loc_ds[:L] == j) & (loc_glob[:L] == arg) & (loc_size[:L] > 0)
                target = int(np.argmax(hits))
                kind[i], chosen[i] = JOIN, raw[arg]
            else:
                loc_ds[L], loc_glob[L], loc_size[L] = j, arg, 0
                assoc[arg] += 1
                target = L
                L += 1
                kind[i], chosen[i] = NEW_LOCAL, raw[arg]
            loc_size[a] -= 1
            if loc_size[a] == 0:
                assoc[pa] -= 1
            loc_size[target] += 1
            zl[i] = target
            changed = True
    return L, G, changed


step4 = pick(_step4_numba, _step4_numpy)


# ---------------------------------------------------------------------------
# step 5: per-local-cluster re-association
#
# sum_{x in S} ||x - mu_p||^2 = n_S ||m_S - mu_p||^2 + SS_S, so comparing the
# minimum against lam_g + SS_S only needs local means and sizes.


@njit
def _step5_numba(visit, loc_mean, loc_size, loc_glob, mu, G, lam_g):
    d = mu.shape[1]
    changes = 0
    for t in range(visit.shape[0]):
        c = visit[t]
        best = np.inf
        arg = -1
        for p in range(G):
            s = 0.0
            for q in range(d):
                diff = loc_mean[c, q] - mu[p, q]
                s += diff * diff
            if s < best:
                best = s
                arg = p
        if loc_size[c] * best > lam_g:
            for q in range(d):
                mu[G, q] = loc_mean[c, q]
            loc_glob[c] = G
            G += 1
            changes += 1
        elif arg != loc_glob[c]:
            loc_glob[c] = arg
            changes += 1
    return G, changes


def _step5_numpy(visit, loc_mean, loc_size, loc_glob, mu, G, lam_g):
    changes = 0
    for c in visit:
        diff = mu[:G] - loc_mean[c]
        dist = np.einsum("ij,ij->i", diff, diff)
        arg = int(np.argmin(dist))
        if loc_size[c] * dist[arg] > lam_g:
            mu[G] = loc_mean[c]
            loc_glob[c] = G
            G += 1
            changes += 1
        elif arg != loc_glob[c]:
            loc_glob[c] = arg
            changes += 1
    return G, changes


step5 = pick(_step5_numba, _step5_numpy)


# ---------------------------------------------------------------------------


def _objective_and_compact(X, zl, loc_ds, loc_glob, L, lam_l, lam_g):
    """Drop empty clusters, renumber, recompute global means, score."""
    live = np.flatnonzero(np.bincount(zl, minlength=L) > 0)
    # stable sort by dataset keeps creation order as the local id
    live = live[np.argsort(loc_ds[live], kind="stable")]
    remap = np.full(L, -1, dtype=np.int64)
    remap[live] = np.arange(len(live))
    zl = remap[zl]
    loc_ds = loc_ds[live]
    glob, G = compact_labels(loc_glob[live])
    lab = glob[zl]
    counts = np.bincount(lab, minlength=G)
    sums = np.zeros((G, X.shape[1]))
    np.add.at(sums, lab, X)
    mu = sums / counts[:, None]
    diff = X - mu[lab]
    obj = float(np.einsum("ij,ij->", diff, diff)) + lam_l * len(live) + lam_g * G
    return zl, loc_ds, glob, mu, obj


def run_hard_hdp(
    datasets,
    lambda_local: float,
    lambda_global: float,
    max_iters: int = 1000,
    tol: float = 1e-9,
    record_decisions: bool = False,
) -> HdpState:
    """Cluster several datasets with shared global centroids.

    Starts from one global cluster at the grand mean and one local cluster
    per dataset. Each iteration reassigns points (new local cluster costs
    ``lambda_local``, new local+global costs both penalties), then
    re-associates whole local clusters (new global costs ``lambda_global``),
    then recomputes global means. Datasets are visited in index order and
    points in storage order.
    """
    data = as_collection(datasets)
    for name, val in (("lambda_local", lambda_local), ("lambda_global", lambda_global)):
        if not (np.isfinite(val) and val > 0):
            raise ValueError(f"{name} must be finite and positive")
    X = np.ascontiguousarray(np.vstack(data))
    N, d = X.shape
    D = len(data)
    sizes = np.array([len(x) for x in data])
    ds_start = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    ds_of = np.repeat(np.arange(D), sizes)

    zl = ds_of.astype(np.int64).copy()  # local j of dataset j
    loc_ds = np.arange(D, dtype=np.int64)
    glob = np.zeros(D, dtype=np.int64)
    mu = X.mean(axis=0, keepdims=True)
    diff = X - mu
    trace = [float(np.einsum("ij,ij->", diff, diff)) + lambda_local * D + lambda_global]
    step5_changes = []
    decisions = [] if record_decisions else None

    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        L0, G0 = len(loc_ds), len(mu)
        Lcap = L0 + N
        Gcap = G0 + N + Lcap
        t_ds = np.empty(Lcap, dtype=np.int64)
        t_glob = np.empty(Lcap, dtype=np.int64)
        t_size = np.zeros(Lcap, dtype=np.int64)
        t_ds[:L0] = loc_ds
        t_glob[:L0] = glob
        t_size[:L0] = np.bincount(zl, minlength=L0)
        t_mu = np.empty((Gcap, d))
        t_mu[:G0] = mu
        assoc = np.zeros(Gcap, dtype=np.int64)
        kind = np.empty(N, dtype=np.int64)
        chosen = np.empty(N)
        best_assoc = np.empty(N)

        L, G, changed = step4(
            X, ds_start, zl, t_ds, t_glob, t_size, L0, t_mu, G0,
            float(lambda_local), float(lambda_global), assoc, kind, chosen, best_assoc,
        )
        if record_decisions:
            decisions.append({"kind": kind, "chosen": chosen, "best_associated": best_assoc})

        counts = np.bincount(zl, minlength=L)
        sums = np.zeros((L, d))
        np.add.at(sums, zl, X)
        live = counts > 0
        loc_mean = np.zeros((L, d))
        loc_mean[live] = sums[live] / counts[live, None]
        visit = np.flatnonzero(live)
        visit = visit[np.argsort(t_ds[visit], kind="stable")]
        G, n5 = step5(visit, loc_mean, counts, t_glob, t_mu, G, float(lambda_global))
        step5_changes.append(int(n5))

        zl, loc_ds, glob, mu, obj = _objective_and_compact(
            X, zl, t_ds[:L], t_glob[:L], L, lambda_local, lambda_global
        )
        trace.append(obj)
        log.debug("iteration %d: g=%d k=%d objective=%.6g", it, len(mu), len(loc_ds), obj)
        if not (changed or n5) or trace[-2] - trace[-1] < tol:
            converged = True
            break

    # split the pooled table back into per-dataset views
    first_local = np.searchsorted(loc_ds, np.arange(D))
    local_assignments = [zl[ds_start[j] : ds_start[j + 1]] - first_local[j] for j in range(D)]
    associations = [glob[loc_ds == j] for j in range(D)]
    return HdpState(
        local_assignments, associations, mu, trace[-1], it, converged, trace, step5_changes, decisions
    )


def select_hdp_penalties(datasets, k_hint: int, g_hint: int) -> tuple[float, float]:
    """Farthest-first penalties for the hard HDP.

    ``lambda_local`` averages the single-dataset heuristic with ``k_hint``
    rounds. ``lambda_global`` runs ``g_hint`` farthest-first rounds over the
    pooled points, scoring each dataset by the summed squared distance of
    its points to the current set and adding the chosen dataset's farthest
    point. The final-round score is divided by ``k_hint`` so the penalty is
    on the scale of one local cluster's summed distance, which is what the
    global test in the re-association step compares it against.
    """
    data = as_collection(datasets)
    if k_hint < 1 or g_hint < 1:
        raise ValueError("hints must be at least 1")
    for j, x in enumerate(data):
        if k_hint > len(x):
            raise ValueError(f"k_hint={k_hint} exceeds size of dataset {j} ({len(x)})")
    lam_l = float(np.mean([farthest_first_lambda(x, k_hint) for x in data]))
    lam_g = _farthest_first_sums(data, g_hint) / k_hint
    return lam_l, lam_g


def _farthest_first_sums(data: list[np.ndarray], rounds: int) -> float:
    X = np.vstack(data)
    if rounds > len(X):
        raise ValueError(f"g_hint={rounds} exceeds pooled size ({len(X)})")
    sizes = [len(x) for x in data]
    ds_of = np.repeat(np.arange(len(data)), sizes)
    dmin = ((X - X.mean(axis=0)) ** 2).sum(axis=1)
    value = 0.0
    for _ in range(rounds):
        per_ds = np.bincount(ds_of, weights=dmin, minlength=len(data))
        j = int(np.argmax(per_ds))
        value = float(per_ds[j])
        members = np.flatnonzero(ds_of == j)
        i = members[np.argmax(dmin[members])]
        dmin = np.minimum(dmin, ((X - X[i]) ** 2).sum(axis=1))
    return value
