"""Reproduction harness shared by ``npclust repro`` and the acceptance tests."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import as_points
from .dataio import iris
from .dpmeans import farthest_first_lambda, run_dpmeans, run_kmeans
from .evaluation import nmi
from .hdpmeans import run_hard_hdp, select_hdp_penalties
from .synth import gen_hdp_benchmark, three_gaussians


def worker_count(jobs: int) -> int:
    """Threads for ``jobs`` independent runs, capped by ``NPCLUST_THREADS``."""
    cap = os.environ.get("NPCLUST_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    if limit < 1:
        raise ValueError("NPCLUST_THREADS must be at least 1")
    return max(1, min(limit, jobs))


def parallel_map(fn, items):
    items = list(items)
    workers = worker_count(len(items))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# three Gaussians


@dataclass(frozen=True)
class Fig2Run:
    seed: int
    lam: float
    k: int
    iterations: int
    nmi: float


def fig2_run(seed: int, separation: float = 8.0, k_hint: int = 3) -> Fig2Run:
    ds = three_gaussians(seed, separation=separation)
    lam = farthest_first_lambda(ds.points, k_hint)
    res = run_dpmeans(ds.points, lam)
    return Fig2Run(seed, lam, res.k, res.iterations, nmi(res.assignments, ds.labels))


def fig2_runs(seeds=range(100), separation: float = 8.0) -> list[Fig2Run]:
    return parallel_map(lambda s: fig2_run(s, separation), seeds)


def lambda_grid(points, size: int = 40) -> np.ndarray:
    """Log-spaced penalties from the smallest nonzero pairwise squared
    distance up to the largest squared distance to the global mean."""
    X = as_points(points)
    sq = (X**2).sum(axis=1)
    D2 = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    iu = np.triu_indices(len(X), 1)
    pair = D2[iu]
    pair = pair[pair > 1e-12]
    lo = float(pair.min()) if len(pair) else 1e-12
    hi = float(((X - X.mean(axis=0)) ** 2).sum(axis=1).max())
    if not hi > lo:
        hi = lo * 10.0
    return np.geomspace(lo, hi, size)


def lambda_sweep(points, size: int = 40) -> tuple[np.ndarray, np.ndarray]:
    grid = lambda_grid(points, size)
    ks = np.array(parallel_map(lambda lam: run_dpmeans(points, lam).k, grid))
    return grid, ks


def longest_run(values, target) -> int:
    best = cur = 0
    for v in values:
        cur = cur + 1 if v == target else 0
        best = max(best, cur)
    return best


# ---------------------------------------------------------------------------
# shared-cluster benchmark


@dataclass(frozen=True)
class HdpBenchRun:
    seed: int
    lambda_local: float
    lambda_global: float
    g: int
    mean_k_j: float
    iterations: int
    nmi_hdp: float
    nmi_dpmeans: float
    nmi_kmeans: float


def mean_dataset_nmi(assignments, labels) -> float:
    """Average over datasets of the NMI within each dataset."""
    return float(np.mean([nmi(a, b) for a, b in zip(assignments, labels)]))


def _split(z, sizes):
    return np.split(np.asarray(z), np.cumsum(sizes)[:-1])


def hdp_bench_run(seed: int, k_hint: int = 5, g_hint: int = 15) -> HdpBenchRun:
    datasets, labels = gen_hdp_benchmark(seed)
    lam_l, lam_g = select_hdp_penalties(datasets, k_hint, g_hint)
    state = run_hard_hdp(datasets, lam_l, lam_g)
    pooled = np.vstack(datasets)
    sizes = [len(x) for x in datasets]
    dp = run_dpmeans(pooled, farthest_first_lambda(pooled, g_hint))
    km = run_kmeans(pooled, g_hint, seed=seed)
    return HdpBenchRun(
        seed,
        lam_l,
        lam_g,
        state.g,
        float(np.mean(state.k_j)),
        state.iterations,
        mean_dataset_nmi(state.global_assignments, labels),
        mean_dataset_nmi(_split(dp.assignments, sizes), labels),
        mean_dataset_nmi(_split(km.assignments, sizes), labels),
    )


def hdp_bench_runs(seeds=range(10)) -> list[HdpBenchRun]:
    return parallel_map(hdp_bench_run, seeds)


# ---------------------------------------------------------------------------
# iris


def iris_nmi(seeds=range(10), k_hint: int = 3) -> list[float]:
    data = iris()
    lam = farthest_first_lambda(data.points, k_hint)
    return [nmi(run_dpmeans(data.points, lam, shuffle=True, seed=s).assignments, data.labels) for s in seeds]
