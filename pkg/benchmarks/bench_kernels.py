"""Time each hot loop under the numba and numpy backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--quick]

Every workload runs once per backend before timing so numba compilation is
excluded. The reported figure is the best of ``--repeat`` runs.
"""

import argparse
import timeit

import numpy as np

from npclust import use_backend
from npclust.core import sym_eig
from npclust.dpmeans import farthest_first_lambda, run_dpmeans
from npclust.gibbs import GibbsConfig, run_gibbs
from npclust.graphcut import SparseGraph, run_penalized_ncut
from npclust.hdpmeans import run_hard_hdp, select_hdp_penalties
from npclust.kernel import build_kernel, run_weighted_kernel_dpmeans
from npclust.synth import gen_hdp_benchmark, three_gaussians


def random_graph(n, avg_degree, seed):
    rng = np.random.default_rng(seed)
    m = n * avg_degree // 2
    i, j = rng.integers(0, n, m), rng.integers(0, n, m)
    keep = i != j
    ring = np.arange(n)
    edges = np.column_stack([np.r_[i[keep], ring], np.r_[j[keep], (ring + 1) % n], np.ones(keep.sum() + n)])
    return SparseGraph.from_edges(edges, n)


def workloads(scale):
    ds = three_gaussians(0, n_per=1000 * scale)
    lam = farthest_first_lambda(ds.points, 3)
    A = np.random.default_rng(1).normal(size=(60 * scale, 60 * scale))
    S = A + A.T
    datasets, _ = gen_hdp_benchmark(0)
    lam_l, lam_g = select_hdp_penalties(datasets, 5, 15)
    small = three_gaussians(2, n_per=200 * scale)
    K = build_kernel(small.points, "gaussian", 2.0)
    graph = random_graph(2000 * scale, 8, seed=3)
    cfg = GibbsConfig.from_alpha(0.5, 1.0, iterations=5, seed=0)
    return {
        "dpmeans pass": lambda: run_dpmeans(ds.points, lam),
        "jacobi eigensolver": lambda: sym_eig(S),
        "hard HDP steps": lambda: run_hard_hdp(datasets, lam_l, lam_g),
        "kernel DP-means pass": lambda: run_weighted_kernel_dpmeans(K, None, 0.05),
        "sparse ncut pass": lambda: run_penalized_ncut(graph, -0.5, initial=np.arange(graph.n) % 50),
        "gibbs sweep": lambda: run_gibbs(small.points, cfg),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--quick", action="store_true", help="smaller problems")
    args = parser.parse_args()
    jobs = workloads(1 if args.quick else 2)
    print(f"{'workload':<24}{'numba s':>12}{'numpy s':>12}{'speedup':>10}")
    for name, fn in jobs.items():
        best = {}
        for backend in ("numba", "numpy"):
            with use_backend(backend):
                fn()
                best[backend] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        print(f"{name:<24}{best['numba']:>12.4f}{best['numpy']:>12.4f}{best['numpy'] / best['numba']:>9.1f}x")


if __name__ == "__main__":
    main()
