"""Penalized hard clustering: DP-means, a hard hierarchical variant shared
across datasets, kernel and graph-cut forms, a spectral relaxation, and the
Gibbs sampler they descend from."""

__version__ = "0.1.0"

from ._accel import backend, set_backend, use_backend
from .dpmeans import (
    Clustering,
    dpmeans_objective,
    farthest_first_lambda,
    run_dpmeans,
    run_kmeans,
)
from .evaluation import brute_force_optimum, brute_force_penalized_cut, nmi
from .gibbs import GibbsConfig, alpha_from_lambda, run_gibbs
from .graphcut import SparseGraph, cut_objective, run_penalized_ncut
from .hdpmeans import hdp_objective, run_hard_hdp, select_hdp_penalties
from .kernel import build_kernel, run_weighted_kernel_dpmeans
from .spectral import relax, round_relaxed, spectral_dpmeans
from .synth import gen_hdp_benchmark, three_gaussians

__all__ = [
    "Clustering",
    "GibbsConfig",
    "SparseGraph",
    "alpha_from_lambda",
    "backend",
    "brute_force_optimum",
    "brute_force_penalized_cut",
    "build_kernel",
    "cut_objective",
    "dpmeans_objective",
    "farthest_first_lambda",
    "gen_hdp_benchmark",
    "hdp_objective",
    "nmi",
    "relax",
    "round_relaxed",
    "run_dpmeans",
    "run_gibbs",
    "run_hard_hdp",
    "run_kmeans",
    "run_penalized_ncut",
    "run_weighted_kernel_dpmeans",
    "select_hdp_penalties",
    "set_backend",
    "spectral_dpmeans",
    "three_gaussians",
    "use_backend",
]
