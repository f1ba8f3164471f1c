"""``npclust`` command line.

Every algorithm subcommand prints a short summary (k, objective, passes,
wall time) to stderr and writes a JSON result to ``--output`` (stdout by
default). Exit status is 0 on success, 2 on usage errors and 1 when the
computation itself fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import (
    read_datasets,
    read_labels,
    read_points,
    to_jsonable,
    write_datasets,
    write_points,
    write_result,
)
from .dpmeans import dpmeans_objective, farthest_first_lambda, run_dpmeans, run_kmeans
from .evaluation import nmi
from .experiments import fig2_runs, hdp_bench_runs, lambda_sweep, longest_run
from .gibbs import GibbsConfig, run_gibbs
from .graphcut import read_edge_list, run_penalized_ncut
from .hdpmeans import run_hard_hdp, select_hdp_penalties
from .kernel import build_kernel, farthest_first_lambda_kernel, run_weighted_kernel_dpmeans
from .spectral import eigengap_lambda, spectral_dpmeans
from .synth import gen_hdp_benchmark, three_gaussians

log = logging.getLogger("npclust")


class UsageError(Exception):
    """Bad flags or missing inputs; maps to exit status 2."""


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    return p


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _count(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _emit(args, result: dict, summary: dict, started: float) -> None:
    summary = dict(summary, seconds=round(time.perf_counter() - started, 4))
    print(" ".join(f"{k}={_fmt(v)}" for k, v in summary.items()), file=sys.stderr)
    result = dict(result, command=args.command, config=_config_echo(args), wall_time=summary["seconds"])
    if args.output == "-":
        print(json.dumps(to_jsonable(result), indent=2))
    else:
        write_result(args.output, result)


def _fmt(v) -> str:
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def _config_echo(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "command")}


def _load_points(args):
    data = read_points(_existing(args.input), labels=args.labels)
    return data.points, data.labels


def _score(summary: dict, result: dict, assignments, labels) -> None:
    if labels is not None:
        result["nmi"] = summary["nmi"] = nmi(assignments, labels)


# ---------------------------------------------------------------------------
# subcommands


def cmd_dpmeans(args) -> None:
    X, labels = _load_points(args)
    t0 = time.perf_counter()
    lam = args.lam if args.lam is not None else farthest_first_lambda(X, args.k_hint)
    res = run_dpmeans(X, lam, max_iters=args.max_iters, tol=args.tol, shuffle=args.shuffle, seed=args.seed)
    summary = {"k": res.k, "objective": res.objective, "passes": res.iterations, "lambda": lam}
    result = {
        "assignments": res.assignments,
        "centroids": res.centroids,
        "k": res.k,
        "lambda": lam,
        "objective": res.objective,
        "iterations": res.iterations,
        "converged": res.converged,
        "trace": res.trace,
        "seed": args.seed,
    }
    _score(summary, result, res.assignments, labels)
    _emit(args, result, summary, t0)


def cmd_kmeans(args) -> None:
    X, labels = _load_points(args)
    t0 = time.perf_counter()
    res = run_kmeans(X, args.k, seed=args.seed, max_iters=args.max_iters, n_init=args.n_init)
    summary = {"k": res.k, "objective": res.objective, "passes": res.iterations}
    result = {
        "assignments": res.assignments,
        "centroids": res.centroids,
        "k": res.k,
        "objective": res.objective,
        "iterations": res.iterations,
        "converged": res.converged,
        "trace": res.trace,
        "seed": args.seed,
    }
    _score(summary, result, res.assignments, labels)
    _emit(args, result, summary, t0)


def cmd_hdpmeans(args) -> None:
    datasets, labels = read_datasets(_existing(args.input), labels=args.labels)
    t0 = time.perf_counter()
    if args.lambda_local is not None:
        lam_l, lam_g = args.lambda_local, args.lambda_global
    else:
        lam_l, lam_g = select_hdp_penalties(datasets, args.k_hint, args.g_hint)
    st = run_hard_hdp(datasets, lam_l, lam_g, max_iters=args.max_iters, tol=args.tol)
    summary = {"k": st.k, "g": st.g, "objective": st.objective, "passes": st.iterations}
    result = {
        "assignments": st.global_assignments,
        "local_assignments": st.local_assignments,
        "associations": st.associations,
        "centroids": st.global_centroids,
        "k": st.k,
        "k_j": st.k_j,
        "g": st.g,
        "lambda_local": lam_l,
        "lambda_global": lam_g,
        "objective": st.objective,
        "iterations": st.iterations,
        "converged": st.converged,
        "trace": st.trace,
    }
    if labels is not None:
        result["nmi"] = summary["nmi"] = float(np.mean([nmi(a, b) for a, b in zip(st.global_assignments, labels)]))
    _emit(args, result, summary, t0)


def _kernel_from_args(args, X):
    if args.kernel == "gaussian" and args.bandwidth is None:
        raise UsageError("--kernel gaussian needs --bandwidth")
    return build_kernel(X, args.kernel, args.bandwidth)


def cmd_kernel_dpmeans(args) -> None:
    X, labels = _load_points(args)
    t0 = time.perf_counter()
    K = _kernel_from_args(args, X)
    lam = args.lam if args.lam is not None else farthest_first_lambda_kernel(K, args.k_hint)
    res = run_weighted_kernel_dpmeans(K, None, lam, max_iters=args.max_iters, tol=args.tol)
    summary = {"k": res.k, "objective": res.objective, "passes": res.iterations, "lambda": lam}
    result = {
        "assignments": res.assignments,
        "k": res.k,
        "lambda": lam,
        "objective": res.objective,
        "iterations": res.iterations,
        "converged": res.converged,
        "trace": res.trace,
    }
    _score(summary, result, res.assignments, labels)
    _emit(args, result, summary, t0)


def cmd_spectral(args) -> None:
    X, labels = _load_points(args)
    t0 = time.perf_counter()
    K = _kernel_from_args(args, X)
    lam = args.lam if args.lam is not None else eigengap_lambda(K, args.k_hint)
    sol, res = spectral_dpmeans(K, lam, seed=args.seed, n_init=args.n_init)
    summary = {"kept_eigenvectors": sol.m, "k": res.k, "relaxed_value": sol.relaxed_value, "lambda": lam}
    result = {
        "assignments": res.assignments,
        "k": res.k,
        "kept_eigenvalues": sol.kept_eigenvalues,
        "near_threshold_eigenvalues": sol.near_threshold,
        "relaxed_value": sol.relaxed_value,
        "objective": dpmeans_objective(X, res.assignments, lam) if args.kernel == "linear" else None,
        "lambda": lam,
        "seed": args.seed,
    }
    _score(summary, result, res.assignments, labels)
    _emit(args, result, summary, t0)


def cmd_ncut(args) -> None:
    graph = read_edge_list(_existing(args.graph))
    t0 = time.perf_counter()
    shift = None if args.shift == "auto" else float(args.shift)
    initial = read_labels(_existing(args.initial)) if args.initial else None
    res = run_penalized_ncut(
        graph, args.lambda_prime, max_iters=args.max_iters, shift=shift, method=args.method, initial=initial
    )
    summary = {"k": res.k, "objective": res.penalized_cut, "cut": res.cut, "passes": res.iterations}
    result = {
        "assignments": res.assignments,
        "k": res.k,
        "objective": res.penalized_cut,
        "cut": res.cut,
        "shift": res.shift,
        "lambda": res.lam,
        "iterations": res.iterations,
        "converged": res.converged,
        "trace": res.trace,
    }
    _emit(args, result, summary, t0)


def cmd_gibbs(args) -> None:
    X, labels = _load_points(args)
    t0 = time.perf_counter()
    common = dict(
        rho=args.rho,
        iterations=args.iters,
        burn_in=args.burn_in,
        thinning=args.thin,
        seed=args.seed,
        resample_alpha=args.resample_alpha,
    )
    if args.alpha is not None:
        cfg = GibbsConfig.from_alpha(args.sigma, args.alpha, **common)
    else:
        cfg = GibbsConfig.from_lambda(args.sigma, args.alpha_from_lambda, X.shape[1], **common)
    res = run_gibbs(X, cfg)
    est = res.point_estimate
    summary = {"k": est.k, "modal_k": res.modal_k, "sweeps": cfg.iterations, "samples": len(res.samples)}
    result = {
        "assignments": est.assignments,
        "centroids": est.centroids,
        "k": est.k,
        "objective": est.objective,
        "modal_k": res.modal_k,
        "k_trace": res.k_trace,
        "log_alpha": cfg.log_alpha,
        "sample_log_joint": [s.log_joint for s in res.samples],
        "seed": args.seed,
    }
    _score(summary, result, est.assignments, labels)
    _emit(args, result, summary, t0)


def cmd_nmi(args) -> None:
    a = read_labels(_existing(args.labels_a))
    b = read_labels(_existing(args.labels_b))
    print(repr(nmi(a, b)))


def cmd_synth(args) -> None:
    if args.generator == "gaussians":
        ds = three_gaussians(args.seed, n_per=args.n_per, separation=args.separation, layout=args.layout)
        write_points(args.output, ds.points, ds.labels)
        print(f"wrote {len(ds.points)} points to {args.output}", file=sys.stderr)
    else:
        datasets, labels = gen_hdp_benchmark(args.seed)
        write_datasets(args.output, datasets, labels)
        print(f"wrote {len(datasets)} datasets to {args.output}", file=sys.stderr)


def cmd_repro(args) -> None:
    t0 = time.perf_counter()
    seeds = range(args.seeds)
    if args.experiment == "fig2":
        runs = fig2_runs(seeds)
        grid, ks = lambda_sweep(three_gaussians(0).points)
        print("lambda,k")
        for lam, k in zip(grid, ks):
            print(f"{lam:.6g},{k}")
        n3 = sum(r.k == 3 for r in runs)
        print(f"# runs with k=3: {n3}/{len(runs)}")
        print(f"# max passes: {max(r.iterations for r in runs)}")
        print(f"# mean NMI: {np.mean([r.nmi for r in runs]):.4f}")
        print(f"# longest k=3 plateau: {longest_run(ks, 3)} grid values")
        result = {"runs": [vars(r) for r in runs], "sweep": {"lambda": grid, "k": ks}}
    else:
        runs = hdp_bench_runs(seeds)
        print("seed,g,mean_k_j,nmi_hdp,nmi_dpmeans,nmi_kmeans")
        for r in runs:
            print(f"{r.seed},{r.g},{r.mean_k_j:.2f},{r.nmi_hdp:.4f},{r.nmi_dpmeans:.4f},{r.nmi_kmeans:.4f}")
        means = {f: float(np.mean([getattr(r, f) for r in runs])) for f in ("g", "nmi_hdp", "nmi_dpmeans", "nmi_kmeans")}
        print("# mean " + " ".join(f"{k}={v:.4f}" for k, v in means.items()))
        result = {"runs": [vars(r) for r in runs], "means": means}
    if args.output:
        write_result(args.output, dict(result, command="repro", config=_config_echo(args)))
    print(f"# wall time {time.perf_counter() - t0:.2f}s", file=sys.stderr)


# ---------------------------------------------------------------------------
# parser


def _input_flags(p, labels_help="last CSV column holds ground-truth labels (reports NMI)"):
    p.add_argument("--input", required=True, help="point CSV")
    p.add_argument("--labels", action="store_true", help=labels_help)
    p.add_argument("--output", default="-", help="JSON result path (default: stdout)")


def _penalty_flags(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda", dest="lam", type=_positive, help="cluster penalty")
    g.add_argument("--k-hint", type=_count, help="pick the penalty by farthest-first for this many clusters")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="npclust", description="Penalized hard clustering.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-pass progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dpmeans", help="DP-means")
    _input_flags(p)
    _penalty_flags(p)
    p.add_argument("--max-iters", type=_count, default=1000)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--shuffle", action="store_true", help="visit points in a seeded random order")
    p.set_defaults(func=cmd_dpmeans)

    p = sub.add_parser("kmeans", help="Lloyd k-means baseline")
    _input_flags(p)
    p.add_argument("--k", type=_count, required=True)
    p.add_argument("--max-iters", type=_count, default=300)
    p.add_argument("--n-init", type=_count, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_kmeans)

    p = sub.add_parser("hdpmeans", help="hard HDP over several datasets")
    _input_flags(p, "last CSV column holds ground-truth labels")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda-local", type=_positive)
    g.add_argument("--k-hint", type=_count)
    p.add_argument("--lambda-global", type=_positive)
    p.add_argument("--g-hint", type=_count)
    p.add_argument("--max-iters", type=_count, default=1000)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_hdpmeans)

    for name, func, help_ in (
        ("kernel-dpmeans", cmd_kernel_dpmeans, "DP-means on a kernel matrix"),
        ("spectral", cmd_spectral, "thresholded spectral relaxation plus rounding"),
    ):
        p = sub.add_parser(name, help=help_)
        _input_flags(p)
        _penalty_flags(p)
        p.add_argument("--kernel", choices=("linear", "gaussian"), default="linear")
        p.add_argument("--bandwidth", type=_positive)
        if name == "spectral":
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--n-init", type=_count, default=10)
        else:
            p.add_argument("--max-iters", type=_count, default=1000)
            p.add_argument("--tol", type=float, default=1e-9)
        p.set_defaults(func=func)

    p = sub.add_parser("ncut", help="penalized normalized cut")
    p.add_argument("--graph", required=True, help="edge list: 'i j weight' per line")
    p.add_argument("--lambda-prime", type=float, required=True)
    p.add_argument("--shift", default="auto", help="'auto' or a non-negative value")
    p.add_argument("--method", choices=("sparse", "dense"), default="sparse")
    p.add_argument("--initial", help="label file with a starting partition")
    p.add_argument("--max-iters", type=_count, default=1000)
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_ncut)

    p = sub.add_parser("gibbs", help="DP Gaussian mixture Gibbs sampler")
    _input_flags(p)
    p.add_argument("--sigma", type=_positive, required=True)
    p.add_argument("--rho", type=_positive, default=100.0)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--alpha", type=_positive)
    g.add_argument("--alpha-from-lambda", type=_positive, metavar="LAMBDA")
    p.add_argument("--iters", type=_count, default=100)
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--thin", type=_count, default=1)
    p.add_argument("--resample-alpha", action="store_true", help="gamma(1, 1) prior on alpha")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_gibbs)

    p = sub.add_parser("nmi", help="NMI between two label files")
    p.add_argument("labels_a")
    p.add_argument("labels_b")
    p.set_defaults(func=cmd_nmi)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("generator", choices=("gaussians", "hdp-benchmark"))
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-per", type=_count, default=100)
    p.add_argument("--separation", type=_positive, default=8.0)
    p.add_argument("--layout", choices=("line", "triangle"), default="line")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("repro", help="rerun a reference experiment and print a table")
    p.add_argument("experiment", choices=("fig2", "hdp-bench"))
    p.add_argument("--seeds", type=_count, help="number of seeds (default 100 for fig2, 10 for hdp-bench)")
    p.add_argument("--output", help="also write the JSON result here")
    p.set_defaults(func=cmd_repro)
    return parser


def _check_pairs(args) -> None:
    if args.command == "hdpmeans":
        if args.lambda_local is not None and args.lambda_global is None:
            raise UsageError("--lambda-local needs --lambda-global")
        if args.k_hint is not None and args.g_hint is None:
            raise UsageError("--k-hint needs --g-hint")
    if args.command == "ncut" and args.shift != "auto":
        try:
            if float(args.shift) < 0:
                raise ValueError
        except ValueError:
            raise UsageError(f"--shift must be 'auto' or a non-negative number, got {args.shift}") from None
    if args.command == "repro" and args.seeds is None:
        args.seeds = 100 if args.experiment == "fig2" else 10


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        _check_pairs(args)
        args.func(args)
    except UsageError as exc:
        print(f"npclust: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, FloatingPointError, OverflowError, OSError) as exc:
        print(f"npclust: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
