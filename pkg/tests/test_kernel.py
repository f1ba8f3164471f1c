import numpy as np
import pytest

from npclust.dpmeans import run_dpmeans
from npclust.evaluation import brute_force_optimum
from npclust.kernel import (
    build_kernel,
    check_kernel,
    farthest_first_lambda_kernel,
    kernel_point_to_cluster_dist,
    run_weighted_kernel_dpmeans,
    weighted_kernel_objective,
)
from npclust.dpmeans import farthest_first_lambda

from conftest import random_instance

TOY = np.array([[0.0], [1.0], [10.0]])


def test_distance_examples():
    K = build_kernel(TOY)
    assert kernel_point_to_cluster_dist(K, None, 2, [0, 1]) == pytest.approx(90.25)
    assert kernel_point_to_cluster_dist(K, None, 1, [1]) == 0.0
    K2 = build_kernel([[0.0], [4.0]])
    assert kernel_point_to_cluster_dist(K2, [1.0, 3.0], 0, [0, 1]) == pytest.approx(9.0)
    with pytest.raises(ValueError):
        kernel_point_to_cluster_dist(K, None, 0, [])


def test_linear_distance_matches_explicit(rng):
    X = rng.normal(size=(10, 3))
    w = rng.uniform(0.5, 2, size=10)
    K = build_kernel(X)
    members = [1, 4, 7]
    m = (w[members, None] * X[members]).sum(0) / w[members].sum()
    for x in range(10):
        assert kernel_point_to_cluster_dist(K, w, x, members) == pytest.approx(((X[x] - m) ** 2).sum(), abs=1e-9)


def test_build_kernel():
    X = np.random.default_rng(0).normal(size=(6, 2))
    G = build_kernel(X, "gaussian", 0.7)
    assert np.all(np.diag(G) == 1.0) and np.array_equal(G, G.T)
    assert np.allclose(build_kernel(X, "gaussian", 1e8), 1.0)
    assert np.array_equal(build_kernel(np.eye(3)), np.eye(3))
    with pytest.raises(ValueError):
        build_kernel(X, "gaussian")
    with pytest.raises(ValueError):
        build_kernel(X, "cubic")


def test_weighted_objective_matches_features(rng):
    X = rng.normal(size=(15, 2))
    w = rng.uniform(0.2, 3, size=15)
    z = rng.integers(0, 4, size=15)
    expected = 0.0
    for c in np.unique(z):
        m = np.average(X[z == c], axis=0, weights=w[z == c])
        expected += (w[z == c] * ((X[z == c] - m) ** 2).sum(1)).sum()
    assert weighted_kernel_objective(build_kernel(X), w, z) == pytest.approx(expected, abs=1e-9)


def test_toy_run(backend):
    res = run_weighted_kernel_dpmeans(build_kernel(TOY), None, 4.0)
    assert res.assignments.tolist() == [0, 0, 1]
    assert res.objective == pytest.approx(8.5)


def test_huge_lambda_one_cluster(backend, rng):
    X = rng.normal(size=(20, 2))
    w = rng.uniform(0.5, 2, 20)
    lam = w.max() * ((X - X.mean(0)) ** 2).sum(1).max() * 10
    assert run_weighted_kernel_dpmeans(build_kernel(X), w, lam).k == 1


def test_identity_kernel_gives_singletons(backend):
    res = run_weighted_kernel_dpmeans(np.eye(4), None, 0.5)
    assert res.k == 4
    best, z = brute_force_optimum(np.eye(4), 0.5)
    assert len(set(z.tolist())) == 4 and res.objective == pytest.approx(best)


def test_equivalent_to_explicit_dpmeans(backend):
    rng = np.random.default_rng(0)
    for _ in range(25):
        X, lam = random_instance(rng)
        a = run_dpmeans(X, lam)
        b = run_weighted_kernel_dpmeans(build_kernel(X), None, lam)
        assert np.array_equal(a.assignments, b.assignments)
        assert abs(a.objective - b.objective) <= 1e-9 * max(1.0, abs(a.objective))
        assert a.iterations == b.iterations


def test_weighted_monotone(backend):
    rng = np.random.default_rng(1)
    for _ in range(25):
        X, lam = random_instance(rng)
        w = rng.uniform(0.2, 3, size=len(X))
        kind = "gaussian" if rng.random() < 0.5 else "linear"
        K = build_kernel(X, kind, 2.0)
        lam = lam / 30 if kind == "gaussian" else lam
        res = run_weighted_kernel_dpmeans(K, w, lam, order=rng.permutation(len(X)))
        assert np.all(np.diff(res.trace) <= 1e-9)
        assert res.objective == pytest.approx(weighted_kernel_objective(K, w, res.assignments) + lam * res.k)


def test_validation():
    with pytest.raises(ValueError):
        run_weighted_kernel_dpmeans(np.eye(2), None, 0.0)
    with pytest.raises(ValueError):
        run_weighted_kernel_dpmeans(np.eye(2), [1.0, -1.0], 1.0)
    with pytest.raises(ValueError):
        run_weighted_kernel_dpmeans(np.eye(2), None, 1.0, order=[0, 0])
    with pytest.raises(ValueError, match="PSD"):
        check_kernel(np.array([[0.0, 1.0], [1.0, 0.0]]), psd_tol=1e-8)


def test_kernel_farthest_first_matches_explicit(rng):
    X = rng.normal(size=(30, 2))
    for k in (1, 3, 5):
        assert farthest_first_lambda_kernel(build_kernel(X), k) == pytest.approx(farthest_first_lambda(X, k))
