import numpy as np
import pytest

from npclust import use_backend
from npclust.dpmeans import farthest_first_lambda, run_dpmeans
from npclust.hdpmeans import (
    NEW_LOCAL,
    HdpState,
    hdp_objective,
    run_hard_hdp,
    select_hdp_penalties,
)
from npclust.synth import gen_hdp_benchmark


def random_collection(rng, d=2):
    D = int(rng.integers(1, 6))
    k = int(rng.integers(1, 6))
    centers = rng.uniform(0, 10, size=(k, d))
    data = []
    for _ in range(D):
        n = int(rng.integers(1, 30))
        data.append(centers[rng.integers(k, size=n)] + rng.normal(scale=0.7, size=(n, d)))
    return data, float(rng.uniform(0.5, 10)), float(rng.uniform(0.5, 20))


def check_structure(data, st):
    assert len(st.local_assignments) == len(data)
    for x, z, v in zip(data, st.local_assignments, st.associations):
        assert len(z) == len(x)
        assert np.bincount(z, minlength=len(v)).min() >= 1  # no empty locals
        assert np.all((0 <= v) & (v < st.g))
    used = np.concatenate(st.associations)
    assert set(used.tolist()) == set(range(st.g))  # no empty globals
    assert st.k == sum(st.k_j)


def test_monotone_and_consistent(backend):
    rng = np.random.default_rng(0)
    for _ in range(60):
        data, lam_l, lam_g = random_collection(rng)
        st = run_hard_hdp(data, lam_l, lam_g)
        assert np.all(np.diff(st.trace) <= 1e-9), st.trace
        check_structure(data, st)
        assert st.objective == pytest.approx(hdp_objective(data, st, lam_l, lam_g), abs=1e-9)


def test_step4_never_prefers_an_unused_global_within_penalty(backend):
    rng = np.random.default_rng(1)
    for _ in range(20):
        data, lam_l, lam_g = random_collection(rng)
        st = run_hard_hdp(data, lam_l, lam_g, record_decisions=True)
        for rec in st.decisions:
            new_local = rec["kind"] == NEW_LOCAL
            assert np.all(rec["chosen"][new_local] + lam_l <= rec["best_associated"][new_local] + 1e-12)


def test_single_dataset_reduces_to_dpmeans(backend):
    rng = np.random.default_rng(2)
    compared = 0
    for _ in range(60):
        n = int(rng.integers(2, 40))
        X = rng.normal(scale=3, size=(n, 2))
        lam_l, lam_g = float(rng.uniform(0.5, 5)), float(rng.uniform(0.5, 5))
        st = run_hard_hdp([X], lam_l, lam_g)
        if any(st.step5_changes):
            continue
        dp = run_dpmeans(X, lam_l + lam_g)
        assert np.array_equal(st.global_assignments[0], dp.assignments)
        assert st.objective == pytest.approx(dp.objective, abs=1e-9)
        compared += 1
    assert compared >= 20


def test_shared_tight_clouds():
    rng = np.random.default_rng(3)
    a = 5 + 0.01 * rng.normal(size=(10, 2))
    b = 5 + 0.01 * rng.normal(size=(12, 2))
    st = run_hard_hdp([a, b], 0.5, 100.0)
    assert st.g == 1 and st.k == 2


def test_objective_examples():
    same = [np.ones((3, 2)), np.ones((4, 2))]
    st = HdpState([np.zeros(3, int), np.zeros(4, int)], [np.array([0]), np.array([0])], np.ones((1, 2)), 0.0)
    assert hdp_objective(same, st, 2.0, 5.0) == pytest.approx(2.0 * 2 + 5.0)
    pair = [np.array([[0.0]]), np.array([[3.0]])]
    st = HdpState([np.zeros(1, int), np.zeros(1, int)], [np.array([0]), np.array([0])], np.array([[1.5]]), 0.0)
    assert hdp_objective(pair, st, 1.0, 10.0) == pytest.approx(4.5 + 2 * 1.0 + 10.0)


def test_objective_rejects_dangling_association():
    st = HdpState([np.zeros(2, int)], [np.array([3])], np.zeros((1, 1)), 0.0)
    with pytest.raises(ValueError, match="dangling"):
        hdp_objective([np.zeros((2, 1))], st, 1.0, 1.0)


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        run_hard_hdp([np.zeros((2, 2)), np.zeros((2, 3))], 1.0, 1.0)


def test_select_penalties():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(20, 2))
    lam_l, _ = select_hdp_penalties([X, X.copy(), X.copy()], 3, 4)
    assert lam_l == pytest.approx(farthest_first_lambda(X, 3))
    lam_l, lam_g = select_hdp_penalties([X], 3, 4)
    assert lam_l == pytest.approx(farthest_first_lambda(X, 3)) and lam_g > 0
    with pytest.raises(ValueError):
        select_hdp_penalties([X[:2]], 3, 1)


def test_benchmark_shape():
    data, labels = gen_hdp_benchmark(0)
    lam_l, lam_g = select_hdp_penalties(data, 5, 15)
    st = run_hard_hdp(data, lam_l, lam_g)
    check_structure(data, st)
    assert 10 <= st.g <= 35
    assert 3.5 <= np.mean(st.k_j) <= 5.5


def test_backends_agree():
    rng = np.random.default_rng(5)
    for _ in range(10):
        data, lam_l, lam_g = random_collection(rng)
        with use_backend("numba"):
            a = run_hard_hdp(data, lam_l, lam_g)
        with use_backend("numpy"):
            b = run_hard_hdp(data, lam_l, lam_g)
        assert a.trace == pytest.approx(b.trace, abs=1e-12)
        for x, y in zip(a.global_assignments, b.global_assignments):
            assert np.array_equal(x, y)
