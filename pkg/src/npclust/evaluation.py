"""Normalized mutual information and exhaustive oracles over set partitions."""

from __future__ import annotations

import numpy as np

from .core import as_points

MAX_BRUTE_FORCE_POINTS = 12
MAX_BRUTE_FORCE_VERTICES = 10


def contingency(labels_a, labels_b) -> np.ndarray:
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.shape != b.shape:
        raise ValueError(f"label vectors differ in length: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("empty labelings")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(labels_a, labels_b) -> float:
    """Mutual information normalized by the geometric mean of the entropies.

    Two constant labelings score 1; exactly one constant labeling scores 0.
    """
    table = contingency(labels_a, labels_b)
    n = int(table.sum())
    ha = _entropy(table.sum(axis=1), n)
    hb = _entropy(table.sum(axis=0), n)
    if ha == 0.0 and hb == 0.0:
        return 1.0
    if ha == 0.0 or hb == 0.0:
        return 0.0
    pa = table.sum(axis=1) / n
    pb = table.sum(axis=0) / n
    nz = table > 0
    pab = table[nz] / n
    mi = float((pab * np.log(pab / np.outer(pa, pb)[nz])).sum())
    return min(1.0, max(0.0, mi / float(np.sqrt(ha * hb))))


def set_partitions(n: int):
    """Yield every partition of ``n`` items as a restricted growth string.

    Labels are assigned in order of first appearance, so each partition is
    produced exactly once (Bell(n) arrays in total).
    """
    if n < 1:
        return
    a = np.zeros(n, dtype=np.int64)
    b = np.zeros(n, dtype=np.int64)  # b[i] = max(a[:i]) + 1
    b[:] = 1
    while True:
        yield a.copy()
        i = n - 1
        while i > 0 and a[i] == b[i]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        m = max(b[i], a[i] + 1)
        a[i + 1 :] = 0
        b[i + 1 :] = m


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def brute_force_optimum(points, lam: float) -> tuple[float, np.ndarray]:
    """Exact minimum of the DP-means objective over all set partitions."""
    X = as_points(points)
    n = len(X)
    if n > MAX_BRUTE_FORCE_POINTS:
        raise ValueError(f"brute force limited to {MAX_BRUTE_FORCE_POINTS} points, got {n}")
    best_val, best_z = np.inf, None
    for z in set_partitions(n):
        k = int(z.max()) + 1
        sums = np.zeros((k, X.shape[1]))
        np.add.at(sums, z, X)
        mu = sums / np.bincount(z, minlength=k)[:, None]
        val = float(((X - mu[z]) ** 2).sum()) + lam * k
        if val < best_val - 1e-12:
            best_val, best_z = val, z
    return best_val, best_z


def brute_force_penalized_cut(graph, lambda_prime: float) -> tuple[float, np.ndarray]:
    """Exact minimum of normalized cut plus ``lambda_prime`` per cluster."""
    from .graphcut import cut_objective

    n = graph.n
    if n > MAX_BRUTE_FORCE_VERTICES:
        raise ValueError(f"brute force limited to {MAX_BRUTE_FORCE_VERTICES} vertices, got {n}")
    best_val, best_z = np.inf, None
    for z in set_partitions(n):
        val = cut_objective(graph, z) + lambda_prime * (int(z.max()) + 1)
        if val < best_val - 1e-12:
            best_val, best_z = val, z
    return best_val, best_z
