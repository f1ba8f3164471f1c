"""Gibbs sampler for the Dirichlet-process Gaussian mixture.

Likelihood N(x | mu_c, sigma I), prior on means N(0, rho I), and a
concentration parameter that may be tied to a penalty lambda through
alpha = (1 + rho/sigma)^(d/2) exp(-lambda / (2 sigma)). With that choice the
sampler's moves collapse onto DP-means decisions as sigma shrinks, which is
what the tests lean on. All probabilities are handled as logs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from ._accel import njit, pick
from .core import as_points, cluster_means, make_rng
from .dpmeans import Clustering, distortion

log = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


def log_alpha_from_lambda(lam: float, sigma: float, rho: float, d: int) -> float:
    if not (lam >= 0 and sigma > 0 and rho > 0 and d >= 1):
        raise ValueError("need lambda >= 0, sigma > 0, rho > 0 and d >= 1")
    value = 0.5 * d * math.log1p(rho / sigma) - lam / (2.0 * sigma)
    if not math.isfinite(value):
        raise OverflowError(f"log alpha is not finite for lambda={lam}, sigma={sigma}")
    return value


def alpha_from_lambda(lam: float, sigma: float, rho: float, d: int) -> float:
    """The concentration itself; fails where it leaves float range (use the log form there)."""
    la = log_alpha_from_lambda(lam, sigma, rho, d)
    if not -745.0 < la < 709.0:
        raise OverflowError(f"alpha = exp({la:.6g}) is outside double range")
    return math.exp(la)


@dataclass(frozen=True)
class GibbsConfig:
    sigma: float
    log_alpha: float
    rho: float = 100.0
    iterations: int = 100
    burn_in: int = 0
    thinning: int = 1
    seed: int | None = None
    resample_alpha: bool = False  # gamma(shape, rate) prior on alpha
    alpha_shape: float = 1.0
    alpha_rate: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0 and self.rho > 0):
            raise ValueError("sigma and rho must be positive")
        if not math.isfinite(self.log_alpha):
            raise ValueError("log_alpha must be finite")
        if self.iterations < 1 or self.burn_in < 0 or self.thinning < 1:
            raise ValueError("need iterations >= 1, burn_in >= 0, thinning >= 1")
        if self.burn_in >= self.iterations:
            raise ValueError("burn_in leaves no samples")
        if not (self.alpha_shape > 0 and self.alpha_rate > 0):
            raise ValueError("gamma prior parameters must be positive")

    @classmethod
    def from_alpha(cls, sigma: float, alpha: float, **kw) -> "GibbsConfig":
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        return cls(sigma=sigma, log_alpha=math.log(alpha), **kw)

    @classmethod
    def from_lambda(cls, sigma: float, lam: float, d: int, rho: float = 100.0, **kw) -> "GibbsConfig":
        return cls(sigma=sigma, log_alpha=log_alpha_from_lambda(lam, sigma, rho, d), rho=rho, **kw)


@dataclass(frozen=True)
class GibbsState:
    assignments: np.ndarray
    means: np.ndarray  # (k, d)
    counts: np.ndarray
    log_joint: float
    sweep: int
    log_alpha: float

    @property
    def k(self) -> int:
        return len(self.counts)


def _log_weights(x, means, counts, sigma, rho, log_alpha):
    d = x.shape[0]
    # overflowing distances become -inf log weights; callers detect total loss of mass
    with np.errstate(over="ignore"):
        dist = ((means - x) ** 2).sum(axis=1)
        existing = np.log(counts) - dist / (2.0 * sigma) - 0.5 * d * (LOG_2PI + math.log(sigma))
        new = log_alpha - 0.5 * d * (LOG_2PI + math.log(rho + sigma)) - (x @ x) / (2.0 * (rho + sigma))
    return np.append(existing, new)


def assignment_distribution(point, means, counts, config: GibbsConfig) -> np.ndarray:
    """Probabilities of joining each existing cluster, then of opening a new one.

    ``counts`` must already exclude the point being resampled.
    """
    x = np.asarray(point, dtype=np.float64).ravel()
    means = np.asarray(means, dtype=np.float64).reshape(-1, x.shape[0])
    counts = np.asarray(counts, dtype=np.float64)
    if len(counts) != len(means) or np.any(counts <= 0):
        raise ValueError("counts must be positive, one per mean")
    lw = _log_weights(x, means, counts, config.sigma, config.rho, config.log_alpha)
    total = logsumexp(lw)
    if not np.isfinite(total):
        raise FloatingPointError("all assignment masses vanish even in log space")
    return np.exp(lw - total)


def posterior_mean_params(members, sigma: float, rho: float) -> tuple[np.ndarray, float]:
    X = as_points(members, "members")
    n = len(X)
    return X.mean(axis=0) / (1.0 + sigma / (rho * n)), sigma * rho / (sigma + rho * n)


def sample_mean_posterior(members, sigma: float, rho: float, seed=None) -> np.ndarray:
    mu, var = posterior_mean_params(members, sigma, rho)
    return mu + math.sqrt(var) * make_rng(seed).standard_normal(mu.shape[0])


def complete_log_joint(X, z, means, log_alpha: float, sigma: float, rho: float) -> float:
    """log p(x, z, mu) under the Chinese-restaurant prior on z."""
    n, d = X.shape
    counts = np.bincount(z, minlength=len(means)).astype(np.float64)
    alpha = math.exp(min(log_alpha, 700.0))
    # log Gamma(alpha + n) - log Gamma(alpha), written to survive alpha -> 0
    rising = log_alpha + float(np.log(alpha + np.arange(1, n)).sum())
    log_crp = len(counts) * log_alpha + float(sum(math.lgamma(c) for c in counts)) - rising
    log_prior = -0.5 * float((means**2).sum()) / rho - 0.5 * means.size * (LOG_2PI + math.log(rho))
    log_lik = -0.5 * distortion(X, z, means) / sigma - 0.5 * n * d * (LOG_2PI + math.log(sigma))
    return log_crp + log_prior + log_lik


# ---------------------------------------------------------------------------
# one sweep of assignment moves; randomness is drawn up front by the caller


@njit
def _sweep_numba(X, z, means, counts, k, sigma, rho, log_alpha, u, eps):
    n, d = X.shape
    lw = np.empty(n + 1)
    c_exist = -0.5 * d * (np.log(2.0 * np.pi) + np.log(sigma))
    c_new = log_alpha - 0.5 * d * (np.log(2.0 * np.pi) + np.log(rho + sigma))
    shrink = 1.0 / (1.0 + sigma / rho)
    spread = np.sqrt(sigma * rho / (sigma + rho))
    for i in range(n):
        c = z[i]
        counts[c] -= 1
        if counts[c] == 0:
            last = k - 1
            if c != last:
                for t in range(d):
                    means[c, t] = means[last, t]
                counts[c] = counts[last]
                for j in range(n):
                    if z[j] == last:
                        z[j] = c
            k -= 1
        top = -np.inf
        for c in range(k):
            dist = 0.0
            for t in range(d):
                diff = means[c, t] - X[i, t]
                dist += diff * diff
            lw[c] = np.log(counts[c]) - dist / (2.0 * sigma) + c_exist
            if lw[c] > top:
                top = lw[c]
        xx = 0.0
        for t in range(d):
            xx += X[i, t] * X[i, t]
        lw[k] = c_new - xx / (2.0 * (rho + sigma))
        if lw[k] > top:
            top = lw[k]
        if not np.isfinite(top):
            return k, i
        total = 0.0
        for c in range(k + 1):
            lw[c] = np.exp(lw[c] - top)
            total += lw[c]
        target = u[i] * total
        acc = 0.0
        choice = k
        for c in range(k + 1):
            acc += lw[c]
            if acc > target and lw[c] > 0.0:
                choice = c
                break
        if choice == k:
            for t in range(d):
                means[k, t] = shrink * X[i, t] + spread * eps[i, t]
            counts[k] = 0
            k += 1
        counts[choice] += 1
        z[i] = choice
    return k, -1


def _sweep_numpy(X, z, means, counts, k, sigma, rho, log_alpha, u, eps):
    n, d = X.shape
    c_exist = -0.5 * d * (np.log(2.0 * np.pi) + np.log(sigma))
    c_new = log_alpha - 0.5 * d * (np.log(2.0 * np.pi) + np.log(rho + sigma))
    shrink = 1.0 / (1.0 + sigma / rho)
    spread = np.sqrt(sigma * rho / (sigma + rho))
    for i in range(n):
        c = z[i]
        counts[c] -= 1
        if counts[c] == 0:
            last = k - 1
            if c != last:
                means[c] = means[last]
                counts[c] = counts[last]
                z[z == last] = c
            k -= 1
        x = X[i]
        dist = ((means[:k] - x) ** 2).sum(axis=1)
        lw = np.empty(k + 1)
        lw[:k] = np.log(counts[:k]) - dist / (2.0 * sigma) + c_exist
        lw[k] = c_new - (x @ x) / (2.0 * (rho + sigma))
        top = lw.max()
        if not np.isfinite(top):
            return k, i
        p = np.exp(lw - top)
        hit = np.flatnonzero((np.cumsum(p) > u[i] * p.sum()) & (p > 0.0))
        choice = int(hit[0]) if len(hit) else k
        if choice == k:
            means[k] = shrink * x + spread * eps[i]
            counts[k] = 0
            k += 1
        counts[choice] += 1
        z[i] = choice
    return k, -1


gibbs_sweep = pick(_sweep_numba, _sweep_numpy)


def _resample_alpha(rng, log_alpha, k, n, shape, rate):
    """Auxiliary-variable update for alpha under a gamma(shape, rate) prior."""
    alpha = math.exp(log_alpha)
    eta = rng.beta(alpha + 1.0, n)
    r = rate - math.log(eta)
    odds = (shape + k - 1.0) / (n * r)
    a = shape + k if rng.random() < odds / (1.0 + odds) else shape + k - 1.0
    return math.log(max(rng.gamma(a, 1.0 / r), 1e-300))


@dataclass(frozen=True)
class GibbsResult:
    samples: list  # emitted GibbsStates
    point_estimate: Clustering  # the emitted state with the highest log joint
    k_trace: list = field(default_factory=list)  # k after every sweep

    @property
    def modal_k(self) -> int:
        ks = np.array([s.k for s in self.samples])
        return int(np.bincount(ks).argmax())


def run_gibbs(points, config: GibbsConfig, initial=None) -> GibbsResult:
    """Run the sampler and keep every ``thinning``-th state after ``burn_in`` sweeps.

    Starts from ``initial`` (default: one cluster) with means at their
    posterior means. Each sweep resamples every assignment in index order and
    then redraws every cluster mean from its posterior.
    """
    X = as_points(points)
    n, d = X.shape
    rng = make_rng(config.seed)
    sigma, rho = config.sigma, config.rho
    log_alpha = config.log_alpha

    z = np.zeros(n, dtype=np.int64) if initial is None else np.unique(np.asarray(initial), return_inverse=True)[1]
    z = z.astype(np.int64)
    if z.shape != (n,):
        raise ValueError(f"initial assignments must have length {n}")
    k = int(z.max()) + 1
    means = np.zeros((n + 1, d))
    counts = np.zeros(n + 1, dtype=np.int64)
    counts[:k] = np.bincount(z, minlength=k)
    means[:k] = cluster_means(X, z, k) / (1.0 + sigma / (rho * counts[:k, None]))

    samples, k_trace = [], []
    for sweep in range(1, config.iterations + 1):
        u = rng.random(n)
        eps_new = rng.standard_normal((n, d))
        eps_mean = rng.standard_normal((n, d))
        k, bad = gibbs_sweep(X, z, means, counts, k, sigma, rho, log_alpha, u, eps_new)
        if bad >= 0:
            raise FloatingPointError(f"sweep {sweep}: assignment masses vanish for point {bad}")
        nc = counts[:k, None].astype(np.float64)
        xbar = cluster_means(X, z, k)
        means[:k] = xbar / (1.0 + sigma / (rho * nc)) + np.sqrt(sigma * rho / (sigma + rho * nc)) * eps_mean[:k]
        if config.resample_alpha:
            log_alpha = _resample_alpha(rng, log_alpha, k, n, config.alpha_shape, config.alpha_rate)
        k_trace.append(k)
        if sweep > config.burn_in and (sweep - config.burn_in) % config.thinning == 0:
            mu = means[:k].copy()
            lj = complete_log_joint(X, z, mu, log_alpha, sigma, rho)
            samples.append(GibbsState(z.copy(), mu, counts[:k].copy(), lj, sweep, log_alpha))
        log.debug("sweep %d: k=%d", sweep, k)

    best = max(samples, key=lambda s: s.log_joint)
    centroids = cluster_means(X, best.assignments, best.k)
    estimate = Clustering(best.assignments, centroids, distortion(X, best.assignments, centroids), best.sweep)
    return GibbsResult(samples, estimate, k_trace)
