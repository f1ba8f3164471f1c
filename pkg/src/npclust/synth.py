"""Synthetic mixtures: the three-Gaussian illustration and the
multi-dataset shared-cluster benchmark."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import make_rng


@dataclass(frozen=True)
class LabeledDataset:
    points: np.ndarray
    labels: np.ndarray

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class MixtureSpec:
    means: np.ndarray  # (k, d)
    variance: float  # shared isotropic, per coordinate
    counts: tuple  # points per component
    seed: int | None = None

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        object.__setattr__(self, "means", means)
        if not self.variance >= 0:
            raise ValueError("variance must be non-negative")
        counts = tuple(int(c) for c in np.broadcast_to(self.counts, (len(means),)))
        if min(counts) < 0:
            raise ValueError("negative component count")
        object.__setattr__(self, "counts", counts)


def gen_gaussian_mixture(spec: MixtureSpec) -> LabeledDataset:
    rng = make_rng(spec.seed)
    labels = np.repeat(np.arange(len(spec.means)), spec.counts)
    noise = rng.standard_normal((len(labels), spec.means.shape[1]))
    points = spec.means[labels] + np.sqrt(spec.variance) * noise
    return LabeledDataset(points, labels)


def three_gaussians(
    seed=None, n_per: int = 100, std: float = 1.0, separation: float = 8.0, layout: str = "line"
) -> LabeledDataset:
    """Three isotropic 2-D Gaussians whose neighbouring means sit ``separation * std`` apart.

    ``layout="line"`` puts the means on a horizontal line, so the middle
    component sits on the global mean. ``"triangle"`` uses an equilateral
    triangle; there the global mean lies in empty space, and DP-means
    started from a single cluster tends to keep a spurious cluster there.
    """
    gap = separation * std
    if layout == "line":
        means = np.array([[-gap, 0.0], [0.0, 0.0], [gap, 0.0]])
    elif layout == "triangle":
        angles = np.pi / 2 + 2 * np.pi * np.arange(3) / 3
        means = gap / np.sqrt(3.0) * np.column_stack([np.cos(angles), np.sin(angles)])
    else:
        raise ValueError(f"unknown layout {layout!r}")
    return gen_gaussian_mixture(MixtureSpec(means, std**2, (n_per,) * 3, seed))


def gen_hdp_benchmark(
    seed=None,
    n_components: int = 15,
    n_datasets: int = 50,
    per_dataset: int = 5,
    points_per_component: int = 5,
    variance: float = 0.01,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Datasets that share a pool of Gaussians.

    ``n_components`` means are drawn uniformly on the unit square; each
    dataset picks ``per_dataset`` of them without replacement and draws
    ``points_per_component`` points from each. Labels index the pool.
    """
    rng = make_rng(seed)
    means = rng.uniform(0.0, 1.0, size=(n_components, 2))
    datasets, labels = [], []
    for _ in range(n_datasets):
        chosen = np.sort(rng.choice(n_components, size=per_dataset, replace=False))
        lab = np.repeat(chosen, points_per_component)
        pts = means[lab] + np.sqrt(variance) * rng.standard_normal((len(lab), 2))
        datasets.append(pts)
        labels.append(lab)
    return datasets, labels
