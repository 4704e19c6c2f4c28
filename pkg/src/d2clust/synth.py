"""Labeled synthetic bags of weighted vectors around planted centroids."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .core import STREAM_SYNTH, DataObject, Distribution, ValidationError, WeightedDataset, derive_rng

__all__ = ["PROB_JITTER", "anchor_grid", "generate"]

PROB_JITTER = 0.1


def anchor_grid(k: int, d: int, spacing: float) -> np.ndarray:
    """First ``k`` points of a cubic grid with the given spacing."""
    side = max(1, math.ceil(k ** (1.0 / d) - 1e-9))
    pts = list(itertools.islice(itertools.product(range(side), repeat=d), k))
    return np.asarray(pts, dtype=np.float64) * spacing


def generate(k: int, n_per: int, d: int = 2, t: int = 5, noise_scale: float = 0.1,
             separation: float = 1.0, seed: int = 0, return_centroids: bool = False):
    """Planted-cluster dataset.

    Each planted centroid has ``t`` supports drawn uniformly in a box of side
    ``separation`` around its own grid anchor.  Anchors are
    ``separation * (1 + sqrt(d))`` apart, so any two supports of different
    centroids are at least ``separation`` apart and so are the centroids
    themselves.  A sample copies its centroid, adds iid Gaussian noise of
    scale ``noise_scale`` to every support and multiplies the probabilities
    by log-normal factors (sigma 0.1) before renormalizing; with zero noise
    the samples are exact copies.

    Returns ``(dataset, labels)``, plus the planted centroids when
    ``return_centroids`` is set.  Samples are listed cluster by cluster.
    """
    if min(k, n_per, d, t) < 1:
        raise ValidationError("k, n_per, d and t must all be >= 1")
    if not separation > 0:
        raise ValidationError(f"separation must be positive, got {separation}")
    if noise_scale < 0:
        raise ValidationError(f"noise_scale must be >= 0, got {noise_scale}")
    rng = derive_rng(seed, STREAM_SYNTH)
    anchors = anchor_grid(k, d, separation * (1.0 + math.sqrt(d)))
    jitter = PROB_JITTER if noise_scale > 0 else 0.0

    centroids, objects, labels = [], [], []
    for j in range(k):
        sup = anchors[j] + rng.uniform(-separation / 2, separation / 2, size=(t, d))
        probs = rng.dirichlet(np.full(t, 2.0))
        centroids.append(Distribution(sup, probs))
        for i in range(n_per):
            s = sup + rng.normal(0.0, noise_scale, size=sup.shape) if noise_scale > 0 else sup
            p = probs * np.exp(jitter * rng.standard_normal(t)) if jitter else probs
            objects.append(DataObject(f"c{j}_{i}", (Distribution(s, p / p.sum()),)))
            labels.append(j)
    data = WeightedDataset(tuple(objects), np.ones(len(objects)))
    labels = np.asarray(labels, dtype=np.int64)
    if return_centroids:
        return data, labels, centroids
    return data, labels
