"""Clustering quality and clustering-comparison measures."""

from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np

from .core import DataObject, ValidationError, WeightedDataset
from .d2 import Assignment
from .transport import distance_matrix_sq, solve_transportation


__all__ = [
    "categorical_distance", "davies_bouldin", "mean_squared_dispersion",
    "mm_distance_sq", "partition_from_labels",
]


def mean_squared_dispersion(data: WeightedDataset, assignment: Assignment, grounds=None) -> float:
    """Mean squared distance from each object to its assigned centroid."""
    labels = np.asarray(assignment.labels)
    if labels.shape != (len(data),):
        raise ValidationError(f"{labels.size} labels for {len(data)} objects")
    total = 0.0
    for j, z in enumerate(assignment.centroids):
        idx = np.flatnonzero(labels == j)
        if idx.size:
            total += distance_matrix_sq([data.objects[i] for i in idx], [z], grounds).sum()
    return float(total / len(data))


def _simplex(p, what: str) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-6:
        raise ValidationError(f"{what} must be a probability vector")
    return p / p.sum()


def mm_distance_sq(z: Sequence[DataObject], p, z2: Sequence[DataObject], p2, grounds=None) -> float:
    """Optimal transport between two weighted centroid sets, with the
    squared object distance between centroids as the element cost."""
    p = _simplex(p, "p")
    p2 = _simplex(p2, "p'")
    if len(z) != p.size or len(z2) != p2.size:
        raise ValidationError("one proportion per centroid is required")
    cost = distance_matrix_sq(list(z), list(z2), grounds)
    return max(solve_transportation(cost, p, p2)[1], 0.0)


def partition_from_labels(labels) -> list[np.ndarray]:
    labels = np.asarray(labels)
    return [np.flatnonzero(labels == j) for j in np.unique(labels)]


def _as_sets(partition) -> list[np.ndarray]:
    # a flat sequence of labels, or a sequence of index collections
    if len(partition) and np.isscalar(partition[0]):
        return partition_from_labels(partition)
    return [np.asarray(sorted(c), dtype=np.int64) for c in partition if len(c)]


def categorical_distance(partition, partition2) -> float:
    """Transport distance between two partitions of the same ground set.

    Either argument may be a label array or a sequence of index collections.
    Clusters weigh their size fraction; the cost between two clusters is the
    size of their symmetric difference (a raw count, not divided by N).
    """
    a = _as_sets(partition)
    b = _as_sets(partition2)
    ga = np.sort(np.concatenate(a)) if a else np.zeros(0, np.int64)
    gb = np.sort(np.concatenate(b)) if b else np.zeros(0, np.int64)
    if ga.size == 0 or not np.array_equal(ga, gb):
        raise ValidationError("partitions do not cover the same ground set")
    if np.unique(ga).size != ga.size:
        raise ValidationError("partition clusters overlap")
    n = ga.size
    size_a = np.array([c.size for c in a], dtype=np.float64)
    size_b = np.array([c.size for c in b], dtype=np.float64)
    inter = np.array([[np.intersect1d(x, y, assume_unique=True).size for y in b] for x in a],
                     dtype=np.float64)
    cost = size_a[:, None] + size_b[None, :] - 2.0 * inter
    return max(solve_transportation(cost, size_a / n, size_b / n)[1], 0.0)


def _flatten_symbolic(objects: Sequence[DataObject], alphabet_sizes: Sequence[int]) -> np.ndarray:
    rows = []
    for o in objects:
        parts = []
        for d, a in zip(o.dists, alphabet_sizes):
            if not d.symbolic:
                raise ValidationError("squared-euclidean mode needs symbolic (histogram) data")
            h = np.zeros(a)
            np.add.at(h, d.supports, d.probs)
            parts.append(h)
        rows.append(np.concatenate(parts))
    return np.asarray(rows)


def davies_bouldin(data: WeightedDataset, assignment: Assignment, distance: str = "squared-mallows",
                   grounds=None, alphabet_sizes: Sequence[int] | None = None) -> float:
    """Davies-Bouldin index with squared distances.

    ``distance`` is ``"squared-mallows"`` (squared object distance) or
    ``"squared-euclidean"`` on probability vectors flattened over the symbol
    alphabet(s).  Coincident centroids give an infinite index and a warning.
    """
    labels = np.asarray(assignment.labels)
    z = list(assignment.centroids)
    k = len(z)
    if k < 2:
        raise ValidationError("the Davies-Bouldin index needs at least two clusters")
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        raise ValidationError(f"cluster(s) {np.flatnonzero(counts == 0).tolist()} are empty")

    if distance == "squared-mallows":
        to_z = distance_matrix_sq(list(data.objects), z, grounds)
        between = distance_matrix_sq(z, z, grounds)
    elif distance == "squared-euclidean":
        if alphabet_sizes is None:
            tops = [1 + max(int(o.dists[s].supports.max()) for o in (*data.objects, *z))
                    for s in range(data.n_dims)]
            alphabet_sizes = tops
        x = _flatten_symbolic(data.objects, alphabet_sizes)
        c = _flatten_symbolic(z, alphabet_sizes)
        to_z = ((x[:, None, :] - c[None]) ** 2).sum(-1)
        between = ((c[:, None, :] - c[None]) ** 2).sum(-1)
    else:
        raise ValidationError(f"unknown distance {distance!r}")

    sigma = np.array([to_z[labels == j, j].mean() for j in range(k)])
    worst = np.zeros(k)
    for j in range(k):
        for l in range(k):
            if l == j:
                continue
            num = sigma[j] + sigma[l]
            if between[j, l] <= 0:
                warnings.warn(f"centroids {j} and {l} coincide; their ratio is infinite",
                              RuntimeWarning, stacklevel=2)
                ratio = np.inf
            else:
                ratio = num / between[j, l]
            worst[j] = max(worst[j], ratio)
    return float(worst.mean())
