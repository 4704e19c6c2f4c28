"""K-means style clustering of discrete-distribution objects.

Each outer iteration assigns every object to its nearest centroid and then
recomputes every centroid with :func:`update_centroid`, one super-dimension
at a time.  The constrained variant pins centroid probabilities to be uniform,
which makes the centroid LP separate into one transport problem per member.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .centroid import CentroidState, update_centroid
from . import centroid as _centroid
from .core import (Config, DataObject, GroundMetric, SolverError, ValidationError,
                   WeightedDataset, as_grounds, converged)
from .transport import distance_matrix_sq

log = logging.getLogger(__name__)

__all__ = ["Assignment", "assign_labels", "d2_cluster", "constrained_d2_cluster"]


@dataclass(eq=False)
class Assignment:
    labels: np.ndarray
    centroids: list[DataObject]
    proportions: np.ndarray
    objective: float
    iters: int = 0
    history: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.centroids)

    def cluster_weights(self, weights: np.ndarray) -> np.ndarray:
        return np.bincount(self.labels, weights=weights, minlength=self.k)


def _nearest(d: np.ndarray) -> np.ndarray:
    # np.argmin returns the first minimum, i.e. the lowest centroid index on ties
    return np.argmin(d, axis=1).astype(np.int64)


def assign_labels(data: WeightedDataset | Sequence[DataObject], centroids: Sequence[DataObject],
                  grounds=None) -> np.ndarray:
    """Index of the nearest centroid for every object (lowest index on ties)."""
    if not centroids:
        raise ValidationError("no centroids to assign to")
    objects = data.objects if isinstance(data, WeightedDataset) else data
    return _nearest(distance_matrix_sq(list(objects), list(centroids), grounds))


def _repair_empty(labels: np.ndarray, d: np.ndarray, k: int) -> list[int]:
    """Re-seed empty clusters with the object farthest from its own centroid.

    Only objects whose cluster keeps at least one other member are eligible.
    Returns the indices of the objects that were moved (one per repaired
    cluster, in cluster order).
    """
    moved: list[int] = []
    counts = np.bincount(labels, minlength=k)
    for j in np.flatnonzero(counts == 0):
        own = d[np.arange(labels.size), labels]
        eligible = counts[labels] > 1
        if not eligible.any():
            raise SolverError(f"cannot re-seed empty cluster {j}: no spare objects")
        cand = np.where(eligible, own, -np.inf)
        i = int(np.argmax(cand))
        counts[labels[i]] -= 1
        labels[i] = j
        counts[j] = 1
        moved.append(i)
    return moved


def _cluster(data: WeightedDataset, k: int, grounds, config: Config | None,
             rng: np.random.Generator | None, init: Sequence[int] | None,
             uniform_probs: bool) -> Assignment:
    config = config or Config()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    n = len(data)
    if not 1 <= k <= n:
        raise ValidationError(f"k={k} must be between 1 and the number of objects ({n})")
    gs = as_grounds(grounds, data.n_dims)
    w = data.weights
    objects = list(data.objects)

    if init is None:
        seeds = rng.choice(n, size=k, replace=False, p=w / w.sum())
    else:
        seeds = np.asarray(init, dtype=np.int64)
        if seeds.shape != (k,) or np.unique(seeds).size != k:
            raise ValidationError(f"init must hold {k} distinct object indices")
    centroids = [DataObject(f"z{j}", objects[i].dists) for j, i in enumerate(seeds)]
    states: list[list[CentroidState] | None] = [None] * k

    history: list[float] = []
    labels = np.zeros(n, np.int64)
    prev = None
    it = 0
    while it < config.max_iters_labeling:
        it += 1
        d = distance_matrix_sq(objects, centroids, gs)
        new_labels = _nearest(d)
        for i in _repair_empty(new_labels, d, k):
            j = new_labels[i]
            centroids[j] = DataObject(f"z{j}", objects[i].dists)
            states[j] = None
        stable = it > 1 and np.array_equal(new_labels, labels)
        labels = new_labels

        eps = 0.0
        for j in range(k):
            idx = np.flatnonzero(labels == j)
            cw = w[idx]
            new_states = []
            for s, g in enumerate(gs):
                members = [objects[i].dists[s] for i in idx]
                if it == 1 and init is None:
                    initial = None
                else:
                    initial = centroids[j].dists[s]
                st = update_centroid(members, cw, g, config, initial=initial, rng=rng,
                                     uniform_probs=uniform_probs)
                new_states.append(st)
                eps += st.epsilon
            states[j] = new_states
            centroids[j] = DataObject(f"z{j}", tuple(st.z for st in new_states))

        if history and eps > history[-1] + _centroid.MONOTONE_SLACK + 1e-12 * history[-1]:
            msg = f"clustering objective rose from {history[-1]!r} to {eps!r}"
            if _centroid.STRICT_MONOTONE:
                raise SolverError(msg)
            log.warning(msg)
        history.append(eps)
        if stable or (prev is not None and converged(prev, eps, config.rel_tol)):
            break
        prev = eps

    props = np.bincount(labels, weights=w, minlength=k) / w.sum()
    return Assignment(labels, centroids, props, max(history[-1], 0.0), it, history)


def d2_cluster(data: WeightedDataset, k: int, grounds: GroundMetric | Sequence[GroundMetric] | None = None,
               config: Config | None = None, rng: np.random.Generator | None = None,
               init: Sequence[int] | None = None) -> Assignment:
    """Weighted D2-clustering of ``data`` into ``k`` clusters.

    Initial centroids are ``k`` distinct objects drawn without replacement
    with probability proportional to weight (or the objects at ``init``).
    Stops when the summed centroid objective converges, the labels stop
    changing, or ``config.max_iters_labeling`` is reached.
    """
    return _cluster(data, k, grounds, config, rng, init, uniform_probs=False)


def constrained_d2_cluster(data: WeightedDataset, k: int, grounds=None,
                           config: Config | None = None, rng: np.random.Generator | None = None,
                           init: Sequence[int] | None = None) -> Assignment:
    """Like :func:`d2_cluster` with centroid probabilities fixed at ``1/s``."""
    return _cluster(data, k, grounds, config, rng, init, uniform_probs=True)
