"""Hierarchical coordinator/worker clustering.

Each level segments the current objects, clusters every segment on a pool of
workers, and concatenates the local centroids into the next level's objects.
Each new object carries the summed weight of its members.  Labels of the
original objects are carried up through the levels until at most ``k``
centroids remain.

Jobs go to worker ``mu mod M``.  Every job draws its randomness from a
generator keyed by ``(seed, level, mu)`` and results are merged in ``mu``
order, so the output does not depend on the number of workers or on timing.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (STREAM_SEGMENT, Config, D2Error, DataObject, GroundMetric, SolverError,
                   ValidationError, WeightedDataset, as_grounds, derive_rng, job_rng)
from .d2 import Assignment, constrained_d2_cluster, d2_cluster
from .segmentation import binary_split_segment, vq_segment
from .transport import distance_matrix_sq

log = logging.getLogger(__name__)

__all__ = [
    "HierarchyTrace", "LevelTrace", "SegmentJob", "SegmentResult", "WorkerError",
    "local_cluster_counts", "merge_level", "parallel_d2_cluster", "propagate_labels",
    "rollup_weights", "sequential_d2_cluster",
]

MAX_LEVELS = 64


class WorkerError(D2Error):
    """A segment job failed; the run is aborted."""

    def __init__(self, mu: int, level: int, cause: BaseException):
        super().__init__(f"segment {mu} at level {level} failed: {cause}")
        self.mu = mu
        self.level = level
        self.cause = cause


@dataclass(frozen=True, eq=False)
class SegmentJob:
    mu: int
    level: int
    indices: np.ndarray
    data: WeightedDataset
    k: int
    seed: int


@dataclass(eq=False)
class SegmentResult:
    mu: int
    labels: np.ndarray
    centroids: list[DataObject]
    objective: float
    iters: int = 0
    worker: int = 0
    seconds: float = 0.0


@dataclass(eq=False)
class LevelTrace:
    level: int
    n_objects: int
    segments: list[np.ndarray]
    results: list[SegmentResult]
    label_map: np.ndarray
    weights: np.ndarray
    segment_seconds: float = 0.0
    cluster_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "n_objects": self.n_objects,
            "n_centroids": int(self.weights.size),
            "segments": [s.tolist() for s in self.segments],
            "segment_sizes": [int(s.size) for s in self.segments],
            "k": [len(r.centroids) for r in self.results],
            "objectives": [r.objective for r in self.results],
            "iters": [r.iters for r in self.results],
            "workers": [r.worker for r in self.results],
            "job_seconds": [r.seconds for r in self.results],
            "label_map": self.label_map.tolist(),
            "weights": self.weights.tolist(),
            "segment_seconds": self.segment_seconds,
            "cluster_seconds": self.cluster_seconds,
        }


@dataclass(eq=False)
class HierarchyTrace:
    levels: list[LevelTrace] = field(default_factory=list)
    labels: np.ndarray | None = None
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "levels": [lv.to_dict() for lv in self.levels],
            "labels": None if self.labels is None else self.labels.tolist(),
            "seconds": self.seconds,
        }


def merge_level(results: Sequence[SegmentResult], segments: Sequence[np.ndarray]
                ) -> tuple[list[DataObject], np.ndarray]:
    """Concatenate local centroids in segment order and map every object of
    the level to its global centroid index."""
    by_mu = {r.mu: r for r in results}
    missing = [mu for mu in range(len(segments)) if mu not in by_mu]
    if missing:
        raise SolverError(f"no result for segment(s) {missing}")
    n = sum(len(s) for s in segments)
    label_map = np.full(n, -1, np.int64)
    centroids: list[DataObject] = []
    for mu, idx in enumerate(segments):
        r = by_mu[mu]
        label_map[np.asarray(idx)] = np.asarray(r.labels) + len(centroids)
        centroids.extend(r.centroids)
    if np.any(label_map < 0):
        raise SolverError("segments do not cover every object of the level")
    centroids = [DataObject(f"z{j}", z.dists) for j, z in enumerate(centroids)]
    return centroids, label_map


def propagate_labels(labels: np.ndarray, label_map: np.ndarray) -> np.ndarray:
    """Compose bottom-level labels with a level map."""
    labels = np.asarray(labels)
    label_map = np.asarray(label_map)
    if labels.size and (labels.min() < 0 or labels.max() >= label_map.size):
        raise ValidationError(f"label out of range for a level map of size {label_map.size}")
    return label_map[labels]


def rollup_weights(label_map: np.ndarray, weights: np.ndarray, n_clusters: int | None = None
                   ) -> np.ndarray:
    """Weight of each centroid = total weight of the objects mapped to it."""
    return np.bincount(np.asarray(label_map), weights=np.asarray(weights, dtype=np.float64),
                       minlength=n_clusters or 0)


def local_cluster_counts(sizes: Sequence[int], e: int, k: int, final: bool = False) -> list[int]:
    """Cluster count per segment: ``round(n_mu / e)`` with a floor of one.

    When a level's total would fall below ``k`` the level instead produces
    ``min(k, n)`` clusters in total, shared across segments in proportion to
    their sizes (largest remainders first, each between 1 and ``n_mu``), so
    the run finishes with exactly ``min(k, N)`` clusters.
    """
    sizes = [int(s) for s in sizes]
    n = sum(sizes)
    if final:
        if len(sizes) != 1:
            raise ValueError("the final level has a single segment")
        return [min(k, n)]
    base = [max(1, math.floor(s / e + 0.5)) for s in sizes]
    if sum(base) >= k:
        return base
    target = min(k, n)
    if target < len(sizes):
        # cannot happen with segments of at least one object each and
        # sum(base) >= len(sizes); kept as a guard
        return base
    quota = np.array(sizes, dtype=np.float64) * target / n
    out = np.clip(np.floor(quota).astype(np.int64), 1, sizes)
    order = sorted(range(len(sizes)), key=lambda i: (-(quota[i] - math.floor(quota[i])), i))
    while out.sum() < target:
        for i in order:
            if out.sum() >= target:
                break
            if out[i] < sizes[i]:
                out[i] += 1
    while out.sum() > target:
        i = int(np.argmax(np.where(out > 1, out - quota, -np.inf)))
        out[i] -= 1
    return out.tolist()


def _run_job(job: SegmentJob, grounds, config: Config, worker: int) -> SegmentResult:
    t0 = time.perf_counter()
    try:
        a = d2_cluster(job.data, job.k, grounds, config, job_rng(job.seed, job.level, job.mu))
    except Exception as exc:  # surfaced to the coordinator with the job coordinates
        raise WorkerError(job.mu, job.level, exc) from exc
    return SegmentResult(job.mu, a.labels, a.centroids, a.objective, a.iters, worker,
                         time.perf_counter() - t0)


def _segment(data: WeightedDataset, grounds, config: Config, level: int) -> list[np.ndarray]:
    rng = derive_rng(config.seed, STREAM_SEGMENT, level)
    if config.segmentation == "vq":
        return vq_segment(data, config.tau, None, rng, grounds, config.codebook_size)
    return binary_split_segment(data, config.tau, grounds, config, rng)


def _assignment(data: WeightedDataset, labels: np.ndarray, centroids: list[DataObject],
                grounds) -> Assignment:
    w = data.weights
    k = len(centroids)
    objective = 0.0
    for j in range(k):
        idx = np.flatnonzero(labels == j)
        if idx.size:
            d = distance_matrix_sq([data.objects[i] for i in idx], [centroids[j]], grounds)[:, 0]
            objective += float(w[idx] @ d)
    props = np.bincount(labels, weights=w, minlength=k) / w.sum()
    return Assignment(labels, centroids, props, objective)


def parallel_d2_cluster(data: WeightedDataset, k: int | None = None,
                        grounds: GroundMetric | Sequence[GroundMetric] | None = None,
                        config: Config | None = None) -> tuple[Assignment, HierarchyTrace]:
    """Cluster ``data`` level by level on ``config.workers`` workers.

    Returns the bottom-level assignment (objective is the weighted sum of
    squared distances of the objects to their final centroids) and the
    per-level trace.
    """
    config = config or Config()
    k = config.k if k is None else k
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    gs = as_grounds(grounds, data.n_dims)
    t_start = time.perf_counter()

    trace = HierarchyTrace()
    labels = np.arange(len(data))
    cur = data
    pools = [ThreadPoolExecutor(max_workers=1, thread_name_prefix=f"d2-worker-{m}")
             for m in range(config.workers)]
    try:
        for level in range(1, MAX_LEVELS + 1):
            n = len(cur)
            final = n <= config.tau
            t0 = time.perf_counter()
            segments = [np.arange(n)] if final else _segment(cur, gs, config, level)
            t1 = time.perf_counter()
            ks = local_cluster_counts([s.size for s in segments], config.e, k, final)
            jobs = [SegmentJob(mu, level, idx, cur.subset(idx), ks[mu], config.seed)
                    for mu, idx in enumerate(segments)]
            futures = [pools[j.mu % config.workers].submit(_run_job, j, gs, config,
                                                           j.mu % config.workers)
                       for j in jobs]
            # block until every segment of the level has reported back
            results = [f.result() for f in futures]
            t2 = time.perf_counter()

            centroids, label_map = merge_level(results, segments)
            labels = propagate_labels(labels, label_map)
            weights = rollup_weights(label_map, cur.weights, len(centroids))
            trace.levels.append(LevelTrace(level, n, segments, results, label_map, weights,
                                           t1 - t0, t2 - t1))
            log.info("level %d: %d objects in %d segments -> %d centroids",
                     level, n, len(segments), len(centroids))
            if final or len(centroids) <= k:
                break
            if len(centroids) >= n:
                raise SolverError(f"level {level} did not reduce the object count ({n})")
            cur = WeightedDataset(tuple(centroids), weights)
        else:
            raise SolverError(f"no convergence to k={k} within {MAX_LEVELS} levels")
    finally:
        for p in pools:
            p.shutdown(wait=True, cancel_futures=True)

    trace.labels = labels
    trace.seconds = time.perf_counter() - t_start
    return _assignment(data, labels, centroids, gs), trace


def sequential_d2_cluster(data: WeightedDataset, k: int | None = None, grounds=None,
                          config: Config | None = None, constrained: bool = False) -> Assignment:
    """Single-pass clustering of the whole dataset into ``min(k, N)`` clusters.

    Uses the same generator as the first segment job of the parallel driver,
    so both agree exactly when the data fits one segment.
    """
    config = config or Config()
    k = config.k if k is None else k
    run = constrained_d2_cluster if constrained else d2_cluster
    return run(data, min(k, len(data)), grounds, config, job_rng(config.seed, 1, 0))
