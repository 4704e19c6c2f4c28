"""Partition a dataset into segments of at most ``tau`` objects.

Two strategies are provided.  Binary splitting repeatedly takes the largest
oversized segment and cuts it in two with constrained D2-clustering.  The VQ
route quantizes each object into a histogram over a codebook and segments the
histograms with ordinary K-means, which is far cheaper but blind to the
transport geometry.
"""

from __future__ import annotations

import heapq
import logging
import math
from typing import Sequence

import numpy as np
from sklearn.cluster import KMeans

from .core import Config, GroundMetric, ValidationError, WeightedDataset, as_grounds
from .d2 import constrained_d2_cluster, d2_cluster
from .transport import distance_matrix_sq

log = logging.getLogger(__name__)

__all__ = ["binary_split_segment", "build_codebook", "vq_histograms", "vq_segment"]


def _median_split(data: WeightedDataset, idx: np.ndarray, grounds) -> tuple[np.ndarray, np.ndarray]:
    d = distance_matrix_sq([data.objects[i] for i in idx], [data.objects[idx[0]]], grounds)[:, 0]
    order = np.argsort(d, kind="stable")
    half = idx.size // 2
    return np.sort(idx[order[:half]]), np.sort(idx[order[half:]])


def _split_two(data: WeightedDataset, idx: np.ndarray, grounds, config: Config,
               rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    sub = data.subset(idx)
    # pinned uniform probabilities with supports that cannot move would leave
    # the seed centroids untouched, so symbolic data gets the full LP instead
    fixed = config.fix_supports or any(g.symbolic for g in grounds)
    split = d2_cluster if fixed else constrained_d2_cluster
    labels = split(sub, 2, grounds, config, rng).labels
    left, right = idx[labels == 0], idx[labels == 1]
    if left.size == 0 or right.size == 0:
        log.info("2-split of %d objects left one side empty; using a median split", idx.size)
        return _median_split(data, idx, grounds)
    return left, right


def binary_split_segment(data: WeightedDataset, tau: int,
                         grounds: GroundMetric | Sequence[GroundMetric] | None = None,
                         config: Config | None = None,
                         rng: np.random.Generator | None = None) -> list[np.ndarray]:
    """Split the largest segment in two until every segment has at most
    ``tau`` objects.

    Segments are returned as sorted index arrays, ordered by their smallest
    index.
    """
    if tau < 2:
        raise ValidationError(f"tau must be >= 2, got {tau}")
    config = config or Config()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    gs = as_grounds(grounds, data.n_dims)
    n = len(data)

    heap: list[tuple[int, int, np.ndarray]] = [(-n, 0, np.arange(n))]
    done: list[np.ndarray] = []
    next_id = 1
    while heap:
        neg, _, idx = heapq.heappop(heap)
        if -neg <= tau:
            done.append(idx)
            continue
        for part in _split_two(data, idx, gs, config, rng):
            heapq.heappush(heap, (-part.size, next_id, part))
            next_id += 1
    done.sort(key=lambda a: a[0])
    return done


def build_codebook(data: WeightedDataset, codebook_size: int = 32,
                   rng: np.random.Generator | None = None) -> list[np.ndarray]:
    """One K-means codebook per numeric super-dimension.

    Pooled support points are weighted by object weight times probability.
    When fewer distinct points than ``codebook_size`` exist, the codebook is
    the distinct points themselves.
    """
    if codebook_size < 1:
        raise ValidationError("codebook_size must be >= 1")
    rng = rng if rng is not None else np.random.default_rng()
    books = []
    for s in range(data.n_dims):
        if data.column(s)[0].symbolic:
            raise ValidationError("symbolic super-dimensions need no codebook; "
                                  "their histograms live on the alphabet")
        books.append(_codebook(data, s, codebook_size, rng))
    return books


def _codebook(data: WeightedDataset, s: int, size: int, rng: np.random.Generator) -> np.ndarray:
    col = data.column(s)
    pts = np.concatenate([d.supports for d in col])
    mass = np.concatenate([w * d.probs for w, d in zip(data.weights, col)])
    distinct = np.unique(pts, axis=0)
    if distinct.shape[0] <= size:
        return distinct
    km = KMeans(size, n_init=1, random_state=int(rng.integers(2**31)))
    km.fit(pts, sample_weight=mass)
    return km.cluster_centers_


def vq_histograms(data: WeightedDataset, codebooks: Sequence[np.ndarray | None],
                  grounds=None) -> np.ndarray:
    """Concatenated per-super-dimension histograms, scaled to sum to one.

    Numeric supports add their mass to the nearest code; symbolic
    distributions are already histograms over the alphabet.
    """
    gs = as_grounds(grounds, data.n_dims)
    blocks = []
    for s, g in enumerate(gs):
        col = data.column(s)
        if col[0].symbolic:
            size = g.alphabet_size or 1 + max(int(d.supports.max()) for d in col)
            h = np.zeros((len(col), size))
            for i, d in enumerate(col):
                np.add.at(h[i], d.supports, d.probs)
        else:
            book = np.asarray(codebooks[s], dtype=np.float64)
            h = np.zeros((len(col), book.shape[0]))
            for i, d in enumerate(col):
                code = np.argmin(((d.supports[:, None, :] - book[None]) ** 2).sum(-1), axis=1)
                np.add.at(h[i], code, d.probs)
        blocks.append(h)
    return np.hstack(blocks) / len(blocks)


def _kmeans_labels(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    k = min(k, np.unique(x, axis=0).shape[0])
    if k <= 1:
        return np.zeros(x.shape[0], np.int64)
    km = KMeans(k, n_init=1, random_state=int(rng.integers(2**31)))
    return km.fit_predict(x)


def vq_segment(data: WeightedDataset, tau: int, codebooks: Sequence[np.ndarray | None] | None = None,
               rng: np.random.Generator | None = None, grounds=None,
               codebook_size: int = 32) -> list[np.ndarray]:
    """Segment by K-means on VQ histograms into ``ceil(n / tau)`` groups,
    re-splitting oversized groups with 2-means (halving by index when the
    histograms cannot be told apart)."""
    if tau < 2:
        raise ValidationError(f"tau must be >= 2, got {tau}")
    rng = rng if rng is not None else np.random.default_rng()
    n = len(data)
    if n <= tau:
        return [np.arange(n)]
    gs = as_grounds(grounds, data.n_dims)
    if codebooks is None:
        codebooks = [None if g.symbolic else _codebook(data, s, codebook_size, rng)
                     for s, g in enumerate(gs)]
    hist = vq_histograms(data, codebooks, gs)

    labels = _kmeans_labels(hist, math.ceil(n / tau), rng)
    pending = [np.flatnonzero(labels == j) for j in np.unique(labels)]
    out: list[np.ndarray] = []
    while pending:
        idx = pending.pop()
        if idx.size <= tau:
            out.append(idx)
            continue
        sub = _kmeans_labels(hist[idx], 2, rng)
        left, right = idx[sub == 0], idx[sub == 1]
        if left.size == 0 or right.size == 0:
            half = idx.size // 2
            left, right = idx[:half], idx[half:]
        pending += [left, right]
    out.sort(key=lambda a: a[0])
    return out
