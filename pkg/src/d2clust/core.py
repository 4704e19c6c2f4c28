"""Domain types shared by every part of the clustering pipeline.

A data object is a tuple of discrete distributions ("super-dimensions"),
each a bag of weighted support points.  Support points are either rows of a
float array (numeric mode) or integer indices into a symbol alphabet
(symbolic mode).  All arrays held by these types are marked read-only so the
objects can be handed to worker threads without copying.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

PROB_TOL = 1e-6  # renormalize within this, reject beyond
EXACT_TOL = 1e-12


class D2Error(Exception):
    """Base class for errors raised by this package."""


class ValidationError(D2Error, ValueError):
    pass


class SolverError(D2Error, RuntimeError):
    pass


def _is_symbolic(sup: np.ndarray) -> bool:
    return sup.ndim == 1 and sup.dtype.kind in "iu"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Distribution:
    """A discrete distribution: ``supports[r]`` carries mass ``probs[r]``.

    ``supports`` is a ``(t, d)`` float array in numeric mode or a ``(t,)``
    integer array of alphabet indices in symbolic mode.
    """

    supports: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        sup = np.asarray(self.supports)
        if _is_symbolic(sup):
            sup = sup.astype(np.int64)
        else:
            sup = sup.astype(np.float64)
            if sup.ndim == 1:
                sup = sup.reshape(-1, 1)
        probs = np.asarray(self.probs, dtype=np.float64).reshape(-1)
        if sup.shape[0] != probs.shape[0]:
            raise ValidationError(
                f"{sup.shape[0]} supports but {probs.shape[0]} probabilities")
        object.__setattr__(self, "supports", _frozen(sup))
        object.__setattr__(self, "probs", _frozen(probs))

    @property
    def symbolic(self) -> bool:
        return self.supports.ndim == 1

    @property
    def size(self) -> int:
        return self.probs.shape[0]

    @property
    def dim(self) -> int | None:
        return None if self.symbolic else self.supports.shape[1]

    def same_as(self, other: Distribution) -> bool:
        """Exact (bitwise) equality of supports and probabilities."""
        return (self.supports.dtype == other.supports.dtype
                and self.supports.shape == other.supports.shape
                and np.array_equal(self.supports, other.supports)
                and np.array_equal(self.probs, other.probs))


@dataclass(frozen=True, eq=False)
class DataObject:
    id: str
    dists: tuple[Distribution, ...]

    def __post_init__(self):
        object.__setattr__(self, "dists", tuple(self.dists))
        if not self.dists:
            raise ValidationError(f"object {self.id!r} has no distributions")

    @property
    def n_dims(self) -> int:
        return len(self.dists)

    def same_as(self, other: DataObject) -> bool:
        return (self.id == other.id and len(self.dists) == len(other.dists)
                and all(a.same_as(b) for a, b in zip(self.dists, other.dists)))


@dataclass(frozen=True, eq=False)
class WeightedDataset:
    objects: tuple[DataObject, ...]
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != len(self.objects):
            raise ValidationError(
                f"{len(self.objects)} objects but {w.shape[0]} weights")
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def unit(cls, objects: Sequence[DataObject]) -> WeightedDataset:
        return cls(tuple(objects), np.ones(len(objects)))

    def __len__(self) -> int:
        return len(self.objects)

    @property
    def n_dims(self) -> int:
        return self.objects[0].n_dims

    def subset(self, idx: Sequence[int]) -> WeightedDataset:
        idx = list(idx)
        return WeightedDataset(tuple(self.objects[i] for i in idx),
                               self.weights[idx])

    def column(self, s: int) -> list[Distribution]:
        """The ``s``-th super-dimension of every object."""
        return [o.dists[s] for o in self.objects]


@dataclass(frozen=True, eq=False)
class GroundMetric:
    """Cost between support points.

    ``kind`` is ``"squared-euclidean"`` or ``"symbolic-matrix"``; in the
    latter case ``matrix[a, b]`` is the cost of moving mass from symbol ``a``
    to symbol ``b`` and ``symbols`` optionally names the alphabet.
    """

    kind: str = "squared-euclidean"
    matrix: np.ndarray | None = None
    symbols: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind == "squared-euclidean":
            if self.matrix is not None:
                raise ValidationError("euclidean ground metric takes no matrix")
            return
        if self.kind != "symbolic-matrix":
            raise ValidationError(f"unknown ground metric kind {self.kind!r}")
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"cost matrix must be square, got {m.shape}")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ValidationError("cost matrix entries must be finite and >= 0")
        if not np.allclose(m, m.T, rtol=0, atol=1e-12):
            raise ValidationError("cost matrix must be symmetric")
        if np.any(np.diag(m) != 0):
            raise ValidationError("cost matrix must have a zero diagonal")
        if self.symbols is not None:
            object.__setattr__(self, "symbols", tuple(self.symbols))
            if len(self.symbols) != m.shape[0]:
                raise ValidationError(
                    f"{len(self.symbols)} symbols for a {m.shape[0]}x{m.shape[0]} matrix")
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def euclidean(cls) -> GroundMetric:
        return cls()

    @classmethod
    def from_matrix(cls, matrix, symbols: Sequence[str] | None = None) -> GroundMetric:
        return cls("symbolic-matrix", np.asarray(matrix, dtype=np.float64),
                   None if symbols is None else tuple(symbols))

    @property
    def symbolic(self) -> bool:
        return self.kind == "symbolic-matrix"

    @property
    def alphabet_size(self) -> int | None:
        return None if self.matrix is None else self.matrix.shape[0]

    def cost(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Pairwise cost matrix between two support arrays."""
        if self.symbolic:
            return self.matrix[np.ix_(a, b)]
        diff = a[:, None, :] - b[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)

    def compatible(self, d: Distribution) -> bool:
        return d.symbolic == self.symbolic


def as_grounds(ground: GroundMetric | Sequence[GroundMetric] | None,
               n_dims: int) -> tuple[GroundMetric, ...]:
    """Expand a single ground metric to one per super-dimension."""
    if ground is None:
        return (GroundMetric.euclidean(),) * n_dims
    if isinstance(ground, GroundMetric):
        return (ground,) * n_dims
    grounds = tuple(ground)
    if len(grounds) != n_dims:
        raise ValidationError(
            f"{len(grounds)} ground metrics for {n_dims} super-dimensions")
    return grounds


SEGMENTERS = ("binary-split", "vq")


@dataclass(frozen=True)
class Config:
    """Run parameters.

    ``tau`` is the largest segment a worker receives and ``e`` the number of
    entries each local centroid should summarize.
    """

    k: int = 10
    tau: int = 50
    e: int = 5
    workers: int = 1
    max_iters_centroid: int = 500
    max_iters_labeling: int = 500
    rel_tol: float = 1e-4
    seed: int = 0
    fix_supports: bool = False
    segmentation: str = "binary-split"
    codebook_size: int = 32

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.e < 2:
            raise ValidationError(f"e must be >= 2 (e=1 performs no clustering), got {self.e}")
        if self.tau < self.e:
            raise ValidationError(f"tau ({self.tau}) must be >= e ({self.e})")
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")
        if self.max_iters_centroid < 1 or self.max_iters_labeling < 1:
            raise ValidationError("iteration caps must be >= 1")
        if not self.rel_tol >= 0:
            raise ValidationError(f"rel_tol must be >= 0, got {self.rel_tol}")
        if self.segmentation not in SEGMENTERS:
            raise ValidationError(
                f"segmentation must be one of {SEGMENTERS}, got {self.segmentation!r}")
        if self.codebook_size < 1:
            raise ValidationError("codebook_size must be >= 1")


# RNG streams. Every random draw in a run comes from a generator derived from
# (seed, stream, level, index) so results never depend on worker scheduling.
STREAM_JOB = 0
STREAM_SEGMENT = 1
STREAM_SYNTH = 2


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def job_rng(seed: int, level: int, mu: int) -> np.random.Generator:
    """Generator for the clustering job of segment ``mu`` at ``level``."""
    return derive_rng(seed, STREAM_JOB, level, mu)


def converged(prev: float, cur: float, rel_tol: float) -> bool:
    return abs(prev - cur) <= rel_tol * max(prev, 1e-12)


# --------------------------------------------------------------------------
# validation


def _raw_dist(raw: Any) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(raw, Distribution):
        return raw.supports, raw.probs
    if isinstance(raw, Mapping):
        return np.asarray(raw["supports"]), np.asarray(raw["probs"], dtype=float)
    sup, probs = raw
    return np.asarray(sup), np.asarray(probs, dtype=float)


def _raw_object(raw: Any, i: int) -> tuple[str, list, float | None]:
    if isinstance(raw, DataObject):
        return raw.id, list(raw.dists), None
    if isinstance(raw, Mapping):
        return (str(raw.get("id", i)), list(raw["dists"]),
                None if raw.get("weight") is None else float(raw["weight"]))
    raise ValidationError(f"object #{i}: expected DataObject or mapping, got {type(raw).__name__}")


def _normalize_probs(oid: str, s: int, probs: np.ndarray) -> np.ndarray:
    if probs.ndim != 1 or probs.size == 0:
        raise ValidationError(f"object {oid!r} dist {s}: empty distribution")
    if not np.all(np.isfinite(probs)):
        raise ValidationError(f"object {oid!r} dist {s}: non-finite probability")
    if np.any(probs < 0):
        raise ValidationError(f"object {oid!r} dist {s}: negative probability {probs.min():g}")
    total = math.fsum(probs)
    if abs(total - 1.0) > PROB_TOL:
        raise ValidationError(f"object {oid!r} dist {s}: prob sum {total:g}")
    if abs(total - 1.0) > EXACT_TOL:
        probs = probs / total
    return probs


def validate_dataset(objects: Iterable[Any], weights: Sequence[float] | None = None,
                     alphabet_size: int | None = None) -> WeightedDataset:
    """Check and normalize raw objects into a :class:`WeightedDataset`.

    Objects may be :class:`DataObject` instances or JSON-like mappings with
    ``id``, ``dists`` and an optional ``weight``.  Probability vectors within
    ``1e-6`` of summing to one are renormalized, anything further off is
    rejected, and zero-probability supports are dropped.
    """
    raw = list(objects)
    if not raw:
        raise ValidationError("dataset is empty")

    out: list[DataObject] = []
    rec_weights: list[float | None] = []
    n_dims = None
    kinds: list[tuple[bool, int | None]] = []  # per super-dim: (symbolic, dim)

    for i, r in enumerate(raw):
        oid, dists, w = _raw_object(r, i)
        if n_dims is None:
            n_dims = len(dists)
        if len(dists) != n_dims:
            raise ValidationError(
                f"object {oid!r}: {len(dists)} super-dimensions, expected {n_dims}")
        clean = []
        for s, d in enumerate(dists):
            sup, probs = _raw_dist(d)
            symbolic = _is_symbolic(sup)
            if symbolic:
                sup = sup.astype(np.int64)
            else:
                sup = np.asarray(sup, dtype=np.float64)
                if sup.ndim == 1:
                    sup = sup.reshape(-1, 1)
                if sup.ndim != 2:
                    raise ValidationError(f"object {oid!r} dist {s}: bad support shape {sup.shape}")
                if not np.all(np.isfinite(sup)):
                    raise ValidationError(f"object {oid!r} dist {s}: non-finite coordinate")
            if sup.shape[0] != probs.size:
                raise ValidationError(
                    f"object {oid!r} dist {s}: {sup.shape[0]} supports, {probs.size} probs")
            probs = _normalize_probs(oid, s, probs)
            keep = probs > 0
            if not np.all(keep):
                sup, probs = sup[keep], probs[keep]
            kind = (symbolic, None if symbolic else sup.shape[1])
            if len(kinds) <= s:
                kinds.append(kind)
            elif kinds[s] != kind:
                what = ("mixes symbolic and numeric supports" if kinds[s][0] != kind[0]
                        else f"dimension {kind[1]} != {kinds[s][1]}")
                raise ValidationError(f"object {oid!r} dist {s}: {what}")
            if symbolic and alphabet_size is not None and (
                    sup.min() < 0 or sup.max() >= alphabet_size):
                raise ValidationError(
                    f"object {oid!r} dist {s}: symbol index outside alphabet of {alphabet_size}")
            clean.append(Distribution(sup, probs))
        out.append(DataObject(oid, tuple(clean)))
        rec_weights.append(w)

    if weights is None:
        weights = [1.0 if w is None else w for w in rec_weights]
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (len(out),):
        raise ValidationError(f"{w.size} weights for {len(out)} objects")
    bad = np.flatnonzero(~(w > 0) | ~np.isfinite(w))
    if bad.size:
        raise ValidationError(f"object {out[bad[0]].id!r}: non-positive weight {w[bad[0]]:g}")
    return WeightedDataset(tuple(out), w)


def dataset_shape(data: WeightedDataset) -> list[tuple[bool, int | None]]:
    """Per super-dimension ``(symbolic, dim)`` of a validated dataset."""
    first = data.objects[0]
    return [(d.symbolic, d.dim) for d in first.dists]


__all__ = [
    "Config", "D2Error", "DataObject", "Distribution", "GroundMetric",
    "SolverError", "ValidationError", "WeightedDataset", "as_grounds",
    "converged", "derive_rng", "job_rng", "validate_dataset",
]
