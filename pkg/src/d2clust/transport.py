"""Exact optimal transport between discrete distributions.

The squared Mallows distance between two distributions is the optimal value
of the transportation LP whose costs are the ground costs between their
supports.  Objects with several super-dimensions combine the per-dimension
squared distances additively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._kernels import (STATUS_OK, cross_sq_numeric, cross_sq_symbolic,
                       transport_simplex)
from .core import (DataObject, Distribution, GroundMetric, SolverError,
                   ValidationError, as_grounds)

MARGINAL_TOL = 1e-9
COUPLING_TOL = 1e-8


class InfeasibleMarginals(SolverError, ValueError):
    """Supply and demand do not describe probability vectors of equal mass."""


@dataclass(frozen=True, eq=False)
class Coupling:
    plan: np.ndarray
    row_marginals: np.ndarray
    col_marginals: np.ndarray

    @property
    def mass(self) -> float:
        return float(self.plan.sum())

    def check(self, tol: float = COUPLING_TOL) -> None:
        """Raise :class:`SolverError` if the plan violates its marginals."""
        if self.plan.min() < 0:
            raise SolverError("coupling has negative entries")
        if np.abs(self.plan.sum(axis=1) - self.row_marginals).max() > tol:
            raise SolverError("coupling row sums differ from row marginals")
        if np.abs(self.plan.sum(axis=0) - self.col_marginals).max() > tol:
            raise SolverError("coupling column sums differ from column marginals")
        if abs(self.mass - 1.0) > tol:
            raise SolverError(f"coupling mass {self.mass!r} != 1")


def solve_transportation(cost, supply, demand) -> tuple[Coupling, float]:
    """Solve ``min <cost, W>`` over couplings of ``supply`` and ``demand``.

    Returns an optimal vertex of the transportation polytope and its cost.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    a = np.ascontiguousarray(supply, dtype=np.float64).reshape(-1)
    b = np.ascontiguousarray(demand, dtype=np.float64).reshape(-1)
    if cost.shape != (a.size, b.size):
        raise ValidationError(f"cost shape {cost.shape} vs marginals ({a.size}, {b.size})")
    if a.size == 0 or b.size == 0:
        raise InfeasibleMarginals("empty marginal")
    if not np.all(np.isfinite(cost)) or np.any(cost < 0):
        raise ValidationError("transport costs must be finite and non-negative")
    if np.any(a < 0) or np.any(b < 0):
        raise InfeasibleMarginals("negative marginal entry")
    sa, sb = math.fsum(a), math.fsum(b)
    if abs(sa - 1.0) > MARGINAL_TOL or abs(sb - 1.0) > MARGINAL_TOL:
        raise InfeasibleMarginals(f"marginals sum to {sa!r} and {sb!r}, expected 1")

    plan, obj, status, iters = transport_simplex(cost, a, b, _max_iter(a.size, b.size))
    if status != STATUS_OK:
        raise SolverError(f"transport simplex stopped after {iters} pivots "
                          f"(status {status}) on a {a.size}x{b.size} problem")
    coupling = Coupling(plan, a, b)
    coupling.check()
    return coupling, float(obj)


def transport_plan(cost: np.ndarray, supply: np.ndarray, demand: np.ndarray
                   ) -> tuple[np.ndarray, float]:
    """Unchecked fast path of :func:`solve_transportation` for callers that
    already hold validated marginals."""
    plan, obj, status, iters = transport_simplex(
        np.ascontiguousarray(cost, dtype=np.float64), supply, demand,
        _max_iter(supply.size, demand.size))
    if status != STATUS_OK:
        raise SolverError(f"transport simplex stopped after {iters} pivots (status {status})")
    return plan, float(obj)


def mallows_sq(a: Distribution, b: Distribution,
               ground: GroundMetric | None = None) -> tuple[float, Coupling]:
    """Squared Mallows distance and the optimal coupling."""
    ground = ground or GroundMetric.euclidean()
    if a.symbolic != b.symbolic or not ground.compatible(a):
        raise ValidationError("distributions are not compatible with the ground metric")
    if not a.symbolic and a.dim != b.dim:
        raise ValidationError(f"support dimensions differ: {a.dim} vs {b.dim}")
    coupling, d2 = solve_transportation(ground.cost(a.supports, b.supports), a.probs, b.probs)
    return max(d2, 0.0), coupling


def object_distance_sq(x: DataObject, y: DataObject,
                       grounds: GroundMetric | Sequence[GroundMetric] | None = None) -> float:
    if x.n_dims != y.n_dims:
        raise ValidationError(
            f"super-dimension mismatch: {x.id!r} has {x.n_dims}, {y.id!r} has {y.n_dims}")
    gs = as_grounds(grounds, x.n_dims)
    return sum(mallows_sq(a, b, g)[0] for a, b, g in zip(x.dists, y.dists, gs))


def object_distance(x: DataObject, y: DataObject,
                    grounds: GroundMetric | Sequence[GroundMetric] | None = None) -> float:
    """Combined distance ``sqrt(sum_s D^2(x_s, y_s))`` over super-dimensions."""
    return math.sqrt(object_distance_sq(x, y, grounds))


def _max_iter(m: int, n: int) -> int:
    return 50 * (m + n) ** 2 + 1000


def pack(dists: Sequence[Distribution]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack distributions into ``(supports, probs, offsets)`` arrays."""
    offsets = np.zeros(len(dists) + 1, dtype=np.int64)
    np.cumsum([d.size for d in dists], out=offsets[1:])
    return (np.concatenate([d.supports for d in dists]),
            np.concatenate([d.probs for d in dists]), offsets)


def cross_mallows_sq(xs: Sequence[Distribution], ys: Sequence[Distribution],
                     ground: GroundMetric | None = None) -> np.ndarray:
    """Squared Mallows distances between every pair in ``xs`` x ``ys``."""
    ground = ground or GroundMetric.euclidean()
    if not xs or not ys:
        return np.zeros((len(xs), len(ys)))
    sa, pa, oa = pack(xs)
    sb, pb, ob = pack(ys)
    if (sa.ndim == 1) != ground.symbolic or (sb.ndim == 1) != ground.symbolic:
        raise ValidationError("distributions are not compatible with the ground metric")
    longest = max(np.diff(oa).max(), np.diff(ob).max())
    if ground.symbolic:
        out, failures = cross_sq_symbolic(sa, pa, oa, sb, pb, ob, ground.matrix,
                                          _max_iter(longest, longest))
    else:
        if sa.shape[1] != sb.shape[1]:
            raise ValidationError(f"support dimensions differ: {sa.shape[1]} vs {sb.shape[1]}")
        out, failures = cross_sq_numeric(sa, pa, oa, sb, pb, ob, _max_iter(longest, longest))
    if failures:
        raise SolverError(f"transport simplex hit its pivot limit on {failures} pairs")
    return out


def distance_matrix_sq(xs: Sequence[DataObject], ys: Sequence[DataObject],
                       grounds=None) -> np.ndarray:
    """Squared combined distances between every pair in ``xs`` x ``ys``."""
    if not xs or not ys:
        return np.zeros((len(xs), len(ys)))
    n_dims = xs[0].n_dims
    if any(o.n_dims != n_dims for o in (*xs, *ys)):
        raise ValidationError("super-dimension mismatch")
    gs = as_grounds(grounds, n_dims)
    out = np.zeros((len(xs), len(ys)))
    for s, g in enumerate(gs):
        out += cross_mallows_sq([o.dists[s] for o in xs], [o.dists[s] for o in ys], g)
    return out
