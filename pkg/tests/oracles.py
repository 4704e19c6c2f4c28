"""Slow, independent reference implementations used only by the tests.

None of these share code with the package: the transport oracle enumerates
every basis of the transportation polytope, the LP oracle is a plain Python
tableau simplex, and the centroid oracle is a grid search.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


# ---------------------------------------------------------------------------
# transportation problem by vertex enumeration


@lru_cache(maxsize=None)
def _bases(m: int, n: int):
    """All spanning-tree bases of the m x n transportation polytope.

    Returns ``(cells, maps)`` where ``cells[b]`` lists the basic cells of basis
    ``b`` and ``maps[b]`` turns the stacked marginals ``[a; b]`` into the
    values of those cells.
    """
    cells_all = [(i, j) for i in range(m) for j in range(n)]
    size = m + n - 1
    cells, maps = [], []
    for combo in itertools.combinations(range(m * n), size):
        a = np.zeros((m + n, size))
        for c, idx in enumerate(combo):
            i, j = cells_all[idx]
            a[i, c] = 1.0
            a[m + j, c] = 1.0
        if np.linalg.matrix_rank(a) < size:
            continue
        cells.append(combo)
        maps.append(np.linalg.pinv(a))
    return np.array(cells, dtype=np.int64), np.array(maps)


def transport_by_vertices(cost, supply, demand) -> float:
    """Minimum of ``<cost, W>`` over the vertices of the transportation polytope."""
    cost = np.asarray(cost, dtype=float)
    m, n = cost.shape
    cells, maps = _bases(m, n)
    rhs = np.concatenate([supply, demand])
    x = maps @ rhs                                     # (bases, m+n-1)
    feasible = np.all(x >= -1e-12, axis=1)
    obj = (cost.ravel()[cells] * x).sum(axis=1)
    return float(obj[feasible].min())


# ---------------------------------------------------------------------------
# dense two-phase simplex with Bland's rule, plain Python floats


def simplex_min(c, a_eq, b_eq, eps: float = 1e-12) -> tuple[float, list[float]]:
    """``min c.x`` subject to ``a_eq x = b_eq``, ``x >= 0``."""
    m = len(a_eq)
    n = len(c)
    rows = []
    for i in range(m):
        r = [float(v) for v in a_eq[i]]
        b = float(b_eq[i])
        if b < 0:
            r = [-v for v in r]
            b = -b
        art = [0.0] * m
        art[i] = 1.0
        rows.append(r + art + [b])
    basis = [n + i for i in range(m)]
    width = n + m

    def pivot(pr, pc):
        p = rows[pr][pc]
        rows[pr] = [v / p for v in rows[pr]]
        for i in range(m):
            if i != pr and rows[i][pc] != 0.0:
                f = rows[i][pc]
                rows[i] = [v - f * w for v, w in zip(rows[i], rows[pr])]
        basis[pr] = pc

    def run(cost, allowed):
        while True:
            # reduced costs  c_j - c_B B^-1 A_j
            enter = None
            for j in range(width):
                if not allowed(j) or j in basis:
                    continue
                rc = cost[j] - sum(cost[basis[i]] * rows[i][j] for i in range(m))
                if rc < -1e-10:
                    enter = j                                   # Bland: first eligible
                    break
            if enter is None:
                return
            best, leave = None, None
            for i in range(m):
                if rows[i][enter] > eps:
                    ratio = rows[i][-1] / rows[i][enter]
                    if best is None or ratio < best - 1e-15 or (
                            abs(ratio - best) <= 1e-15 and basis[i] < basis[leave]):
                        best, leave = ratio, i
            if leave is None:
                raise ValueError("unbounded")
            pivot(leave, enter)

    phase1 = [0.0] * n + [1.0] * m
    run(phase1, lambda j: True)
    if sum(rows[i][-1] for i in range(m) if basis[i] >= n) > 1e-9:
        raise ValueError("infeasible")
    for i in range(m):
        if basis[i] >= n:
            for j in range(n):
                if abs(rows[i][j]) > 1e-9:
                    pivot(i, j)
                    break
    cost = [float(v) for v in c] + [0.0] * m
    run(cost, lambda j: j < n)
    x = [0.0] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = rows[i][-1]
    return sum(ci * xi for ci, xi in zip(c, x)), x


def joint_centroid_lp(costs, targets, weights) -> tuple[float, np.ndarray]:
    """Joint LP over centroid probabilities and all member couplings.

    ``costs[i]`` is the unweighted s x t_i ground-cost matrix of member ``i``.
    Returns ``(objective, p)``.
    """
    s = costs[0].shape[0]
    n_var = s + sum(c.size for c in costs)
    a_eq, b_eq = [], []
    row = [0.0] * n_var
    for r in range(s):
        row[r] = 1.0
    a_eq.append(row)
    b_eq.append(1.0)
    c_vec = [0.0] * s
    offset = s
    for cm, q, w in zip(costs, targets, weights):
        t = cm.shape[1]
        for r in range(s):
            row = [0.0] * n_var
            for al in range(t):
                row[offset + r * t + al] = 1.0
            row[r] = -1.0
            a_eq.append(row)
            b_eq.append(0.0)
        for al in range(t):
            row = [0.0] * n_var
            for r in range(s):
                row[offset + r * t + al] = 1.0
            a_eq.append(row)
            b_eq.append(float(q[al]))
        c_vec += [w * v for v in cm.ravel()]
        offset += s * t
    obj, x = simplex_min(c_vec, a_eq, b_eq)
    return obj, np.array(x[:s])


# ---------------------------------------------------------------------------
# centroid of symbolic histograms by grid search


def simplex_grid(dim: int, steps: int) -> np.ndarray:
    """All points of the probability simplex with coordinates in 1/steps."""
    pts = []
    for combo in itertools.combinations(range(steps + dim - 1), dim - 1):
        prev = -1
        parts = []
        for c in combo:
            parts.append(c - prev - 1)
            prev = c
        parts.append(steps + dim - 1 - prev - 1)
        pts.append(parts)
    return np.array(pts, dtype=float) / steps


def uniform_cost_centroid_grid(histograms: np.ndarray, weights: np.ndarray, steps: int = 100
                               ) -> float:
    """Weighted centroid objective for 0/1 off-diagonal symbol costs.

    With cost 1 between distinct symbols the transport cost between two
    histograms is their total-variation distance ``1 - sum min(p, q)``, so
    the grid search needs no LP.
    """
    grid = simplex_grid(histograms.shape[1], steps)
    tv = 1.0 - np.minimum(grid[:, None, :], histograms[None]).sum(-1)
    return float((tv * weights).sum(1).min())


# ---------------------------------------------------------------------------
# k-means optimum over all 2-partitions of 1-D points


def best_two_partition(points: np.ndarray, weights: np.ndarray | None = None):
    """Exhaustive minimum weighted SSE over 2-partitions (labels, objective)."""
    x = np.asarray(points, dtype=float)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    best = (np.inf, None)
    n = x.size
    for mask in range(1, 2 ** (n - 1)):
        lab = np.array([(mask >> i) & 1 for i in range(n)])
        sse = 0.0
        for g in (0, 1):
            sel = lab == g
            mu = (w[sel] * x[sel]).sum() / w[sel].sum()
            sse += (w[sel] * (x[sel] - mu) ** 2).sum()
        if sse < best[0] - 1e-12:
            best = (sse, lab)
    return best[1], best[0]


def same_partition(a, b) -> bool:
    """Labelings equal up to renaming of the clusters."""
    a = np.asarray(a)
    b = np.asarray(b)
    pairs = set(zip(a.tolist(), b.tolist()))
    return len(pairs) == len(set(a.tolist())) == len(set(b.tolist()))
