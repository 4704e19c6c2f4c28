"""Compiled LP kernels.

``transport_simplex`` is the transportation (network) simplex: northwest
corner start, u/v potentials on the basis tree, Bland's rule for both the
entering and the leaving cell once a pivot is degenerate (Dantzig pricing
otherwise).  ``dense_simplex`` is a two-phase tableau
simplex for small general LPs in equality form.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_ITER_LIMIT = 1
STATUS_INFEASIBLE = 2
STATUS_UNBOUNDED = 3


@njit(cache=True, nogil=True)
def _potentials(cost, basic, u, v):
    m, n = cost.shape
    seen_r = np.zeros(m, np.bool_)
    seen_c = np.zeros(n, np.bool_)
    queue = np.empty(m + n, np.int64)  # row i -> i, col j -> m + j
    queue[0] = 0
    seen_r[0] = True
    u[0] = 0.0
    head, tail = 0, 1
    while head < tail:
        node = queue[head]
        head += 1
        if node < m:
            for j in range(n):
                if basic[node, j] and not seen_c[j]:
                    v[j] = cost[node, j] - u[node]
                    seen_c[j] = True
                    queue[tail] = m + j
                    tail += 1
        else:
            j = node - m
            for i in range(m):
                if basic[i, j] and not seen_r[i]:
                    u[i] = cost[i, j] - v[j]
                    seen_r[i] = True
                    queue[tail] = i
                    tail += 1
    return tail == m + n


@njit(cache=True, nogil=True)
def _tree_path(basic, src_row, dst_col, path_r, path_c):
    """Cells on the basis-tree path from column ``dst_col`` back to row
    ``src_row``; returns the number of cells written."""
    m, n = basic.shape
    parent = np.full(m + n, -1, np.int64)
    seen = np.zeros(m + n, np.bool_)
    queue = np.empty(m + n, np.int64)
    queue[0] = src_row
    seen[src_row] = True
    head, tail = 0, 1
    target = m + dst_col
    while head < tail and not seen[target]:
        node = queue[head]
        head += 1
        if node < m:
            for j in range(n):
                if basic[node, j] and not seen[m + j]:
                    seen[m + j] = True
                    parent[m + j] = node
                    queue[tail] = m + j
                    tail += 1
        else:
            j = node - m
            for i in range(m):
                if basic[i, j] and not seen[i]:
                    seen[i] = True
                    parent[i] = node
                    queue[tail] = i
                    tail += 1
    count = 0
    node = target
    while node != src_row:
        p = parent[node]
        if node < m:
            path_r[count] = node
            path_c[count] = p - m
        else:
            path_r[count] = p
            path_c[count] = node - m
        count += 1
        node = p
    return count


@njit(cache=True, nogil=True)
def transport_simplex(cost, supply, demand, max_iter):
    m, n = cost.shape
    x = np.zeros((m, n))
    basic = np.zeros((m, n), np.bool_)

    ra = supply.copy()
    rb = demand.copy()
    i = 0
    j = 0
    while True:
        q = min(ra[i], rb[j])
        if q < 0.0:
            q = 0.0
        x[i, j] = q
        basic[i, j] = True
        ra[i] -= q
        rb[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if j == n - 1 or (i < m - 1 and ra[i] <= rb[j]):
            i += 1
        else:
            j += 1

    scale = 1.0
    for a in range(m):
        for b in range(n):
            if abs(cost[a, b]) > scale:
                scale = abs(cost[a, b])
    tol = 1e-12 * scale

    u = np.zeros(m)
    v = np.zeros(n)
    path_r = np.empty(m + n, np.int64)
    path_c = np.empty(m + n, np.int64)
    status = STATUS_ITER_LIMIT
    bland = False
    it = 0
    while it < max_iter:
        it += 1
        _potentials(cost, basic, u, v)
        # Dantzig pricing; Bland (first eligible cell) after a degenerate pivot
        ei = -1
        ej = -1
        best = -tol
        for a in range(m):
            for b in range(n):
                if not basic[a, b]:
                    rc = cost[a, b] - u[a] - v[b]
                    if rc < best:
                        best = rc
                        ei = a
                        ej = b
                        if bland:
                            break
            if bland and ei >= 0:
                break
        if ei < 0:
            status = STATUS_OK
            break
        count = _tree_path(basic, ei, ej, path_r, path_c)
        # path cells alternate -, +, -, ... starting next to the entering cell
        theta = np.inf
        li = -1
        lj = -1
        for k in range(0, count, 2):
            a = path_r[k]
            b = path_c[k]
            val = x[a, b]
            if val < theta or (val == theta and a * n + b < li * n + lj):
                theta = val
                li = a
                lj = b
        for k in range(count):
            a = path_r[k]
            b = path_c[k]
            if k % 2 == 0:
                x[a, b] -= theta
            else:
                x[a, b] += theta
        x[ei, ej] = theta
        x[li, lj] = 0.0
        bland = theta == 0.0
        basic[li, lj] = False
        basic[ei, ej] = True

    for a in range(m):
        for b in range(n):
            if x[a, b] < 1e-12:
                x[a, b] = 0.0
    obj = 0.0
    for a in range(m):
        for b in range(n):
            obj += x[a, b] * cost[a, b]
    return x, obj, status, it


@njit(cache=True, nogil=True)
def cross_sq_numeric(sa, pa, oa, sb, pb, ob, max_iter):
    """Squared Mallows distances between two packed lists of numeric
    distributions (supports stacked row-wise, ``o*`` are offsets)."""
    na = oa.size - 1
    nb = ob.size - 1
    d = sa.shape[1]
    out = np.empty((na, nb))
    failures = 0
    for i in range(na):
        a0 = oa[i]
        m = oa[i + 1] - a0
        for j in range(nb):
            b0 = ob[j]
            n = ob[j + 1] - b0
            cost = np.empty((m, n))
            for r in range(m):
                for c in range(n):
                    acc = 0.0
                    for k in range(d):
                        diff = sa[a0 + r, k] - sb[b0 + c, k]
                        acc += diff * diff
                    cost[r, c] = acc
            _, obj, status, _ = transport_simplex(cost, pa[a0:a0 + m], pb[b0:b0 + n], max_iter)
            if status != STATUS_OK:
                failures += 1
            out[i, j] = max(obj, 0.0)
    return out, failures


@njit(cache=True, nogil=True)
def cross_sq_symbolic(sa, pa, oa, sb, pb, ob, matrix, max_iter):
    na = oa.size - 1
    nb = ob.size - 1
    out = np.empty((na, nb))
    failures = 0
    for i in range(na):
        a0 = oa[i]
        m = oa[i + 1] - a0
        for j in range(nb):
            b0 = ob[j]
            n = ob[j + 1] - b0
            cost = np.empty((m, n))
            for r in range(m):
                for c in range(n):
                    cost[r, c] = matrix[sa[a0 + r], sb[b0 + c]]
            _, obj, status, _ = transport_simplex(cost, pa[a0:a0 + m], pb[b0:b0 + n], max_iter)
            if status != STATUS_OK:
                failures += 1
            out[i, j] = max(obj, 0.0)
    return out, failures


@njit(cache=True, nogil=True)
def _pivot(T, basis, row, col):
    piv = T[row, col]
    T[row, :] /= piv
    for i in range(T.shape[0]):
        if i != row:
            f = T[i, col]
            if f != 0.0:
                T[i, :] -= f * T[row, :]
    basis[row] = col


@njit(cache=True, nogil=True)
def _run_phase(T, basis, n_enter, tol, max_iter):
    """Pivot until the last row has no negative reduced cost among the first
    ``n_enter`` columns.  Returns (status, pivots)."""
    m = T.shape[0] - 1
    rhs = T.shape[1] - 1
    bland = False
    it = 0
    while it < max_iter:
        col = -1
        best = -tol
        for j in range(n_enter):
            rc = T[m, j]
            if rc < best:
                best = rc
                col = j
                if bland:
                    break
        if col < 0:
            return STATUS_OK, it
        row = -1
        ratio = np.inf
        for i in range(m):
            a = T[i, col]
            if a > 1e-11:
                r = T[i, rhs] / a
                if r < ratio - 1e-14 or (abs(r - ratio) <= 1e-14 and basis[i] < basis[row]):
                    ratio = r
                    row = i
        if row < 0:
            return STATUS_UNBOUNDED, it
        bland = ratio <= 1e-14
        _pivot(T, basis, row, col)
        it += 1
    return STATUS_ITER_LIMIT, it


@njit(cache=True, nogil=True)
def dense_simplex(A, b, c, max_iter):
    """Two-phase tableau simplex for ``min c.x  s.t.  A x = b, x >= 0``.

    Dantzig pricing with a switch to Bland's rule after degenerate pivots.
    Returns ``(x, objective, status, pivots)``.
    """
    m, n = A.shape
    T = np.zeros((m + 1, n + m + 1))
    basis = np.empty(m, np.int64)
    for i in range(m):
        sign = -1.0 if b[i] < 0 else 1.0
        for j in range(n):
            T[i, j] = sign * A[i, j]
        T[i, n + i] = 1.0
        T[i, n + m] = sign * b[i]
        basis[i] = n + i
    # phase 1: minimize the sum of artificials
    for j in range(n + m + 1):
        acc = 0.0
        for i in range(m):
            acc += T[i, j]
        T[m, j] = -acc
    for i in range(m):
        T[m, n + i] = 0.0
    scale = 1.0
    for i in range(m):
        scale = max(scale, abs(T[i, n + m]))
    status, it1 = _run_phase(T, basis, n, 1e-11 * scale, max_iter)
    x = np.zeros(n)
    if status != STATUS_OK:
        return x, 0.0, status, it1
    if -T[m, n + m] > 1e-9 * scale:
        return x, 0.0, STATUS_INFEASIBLE, it1
    # drive zero-level artificials out of the basis where a real column allows
    for i in range(m):
        if basis[i] >= n:
            for j in range(n):
                if abs(T[i, j]) > 1e-9:
                    _pivot(T, basis, i, j)
                    break
    # phase 2 objective row in reduced form; artificial columns never enter
    cscale = 1.0
    for j in range(n):
        T[m, j] = c[j]
        cscale = max(cscale, abs(c[j]))
    for j in range(n, n + m + 1):
        T[m, j] = 0.0
    for i in range(m):
        k = basis[i]
        if k < n and c[k] != 0.0:
            f = c[k]
            for j in range(n + m + 1):
                T[m, j] -= f * T[i, j]
    status, it2 = _run_phase(T, basis, n, 1e-11 * cscale, max_iter)
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i, n + m]
    obj = 0.0
    for j in range(n):
        obj += c[j] * x[j]
    return x, obj, status, it1 + it2
