import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from conftest import obj1d, random_dist
from oracles import transport_by_vertices
from d2clust._kernels import STATUS_INFEASIBLE, STATUS_OK, dense_simplex
from d2clust.core import DataObject, Distribution, GroundMetric, ValidationError
from d2clust.transport import (InfeasibleMarginals, cross_mallows_sq, distance_matrix_sq,
                               mallows_sq, object_distance, object_distance_sq,
                               solve_transportation)


def d1(points, probs):
    return Distribution(np.asarray(points, float).reshape(-1, 1), np.asarray(probs, float))


def test_one_by_one():
    c, obj = solve_transportation([[7.0]], [1.0], [1.0])
    assert c.plan.tolist() == [[1.0]]
    assert obj == 7.0


def test_forced_two_by_one():
    c, obj = solve_transportation([[1.0], [1.0]], [0.5, 0.5], [1.0])
    assert np.allclose(c.plan, [[0.5], [0.5]])
    assert obj == pytest.approx(1.0)


def test_two_by_two_matches_vertex_enumeration():
    cost = [[1.0, 9.0], [4.0, 1.0]]
    _, obj = solve_transportation(cost, [0.5, 0.5], [0.5, 0.5])
    assert obj == pytest.approx(transport_by_vertices(np.array(cost), [0.5, 0.5], [0.5, 0.5]))
    assert obj == pytest.approx(1.0)


def test_mismatched_marginals_rejected():
    with pytest.raises(InfeasibleMarginals):
        solve_transportation([[1.0, 2.0]], [1.0], [0.5, 0.4])
    with pytest.raises(InfeasibleMarginals):
        solve_transportation([[1.0]], [-1.0], [1.0])
    with pytest.raises(ValidationError):
        solve_transportation([[1.0, 2.0]], [1.0], [1.0])
    with pytest.raises(ValidationError):
        solve_transportation([[-1.0]], [1.0], [1.0])


def test_identity_distance_is_zero(rng):
    a = random_dist(rng)
    d2, coupling = mallows_sq(a, a)
    assert d2 == pytest.approx(0.0, abs=1e-12)
    coupling.check()


def test_single_points():
    assert mallows_sq(d1([0], [1]), d1([3], [1]))[0] == pytest.approx(9.0)


def test_two_point_monotone_matching():
    d2, c = mallows_sq(d1([0, 3], [0.5, 0.5]), d1([1, 2], [0.5, 0.5]))
    assert d2 == pytest.approx(1.0)
    assert np.allclose(c.plan, [[0.5, 0], [0, 0.5]])


def test_zero_distance_for_same_distribution_with_duplicated_support():
    a = d1([0.0, 1.0], [0.5, 0.5])
    b = d1([0.0, 0.0, 1.0], [0.25, 0.25, 0.5])
    assert mallows_sq(a, b)[0] == pytest.approx(0.0, abs=1e-14)


def test_object_distance_over_super_dimensions():
    x = DataObject("x", (d1([0], [1]), d1([0], [1])))
    y = DataObject("y", (d1([3], [1]), d1([4], [1])))
    assert object_distance(x, y) == pytest.approx(5.0)
    assert object_distance(x, x) == 0.0
    a, b = obj1d("a", [0, 3]), obj1d("b", [1, 2])
    assert object_distance(a, b) == pytest.approx(math.sqrt(mallows_sq(a.dists[0], b.dists[0])[0]))
    with pytest.raises(ValidationError):
        object_distance(x, obj1d("z", [0]))


def test_symbolic_ground_metric():
    g = GroundMetric.from_matrix([[0, 1, 4], [1, 0, 2], [4, 2, 0]])
    a = Distribution(np.array([0, 2]), np.array([0.5, 0.5]))
    b = Distribution(np.array([1]), np.array([1.0]))
    assert mallows_sq(a, b, g)[0] == pytest.approx(0.5 * 1 + 0.5 * 2)
    with pytest.raises(ValidationError):
        mallows_sq(a, d1([0], [1]), g)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    a = random_dist(rng, 4, d)
    b = random_dist(rng, 4, d)
    got = mallows_sq(a, b)[0]
    want = transport_by_vertices(GroundMetric.euclidean().cost(a.supports, b.supports),
                                 a.probs, b.probs)
    assert abs(got - want) <= 1e-6 * max(abs(want), 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_degenerate_marginals_and_ties(seed):
    # uniform marginals with integer costs produce many tied and degenerate bases
    rng = np.random.default_rng(seed)
    m, n = rng.integers(1, 5, size=2)
    cost = rng.integers(0, 3, size=(m, n)).astype(float)
    a, b = np.full(m, 1.0 / m), np.full(n, 1.0 / n)
    c, obj = solve_transportation(cost, a, b)
    c.check()
    assert obj == pytest.approx(transport_by_vertices(cost, a, b), rel=1e-6, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
def test_scale_equivariance(seed, lam):
    rng = np.random.default_rng(seed)
    a, b = random_dist(rng), random_dist(rng)
    scaled = [Distribution(x.supports * lam, x.probs) for x in (a, b)]
    assert mallows_sq(*scaled)[0] == pytest.approx(lam ** 2 * mallows_sq(a, b)[0], rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_metric_properties(seed):
    rng = np.random.default_rng(seed)
    x, y, z = (random_dist(rng, 4, 2) for _ in range(3))
    dxy = math.sqrt(mallows_sq(x, y)[0])
    dyx = math.sqrt(mallows_sq(y, x)[0])
    dxz = math.sqrt(mallows_sq(x, z)[0])
    dzy = math.sqrt(mallows_sq(z, y)[0])
    assert dxy >= 0
    assert abs(dxy - dyx) <= 1e-8
    assert dxy <= dxz + dzy + 1e-8


def test_larger_problems_match_generic_lp(rng):
    for _ in range(20):
        m, n = rng.integers(5, 15, size=2)
        cost = rng.random((m, n)) * 5
        a, b = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(n))
        a_eq = np.vstack([np.kron(np.eye(m), np.ones(n)), np.kron(np.ones(m), np.eye(n))])
        ref = linprog(cost.ravel(), A_eq=a_eq, b_eq=np.concatenate([a, b]), method="highs").fun
        c, obj = solve_transportation(cost, a, b)
        c.check()
        assert obj == pytest.approx(ref, rel=1e-9)


def test_batched_distances_match_pairwise(rng):
    xs = [random_dist(rng, 5, 3) for _ in range(6)]
    ys = [random_dist(rng, 5, 3) for _ in range(4)]
    m = cross_mallows_sq(xs, ys)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            assert m[i, j] == pytest.approx(mallows_sq(x, y)[0], rel=1e-12, abs=1e-14)


def test_batched_symbolic_and_multi_dimension(rng):
    g = GroundMetric.from_matrix([[0, 1, 3], [1, 0, 1], [3, 1, 0]])
    objs = []
    for i in range(4):
        sym = Distribution(rng.choice(3, size=2, replace=False), rng.dirichlet(np.ones(2)))
        objs.append(DataObject(str(i), (sym, random_dist(rng))))
    grounds = [g, GroundMetric.euclidean()]
    m = distance_matrix_sq(objs, objs, grounds)
    for i in range(4):
        for j in range(4):
            assert m[i, j] == pytest.approx(object_distance_sq(objs[i], objs[j], grounds))
    assert np.allclose(np.diag(m), 0)


def test_dense_simplex_against_highs(rng):
    for trial in range(100):
        m = int(rng.integers(1, 10))
        n = int(rng.integers(m, 25))
        a = rng.normal(size=(m, n))
        if m > 2 and trial % 2:
            a[-1] = a[0] - a[1]           # redundant row
        b = a @ (rng.random(n) * (rng.random(n) < 0.5))
        c = rng.random(n)
        x, obj, status, _ = dense_simplex(a, b, c, 10_000)
        ref = linprog(c, A_eq=a, b_eq=b, method="highs")
        assert status == STATUS_OK
        assert obj == pytest.approx(ref.fun, rel=1e-9, abs=1e-12)
        assert np.abs(a @ x - b).max() < 1e-8


def test_dense_simplex_reports_infeasible():
    _, _, status, _ = dense_simplex(np.array([[1.0, 1.0]]), np.array([-1.0]), np.ones(2), 100)
    assert status == STATUS_INFEASIBLE
