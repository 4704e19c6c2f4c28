import math
import warnings

import numpy as np
import pytest

from conftest import obj1d, random_dataset
from d2clust.core import DataObject, Distribution, ValidationError, WeightedDataset
from d2clust.d2 import Assignment, d2_cluster
from d2clust.metrics import (categorical_distance, davies_bouldin, mean_squared_dispersion,
                             mm_distance_sq)
from d2clust.transport import object_distance_sq


def assignment(labels, centroids):
    labels = np.asarray(labels)
    k = len(centroids)
    return Assignment(labels, centroids, np.bincount(labels, minlength=k) / labels.size, 0.0)


def points(xs):
    return WeightedDataset.unit([obj1d(i, [x]) for i, x in enumerate(xs)])


def test_msd_zero_when_objects_are_centroids(rng):
    ds = random_dataset(rng, 5)
    a = assignment(np.arange(5), list(ds.objects))
    assert mean_squared_dispersion(ds, a) == 0.0
    b = d2_cluster(ds, 5, rng=rng)
    assert mean_squared_dispersion(ds, b) == pytest.approx(0.0, abs=1e-12)


def test_msd_hand_value():
    assert mean_squared_dispersion(points([0, 4]), assignment([0, 0], [obj1d("z", [2])])) == 4.0


def test_msd_is_plain_mean_of_squared_distances(rng):
    ds = random_dataset(rng, 8)
    a = d2_cluster(ds, 3, rng=rng)
    want = np.mean([object_distance_sq(o, a.centroids[l]) for o, l in zip(ds.objects, a.labels)])
    assert mean_squared_dispersion(ds, a) == pytest.approx(want)


def test_mm_identity_and_singletons(rng):
    z = list(random_dataset(rng, 3).objects)
    p = np.array([0.2, 0.3, 0.5])
    assert mm_distance_sq(z, p, z, p) == pytest.approx(0.0, abs=1e-12)
    assert mm_distance_sq(z[:1], [1.0], z[1:2], [1.0]) == pytest.approx(object_distance_sq(z[0], z[1]))


def test_mm_forced_coupling():
    got = mm_distance_sq([obj1d("a", [0]), obj1d("b", [2])], [0.5, 0.5], [obj1d("c", [1])], [1.0])
    assert got == pytest.approx(1.0)


def test_mm_symmetric(rng):
    z1 = list(random_dataset(rng, 3).objects)
    z2 = list(random_dataset(rng, 4).objects)
    p1, p2 = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(4))
    assert mm_distance_sq(z1, p1, z2, p2) == pytest.approx(mm_distance_sq(z2, p2, z1, p1), rel=1e-12)


def test_mm_rejects_bad_proportions(rng):
    z = list(random_dataset(rng, 2).objects)
    with pytest.raises(ValidationError):
        mm_distance_sq(z, [0.5, 0.6], z, [0.5, 0.5])
    with pytest.raises(ValidationError):
        mm_distance_sq(z, [1.0], z, [0.5, 0.5])


def test_categorical_identical_is_zero():
    assert categorical_distance([0, 0, 1, 2], [0, 0, 1, 2]) == 0.0


def test_categorical_hand_value():
    assert categorical_distance([[0, 1], [2, 3]], [[0, 1], [2], [3]]) == pytest.approx(0.5)


def test_categorical_against_singletons_grows_with_n():
    vals = [categorical_distance(np.zeros(n, int), np.arange(n)) for n in (4, 8)]
    assert vals == pytest.approx([3.0, 7.0])
    assert vals[1] > vals[0]


def test_categorical_relabel_invariant(rng):
    a = rng.integers(0, 4, size=30)
    b = rng.integers(0, 3, size=30)
    perm = rng.permutation(4)
    assert categorical_distance(a, b) == pytest.approx(categorical_distance(perm[a], b))
    assert categorical_distance(a, b) == pytest.approx(categorical_distance(b, a))


def test_categorical_ground_set_mismatch():
    with pytest.raises(ValidationError):
        categorical_distance([[0, 1]], [[0, 2]])
    with pytest.raises(ValidationError):
        categorical_distance([[0, 1], [1]], [[0, 1]])


def test_dbi_hand_value():
    ds = points([0, 2, 10, 12])
    a = assignment([0, 0, 1, 1], [obj1d("a", [1]), obj1d("b", [11])])
    assert davies_bouldin(ds, a) == pytest.approx(0.02)


def test_dbi_zero_when_members_sit_on_centroids():
    ds = points([0, 0, 10, 10])
    a = assignment([0, 0, 1, 1], [obj1d("a", [0]), obj1d("b", [10])])
    assert davies_bouldin(ds, a) == 0.0


@pytest.mark.parametrize("lam", [0.1, 3.0, 40.0])
def test_dbi_scale_invariant(lam):
    xs = np.array([0.0, 2, 5, 10, 12, 13])
    cents = [1.0, 35 / 3]

    def run(s):
        ds = points(xs * s)
        return davies_bouldin(ds, assignment([0, 0, 1, 1, 1, 1], [obj1d("a", [cents[0] * s]),
                                                                    obj1d("b", [cents[1] * s])]))
    assert run(lam) == pytest.approx(run(1.0), rel=1e-9)


def test_dbi_decreases_when_clusters_move_apart():
    vals = []
    for gap in (5.0, 10.0, 20.0):
        ds = points([0, 2, gap, gap + 2])
        vals.append(davies_bouldin(ds, assignment([0, 0, 1, 1], [obj1d("a", [1]),
                                                                  obj1d("b", [gap + 1])])))
    assert vals[0] > vals[1] > vals[2]


def test_dbi_errors_and_coincident_centroids():
    ds = points([0, 2])
    with pytest.raises(ValidationError):
        davies_bouldin(ds, assignment([0, 0], [obj1d("a", [1])]))
    with pytest.raises(ValidationError):
        davies_bouldin(ds, assignment([0, 0], [obj1d("a", [1]), obj1d("b", [3])]))
    with pytest.warns(RuntimeWarning, match="coincide"):
        v = davies_bouldin(ds, assignment([0, 1], [obj1d("a", [1]), obj1d("b", [1])]))
    assert math.isinf(v)


def test_dbi_flattened_histograms():
    def h(sym, p):
        return DataObject(str(sym), (Distribution(np.array(sym), np.array(p)),))
    ds = WeightedDataset.unit([h([0], [1.0]), h([0, 1], [0.5, 0.5]), h([2], [1.0])])
    a = assignment([0, 0, 1], [h([0, 1], [0.75, 0.25]), h([2], [1.0])])
    # sigma_0 = mean(0.125, 0.125), sigma_1 = 0, d = 0.75^2 + 0.25^2 + 1
    want = (0.125 / 1.625 + 0.125 / 1.625) / 2
    assert davies_bouldin(ds, a, "squared-euclidean", alphabet_sizes=[3]) == pytest.approx(want)
    with pytest.raises(ValidationError):
        davies_bouldin(points([0, 1]), assignment([0, 1], [obj1d("a", [0]), obj1d("b", [1])]),
                       "squared-euclidean")
