from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import d2clust.centroid as centroid_mod  # noqa: E402
from d2clust.core import DataObject, Distribution, WeightedDataset  # noqa: E402

# every centroid update in the test run raises if its objective rises
centroid_mod.STRICT_MONOTONE = True

_ACCEPTANCE: dict[int, str] = {}


def record_acceptance(n: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    _ACCEPTANCE[n] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])


def obj1d(oid, points, probs=None):
    """Single super-dimension object with 1-D supports."""
    pts = np.asarray(points, dtype=float).reshape(-1, 1)
    p = np.full(len(pts), 1.0 / len(pts)) if probs is None else np.asarray(probs, float)
    return DataObject(str(oid), (Distribution(pts, p),))


def random_dist(rng, t_max=4, d=2, t=None):
    t = t or int(rng.integers(1, t_max + 1))
    return Distribution(rng.normal(size=(t, d)), rng.dirichlet(np.ones(t)))


def random_dataset(rng, n, t_max=4, d=2, groups=1, spread=4.0):
    objs = []
    for i in range(n):
        base = (i % groups) * spread
        dist = random_dist(rng, t_max, d)
        objs.append(DataObject(f"o{i}", (Distribution(dist.supports + base, dist.probs),)))
    return WeightedDataset.unit(objs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
