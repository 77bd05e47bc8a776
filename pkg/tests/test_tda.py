import math

import numpy as np
import pytest

from narrative_topology.embed import PointCloud
from narrative_topology.metrics import bottleneck
from narrative_topology.tda import (
    PersistenceDiagram,
    RipsConfig,
    dump_diagrams,
    enclosing_radius,
    load_diagrams,
    rips_persistence,
)

from oracles import mst_lengths, rips_persistence_bruteforce


def as_list(dgm):
    return [tuple(p) for p in dgm.pairs]


def close(a, b, tol=1e-9):
    return len(a) == len(b) and all(
        (math.isinf(x[1]) and math.isinf(y[1]) or abs(x[1] - y[1]) <= tol) and abs(x[0] - y[0]) <= tol
        for x, y in zip(a, b)
    )


@pytest.mark.parametrize("seed", range(100))
def test_matches_bruteforce(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(int(rng.integers(3, 11)), 2))
    h0, h1 = rips_persistence(pts)
    o0, o1 = rips_persistence_bruteforce(pts)
    assert close(as_list(h0), o0)
    assert close(as_list(h1), o1)


def test_unit_square():
    h0, h1 = rips_persistence([[0, 0], [1, 0], [1, 1], [0, 1]])
    assert close(as_list(h0), [(0, 1), (0, 1), (0, 1), (0, math.inf)])
    assert close(as_list(h1), [(1, math.sqrt(2))])


def test_single_and_two_points():
    h0, h1 = rips_persistence([[0.0, 0.0]])
    assert as_list(h0) == [(0.0, math.inf)] and len(h1) == 0
    h0, h1 = rips_persistence([[0.0, 0.0], [3.0, 4.0]])
    assert as_list(h0) == [(0.0, 5.0), (0.0, math.inf)] and len(h1) == 0


def test_empty_cloud_raises():
    with pytest.raises(ValueError):
        rips_persistence(np.zeros((0, 2)))


@pytest.mark.parametrize("pts,radius", [
    ([[0, 0], [1, 0], [2, 0], [3, 0]], 2.0),
    ([[1, 1]], 0.0),
    ([[0, 0], [1, 0], [1, 1], [0, 1]], math.sqrt(2)),
])
def test_enclosing_radius(pts, radius):
    assert enclosing_radius(pts) == pytest.approx(radius)


@pytest.mark.parametrize("seed", range(10))
def test_h0_is_mst(seed):
    pts = np.random.default_rng(seed).uniform(size=(40, 3))
    h0, _ = rips_persistence(pts)
    assert len(h0) == 40 and h0.n_essential == 1
    assert np.allclose(np.sort(h0.deaths[np.isfinite(h0.deaths)]), mst_lengths(pts), atol=1e-12)


def test_point_cloud_input_and_permutation_invariance():
    pts = np.random.default_rng(3).normal(size=(30, 2))
    a = rips_persistence(PointCloud(pts, [str(i) for i in range(30)]))
    b = rips_persistence(pts[np.random.default_rng(4).permutation(30)])
    for x, y in zip(a, b):
        assert np.allclose(x.pairs, y.pairs)


def test_explicit_threshold_truncates():
    # four corners, edges longer than 0.5 never enter
    h0, h1 = rips_persistence([[0, 0], [1, 0], [1, 1], [0, 1]], RipsConfig(max_edge_length=0.5))
    assert as_list(h0) == [(0.0, 0.5)] * 3 + [(0.0, math.inf)]
    assert h0.truncated.tolist() == [True, True, True, False]
    assert len(h1) == 0
    _, h1 = rips_persistence([[0, 0], [1, 0], [1, 1], [0, 1]], RipsConfig(max_edge_length=1.2))
    assert as_list(h1) == [(1.0, 1.2)] and h1.truncated.tolist() == [True]


def test_auto_threshold_loses_nothing():
    pts = np.random.default_rng(8).normal(size=(25, 2))
    auto = rips_persistence(pts)
    full = rips_persistence(pts, RipsConfig(max_edge_length=1e6))
    for a, b in zip(auto, full):
        assert np.allclose(a.pairs, b.pairs) and not a.truncated.any()


def test_max_dim_zero():
    _, h1 = rips_persistence([[0, 0], [1, 0], [1, 1], [0, 1]], RipsConfig(max_dim=0))
    assert len(h1) == 0


@pytest.mark.parametrize("seed", range(20))
def test_stability(seed):
    # each pairwise distance moves by at most 2 delta, and so does every bar endpoint
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(30, 2))
    delta = 1e-3
    noise = rng.normal(size=pts.shape)
    noise *= delta / np.linalg.norm(noise, axis=1, keepdims=True)
    a, b = rips_persistence(pts), rips_persistence(pts + noise)
    for x, y in zip(a, b):
        assert bottleneck(x, y) <= 2 * delta + 1e-9


def test_diagram_validation():
    with pytest.raises(ValueError):
        PersistenceDiagram(0, [[1.0, 0.5]])
    with pytest.raises(ValueError):
        PersistenceDiagram(0, [[-1.0, 0.5]])
    dgm = PersistenceDiagram(1, [[2.0, 3.0], [1.0, 4.0]])
    assert dgm.births.tolist() == [1.0, 2.0]


def test_dump_roundtrip(tmp_path):
    dgms = rips_persistence(np.random.default_rng(9).normal(size=(15, 2)), RipsConfig(max_edge_length=0.4))
    back = load_diagrams(dump_diagrams(dgms, tmp_path / "d.txt"))
    for a, b in zip(dgms, back):
        assert a.dim == b.dim and np.array_equal(a.pairs, b.pairs)
        assert np.array_equal(a.truncated, b.truncated)
