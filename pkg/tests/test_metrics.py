import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from narrative_topology.metrics import (
    CLAMP,
    SIGNAL_NAMES,
    bottleneck,
    build_signals,
    cross_correlation,
    derivative,
    normalized_wasserstein,
    persistence_entropy,
    smooth,
    strip_infinite,
    wasserstein,
)
from narrative_topology.tda import PersistenceDiagram

from oracles import bottleneck_bruteforce, wasserstein_bruteforce


def random_diagram(rng, n):
    b = rng.uniform(0, 1, size=n)
    return np.column_stack([b, b + rng.uniform(0.01, 1, size=n)])


def test_single_bar_vs_empty():
    assert wasserstein([(0, 2)], []) == pytest.approx(1.0)
    assert normalized_wasserstein([(0, 2)], []) == pytest.approx(1.0)
    assert wasserstein([], []) == 0.0
    assert normalized_wasserstein([], []) == 0.0


def test_euclidean_ground_metric_to_diagonal():
    assert wasserstein([(0, 2)], [], q=2) == pytest.approx(math.sqrt(2))


@pytest.mark.parametrize("p,q", [(1, math.inf), (2, math.inf), (1, 2), (2, 2)])
def test_wasserstein_matches_bruteforce(p, q):
    rng = np.random.default_rng(int(p * 10 + (q if q != math.inf else 0)))
    for _ in range(40):
        a = random_diagram(rng, int(rng.integers(0, 5)))
        b = random_diagram(rng, int(rng.integers(0, 5)))
        assert wasserstein(a, b, p, q) == pytest.approx(wasserstein_bruteforce(a, b, p, q), abs=1e-9)


def test_bottleneck_matches_bruteforce():
    rng = np.random.default_rng(7)
    for _ in range(60):
        a = random_diagram(rng, int(rng.integers(0, 5)))
        b = random_diagram(rng, int(rng.integers(0, 5)))
        assert bottleneck(a, b) == pytest.approx(bottleneck_bruteforce(a, b), abs=1e-12)


def test_bottleneck_essential_bars():
    a = PersistenceDiagram(0, [[0, 1], [0, math.inf]])
    b = PersistenceDiagram(0, [[0, 1.5], [0.25, math.inf]])
    assert bottleneck(a, b) == pytest.approx(0.5)
    assert bottleneck(a, PersistenceDiagram(0, [[0, 1]])) == math.inf


def test_infinite_points_rejected_by_wasserstein():
    with pytest.raises(ValueError):
        wasserstein([(0, math.inf)], [])


def test_duplication_scaling():
    rng = np.random.default_rng(1)
    a, b = random_diagram(rng, 4), random_diagram(rng, 3)
    aa, bb = np.vstack([a, a]), np.vstack([b, b])
    assert wasserstein(aa, bb) == pytest.approx(2 * wasserstein(a, b))
    assert normalized_wasserstein(aa, bb) == pytest.approx(normalized_wasserstein(a, b))


@pytest.mark.parametrize("p", [1, 2])
def test_metric_axioms(p):
    rng = np.random.default_rng(p)
    for _ in range(200):
        a, b, c = (random_diagram(rng, int(rng.integers(0, 6))) for _ in range(3))
        ab, bc, ac = wasserstein(a, b, p), wasserstein(b, c, p), wasserstein(a, c, p)
        assert ab >= 0 and ab == wasserstein(b, a, p)
        assert ac <= ab + bc + 1e-9
        assert wasserstein(a, a, p) <= 1e-12


def test_identity_of_indiscernibles():
    a = random_diagram(np.random.default_rng(3), 6)
    assert wasserstein(a, a[::-1]) <= 1e-12
    assert wasserstein(a, a[:-1]) > 1e-12


@pytest.mark.parametrize("lifetimes,expected", [([3, 1], 0.8113), ([1, 1], 1.0), ([5], 0.0), ([], 0.0)])
def test_entropy_examples(lifetimes, expected):
    bars = [(0, l) for l in lifetimes]
    assert persistence_entropy(bars) == pytest.approx(expected, abs=1e-4)


@settings(max_examples=100)
@given(st.lists(st.floats(0.01, 100), min_size=1, max_size=20), st.floats(0.1, 10))
def test_entropy_bounds_and_scale_invariance(lifetimes, scale):
    bars = np.column_stack([np.zeros(len(lifetimes)), lifetimes])
    h = persistence_entropy(bars)
    assert 0.0 <= h <= 1.0
    assert persistence_entropy(bars * scale) == pytest.approx(h, abs=1e-9)


def test_strip_infinite():
    d = PersistenceDiagram(0, [[0, 1], [0, math.inf]])
    assert strip_infinite(d).pairs.tolist() == [[0, 1]]
    assert strip_infinite(d, CLAMP, 5.0).pairs.tolist() == [[0, 1], [0, 5]]
    with pytest.raises(ValueError):
        strip_infinite(d, CLAMP, 0.0)
    with pytest.raises(ValueError):
        strip_infinite(d, CLAMP)


def test_smooth_examples():
    assert smooth([0, 3, 0], 3).tolist() == [1.5, 1.0, 1.5]
    x = np.random.default_rng(0).normal(size=9)
    assert np.array_equal(smooth(x, 1), x)
    assert smooth([4.0] * 10, 7).tolist() == [4.0] * 10
    with pytest.raises(ValueError):
        smooth(x, 4)


def test_smooth_window_longer_than_series(caplog):
    assert smooth([1.0, 2.0], 7).tolist() == [1.0, 2.0]
    assert "exceeds" in caplog.text


def test_derivatives():
    t = np.arange(10, dtype=float)
    assert np.allclose(derivative(3 * t + 1), 3)
    assert np.allclose(derivative(t**2)[1:-1], 2 * t[1:-1])
    assert np.allclose(derivative(derivative(t**2))[2:-2], 2)
    assert np.array_equal(derivative(np.full(6, 2.5)), np.zeros(6))
    with pytest.raises(ValueError):
        derivative([1.0, 2.0])


def test_cross_correlation_identity_and_negation():
    a = np.sin(np.arange(40) / 3.0)
    rep = cross_correlation(a, a, 5)
    assert rep.peak_lag == 0 and rep.peak_corr == pytest.approx(1.0)
    assert rep.correlations[rep.lags.index(0)] == pytest.approx(1.0)
    neg = cross_correlation(a, -a, 5)
    assert neg.correlations[neg.lags.index(0)] == pytest.approx(-1.0)


def test_cross_correlation_shift():
    a = np.random.default_rng(5).normal(size=60)
    b = np.concatenate([np.zeros(5), a[:-5]])  # b is a delayed by 5
    rep = cross_correlation(a, b, 8, names=("x", "y"))
    assert rep.peak_lag == -5
    assert "x precede changes in y by 5" in rep.describe()
    assert rep.to_record()["summary"] == rep.describe()


def test_cross_correlation_antisymmetry():
    rng = np.random.default_rng(6)
    a, b = rng.normal(size=30), rng.normal(size=30)
    ab, ba = cross_correlation(a, b, 4), cross_correlation(b, a, 4)
    assert np.allclose(ab.correlations, ba.correlations[::-1])


def test_cross_correlation_validation():
    with pytest.raises(ValueError):
        cross_correlation([1, 2, 3], [1, 2], 1)
    with pytest.raises(ValueError):
        cross_correlation(range(5), range(5), 3)


def diagrams_for(n, jump_after=None):
    rng = np.random.default_rng(0)
    base = (PersistenceDiagram(0, np.vstack([random_diagram(rng, 5), [[0, math.inf]]])), PersistenceDiagram(1, random_diagram(rng, 3)))
    other = (PersistenceDiagram(0, random_diagram(rng, 9) * 3), PersistenceDiagram(1, random_diagram(rng, 7) * 3))
    return [base if jump_after is None or k <= jump_after else other for k in range(1, n + 1)]


def test_build_signals_shapes():
    sig = build_signals(diagrams_for(12))
    assert tuple(sig) == SIGNAL_NAMES
    assert len(sig["h0_entropy"]) == 12 and len(sig["h0_wass"]) == 11
    assert sig["h0_wass"].window_index[0] == 2
    for s in sig.values():
        assert len(s.smoothed) == len(s.d1) == len(s.d2) == len(s.raw)
    assert np.all(sig["h1_wass"].raw == 0) and np.all(sig["h1_wass"].d1 == 0)


def test_build_signals_needs_four_windows():
    with pytest.raises(ValueError, match="4 windows"):
        build_signals(diagrams_for(3))


def test_planted_jump():
    sig = build_signals(diagrams_for(20, jump_after=10), smooth_window=7)
    for name in ("h0_wass", "h1_wass"):
        s = sig[name]
        boundary = s.window_index.index(11)  # pair (10, 11)
        assert int(np.argmax(s.raw)) == boundary
        assert s.smoothed[boundary] == s.smoothed.max()
