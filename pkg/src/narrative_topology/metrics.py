"""Diagram distances, persistence entropy and the time-series signals built on them."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .tda import PersistenceDiagram

log = logging.getLogger(__name__)

DROP = "drop"
CLAMP = "clamp"

SIGNAL_NAMES = ("h0_entropy", "h1_entropy", "h0_wass", "h1_wass")


def _pairs(d) -> np.ndarray:
    if isinstance(d, PersistenceDiagram):
        return d.pairs
    return np.asarray(d, dtype=np.float64).reshape(-1, 2)


def _finite(d, what: str) -> np.ndarray:
    pts = _pairs(d)
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{what} needs finite bars; strip infinite deaths first")
    return pts


def _canonical(X: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(X[np.lexsort((X[:, 1], X[:, 0]))])


def _ground(X: np.ndarray, Y: np.ndarray, q: float) -> np.ndarray:
    diff = np.abs(X[:, None, :] - Y[None, :, :])
    if q == math.inf:
        return diff.max(axis=2)
    return (diff**q).sum(axis=2) ** (1.0 / q)


def _to_diagonal(X: np.ndarray, q: float) -> np.ndarray:
    # distance from (b, d) to its nearest diagonal point under the l_q norm
    half = (X[:, 1] - X[:, 0]) / 2.0
    if q == math.inf:
        return half
    return half * 2.0 ** (1.0 / q)


def _augmented_cost(X: np.ndarray, Y: np.ndarray, p: float, q: float) -> np.ndarray:
    m, n = len(X), len(Y)
    big = np.inf
    C = np.zeros((m + n, m + n))
    if m and n:
        C[:m, :n] = _ground(X, Y, q) ** p
    C[:m, n:] = big
    C[m:, :n] = big
    if m:
        C[np.arange(m), n + np.arange(m)] = _to_diagonal(X, q) ** p
    if n:
        C[m + np.arange(n), np.arange(n)] = _to_diagonal(Y, q) ** p
    return C


def wasserstein(D1, D2, p: float = 1, q: float = math.inf) -> float:
    """p-Wasserstein distance with l_q ground metric, exact via the Hungarian method.

    Points may match each other or their own diagonal projection; the
    ``(|D1|+|D2|)``-square augmented cost matrix encodes both.
    """
    X = _canonical(_finite(D1, "wasserstein"))
    Y = _canonical(_finite(D2, "wasserstein"))
    if len(X) == 0 and len(Y) == 0:
        return 0.0
    # a fixed operand order makes the result bitwise symmetric
    if (len(Y), Y.tobytes()) < (len(X), X.tobytes()):
        X, Y = Y, X
    C = _augmented_cost(X, Y, p, q)
    rows, cols = linear_sum_assignment(C)
    total = math.fsum(C[rows, cols])
    return total ** (1.0 / p)


def normalized_wasserstein(D1, D2, p: float = 1, q: float = math.inf) -> float:
    """Wasserstein distance divided by the total number of points."""
    n = len(_finite(D1, "wasserstein")) + len(_finite(D2, "wasserstein"))
    if n == 0:
        return 0.0
    return wasserstein(D1, D2, p, q) / n


def bottleneck(D1, D2) -> float:
    """Bottleneck distance (l_inf ground metric) by threshold search over candidate costs.

    Essential bars must match essential bars; their cost is the birth gap.
    """
    X, Y = _pairs(D1), _pairs(D2)
    ex, ey = X[~np.isfinite(X[:, 1])], Y[~np.isfinite(Y[:, 1])]
    if len(ex) != len(ey):
        return math.inf
    ess = float(np.abs(np.sort(ex[:, 0]) - np.sort(ey[:, 0])).max()) if len(ex) else 0.0
    X, Y = X[np.isfinite(X[:, 1])], Y[np.isfinite(Y[:, 1])]
    m, n = len(X), len(Y)
    if m + n == 0:
        return ess
    C = _augmented_cost(X, Y, 1, math.inf)
    C[m:, n:] = 0.0
    cand = np.unique(C[np.isfinite(C)])
    lo, hi = 0, len(cand) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        graph = csr_matrix((C <= cand[mid]).astype(np.int8))
        match = maximum_bipartite_matching(graph, perm_type="column")
        if np.all(match >= 0):
            hi = mid
        else:
            lo = mid + 1
    return max(ess, float(cand[lo]))


def persistence_entropy(D) -> float:
    """Shannon entropy of the lifetime distribution, normalised by ``log n``.

    Only bars with positive lifetime count; ``n <= 1`` gives 0.
    """
    pts = _finite(D, "persistence entropy")
    life = pts[:, 1] - pts[:, 0]
    life = life[life > 0]
    n = len(life)
    if n <= 1:
        return 0.0
    prob = life / life.sum()
    h = -float(np.sum(prob * np.log(prob))) / math.log(n)
    return min(max(h, 0.0), 1.0)


def strip_infinite(D: PersistenceDiagram, policy: str = DROP, value: float | None = None) -> PersistenceDiagram:
    """Drop bars with infinite death, or clamp their death to ``value``."""
    pts = D.pairs
    inf = ~np.isfinite(pts[:, 1])
    if policy == DROP:
        return PersistenceDiagram(D.dim, pts[~inf], D.truncated[~inf])
    if policy == CLAMP:
        if value is None:
            raise ValueError("clamp needs a value")
        if np.any(value <= pts[inf, 0]):
            raise ValueError(f"clamp value {value} does not exceed the birth of an essential bar")
        out = pts.copy()
        out[inf, 1] = value
        return PersistenceDiagram(D.dim, out, D.truncated)
    raise ValueError(f"unknown policy {policy!r}")


def smooth(xs: Sequence[float], window: int = 7) -> np.ndarray:
    """Centred moving average; near the ends the window keeps only the points that exist."""
    x = np.asarray(xs, dtype=np.float64)
    if window < 1 or window % 2 == 0:
        raise ValueError("smoothing window must be a positive odd integer")
    if window > len(x):
        log.warning("smoothing window %d exceeds series length %d; series left unsmoothed", window, len(x))
        return x.copy()
    if window == 1:
        return x.copy()
    h = window // 2
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(len(x))
    lo = np.maximum(idx - h, 0)
    hi = np.minimum(idx + h + 1, len(x))
    return (csum[hi] - csum[lo]) / (hi - lo)


def derivative(xs: Sequence[float]) -> np.ndarray:
    """Central differences inside, one-sided differences at both ends."""
    x = np.asarray(xs, dtype=np.float64)
    if len(x) < 3:
        raise ValueError("derivative needs at least 3 samples")
    return np.gradient(x, edge_order=1)


@dataclass
class LagReport:
    """Cross-correlation of two signals; negative ``peak_lag`` means ``a`` leads ``b``."""

    lags: list[int]
    correlations: list[float]
    peak_lag: int
    peak_corr: float
    a: str = "a"
    b: str = "b"

    def describe(self) -> str:
        if self.peak_lag < 0:
            reading = f"changes in {self.a} precede changes in {self.b} by {-self.peak_lag} steps"
        elif self.peak_lag > 0:
            reading = f"changes in {self.a} follow changes in {self.b} by {self.peak_lag} steps"
        else:
            reading = f"changes in {self.a} and {self.b} are synchronous"
        return f"peak correlation {self.peak_corr:.3f} at lag {self.peak_lag}: {reading}"

    def to_record(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "lags": list(self.lags),
            "correlations": list(self.correlations),
            "peak_lag": self.peak_lag,
            "peak_corr": self.peak_corr,
            "summary": self.describe(),
        }


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    den = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if den == 0.0:
        return 0.0
    return min(max(float(xc @ yc) / den, -1.0), 1.0)


def cross_correlation(a: Sequence[float], b: Sequence[float], max_lag: int, names: tuple[str, str] = ("a", "b")) -> LagReport:
    """Pearson correlation of ``a[t]`` with ``b[t - lag]`` over the overlap, for each lag.

    With this convention ``b`` delayed by five steps relative to ``a`` peaks
    at lag -5.  The peak is the largest correlation, ties going to the
    smallest ``|lag|``.
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if len(x) != len(y):
        raise ValueError("series must have equal length")
    if max_lag < 1:
        raise ValueError("max_lag must be positive")
    if len(x) < max_lag + 3:
        raise ValueError(f"series of length {len(x)} too short for max_lag {max_lag}")
    n = len(x)
    lags = list(range(-max_lag, max_lag + 1))
    corrs = []
    for lag in lags:
        t0, t1 = max(0, lag), min(n, n + lag)
        corrs.append(_pearson(x[t0:t1], y[t0 - lag : t1 - lag]))
    best = max(corrs)
    peak = min((lag for lag, c in zip(lags, corrs) if c == best), key=lambda lag: (abs(lag), lag))
    return LagReport(lags, corrs, peak, best, *names)


@dataclass
class SignalSeries:
    name: str
    window_index: list[int]
    raw: np.ndarray
    smoothed: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    def __len__(self) -> int:
        return len(self.raw)

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "window_index": list(self.window_index),
            "raw": self.raw.tolist(),
            "smoothed": self.smoothed.tolist(),
            "d1": self.d1.tolist(),
            "d2": self.d2.tolist(),
        }


def make_series(name: str, window_index: Sequence[int], raw: Sequence[float], smooth_window: int) -> SignalSeries:
    raw = np.asarray(raw, dtype=np.float64)
    sm = smooth(raw, smooth_window)
    d1 = derivative(sm)
    return SignalSeries(name, list(window_index), raw, sm, d1, derivative(d1))


@dataclass
class MetricConfig:
    p: float = 1
    q: float = math.inf
    smooth_window: int = 7
    infinite_policy: str = DROP
    clamp_value: float | None = None
    max_lag: int | None = None  # None: a third of the series length
    xcorr_input: str = "smoothed"  # raw | smoothed | d1 | d2


def build_signals(
    diagrams: Sequence[tuple[PersistenceDiagram, PersistenceDiagram]],
    p: float = 1,
    q: float = math.inf,
    smooth_window: int = 7,
    policy: str = DROP,
    clamp_value: float | None = None,
    window_index: Sequence[int] | None = None,
) -> dict[str, SignalSeries]:
    """Entropy per window and normalised Wasserstein distance per consecutive pair.

    The distance between windows ``k-1`` and ``k`` is indexed by ``k``.
    """
    if len(diagrams) < 4:
        raise ValueError(f"need at least 4 windows, got {len(diagrams)}")
    idx = list(range(1, len(diagrams) + 1)) if window_index is None else list(window_index)
    clean = [
        tuple(strip_infinite(d, policy, clamp_value) for d in pair)
        for pair in diagrams
    ]
    out = {}
    for dim in (0, 1):
        ent = [persistence_entropy(pair[dim]) for pair in clean]
        wass = [normalized_wasserstein(clean[k - 1][dim], clean[k][dim], p, q) for k in range(1, len(clean))]
        out[f"h{dim}_entropy"] = make_series(f"h{dim}_entropy", idx, ent, smooth_window)
        out[f"h{dim}_wass"] = make_series(f"h{dim}_wass", idx[1:], wass, smooth_window)
    return {name: out[name] for name in SIGNAL_NAMES}
