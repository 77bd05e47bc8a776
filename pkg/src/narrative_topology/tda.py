"""Vietoris-Rips persistence in dimensions 0 and 1 over Z/2.

H0 comes from Kruskal's algorithm on the sorted edge list.  H1 comes from
reducing the coboundary matrix of edges against triangles, which is the
anti-transpose of the triangle boundary matrix and yields the same pairs.
Edges that kill an H0 class are cleared (never reduced) because they cannot
create a cycle.

Filtration order: by diameter, ties broken lexicographically on the vertex
tuple read from the largest index down, i.e. ``(j, i)`` for an edge and
``(k, j, i)`` for a triangle with ``i < j < k``.  For triangles that is
exactly the combinatorial-number-system index, so a triangle is the
``int64`` key ``C(k,3) + C(j,2) + i``.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numba import njit, types
from numba.typed import Dict
from scipy.spatial.distance import pdist, squareform

from .embed import PointCloud

AUTO = "auto"


@dataclass
class PersistenceDiagram:
    """Bars of one homology dimension, sorted by (birth, death)."""

    dim: int
    pairs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    truncated: np.ndarray | None = None

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.float64).reshape(-1, 2)
        trunc = (
            np.zeros(len(pairs), dtype=bool)
            if self.truncated is None
            else np.asarray(self.truncated, dtype=bool).reshape(-1)
        )
        if len(trunc) != len(pairs):
            raise ValueError("one truncation flag per bar")
        if np.any(pairs[:, 0] < 0):
            raise ValueError("births must be non-negative")
        fin = np.isfinite(pairs[:, 1])
        if np.any(pairs[fin, 1] <= pairs[fin, 0]):
            raise ValueError("every finite bar needs death > birth")
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        self.pairs = pairs[order]
        self.truncated = trunc[order]

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def births(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def deaths(self) -> np.ndarray:
        return self.pairs[:, 1]

    @property
    def n_essential(self) -> int:
        return int(np.sum(~np.isfinite(self.pairs[:, 1])))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.pairs)))

    def lifetimes(self) -> np.ndarray:
        return self.pairs[:, 1] - self.pairs[:, 0]


@dataclass(frozen=True)
class RipsConfig:
    max_dim: int = 1
    max_edge_length: float | str = AUTO

    def __post_init__(self):
        if self.max_dim not in (0, 1):
            raise ValueError("max_dim must be 0 or 1")
        if self.max_edge_length != AUTO and not float(self.max_edge_length) > 0:
            raise ValueError("max_edge_length must be positive or 'auto'")


def _as_points(cloud) -> np.ndarray:
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    return pts


def distance_matrix(points: np.ndarray) -> np.ndarray:
    if len(points) < 2:
        return np.zeros((len(points), len(points)))
    return squareform(pdist(points))


def enclosing_radius(cloud) -> float:
    """``min_x max_y |x - y|``: from this scale on the Rips complex is a cone."""
    pts = _as_points(cloud)
    if len(pts) == 0:
        raise ValueError("enclosing radius of an empty cloud")
    return float(distance_matrix(pts).max(axis=1).min())


# -- kernels ------------------------------------------------------------------


@njit(nogil=True, cache=True)
def _kruskal(n, ei, ej, ediam):
    parent = np.arange(n)
    deaths = np.empty(n, dtype=np.float64)
    is_death = np.zeros(ei.shape[0], dtype=np.bool_)
    m = 0
    for e in range(ei.shape[0]):
        a = ei[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = ej[e]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            if a < b:
                parent[b] = a
            else:
                parent[a] = b
            is_death[e] = True
            deaths[m] = ediam[e]
            m += 1
    return deaths[:m], is_death


@njit(inline="always")
def _choose2(x):
    return x * (x - 1) // 2


@njit(inline="always")
def _choose3(x):
    return x * (x - 1) * (x - 2) // 6


@njit(inline="always")
def _tri_key(a, b, c):
    # sort three vertices, return (i, j, k) combinatorial index
    if a > b:
        a, b = b, a
    if b > c:
        b, c = c, b
    if a > b:
        a, b = b, a
    return _choose3(c) + _choose2(b) + a


@njit(nogil=True, cache=True)
def _min_cofacet(i, j, dist, thr):
    n = dist.shape[0]
    dij = dist[i, j]
    best_d = np.inf
    best_t = np.int64(-1)
    for k in range(n):
        if k == i or k == j:
            continue
        d = dij
        if dist[i, k] > d:
            d = dist[i, k]
        if dist[j, k] > d:
            d = dist[j, k]
        if d > thr:
            continue
        t = _tri_key(i, j, k)
        if d < best_d or (d == best_d and t < best_t):
            best_d = d
            best_t = t
    return best_d, best_t


@njit(nogil=True, cache=True)
def _push_coboundary(heap, i, j, dist, thr):
    n = dist.shape[0]
    dij = dist[i, j]
    for k in range(n):
        if k == i or k == j:
            continue
        d = dij
        if dist[i, k] > d:
            d = dist[i, k]
        if dist[j, k] > d:
            d = dist[j, k]
        if d <= thr:
            heapq.heappush(heap, (d, _tri_key(i, j, k)))


@njit(nogil=True, cache=True)
def _pop_pivot(heap):
    while len(heap) > 0:
        top = heapq.heappop(heap)
        if len(heap) > 0 and heap[0][1] == top[1]:
            heapq.heappop(heap)
            continue
        return top
    return (np.inf, np.int64(-1))


@njit(nogil=True, cache=True)
def _h1_kernel(dist, thr, ei, ej, ediam, is_death):
    """Cohomology reduction over non-clearing edges, youngest first."""
    pivot_of = Dict.empty(key_type=types.int64, value_type=types.int64)
    reduction = Dict.empty(key_type=types.int64, value_type=types.int64[:])
    births = []
    deaths = []
    essential = []
    for e in range(ei.shape[0] - 1, -1, -1):
        if is_death[e]:
            continue
        i = ei[e]
        j = ej[e]
        d, t = _min_cofacet(i, j, dist, thr)
        if t < 0:
            essential.append(ediam[e])
            continue
        if t not in pivot_of:
            pivot_of[t] = e
            if d > ediam[e]:
                births.append(ediam[e])
                deaths.append(d)
            continue
        # collision: full reduction with a heap of (diameter, triangle key)
        heap = [(0.0, np.int64(0))]
        heap.pop()
        column = [np.int64(e)]
        _push_coboundary(heap, i, j, dist, thr)
        while True:
            d, t = _pop_pivot(heap)
            if t < 0:
                essential.append(ediam[e])
                break
            if t in pivot_of:
                other = pivot_of[t]
                heapq.heappush(heap, (d, t))
                if other in reduction:
                    for f in reduction[other]:
                        column.append(f)
                        _push_coboundary(heap, ei[f], ej[f], dist, thr)
                else:
                    column.append(other)
                    _push_coboundary(heap, ei[other], ej[other], dist, thr)
                continue
            pivot_of[t] = e
            cols = np.sort(np.asarray(column))
            kept = []
            p = 0
            while p < cols.shape[0]:
                q = p
                while q < cols.shape[0] and cols[q] == cols[p]:
                    q += 1
                if (q - p) % 2 == 1:
                    kept.append(cols[p])
                p = q
            reduction[e] = np.asarray(kept)
            if d > ediam[e]:
                births.append(ediam[e])
                deaths.append(d)
            break
    return births, deaths, essential


# -- public API ---------------------------------------------------------------


def _sorted_edges(dist: np.ndarray, thr: float):
    n = dist.shape[0]
    jj, ii = np.nonzero(np.tril(np.ones((n, n), dtype=bool), k=-1))  # jj > ii
    d = dist[jj, ii]
    keep = d <= thr
    ii, jj, d = ii[keep], jj[keep], d[keep]
    order = np.lexsort((ii, jj, d))
    return ii[order].astype(np.int64), jj[order].astype(np.int64), d[order]


def rips_persistence(cloud, cfg: RipsConfig = RipsConfig()) -> tuple[PersistenceDiagram, PersistenceDiagram]:
    """H0 and H1 diagrams of the Rips filtration of ``cloud``.

    With ``max_edge_length='auto'`` the filtration stops at the enclosing
    radius, which loses no finite bar.  Bars of zero length are dropped.
    The single connected H0 class is ``(0, inf)``; any other class still
    alive at an explicit threshold is closed at the threshold and flagged
    ``truncated``.
    """
    pts = _as_points(cloud)
    n = len(pts)
    if n == 0:
        raise ValueError("persistence of an empty cloud")
    dist = distance_matrix(pts)
    thr = float(dist.max(axis=1).min()) if cfg.max_edge_length == AUTO else float(cfg.max_edge_length)
    ei, ej, ed = _sorted_edges(dist, thr)
    deaths0, is_death = _kruskal(n, ei, ej, ed)
    deaths0 = deaths0[deaths0 > 0]
    n_alive = n - int(is_death.sum())
    h0 = [(0.0, float(x)) for x in deaths0] + [(0.0, np.inf)]
    t0 = [False] * len(deaths0) + [False]
    if n_alive > 1 and thr > 0:
        h0 += [(0.0, thr)] * (n_alive - 1)
        t0 += [True] * (n_alive - 1)
    dgm0 = PersistenceDiagram(0, np.asarray(h0), np.asarray(t0))
    if cfg.max_dim < 1 or n < 3:
        return dgm0, PersistenceDiagram(1)
    b, d, ess = _h1_kernel(dist, thr, ei, ej, ed, is_death)
    h1 = list(zip(b, d))
    t1 = [False] * len(h1)
    for birth in ess:
        if thr > birth:
            h1.append((birth, thr))
            t1.append(True)
    return dgm0, PersistenceDiagram(1, np.asarray(h1, dtype=np.float64).reshape(-1, 2), np.asarray(t1, dtype=bool))


def dump_diagrams(diagrams: Iterable[PersistenceDiagram], path: str | Path) -> Path:
    """``dim birth death truncated`` per bar, sorted; ``inf`` for essential bars."""
    rows = []
    for dgm in diagrams:
        for (b, d), t in zip(dgm.pairs, dgm.truncated):
            rows.append((dgm.dim, float(b), float(d), int(t)))
    rows.sort()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{k} {b!r} {d!r} {t}\n" for k, b, d, t in rows), encoding="utf-8")
    return path


def load_diagrams(path: str | Path, dims: Sequence[int] = (0, 1)) -> list[PersistenceDiagram]:
    bars: dict[int, list] = {k: [] for k in dims}
    flags: dict[int, list] = {k: [] for k in dims}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        k, b, d, t = line.split()
        bars.setdefault(int(k), []).append((float(b), float(d)))
        flags.setdefault(int(k), []).append(bool(int(t)))
    return [PersistenceDiagram(k, np.asarray(bars[k]).reshape(-1, 2), np.asarray(flags[k], dtype=bool)) for k in sorted(bars)]
