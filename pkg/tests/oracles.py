"""Independent reference implementations used only by the tests.

Everything here is deliberately naive: full simplex enumeration, dense
matrices, exhaustive matchings.  None of it shares code with the package.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


def _dist(points):
    pts = [tuple(map(float, p)) for p in points]
    n = len(pts)
    return [[math.dist(pts[i], pts[j]) for j in range(n)] for i in range(n)]


def rips_persistence_bruteforce(points):
    """Full Rips filtration up to triangles, standard column reduction over Z/2.

    Returns ``(h0, h1)`` as sorted lists of ``(birth, death)``; the essential
    H0 class has death ``inf``.  Zero-length bars are dropped.
    """
    n = len(points)
    D = _dist(points)
    simplices = [((i,), 0.0) for i in range(n)]
    simplices += [((i, j), D[i][j]) for i, j in itertools.combinations(range(n), 2)]
    simplices += [
        ((i, j, k), max(D[i][j], D[i][k], D[j][k])) for i, j, k in itertools.combinations(range(n), 3)
    ]
    # value, then dimension, then the vertex tuple: a valid filtration order
    simplices.sort(key=lambda s: (s[1], len(s[0]), s[0]))
    index = {s: idx for idx, (s, _) in enumerate(simplices)}
    columns = []
    for s, _ in simplices:
        if len(s) == 1:
            columns.append(set())
        else:
            columns.append({index[f] for f in itertools.combinations(s, len(s) - 1)})
    low_to_col = {}
    pairs = []
    for c in range(len(columns)):
        col = columns[c]
        while col and max(col) in low_to_col:
            col ^= columns[low_to_col[max(col)]]
        if col:
            low = max(col)
            low_to_col[low] = c
            pairs.append((low, c))
    paired = {p for pair in pairs for p in pair}
    h0, h1 = [], []
    for lo, hi in pairs:
        s_lo, v_lo = simplices[lo]
        _, v_hi = simplices[hi]
        if v_hi <= v_lo:
            continue
        (h0 if len(s_lo) == 1 else h1).append((v_lo, v_hi))
    for idx, (s, v) in enumerate(simplices):
        if idx not in paired and len(s) == 1:
            h0.append((v, math.inf))
        elif idx not in paired and len(s) == 2:
            h1.append((v, math.inf))  # cannot happen for the full complex
    return sorted(h0), sorted(h1)


def mst_lengths(points):
    """Prim's algorithm on the complete graph, O(n^2)."""
    D = _dist(points)
    n = len(points)
    if n < 2:
        return []
    in_tree = [False] * n
    best = [math.inf] * n
    best[0] = 0.0
    out = []
    for _ in range(n):
        u = min((i for i in range(n) if not in_tree[i]), key=lambda i: best[i])
        in_tree[u] = True
        if u != 0:
            out.append(best[u])
        for v in range(n):
            if not in_tree[v] and D[u][v] < best[v]:
                best[v] = D[u][v]
    return sorted(out)


def _cost(x, y, p, q):
    if q == math.inf:
        return max(abs(x[0] - y[0]), abs(x[1] - y[1])) ** p
    return math.hypot(x[0] - y[0], x[1] - y[1]) ** p


def _diag_cost(x, p, q):
    half = (x[1] - x[0]) / 2.0
    if q == math.inf:
        return half**p
    return (half * math.sqrt(2.0)) ** p


def wasserstein_bruteforce(d1, d2, p=1, q=math.inf):
    """Enumerate every partial matching; unmatched points go to the diagonal."""
    d1 = [tuple(map(float, x)) for x in d1]
    d2 = [tuple(map(float, y)) for y in d2]
    best = math.inf
    m, n = len(d1), len(d2)
    for k in range(min(m, n) + 1):
        for left in itertools.combinations(range(m), k):
            for right in itertools.permutations(range(n), k):
                total = sum(_cost(d1[i], d2[j], p, q) for i, j in zip(left, right))
                total += sum(_diag_cost(d1[i], p, q) for i in range(m) if i not in left)
                total += sum(_diag_cost(d2[j], p, q) for j in range(n) if j not in right)
                best = min(best, total)
    return best ** (1.0 / p)


def bottleneck_bruteforce(d1, d2):
    """max-cost version of the partial matching enumeration (l-inf ground metric)."""
    d1 = [tuple(map(float, x)) for x in d1]
    d2 = [tuple(map(float, y)) for y in d2]
    best = math.inf
    m, n = len(d1), len(d2)
    for k in range(min(m, n) + 1):
        for left in itertools.combinations(range(m), k):
            for right in itertools.permutations(range(n), k):
                costs = [_cost(d1[i], d2[j], 1, math.inf) for i, j in zip(left, right)]
                costs += [_diag_cost(d1[i], 1, math.inf) for i in range(m) if i not in left]
                costs += [_diag_cost(d2[j], 1, math.inf) for j in range(n) if j not in right]
                best = min(best, max(costs, default=0.0))
    return best


def top2_pca_distances(points):
    """Pairwise distances of the rank-2 projection via the covariance eigenproblem."""
    X = np.asarray(points, dtype=np.float64)
    Xc = X - X.mean(axis=0)
    w, V = np.linalg.eigh(Xc.T @ Xc)
    P = Xc @ V[:, np.argsort(w)[::-1][:2]]
    diff = P[:, None, :] - P[None, :, :]
    return np.sqrt((diff**2).sum(-1))
