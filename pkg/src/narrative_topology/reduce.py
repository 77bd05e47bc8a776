"""Two-dimensional layouts of edge point clouds.

``MANIFOLD`` follows the fuzzy-simplicial-set recipe: exact k-NN, per-point
bandwidth calibration, fuzzy union symmetrisation, spectral initialisation and
a negative-sampling SGD layout.  ``PCA`` is the closed-form linear fallback.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.optimize import curve_fit
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from ._rng import make_state, next_u64
from .embed import PointCloud

MANIFOLD = "manifold"
PCA = "pca"

MIN_K_DIST_SCALE = 1e-3


class TooFewPointsError(ValueError):
    """The cloud is too small for the requested reduction; skip the window."""


@dataclass(frozen=True)
class ReduceConfig:
    n_neighbors: int = 15
    min_dist: float = 0.1
    n_epochs: int = 200
    seed: int = 0
    method: str = MANIFOLD
    negative_sample_rate: int = 5
    spread: float = 1.0

    def __post_init__(self):
        if self.n_neighbors < 2:
            raise ValueError("n_neighbors must be at least 2")
        if not 0 <= self.min_dist < 1:
            raise ValueError("min_dist must lie in [0, 1)")
        if self.n_epochs < 1:
            raise ValueError("n_epochs must be positive")
        if self.method not in (MANIFOLD, PCA):
            raise ValueError(f"unknown method {self.method!r}")


def pca_2d(X: np.ndarray) -> np.ndarray:
    Xc = X - X.mean(axis=0)
    _, _, vt = np.linalg.svd(Xc, full_matrices=False)
    comps = vt[:2]
    # deterministic sign: largest-magnitude loading positive
    signs = np.sign(comps[np.arange(len(comps)), np.argmax(np.abs(comps), axis=1)])
    signs[signs == 0] = 1.0
    out = Xc @ (comps * signs[:, None]).T
    if out.shape[1] < 2:
        out = np.hstack([out, np.zeros((len(out), 2 - out.shape[1]))])
    return out


def knn(X: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact Euclidean k-NN; each row starts with the point itself."""
    D = cdist(X, X)
    np.fill_diagonal(D, -1.0)
    idx = np.argsort(D, axis=1, kind="stable")[:, :k]
    np.fill_diagonal(D, 0.0)
    return idx, np.take_along_axis(D, idx, axis=1)


def smooth_knn_dist(dists: np.ndarray, k: int, n_iter: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Bandwidths ``sigma`` with ``sum_j exp(-max(0, d_ij - rho_i)/sigma_i) = log2(k)``.

    ``rho_i`` is the distance to the nearest distinct neighbour; bisection
    runs a fixed ``n_iter`` steps for every row at once.
    """
    n = dists.shape[0]
    target = np.log2(k)
    nonzero = np.where(dists > 0, dists, np.inf)
    rho = nonzero.min(axis=1)
    rho[~np.isfinite(rho)] = 0.0
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    mid = np.ones(n)
    shifted = np.maximum(dists[:, 1:] - rho[:, None], 0.0)
    for _ in range(n_iter):
        psum = np.exp(-shifted / mid[:, None]).sum(axis=1)
        above = psum > target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        mid = np.where(np.isinf(hi), mid * 2.0, (lo + hi) / 2.0)
    sigma = mid
    row_mean = dists.mean(axis=1)
    floor = np.where(rho > 0, MIN_K_DIST_SCALE * row_mean, MIN_K_DIST_SCALE * dists.mean())
    sigma = np.maximum(sigma, floor)
    return sigma, rho


def fuzzy_graph(X: np.ndarray, k: int) -> sp.csr_matrix:
    """Symmetrised membership strengths ``A + A^T - A*A^T``."""
    n = X.shape[0]
    idx, dists = knn(X, k)
    sigma, rho = smooth_knn_dist(dists, k)
    vals = np.exp(-np.maximum(dists - rho[:, None], 0.0) / sigma[:, None])
    vals[idx == np.arange(n)[:, None]] = 0.0
    rows = np.repeat(np.arange(n), k)
    A = sp.csr_matrix((vals.ravel(), (rows, idx.ravel())), shape=(n, n))
    A.eliminate_zeros()
    At = A.T.tocsr()
    P = A + At - A.multiply(At)
    P = P.tocsr()
    P.eliminate_zeros()
    P.sort_indices()
    return P


def spectral_init(P: sp.csr_matrix) -> np.ndarray | None:
    """Eigenvectors 2 and 3 of the symmetric normalised Laplacian; None if disconnected."""
    n = P.shape[0]
    n_comp, _ = connected_components(P, directed=False)
    if n_comp > 1 or n < 4:
        return None
    deg = np.asarray(P.sum(axis=1)).ravel()
    dinv = 1.0 / np.sqrt(deg)
    L = np.eye(n) - (dinv[:, None] * P.toarray() * dinv[None, :])
    w, V = np.linalg.eigh(L)
    coords = V[:, 1:3].copy()
    for c in range(2):
        j = np.argmax(np.abs(coords[:, c]))
        if coords[j, c] < 0:
            coords[:, c] *= -1
    return coords


def find_ab_params(spread: float, min_dist: float) -> tuple[float, float]:
    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2 * b))

    xv = np.linspace(0, spread * 3, 300)
    yv = np.where(xv < min_dist, 1.0, np.exp(-(xv - min_dist) / spread))
    params, _ = curve_fit(curve, xv, yv)
    return float(params[0]), float(params[1])


@njit(nogil=True, cache=True)
def _layout_kernel(emb, head, tail, epochs_per_sample, a, b, n_epochs, neg_rate, state):
    n = emb.shape[0]
    dim = emb.shape[1]
    epochs_per_negative = epochs_per_sample / neg_rate
    next_sample = epochs_per_sample.copy()
    next_negative = epochs_per_negative.copy()
    for epoch in range(n_epochs):
        alpha = 1.0 - epoch / n_epochs
        for e in range(head.shape[0]):
            if next_sample[e] > epoch:
                continue
            i = head[e]
            j = tail[e]
            d2 = 0.0
            for c in range(dim):
                diff = emb[i, c] - emb[j, c]
                d2 += diff * diff
            if d2 > 0.0:
                coef = -2.0 * a * b * d2 ** (b - 1.0) / (a * d2**b + 1.0)
            else:
                coef = 0.0
            for c in range(dim):
                g = coef * (emb[i, c] - emb[j, c])
                if g > 4.0:
                    g = 4.0
                elif g < -4.0:
                    g = -4.0
                emb[i, c] += g * alpha
                emb[j, c] -= g * alpha
            next_sample[e] += epochs_per_sample[e]
            n_neg = int((epoch - next_negative[e]) / epochs_per_negative[e])
            for _ in range(n_neg):
                k = int(next_u64(state) % np.uint64(n))
                if k == i:
                    continue
                d2 = 0.0
                for c in range(dim):
                    diff = emb[i, c] - emb[k, c]
                    d2 += diff * diff
                if d2 > 0.0:
                    coef = 2.0 * b / ((0.001 + d2) * (a * d2**b + 1.0))
                    for c in range(dim):
                        g = coef * (emb[i, c] - emb[k, c])
                        if g > 4.0:
                            g = 4.0
                        elif g < -4.0:
                            g = -4.0
                        emb[i, c] += g * alpha
            next_negative[e] += n_neg * epochs_per_negative[e]


def manifold_2d(X: np.ndarray, cfg: ReduceConfig) -> np.ndarray:
    k = cfg.n_neighbors
    P = fuzzy_graph(X, k)
    coo = P.tocoo()
    if coo.nnz == 0:  # every point coincides
        return pca_2d(X)
    weights = coo.data.copy()
    weights[weights < weights.max() / cfg.n_epochs] = 0.0
    keep = weights > 0
    head, tail, weights = coo.row[keep].astype(np.int64), coo.col[keep].astype(np.int64), weights[keep]
    init = spectral_init(P)
    if init is None:
        init = pca_2d(X)
    scale = np.abs(init).max()
    init = init * (10.0 / scale) if scale > 0 else init
    rng = np.random.default_rng(cfg.seed)
    emb = np.ascontiguousarray(init + rng.normal(scale=1e-4, size=init.shape))
    a, b = find_ab_params(cfg.spread, cfg.min_dist)
    eps = cfg.n_epochs / (cfg.n_epochs * weights / weights.max())
    _layout_kernel(emb, head, tail, eps, a, b, cfg.n_epochs, float(cfg.negative_sample_rate), make_state(cfg.seed, 2))
    return emb


def reduce_to_2d(cloud: PointCloud, cfg: ReduceConfig = ReduceConfig()) -> PointCloud:
    """Same labels and order, two coordinates per point."""
    n = len(cloud)
    if cfg.method == PCA:
        if n < 2:
            raise TooFewPointsError(f"PCA needs at least 2 points, got {n}; skip this window")
        return PointCloud(pca_2d(cloud.points), cloud.labels)
    if n < cfg.n_neighbors + 1:
        raise TooFewPointsError(
            f"manifold reduction needs at least {cfg.n_neighbors + 1} points, got {n}; skip this window"
        )
    return PointCloud(manifold_2d(cloud.points, cfg), cloud.labels)
