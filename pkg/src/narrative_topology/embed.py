"""Random walks over a co-occurrence graph, skip-gram training and edge point clouds.

Walks are pseudo-sentences for a skip-gram model with negative sampling
(SGNS).  Node vectors are then averaged per edge, one point per edge.

Both kernels run single-threaded in float64 and draw every random number
from a seeded splitmix64 stream, so a seed fixes the output bit for bit.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import njit

from ._rng import derive_seed, make_state, next_double
from .graph import CooccurrenceGraph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WalkConfig:
    n_walks_train: int = 100_000
    n_walks_infer: int = 4_000
    walk_length: int = 40
    seed: int = 0
    weighted: bool = False  # step proportional to edge counts

    def __post_init__(self):
        if self.n_walks_train < 1 or self.n_walks_infer < 1:
            raise ValueError("walk counts must be positive")
        if self.walk_length < 2:
            raise ValueError("walk_length must be at least 2")


@dataclass
class NodeVectors:
    """Embedding table: ``labels[i]`` owns row ``matrix[i]``."""

    dims: int
    labels: list[str]
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.shape != (len(self.labels), self.dims):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match {len(self.labels)} x {self.dims}")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("node vectors contain non-finite entries")
        self._index = {label: i for i, label in enumerate(self.labels)}

    @property
    def table(self) -> dict[str, np.ndarray]:
        return {label: self.matrix[i] for label, i in self._index.items()}

    def __contains__(self, label: str) -> bool:
        return label in self._index

    def __getitem__(self, label: str) -> np.ndarray:
        return self.matrix[self._index[label]]

    def __len__(self) -> int:
        return len(self.labels)

    def cosine(self, a: str, b: str) -> float:
        u, v = self[a], self[b]
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu == 0 or nv == 0:
            return 0.0
        return float(u @ v / (nu * nv))


@dataclass
class PointCloud:
    points: np.ndarray
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(0, 0) if pts.size == 0 else pts.reshape(1, -1)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-D array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains NaN or Inf")
        if len(self.labels) != pts.shape[0]:
            raise ValueError("one label per point")
        self.points = pts
        self.labels = list(self.labels)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


# -- walks -------------------------------------------------------------------


def _csr(g: CooccurrenceGraph) -> tuple[list[str], np.ndarray, np.ndarray, np.ndarray]:
    nodes = g.sorted_nodes()
    idx = {n: i for i, n in enumerate(nodes)}
    nbrs: list[list[tuple[int, int]]] = [[] for _ in nodes]
    for (a, b), c in g.edge_counts.items():
        nbrs[idx[a]].append((idx[b], c))
        nbrs[idx[b]].append((idx[a], c))
    indptr = np.zeros(len(nodes) + 1, dtype=np.int64)
    indices, weights = [], []
    for i, lst in enumerate(nbrs):
        lst.sort()
        indices.extend(j for j, _ in lst)
        weights.extend(c for _, c in lst)
        indptr[i + 1] = len(indices)
    return nodes, indptr, np.asarray(indices, dtype=np.int64), np.asarray(weights, dtype=np.float64)


@njit(nogil=True, cache=True)
def _walk_kernel(indptr, indices, cumw, starts, walk_length, seed, weighted, out, lengths):
    state = np.empty(1, dtype=np.uint64)
    for i in range(starts.shape[0]):
        state[0] = derive_seed(seed, i)
        cur = starts[i]
        out[i, 0] = cur
        n = 1
        for _ in range(1, walk_length):
            lo = indptr[cur]
            hi = indptr[cur + 1]
            deg = hi - lo
            if deg == 0:
                break
            u = next_double(state)
            if weighted:
                base = cumw[lo - 1] if lo > 0 else 0.0
                target = base + u * (cumw[hi - 1] - base)
                j = lo
                while j < hi - 1 and cumw[j] <= target:
                    j += 1
            else:
                j = lo + int(u * deg)
                if j >= hi:
                    j = hi - 1
            cur = indices[j]
            out[i, n] = cur
            n += 1
        lengths[i] = n


def walk_indices(g: CooccurrenceGraph, n_walks: int, walk_length: int, seed: int, weighted: bool = False):
    """Walks as node ids: ``(nodes, flat_ids, offsets)``.

    Walk ``i`` starts at ``perm[i % |V|]`` for a seeded shuffle ``perm`` of
    the sorted nodes, so every node starts a walk once ``n_walks >= |V|``.
    Walk ``i`` draws its steps from its own stream derived from
    ``(seed, i)``.
    """
    if g.n_nodes == 0:
        raise ValueError("cannot walk an empty graph")
    if walk_length < 1:
        raise ValueError("walk_length must be positive")
    nodes, indptr, indices, weights = _csr(g)
    perm = np.random.default_rng(seed).permutation(len(nodes))
    starts = perm[np.arange(n_walks) % len(nodes)].astype(np.int64)
    out = np.empty((n_walks, walk_length), dtype=np.int64)
    lengths = np.empty(n_walks, dtype=np.int64)
    _walk_kernel(indptr, indices, np.cumsum(weights), starts, walk_length, np.uint64(seed & 0xFFFFFFFFFFFFFFFF), weighted, out, lengths)
    offsets = np.zeros(n_walks + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    mask = np.arange(walk_length)[None, :] < lengths[:, None]
    return nodes, out[mask], offsets


def random_walks(g: CooccurrenceGraph, cfg: WalkConfig, n_walks: int | None = None) -> list[list[str]]:
    """``cfg.n_walks_train`` walks (or ``n_walks``) of up to ``cfg.walk_length`` nodes.

    A walk stops early at a node without neighbours.
    """
    n = cfg.n_walks_train if n_walks is None else n_walks
    nodes, flat, offsets = walk_indices(g, n, cfg.walk_length, cfg.seed, cfg.weighted)
    names = np.asarray(nodes, dtype=object)[flat]
    return [names[offsets[i] : offsets[i + 1]].tolist() for i in range(n)]


# -- skip-gram ---------------------------------------------------------------


@njit(nogil=True, cache=True)
def _sgns_kernel(tokens, offsets, win, wout, noise_cdf, context, epochs, negatives, lr0, lr_min, state):
    dims = win.shape[1]
    total = epochs * tokens.shape[0]
    step = 0
    neu = np.empty(dims)
    n_sent = offsets.shape[0] - 1
    for _ in range(epochs):
        for s in range(n_sent):
            a = offsets[s]
            b = offsets[s + 1]
            for i in range(a, b):
                lr = lr0 - (lr0 - lr_min) * (step / total)
                step += 1
                c = tokens[i]
                lo = max(a, i - context)
                hi = min(b, i + context + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    o = tokens[j]
                    for k in range(dims):
                        neu[k] = 0.0
                    for d in range(negatives + 1):
                        if d == 0:
                            tgt = o
                            label = 1.0
                        else:
                            u = next_double(state)
                            tgt = np.searchsorted(noise_cdf, u, side="right")
                            if tgt >= noise_cdf.shape[0]:
                                tgt = noise_cdf.shape[0] - 1
                            if tgt == o:
                                continue
                            label = 0.0
                        f = 0.0
                        for k in range(dims):
                            f += win[c, k] * wout[tgt, k]
                        g = (label - 1.0 / (1.0 + np.exp(-f))) * lr
                        for k in range(dims):
                            neu[k] += g * wout[tgt, k]
                            wout[tgt, k] += g * win[c, k]
                    for k in range(dims):
                        win[c, k] += neu[k]


@njit(cache=True)
def _uniform_init(rows, dims, state):
    out = np.empty((rows, dims))
    for i in range(rows):
        for k in range(dims):
            out[i, k] = (next_double(state) - 0.5) / dims
    return out


@dataclass
class SkipGramModel:
    """Trained SGNS parameters; ``vectors`` are the input (center) embeddings."""

    vocab: list[str]
    counts: np.ndarray
    vectors: np.ndarray
    context: np.ndarray
    negatives: int = 5

    def node_vectors(self) -> NodeVectors:
        return NodeVectors(self.vectors.shape[1], list(self.vocab), self.vectors.copy())

    def noise_cdf(self) -> np.ndarray:
        p = self.counts.astype(np.float64) ** 0.75
        return np.cumsum(p) / p.sum()


def _fit(tokens, offsets, model, context, epochs, lr, seed):
    state = make_state(seed, 1)
    _sgns_kernel(tokens, offsets, model.vectors, model.context, model.noise_cdf(), context, epochs,
                 model.negatives, lr, lr / 100.0, state)


def fit_skipgram_ids(
    vocab: Sequence[str], tokens: np.ndarray, offsets: np.ndarray, dims: int = 64, context: int = 3,
    epochs: int = 10, negatives: int = 5, lr: float = 0.025, seed: int = 0,
) -> SkipGramModel:
    """SGNS on pre-indexed walks; ``vocab`` must be sorted and fully used."""
    if len(tokens) == 0:
        raise ValueError("no tokens to train on")
    if dims < 1 or context < 1 or epochs < 1 or negatives < 0:
        raise ValueError("dims, context and epochs must be positive")
    counts = np.bincount(tokens, minlength=len(vocab)).astype(np.int64)
    win = _uniform_init(len(vocab), dims, make_state(seed, 0))
    model = SkipGramModel(list(vocab), counts, win, np.zeros((len(vocab), dims)), negatives)
    _fit(tokens.astype(np.int64), offsets.astype(np.int64), model, context, epochs, lr, seed)
    return model


def fit_skipgram(walks: Sequence[Sequence[str]], dims: int = 64, context: int = 3, epochs: int = 10,
                 negatives: int = 5, lr: float = 0.025, seed: int = 0) -> SkipGramModel:
    if not walks or not any(len(w) for w in walks):
        raise ValueError("no walks to train on")
    vocab = sorted({t for w in walks for t in w})
    idx = {t: i for i, t in enumerate(vocab)}
    tokens = np.fromiter((idx[t] for w in walks for t in w), dtype=np.int64)
    offsets = np.zeros(len(walks) + 1, dtype=np.int64)
    np.cumsum([len(w) for w in walks], out=offsets[1:])
    return fit_skipgram_ids(vocab, tokens, offsets, dims, context, epochs, negatives, lr, seed)


def train_skipgram(walks: Sequence[Sequence[str]], dims: int = 64, context: int = 3, epochs: int = 10,
                   negatives: int = 5, lr: float = 0.025, seed: int = 0) -> NodeVectors:
    """Skip-gram with negative sampling over ``walks``.

    Every (center, context) pair within ``context`` positions gets one
    positive update and ``negatives`` draws from the unigram^0.75 noise
    distribution.  The learning rate decays linearly from ``lr`` to
    ``lr / 100`` across all center tokens.
    """
    return fit_skipgram(walks, dims, context, epochs, negatives, lr, seed).node_vectors()


def embed_graph(g: CooccurrenceGraph, walks: WalkConfig, dims: int = 64, context: int = 3, epochs: int = 10,
                negatives: int = 5, lr: float = 0.025, seed: int | None = None) -> SkipGramModel:
    """Walk ``g`` and train on the walks without materialising strings.

    Same result as ``fit_skipgram(random_walks(g, walks), ...)``.
    """
    seed = walks.seed if seed is None else seed
    nodes, flat, offsets = walk_indices(g, walks.n_walks_train, walks.walk_length, walks.seed, walks.weighted)
    used = np.unique(flat)
    remap = np.full(len(nodes), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    vocab = [nodes[i] for i in used]
    return fit_skipgram_ids(vocab, remap[flat], offsets, dims, context, epochs, negatives, lr, seed)


def refine_on_graph(model: SkipGramModel, g: CooccurrenceGraph, walks: WalkConfig, context: int = 3,
                    epochs: int = 1, lr: float = 0.025, seed: int = 0) -> NodeVectors:
    """Per-window vectors: ``walks.n_walks_infer`` walks on ``g`` fed through a copy of ``model``.

    Noise distribution and vocabulary stay those of the global model; nodes
    it never saw are dropped from the walks.
    """
    nodes, flat, offsets = walk_indices(g, walks.n_walks_infer, walks.walk_length, seed, walks.weighted)
    pos = {t: i for i, t in enumerate(model.vocab)}
    ids = np.asarray([pos.get(n, -1) for n in nodes], dtype=np.int64)[flat]
    keep = ids >= 0
    if not keep.all():
        lengths = np.add.reduceat(keep.astype(np.int64), offsets[:-1]) if len(flat) else np.zeros(0, np.int64)
        offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        ids = ids[keep]
    copy = SkipGramModel(model.vocab, model.counts, model.vectors.copy(), model.context.copy(), model.negatives)
    if len(ids):
        _fit(ids, offsets, copy, context, epochs, lr, seed)
    return copy.node_vectors()


# -- edge clouds --------------------------------------------------------------


def edge_label(a: str, b: str) -> str:
    return f"{min(a, b)}|{max(a, b)}"


def edge_vectors(g: CooccurrenceGraph, nv: NodeVectors) -> PointCloud:
    """One point per edge, the midpoint of its endpoint vectors, sorted by label."""
    rows, labels, missing = [], [], 0
    for a, b in sorted(g.edge_counts, key=lambda e: edge_label(*e)):
        if a not in nv or b not in nv:
            missing += 1
            continue
        rows.append((nv[a] + nv[b]) / 2.0)
        labels.append(edge_label(a, b))
    if missing:
        log.warning("skipped %d edges with an endpoint missing from the embedding", missing)
    pts = np.vstack(rows) if rows else np.zeros((0, nv.dims))
    return PointCloud(pts, labels)


# -- text dumps ---------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def dump_vectors(labels: Sequence[str], matrix: np.ndarray, path: str | Path) -> Path:
    """``dims=<d>`` header, then ``label v1 ... vd`` with round-trip floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    matrix = np.asarray(matrix, dtype=np.float64)
    dims = matrix.shape[1] if matrix.ndim == 2 else 0
    lines = [f"dims={dims}"]
    for label, row in zip(labels, matrix):
        lines.append(" ".join([label, *map(_fmt, row)]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_vectors(path: str | Path) -> tuple[int, list[str], np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("dims="):
        raise ValueError(f"{path}: missing dims header")
    dims = int(lines[0][5:])
    labels, rows = [], []
    for line in lines[1:]:
        if not line:
            continue
        parts = line.split(" ")
        labels.append(parts[0])
        rows.append([float(x) for x in parts[1:]])
    matrix = np.asarray(rows, dtype=np.float64).reshape(len(labels), dims)
    return dims, labels, matrix


def dump_node_vectors(nv: NodeVectors, path: str | Path) -> Path:
    return dump_vectors(nv.labels, nv.matrix, path)


def load_node_vectors(path: str | Path) -> NodeVectors:
    dims, labels, matrix = load_vectors(path)
    return NodeVectors(dims, labels, matrix)


def dump_cloud(cloud: PointCloud, path: str | Path) -> Path:
    return dump_vectors(cloud.labels, cloud.points.reshape(len(cloud), cloud.dim), path)


def load_cloud(path: str | Path) -> PointCloud:
    _, labels, matrix = load_vectors(path)
    return PointCloud(matrix, labels)
