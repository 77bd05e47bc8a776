"""Phrase co-occurrence graphs, sliding-window unions and degree pruning."""
from __future__ import annotations

import datetime as dt
import logging
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .text import Phrase

log = logging.getLogger(__name__)

Edge = tuple[str, str]


def edge_key(a: str, b: str) -> Edge:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True, eq=True)
class CooccurrenceGraph:
    """Undirected lemma graph; ``edge_counts`` keys are ``(a, b)`` with ``a < b``."""

    nodes: frozenset[str] = frozenset()
    edge_counts: Mapping[Edge, int] = field(default_factory=dict)

    __hash__ = None  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        counts = {}
        for (a, b), c in self.edge_counts.items():
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge {a!r}-{b!r} has an endpoint outside the node set")
            if c <= 0:
                raise ValueError("edge counts must be positive")
            key = edge_key(a, b)
            counts[key] = counts.get(key, 0) + int(c)
        object.__setattr__(self, "edge_counts", {k: counts[k] for k in sorted(counts)})

    @property
    def edges(self) -> frozenset[Edge]:
        return frozenset(self.edge_counts)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edge_counts)

    def sorted_nodes(self) -> list[str]:
        return sorted(self.nodes)

    def degrees(self) -> dict[str, int]:
        deg = dict.fromkeys(self.nodes, 0)
        for a, b in self.edge_counts:
            deg[a] += 1
            deg[b] += 1
        return deg

    def neighbors(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {n: [] for n in self.nodes}
        for a, b in self.edge_counts:
            adj[a].append(b)
            adj[b].append(a)
        return {n: sorted(adj[n]) for n in sorted(adj)}


@dataclass(frozen=True)
class WindowGraph:
    index: int  # 1-based
    day_range: tuple  # (first, last) day label, dates when known
    graph: CooccurrenceGraph


def _lemmas(phrase) -> Sequence[str]:
    return phrase.lemmas if isinstance(phrase, Phrase) else phrase


def build_daily_graph(phrases: Iterable[Phrase | Sequence[str]]) -> CooccurrenceGraph:
    nodes: set[str] = set()
    counts: Counter[Edge] = Counter()
    for phrase in phrases:
        distinct = sorted(set(_lemmas(phrase)))
        nodes.update(distinct)
        for a, b in combinations(distinct, 2):
            counts[(a, b)] += 1
    return CooccurrenceGraph(frozenset(nodes), dict(counts))


def union(graphs: Iterable[CooccurrenceGraph]) -> CooccurrenceGraph:
    nodes: set[str] = set()
    counts: Counter[Edge] = Counter()
    for g in graphs:
        nodes.update(g.nodes)
        counts.update(g.edge_counts)
    return CooccurrenceGraph(frozenset(nodes), dict(counts))


def flatten(daily: Sequence[CooccurrenceGraph]) -> CooccurrenceGraph:
    return union(daily)


def n_windows(n_days: int, w: int, s: int) -> int:
    return 0 if n_days < w else (n_days - w) // s + 1


def window_union(
    daily: Sequence[CooccurrenceGraph], w: int, s: int, days: Sequence | None = None
) -> list[WindowGraph]:
    """Window ``k`` (1-based) is the union of daily graphs ``(k-1)s+1 .. (k-1)s+w``.

    ``days`` labels the daily graphs (dates, usually); defaults to 1-based
    positions.
    """
    if w < 1 or s < 1:
        raise ValueError("window size and stride must be positive")
    if days is None:
        days = list(range(1, len(daily) + 1))
    if len(days) != len(daily):
        raise ValueError("one day label per daily graph")
    if len(daily) < w:
        log.warning("only %d daily graphs for a window of %d: no windows", len(daily), w)
        return []
    out = []
    for k in range(1, n_windows(len(daily), w, s) + 1):
        lo = (k - 1) * s
        out.append(WindowGraph(k, (days[lo], days[lo + w - 1]), union(daily[lo : lo + w])))
    return out


def prune_degree_one(g: CooccurrenceGraph) -> CooccurrenceGraph:
    """Single pass: drop nodes of degree <= 1, then any node left isolated."""
    deg = g.degrees()
    keep = {n for n, d in deg.items() if d >= 2}
    counts = {(a, b): c for (a, b), c in g.edge_counts.items() if a in keep and b in keep}
    touched = {n for e in counts for n in e}
    return CooccurrenceGraph(frozenset(touched), counts)


def dump_graph(g: CooccurrenceGraph, path: str | Path) -> Path:
    """``a<TAB>b<TAB>count`` per edge, sorted; isolated nodes follow as bare lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    deg = g.degrees()
    lines = [f"{a}\t{b}\t{c}" for (a, b), c in g.edge_counts.items()]
    lines += [n for n in sorted(g.nodes) if deg[n] == 0]
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def load_graph(path: str | Path) -> CooccurrenceGraph:
    nodes: set[str] = set()
    counts: dict[Edge, int] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) == 1:
            nodes.add(parts[0])
            continue
        a, b, c = parts
        nodes.update((a, b))
        counts[edge_key(a, b)] = int(c)
    return CooccurrenceGraph(frozenset(nodes), counts)


def day_label(day) -> str:
    return day.isoformat() if isinstance(day, dt.date) else str(day)
