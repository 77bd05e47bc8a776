"""End-to-end orchestration: corpus, graphs, embedding, reduction, persistence, signals.

Every stage writes plain-text artifacts under ``output_dir/<stage>/`` plus a
``stage.json`` holding the digest of the configuration it was built from.
A rerun reuses a stage when the digest matches and all its files are
present; otherwise the stage is rebuilt from the upstream artifacts.
"""
from __future__ import annotations

import csv
import datetime as dt
import hashlib
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .config import RunConfig
from .corpus import Document, bucket_by_date, load_corpus, read_buckets, write_buckets, write_corpus
from .embed import (
    PointCloud,
    SkipGramModel,
    WalkConfig,
    dump_cloud,
    dump_vectors,
    edge_vectors,
    embed_graph,
    load_cloud,
    load_vectors,
    refine_on_graph,
)
from .graph import CooccurrenceGraph, WindowGraph, build_daily_graph, dump_graph, flatten, load_graph, prune_degree_one, window_union
from .metrics import SIGNAL_NAMES, LagReport, SignalSeries, build_signals, cross_correlation
from .reduce import PCA, ReduceConfig, reduce_to_2d
from .tda import PersistenceDiagram, RipsConfig, dump_diagrams, load_diagrams, rips_persistence
from ._rng import derive_seed

log = logging.getLogger(__name__)

MIN_WINDOWS = 4
LAG_PAIRS = (("h0_entropy", "h1_entropy"), ("h0_wass", "h1_wass"))


class PipelineError(RuntimeError):
    """A stage failed; carries the stage name and, when relevant, the 1-based window index."""

    def __init__(self, stage: str, message: str, window: int | None = None):
        self.stage = stage
        self.window = window
        where = f"stage {stage}" + (f", window {window}" if window is not None else "")
        super().__init__(f"{where}: {message}")


@dataclass
class WindowInfo:
    index: int
    first_day: str
    last_day: str
    n_nodes: int
    n_edges: int


@dataclass
class ChangeReport:
    signals: dict[str, SignalSeries]
    lags: list[LagReport]
    candidates: dict[str, list[dict]]
    combined: list[dict]
    windows: list[WindowInfo]
    notes: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "meta": self.meta,
            "windows": [vars(w) for w in self.windows],
            "signals": {name: s.to_record() for name, s in self.signals.items()},
            "lags": [lag.to_record() for lag in self.lags],
            "candidates": {"per_signal": self.candidates, "combined": self.combined},
            "notes": list(self.notes),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ChangeReport":
        signals = {
            name: SignalSeries(
                s["name"], s["window_index"], *(np.asarray(s[k], dtype=np.float64) for k in ("raw", "smoothed", "d1", "d2"))
            )
            for name, s in rec["signals"].items()
        }
        lags = [LagReport(r["lags"], r["correlations"], r["peak_lag"], r["peak_corr"], r["a"], r["b"]) for r in rec["lags"]]
        return cls(
            signals,
            lags,
            rec["candidates"]["per_signal"],
            rec["candidates"]["combined"],
            [WindowInfo(**w) for w in rec["windows"]],
            rec.get("notes", []),
            rec.get("meta", {}),
        )

    def top_candidate(self, signal: str = "h0_wass") -> int:
        return self.candidates[signal][0]["window"]


# -- caching ------------------------------------------------------------------


class Stage:
    def __init__(self, root: Path, name: str, digest: str):
        self.name = name
        self.dir = root / name
        self.digest = digest
        self.files: list[str] = []

    @property
    def _marker(self) -> Path:
        return self.dir / "stage.json"

    def fresh(self) -> bool:
        try:
            rec = json.loads(self._marker.read_text(encoding="utf-8"))
        except (OSError, ValueError):
            return False
        if rec.get("digest") != self.digest:
            return False
        self.files = rec.get("files", [])
        return all((self.dir / f).is_file() for f in self.files)

    def path(self, name: str) -> Path:
        self.files.append(name)
        p = self.dir / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def seal(self) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        rec = {"stage": self.name, "digest": self.digest, "files": sorted(set(self.files))}
        self._marker.write_text(json.dumps(rec, indent=1) + "\n", encoding="utf-8")


def _file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _chain(*parts: str) -> str:
    return hashlib.sha256("|".join(parts).encode()).hexdigest()


def _wname(k: int) -> str:
    return f"w{k:04d}.txt"


# -- pipeline -----------------------------------------------------------------


class Pipeline:
    """Stage runner over one ``RunConfig``; each method caches its artifacts."""

    def __init__(self, cfg: RunConfig, *, session=None):
        self.cfg = cfg
        self.root = Path(cfg.output_dir)
        self.session = session
        self.timings: dict[str, float] = {}
        self.cache_hits: dict[str, bool] = {}
        self.notes: list[str] = []
        self._memo: dict[str, object] = {}
        self._digests: dict[str, str] = {}
        self._nested = 0.0

    def _run(self, name: str, fn: Callable):
        if name in self._memo:
            return self._memo[name]
        outer, self._nested = self._nested, 0.0
        t0 = time.perf_counter()
        try:
            out = fn()
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(name, f"{type(exc).__name__}: {exc}") from exc
        elapsed = time.perf_counter() - t0
        self.timings[name] = elapsed - self._nested  # exclusive of upstream stages
        self._nested = outer + elapsed
        self._memo[name] = out
        return out

    def digest(self, stage: str) -> str:
        if stage not in self._digests:
            d = self.cfg.stage_hash(stage)
            if self.cfg.corpus.path and not self.cfg.corpus.synthetic:
                try:
                    d = _chain(d, _file_digest(self.cfg.corpus.path))
                except OSError as exc:
                    raise PipelineError("ingest", f"cannot read corpus: {exc}") from exc
            self._digests[stage] = d
        return self._digests[stage]

    # corpus -> phrases per day

    def documents(self) -> list[Document]:
        c = self.cfg.corpus
        if c.synthetic or not (c.path or c.query):
            if not c.synthetic:
                raise PipelineError("ingest", "no corpus: set corpus.path, corpus.query or corpus.synthetic")
            from .synthetic import VocabSpec, make_synthetic_corpus

            s = self.cfg.synth
            return make_synthetic_corpus(
                s.T,
                s.change_day,
                VocabSpec(s.topics_a, s.topic_size, s.sentences_per_doc),
                VocabSpec(s.topics_b, s.topic_size, s.sentences_per_doc),
                overlap=s.overlap,
                seed=self.cfg.seed,
                docs_per_day=s.docs_per_day,
                start=dt.date.fromisoformat(s.start),
            )
        if c.path:
            docs, skipped = load_corpus(c.path)
            if skipped:
                self.notes.append(f"skipped {skipped} malformed corpus records")
            return docs
        from .newsapi import fetch_articles

        if not (c.from_date and c.to_date):
            raise PipelineError("ingest", "fetching needs corpus.from_date and corpus.to_date")
        sources = [s.strip() for s in c.sources.split(",") if s.strip()]
        return fetch_articles(
            c.query,
            dt.date.fromisoformat(c.from_date),
            dt.date.fromisoformat(c.to_date),
            sources,
            c.api_key,
            c.cache_dir,
            session=self.session,
        )

    def ingest(self) -> dict[dt.date, list]:
        def go():
            st = Stage(self.root, "ingest", self.digest("ingest"))
            self.cache_hits["ingest"] = st.fresh()
            if self.cache_hits["ingest"]:
                return read_buckets(st.dir / "phrases.jsonl")
            docs = self.documents()
            if not docs:
                raise PipelineError("ingest", "corpus has no documents")
            if not self.cfg.corpus.path:
                write_corpus(docs, st.path("documents.jsonl"))
            buckets = bucket_by_date(docs)
            write_buckets(buckets, st.path("phrases.jsonl"))
            st.seal()
            return buckets

        return self._run("ingest", go)

    # phrases -> daily graphs, flattened graph, pruned windows

    def graphs(self) -> tuple[CooccurrenceGraph, list[WindowGraph]]:
        def go():
            buckets = self.ingest()
            st = Stage(self.root, "graphs", self.digest("graphs"))
            self.cache_hits["graphs"] = st.fresh()
            if self.cache_hits["graphs"]:
                return self._load_graphs(st)
            first, last = min(buckets), max(buckets)
            days = [first + dt.timedelta(days=i) for i in range((last - first).days + 1)]
            gaps = sum(1 for d in days if d not in buckets)
            if gaps:
                self.notes.append(f"{gaps} calendar days without documents filled with empty graphs")
            daily = [build_daily_graph(buckets.get(d, [])) for d in days]
            g = self.cfg.graph
            windows = window_union(daily, g.w, g.s, days)
            if len(windows) < MIN_WINDOWS:
                raise PipelineError("graphs", f"need >= {MIN_WINDOWS} windows, got {len(windows)}")
            if g.prune:
                windows = [replace(wg, graph=prune_degree_one(wg.graph)) for wg in windows]
            flat = flatten(daily)
            dump_graph(flat, st.path("flat.tsv"))
            rows = []
            for wg in windows:
                dump_graph(wg.graph, st.path(f"windows/{_wname(wg.index)}"))
                rows.append(f"{wg.index}\t{wg.day_range[0].isoformat()}\t{wg.day_range[1].isoformat()}\n")
            st.path("windows.tsv").write_text("".join(rows), encoding="utf-8")
            st.seal()
            return flat, windows

        return self._run("graphs", go)

    def _load_graphs(self, st: Stage):
        flat = load_graph(st.dir / "flat.tsv")
        windows = []
        for line in (st.dir / "windows.tsv").read_text(encoding="utf-8").splitlines():
            k, a, b = line.split("\t")
            g = load_graph(st.dir / "windows" / _wname(int(k)))
            windows.append(WindowGraph(int(k), (dt.date.fromisoformat(a), dt.date.fromisoformat(b)), g))
        return flat, windows

    # flattened graph -> global skip-gram model

    def _walk_cfg(self) -> WalkConfig:
        e = self.cfg.embed
        return WalkConfig(e.n_walks_train, e.n_walks_infer, e.walk_length, self.cfg.seed, e.weighted)

    def embed(self) -> SkipGramModel:
        def go():
            flat, _ = self.graphs()
            st = Stage(self.root, "embed", self.digest("embed"))
            self.cache_hits["embed"] = st.fresh()
            e = self.cfg.embed
            if self.cache_hits["embed"]:
                _, vocab, vectors = load_vectors(st.dir / "vectors.txt")
                _, _, context = load_vectors(st.dir / "context.txt")
                counts = [int(x) for x in (st.dir / "counts.txt").read_text(encoding="utf-8").split()]
                return SkipGramModel(vocab, np.asarray(counts, dtype=np.int64), vectors, context, e.negatives)
            if flat.n_edges == 0:
                raise PipelineError("embed", "flattened graph has no edges")
            model = embed_graph(flat, self._walk_cfg(), e.dims, e.context, e.epochs, e.negatives, e.lr, self.cfg.seed)
            dump_vectors(model.vocab, model.vectors, st.path("vectors.txt"))
            dump_vectors(model.vocab, model.context, st.path("context.txt"))
            st.path("counts.txt").write_text("".join(f"{c}\n" for c in model.counts), encoding="utf-8")
            st.seal()
            return model

        return self._run("embed", go)

    # windows -> 2-D edge clouds

    def _reduce_one(self, wg: WindowGraph, model: SkipGramModel) -> tuple[PointCloud, str | None]:
        e, r = self.cfg.embed, self.cfg.reduce
        if e.per_window_walks and wg.graph.n_edges:
            seed = int(derive_seed(np.uint64(self.cfg.seed), np.uint64(wg.index)))
            nv = refine_on_graph(model, wg.graph, self._walk_cfg(), e.context, 1, e.lr, seed)
        else:
            nv = model.node_vectors()
        cloud = edge_vectors(wg.graph, nv)
        n = len(cloud)
        rc = ReduceConfig(r.n_neighbors, r.min_dist, r.n_epochs, self.cfg.seed, r.method)
        note = None
        if n <= 1:
            note = f"window {wg.index}: {n} points, reduction skipped"
            return PointCloud(np.zeros((n, 2)), cloud.labels), note
        if r.method != PCA and n < r.n_neighbors + 1:
            if n - 1 >= 2:
                rc = replace(rc, n_neighbors=n - 1)
                note = f"window {wg.index}: {n} points, n_neighbors clamped to {n - 1}"
            else:
                rc = replace(rc, method=PCA)
                note = f"window {wg.index}: {n} points, PCA used instead"
        return reduce_to_2d(cloud, rc), note

    def reduce(self) -> list[PointCloud]:
        def go():
            _, windows = self.graphs()
            model = self.embed()
            st = Stage(self.root, "reduce", self.digest("reduce"))
            self.cache_hits["reduce"] = st.fresh()
            if self.cache_hits["reduce"]:
                notes = (st.dir / "notes.txt").read_text(encoding="utf-8").splitlines()
                self.notes.extend(notes)
                return [load_cloud(st.dir / _wname(wg.index)) for wg in windows]

            def one(wg):
                try:
                    return self._reduce_one(wg, model)
                except Exception as exc:
                    raise PipelineError("reduce", f"{type(exc).__name__}: {exc}", wg.index) from exc

            results = self._map(one, windows)
            notes = [note for _, note in results if note]
            self.notes.extend(notes)
            for wg, (cloud, _) in zip(windows, results):
                dump_cloud(cloud, st.path(_wname(wg.index)))
            st.path("notes.txt").write_text("".join(n + "\n" for n in notes), encoding="utf-8")
            st.seal()
            return [c for c, _ in results]

        return self._run("reduce", go)

    # clouds -> diagrams

    def tda(self) -> list[tuple[PersistenceDiagram, PersistenceDiagram]]:
        def go():
            _, windows = self.graphs()
            clouds = self.reduce()
            st = Stage(self.root, "tda", self.digest("tda"))
            self.cache_hits["tda"] = st.fresh()
            if self.cache_hits["tda"]:
                return [tuple(load_diagrams(st.dir / _wname(wg.index))) for wg in windows]
            rcfg = RipsConfig(self.cfg.rips.max_dim, self.cfg.rips.max_edge_length)
            if rcfg.max_edge_length != "auto":
                rcfg = replace(rcfg, max_edge_length=float(rcfg.max_edge_length))

            def one(item):
                wg, cloud = item
                if len(cloud) == 0:
                    return PersistenceDiagram(0), PersistenceDiagram(1)
                try:
                    return rips_persistence(cloud, rcfg)
                except Exception as exc:
                    raise PipelineError("tda", f"{type(exc).__name__}: {exc}", wg.index) from exc

            diagrams = self._map(one, list(zip(windows, clouds)))
            for wg, pair in zip(windows, diagrams):
                dump_diagrams(pair, st.path(_wname(wg.index)))
            st.seal()
            return diagrams

        return self._run("tda", go)

    def _map(self, fn, items: Sequence):
        if self.cfg.workers <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(self.cfg.workers) as pool:
            return list(pool.map(fn, items))

    # diagrams -> signals, lags, candidates

    def analyze(self) -> ChangeReport:
        def go():
            _, windows = self.graphs()
            diagrams = self.tda()
            st = Stage(self.root, "analyze", self.digest("analyze"))
            self.cache_hits["analyze"] = st.fresh()
            if self.cache_hits["analyze"]:
                rec = json.loads((self.root / "report.json").read_text(encoding="utf-8"))
                return ChangeReport.from_record(rec)
            m = self.cfg.metrics
            signals = build_signals(
                diagrams, m.p, m.q, m.smooth_window, m.infinite_policy, m.clamp_value, [wg.index for wg in windows]
            )
            notes = list(self.notes)
            lags = []
            for a, b in LAG_PAIRS:
                xa = getattr(signals[a], m.xcorr_input)
                xb = getattr(signals[b], m.xcorr_input)
                max_lag = m.max_lag if m.max_lag is not None else len(xa) // 3
                max_lag = min(max_lag, len(xa) - 3)
                if max_lag < 1:
                    notes.append(f"series {a}/{b} too short for cross-correlation")
                    continue
                lags.append(cross_correlation(xa, xb, max_lag, (a, b)))
            per_signal, combined = rank_candidates(signals)
            report = ChangeReport(
                signals,
                lags,
                per_signal,
                combined,
                [
                    WindowInfo(wg.index, wg.day_range[0].isoformat(), wg.day_range[1].isoformat(), wg.graph.n_nodes, wg.graph.n_edges)
                    for wg in windows
                ],
                notes,
                self.meta(),
            )
            write_report(report, self.root)
            st.files += ["../report.json", "../signals.csv"]
            st.seal()
            return report

        return self._run("analyze", go)

    def meta(self) -> dict:
        import numba
        import scipy

        return {
            "config_hash": self.cfg.config_hash(),
            "seed": self.cfg.seed,
            "w": self.cfg.graph.w,
            "s": self.cfg.graph.s,
            "xcorr_input": self.cfg.metrics.xcorr_input,
            "walk_starts": "round-robin over a seeded permutation of the nodes",
            "versions": {
                "narrative_topology": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "numba": numba.__version__,
            },
        }

    def write_meta(self) -> Path:
        lines = [f"config_hash = {self.cfg.config_hash()}", f"seed = {self.cfg.seed}"]
        if self.cfg.event_date:
            lines.append(f"event_date = {self.cfg.event_date}")
        for name, secs in self.timings.items():
            hit = " (cached)" if self.cache_hits.get(name) else ""
            lines.append(f"time.{name} = {secs:.3f}s{hit}")
        path = self.root / "meta.txt"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path


def rank_candidates(signals: dict[str, SignalSeries]) -> tuple[dict[str, list[dict]], list[dict]]:
    """Windows ranked by ``|d1|`` of each smoothed signal, and by a combined rank score.

    The combined score averages per-signal rank percentiles (1 for the top
    window, 0 for the bottom or absent), i.e. a normalised rank sum.
    """
    per_signal: dict[str, list[dict]] = {}
    percentile: dict[int, list[float]] = {}
    for name in SIGNAL_NAMES:
        s = signals[name]
        order = sorted(zip(s.window_index, np.abs(s.d1)), key=lambda t: (-t[1], t[0]))
        per_signal[name] = [{"window": int(k), "score": float(v)} for k, v in order]
        n = len(order)
        for rank, (k, _) in enumerate(order):
            percentile.setdefault(int(k), []).append(1.0 - rank / (n - 1) if n > 1 else 1.0)
    combined = [
        {"window": k, "score": sum(v) / len(SIGNAL_NAMES)} for k, v in percentile.items()
    ]
    combined.sort(key=lambda c: (-c["score"], c["window"]))
    return per_signal, combined


def signals_csv(signals: dict[str, SignalSeries]) -> str:
    """One row per window; Wasserstein columns are blank for the first window."""
    cols = ["window_index"]
    for suffix in ("", "_smooth", "_d1", "_d2"):
        cols += [name + suffix for name in SIGNAL_NAMES]
    fields = {"": "raw", "_smooth": "smoothed", "_d1": "d1", "_d2": "d2"}
    rows: dict[int, dict[str, str]] = {}
    for name in SIGNAL_NAMES:
        s = signals[name]
        for i, k in enumerate(s.window_index):
            row = rows.setdefault(int(k), {"window_index": str(k)})
            for suffix, attr in fields.items():
                row[name + suffix] = repr(float(getattr(s, attr)[i]))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, cols, restval="", lineterminator="\n")
    writer.writeheader()
    for k in sorted(rows):
        writer.writerow(rows[k])
    return buf.getvalue()


def write_report(report: ChangeReport, root: str | Path) -> tuple[Path, Path]:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rp = root / "report.json"
    rp.write_text(json.dumps(report.to_record(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    sp = root / "signals.csv"
    sp.write_text(signals_csv(report.signals), encoding="utf-8")
    return rp, sp


def run_pipeline(cfg: RunConfig, *, plots: bool = True, session=None) -> ChangeReport:
    """All stages through the change report; plots go to ``output_dir/plots``."""
    pipe = Pipeline(cfg, session=session)
    report = pipe.analyze()
    if plots:
        from .plotting import emit_plots

        t0 = time.perf_counter()
        emit_plots(report, Path(cfg.output_dir) / "plots", cfg.event_date)
        pipe.timings["plots"] = time.perf_counter() - t0
    pipe.write_meta()
    return report
