"""Run configuration: sectioned dataclasses, a flat ``section.key = value`` file format and stage hashes."""
from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
import json
import math
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .metrics import CLAMP, DROP
from .reduce import MANIFOLD, PCA


class ConfigError(ValueError):
    pass


@dataclass
class CorpusSection:
    path: str | None = None  # JSONL corpus; takes precedence over fetching
    synthetic: bool = False  # generate from the synth section instead
    query: str | None = None
    from_date: str | None = None
    to_date: str | None = None
    sources: str = ""  # comma-separated source ids
    cache_dir: str = "newsapi-cache"
    api_key: str | None = None


@dataclass
class SynthSection:
    T: int = 60
    change_day: int = 30
    overlap: float = 0.2
    topics_a: int = 4
    topics_b: int = 10
    topic_size: int = 8
    sentences_per_doc: int = 30
    docs_per_day: int = 4
    start: str = "2024-01-01"


@dataclass
class GraphSection:
    w: int = 3
    s: int = 1
    prune: bool = True


@dataclass
class EmbedSection:
    dims: int = 64
    context: int = 3
    epochs: int = 10
    negatives: int = 5
    lr: float = 0.025
    n_walks_train: int = 100_000
    n_walks_infer: int = 4_000
    walk_length: int = 40
    weighted: bool = False
    per_window_walks: bool = False


@dataclass
class ReduceSection:
    n_neighbors: int = 15
    min_dist: float = 0.1
    n_epochs: int = 200
    method: str = MANIFOLD


@dataclass
class RipsSection:
    max_dim: int = 1
    max_edge_length: str = "auto"


@dataclass
class MetricsSection:
    p: float = 1.0
    q: float = math.inf
    smooth_window: int = 7
    infinite_policy: str = DROP
    clamp_value: float | None = None
    max_lag: int | None = None  # default: a third of the series length
    xcorr_input: str = "smoothed"


SECTIONS = {
    "corpus": CorpusSection,
    "synth": SynthSection,
    "graph": GraphSection,
    "embed": EmbedSection,
    "reduce": ReduceSection,
    "rips": RipsSection,
    "metrics": MetricsSection,
}
TOP_LEVEL = ("seed", "output_dir", "event_date", "workers")

# keys that never influence any artifact
UNHASHED = {"corpus.api_key", "corpus.cache_dir", "event_date", "output_dir", "workers"}

STAGE_INPUTS = {
    "ingest": ("corpus", "synth"),
    "graphs": ("graph",),
    "embed": ("embed", "seed"),
    "reduce": ("reduce",),
    "tda": ("rips",),
    "analyze": ("metrics",),
}
STAGES = tuple(STAGE_INPUTS)


@dataclass
class RunConfig:
    corpus: CorpusSection = field(default_factory=CorpusSection)
    synth: SynthSection = field(default_factory=SynthSection)
    graph: GraphSection = field(default_factory=GraphSection)
    embed: EmbedSection = field(default_factory=EmbedSection)
    reduce: ReduceSection = field(default_factory=ReduceSection)
    rips: RipsSection = field(default_factory=RipsSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    seed: int = 0
    output_dir: str = "out"
    event_date: str | None = None  # only used for plot annotation
    workers: int = 1

    def validate(self) -> "RunConfig":
        g, e, r, m = self.graph, self.embed, self.reduce, self.metrics
        checks = [
            (g.w >= 1 and g.s >= 1, "graph.w and graph.s must be positive"),
            (e.dims >= 1 and e.context >= 1 and e.epochs >= 1, "embed.dims, context and epochs must be positive"),
            (e.n_walks_train >= 1 and e.n_walks_infer >= 1 and e.walk_length >= 2, "walk counts must be positive"),
            (e.lr > 0 and e.negatives >= 0, "embed.lr must be positive"),
            (r.n_neighbors >= 2 and r.n_epochs >= 1, "reduce.n_neighbors >= 2 and n_epochs >= 1"),
            (0 <= r.min_dist < 1, "reduce.min_dist must lie in [0, 1)"),
            (r.method in (MANIFOLD, PCA), f"reduce.method must be {MANIFOLD} or {PCA}"),
            (self.rips.max_dim in (0, 1), "rips.max_dim must be 0 or 1"),
            (m.p >= 1 and m.q >= 1, "metrics.p and metrics.q must be >= 1"),
            (m.smooth_window >= 1 and m.smooth_window % 2 == 1, "metrics.smooth_window must be odd"),
            (m.infinite_policy in (DROP, CLAMP), f"metrics.infinite_policy must be {DROP} or {CLAMP}"),
            (m.infinite_policy != CLAMP or m.clamp_value is not None, "clamp policy needs metrics.clamp_value"),
            (m.max_lag is None or m.max_lag >= 1, "metrics.max_lag must be positive"),
            (m.xcorr_input in ("raw", "smoothed", "d1", "d2"), "metrics.xcorr_input must be raw, smoothed, d1 or d2"),
            (0 <= self.seed < 2**64, "seed must fit in 64 bits"),
            (self.workers >= 1, "workers must be positive"),
            (0 < self.synth.change_day < self.synth.T, "synth.change_day must lie inside (0, T)"),
            (0 <= self.synth.overlap <= 1, "synth.overlap must lie in [0, 1]"),
        ]
        if self.rips.max_edge_length != "auto":
            try:
                ok = float(self.rips.max_edge_length) > 0
            except ValueError:
                ok = False
            checks.append((ok, "rips.max_edge_length must be 'auto' or a positive number"))
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        for name in ("from_date", "to_date"):
            if getattr(self.corpus, name):
                _parse_date(getattr(self.corpus, name), f"corpus.{name}")
        if self.event_date:
            _parse_date(self.event_date, "event_date")
        return self

    # -- flat key/value view -------------------------------------------------

    def flat(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for name in SECTIONS:
            for f in dataclasses.fields(getattr(self, name)):
                out[f"{name}.{f.name}"] = getattr(getattr(self, name), f.name)
        for key in TOP_LEVEL:
            out[key] = getattr(self, key)
        return out

    def set(self, key: str, raw: Any) -> None:
        if "." in key:
            section, name = key.split(".", 1)
            if section not in SECTIONS:
                raise ConfigError(f"unknown config section {section!r}")
            target = getattr(self, section)
            hints = typing.get_type_hints(type(target))
            if name not in hints:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(target, name, _coerce(raw, hints[name], key))
        elif key in TOP_LEVEL:
            setattr(self, key, _coerce(raw, typing.get_type_hints(RunConfig)[key], key))
        else:
            raise ConfigError(f"unknown config key {key!r}")

    def stage_hash(self, stage: str) -> str:
        """Digest of everything that can change ``stage``'s artifacts, upstream stages included."""
        flat = {k: _jsonable(v) for k, v in self.flat().items() if k not in UNHASHED}
        upto = STAGES[: STAGES.index(stage) + 1]
        wanted = {p for s in upto for p in STAGE_INPUTS[s]}
        if not self.corpus.synthetic:
            wanted.discard("synth")
        keys = sorted(k for k in flat if k.split(".")[0] in wanted)
        blob = json.dumps({k: flat[k] for k in keys}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def config_hash(self) -> str:
        return self.stage_hash(STAGES[-1])


def _parse_date(text: str, key: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise ConfigError(f"{key} must be an ISO date, got {text!r}") from None


def _jsonable(v: Any) -> Any:
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def _coerce(raw: Any, ftype: Any, key: str) -> Any:
    args = typing.get_args(ftype)
    optional = type(None) in args
    base = next((a for a in args if a is not type(None)), ftype) if isinstance(ftype, types.UnionType) else ftype
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if optional and text.lower() in ("", "none", "null"):
        return None
    try:
        if base is bool:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if base is int:
            return int(text)
        if base is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as {base.__name__}") from None
    return text


def parse_config_text(text: str, cfg: RunConfig | None = None) -> RunConfig:
    """Apply ``key = value`` lines to ``cfg`` (a fresh default when omitted)."""
    cfg = cfg or RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        cfg.set(key, value)
    return cfg


def load_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        parse_config_text(Path(path).read_text(encoding="utf-8"), cfg)
    for key, value in (overrides or {}).items():
        cfg.set(key, value)
    return cfg.validate()


def format_config(cfg: RunConfig) -> str:
    lines = []
    for key, value in cfg.flat().items():
        if key == "corpus.api_key":
            continue
        lines.append(f"{key} = {'' if value is None else value}")
    return "\n".join(lines) + "\n"
