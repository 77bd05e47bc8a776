"""Command line: ``narrative-topology <subcommand> [--config FILE] [--section.key value ...]``.

Exit status is 0 on success, 1 for invalid configuration or input, 2 when a
stage fails at runtime.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .corpus import write_corpus
from .pipeline import Pipeline, PipelineError, run_pipeline

log = logging.getLogger("narrative_topology")

SUBCOMMANDS = {
    "fetch": "download articles from NewsAPI into a JSONL corpus",
    "ingest": "extract noun phrases per day",
    "graphs": "build daily, flattened and windowed co-occurrence graphs",
    "embed": "train the skip-gram node embedding on the flattened graph",
    "reduce": "project each window's edge cloud to two dimensions",
    "tda": "compute H0/H1 persistence diagrams per window",
    "analyze": "signals, lag reports, change candidates and plots",
    "run": "every stage end to end",
    "synth": "write a synthetic two-regime corpus",
}

FLAG_ALIASES = {"per-window-walks": "embed.per_window_walks"}


def parse_overrides(extra: list[str]) -> dict[str, str]:
    """``--a.b value``, ``--a.b=value`` and bare ``--flag`` (read as true)."""
    out: dict[str, str] = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        elif i + 1 < len(extra) and not extra[i + 1].startswith("--"):
            i += 1
            value = extra[i]
        else:
            value = "true"
        key = FLAG_ALIASES.get(key, key)
        out[key.replace("-", "_")] = value
        i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="narrative-topology",
        description="Topological change detection on news co-occurrence graphs.",
        epilog="Any config key can be overridden as --section.key value, e.g. --embed.dims 32.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="flat 'section.key = value' file")
        if name in ("fetch", "synth"):
            p.add_argument("--out", type=Path, help="corpus file to write (default: OUTPUT_DIR/corpus.jsonl)")
        if name in ("analyze", "run"):
            p.add_argument("--no-plots", action="store_true")
    return parser


def _summary(report) -> list[str]:
    lines = [f"windows: {len(report.windows)}"]
    for name, cands in report.candidates.items():
        top = ", ".join(f"{c['window']} ({c['score']:.4g})" for c in cands[:3])
        lines.append(f"top change windows by {name}: {top}")
    if report.combined:
        lines.append(f"combined top window: {report.combined[0]['window']}")
    for lag in report.lags:
        lines.append(f"{lag.a} vs {lag.b}: {lag.describe()}")
    return lines


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        overrides = parse_overrides(extra)
        if args.command == "synth":
            overrides.setdefault("corpus.synthetic", "true")
        cfg = load_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    pipe = Pipeline(cfg)
    try:
        if args.command in ("fetch", "synth"):
            docs = pipe.documents()
            out = args.out or Path(cfg.output_dir) / "corpus.jsonl"
            write_corpus(docs, out)
            print(f"wrote {len(docs)} documents to {out}")
        elif args.command == "ingest":
            buckets = pipe.ingest()
            print(f"{len(buckets)} days, {sum(map(len, buckets.values()))} phrases")
        elif args.command == "graphs":
            flat, windows = pipe.graphs()
            print(f"flattened graph: {flat.n_nodes} nodes, {flat.n_edges} edges; {len(windows)} windows")
        elif args.command == "embed":
            model = pipe.embed()
            print(f"{len(model.vocab)} node vectors of dimension {model.vectors.shape[1]}")
        elif args.command == "reduce":
            clouds = pipe.reduce()
            print(f"{len(clouds)} reduced clouds, largest {max(map(len, clouds))} points")
        elif args.command == "tda":
            diagrams = pipe.tda()
            print(f"{len(diagrams)} windows; {sum(len(d[1]) for d in diagrams)} H1 bars in total")
        else:
            if args.command == "run":
                report = run_pipeline(cfg, plots=not args.no_plots)
            else:
                report = pipe.analyze()
                if not args.no_plots:
                    from .plotting import emit_plots

                    emit_plots(report, Path(cfg.output_dir) / "plots", cfg.event_date)
                pipe.write_meta()
            print("\n".join(_summary(report)))
            print(f"report: {Path(cfg.output_dir) / 'report.json'}")
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort runtime failure
        log.debug("unhandled failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
