import json

import pytest

from narrative_topology.cli import main, parse_overrides
from narrative_topology.corpus import Document, parse_corpus, write_corpus


def args(overrides):
    return [f"--{k}={v}" for k, v in overrides.items()]


def test_parse_overrides():
    assert parse_overrides(["--graph.w", "5", "--embed.dims=8", "--per-window-walks", "--prune"]) == {
        "graph.w": "5",
        "embed.dims": "8",
        "embed.per_window_walks": "true",
        "prune": "true",
    }


def test_run_writes_report_and_plots(fast_overrides, tmp_path, capsys):
    assert main(["run", *args(fast_overrides), "--event_date", "2024-01-09"]) == 0
    out = capsys.readouterr().out
    assert "top change windows by h0_wass" in out and "peak correlation" in out
    root = tmp_path / "out"
    assert json.loads((root / "report.json").read_text())["meta"]["w"] == 3
    assert len(list((root / "plots").glob("*.svg"))) == 6
    assert "event_date = 2024-01-09" in (root / "meta.txt").read_text()


def test_stages_one_by_one(fast_overrides, tmp_path, capsys):
    for cmd in ("ingest", "graphs", "embed", "reduce", "tda"):
        assert main([cmd, *args(fast_overrides)]) == 0
    assert main(["analyze", "--no-plots", *args(fast_overrides)]) == 0
    assert "14 windows" in capsys.readouterr().out
    assert not (tmp_path / "out" / "plots").exists()


def test_config_file(fast_overrides, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("".join(f"{k} = {v}\n" for k, v in fast_overrides.items()))
    assert main(["graphs", "--config", str(cfg)]) == 0


def test_synth_writes_corpus(tmp_path):
    out = tmp_path / "c.jsonl"
    assert main(["synth", "--synth.T", "6", "--synth.change_day", "3", "--out", str(out)]) == 0
    assert len({d.date for d in parse_corpus(out)}) == 6


@pytest.mark.parametrize("argv", [
    ["run", "--graph.w", "zero"],
    ["run", "--nope.key", "1"],
    ["run", "stray"],
    ["run", "--config", "/does/not/exist.cfg"],
])
def test_bad_input_exits_1(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_runtime_failure_exits_2(tmp_path, capsys):
    docs = [Document(f"2024-01-0{d}", "s", "t", "Energy prices rose. Gas supply fell.") for d in (1, 2, 3)]
    path = write_corpus(docs, tmp_path / "c.jsonl")
    assert main(["run", "--corpus.path", str(path), "--output_dir", str(tmp_path / "o")]) == 2
    assert "stage graphs: need >= 4 windows, got 1" in capsys.readouterr().err
