import pytest

from narrative_topology.config import load_config

FAST = {
    "corpus.synthetic": "true",
    "synth.T": "16",
    "synth.change_day": "8",
    "synth.docs_per_day": "2",
    "synth.sentences_per_doc": "10",
    "synth.topics_b": "6",
    "embed.dims": "8",
    "embed.epochs": "1",
    "embed.n_walks_train": "200",
    "embed.n_walks_infer": "50",
    "embed.walk_length": "10",
    "reduce.method": "pca",
    "metrics.smooth_window": "3",
}


@pytest.fixture
def fast_overrides(tmp_path):
    return {**FAST, "output_dir": str(tmp_path / "out")}


@pytest.fixture
def fast_cfg(fast_overrides):
    return load_config(overrides=fast_overrides)
