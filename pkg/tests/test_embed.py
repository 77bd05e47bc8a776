import itertools

import numpy as np
import pytest

from narrative_topology.embed import (
    NodeVectors,
    PointCloud,
    WalkConfig,
    dump_cloud,
    dump_node_vectors,
    edge_vectors,
    embed_graph,
    fit_skipgram,
    load_cloud,
    load_node_vectors,
    random_walks,
    refine_on_graph,
    train_skipgram,
)
from narrative_topology.graph import CooccurrenceGraph, edge_key


def graph(edges, nodes=()):
    return CooccurrenceGraph(
        frozenset({n for e in edges for n in e} | set(nodes)), {edge_key(a, b): 1 for a, b in edges}
    )


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    names = [f"n{i:02d}" for i in range(n)]
    edges = [(a, b) for a, b in itertools.combinations(names, 2) if rng.random() < p]
    # a spanning path keeps it connected
    edges += list(zip(names, names[1:]))
    return graph(set(edge_key(*e) for e in edges))


def test_forced_path():
    walks = random_walks(graph([("a", "b")]), WalkConfig(n_walks_train=10, walk_length=4))
    assert all(w in (["a", "b", "a", "b"], ["b", "a", "b", "a"]) for w in walks)


def test_isolated_node():
    walks = random_walks(graph([], nodes=["a"]), WalkConfig(n_walks_train=5, walk_length=10))
    assert walks == [["a"]] * 5


def test_walks_deterministic_and_seeded():
    g = random_graph(30, 0.1, 0)
    cfg = WalkConfig(n_walks_train=200, walk_length=12, seed=7)
    assert random_walks(g, cfg) == random_walks(g, cfg)
    assert random_walks(g, cfg) != random_walks(g, WalkConfig(n_walks_train=200, walk_length=12, seed=8))


@pytest.mark.parametrize("weighted", [False, True])
def test_walk_steps_are_edges(weighted):
    g = random_graph(40, 0.08, 1)
    for walk in random_walks(g, WalkConfig(n_walks_train=400, walk_length=20, weighted=weighted)):
        for a, b in zip(walk, walk[1:]):
            assert edge_key(a, b) in g.edge_counts


def test_walk_coverage():
    g = random_graph(50, 0.05, 2)
    walks = random_walks(g, WalkConfig(n_walks_train=500, walk_length=5))
    assert {n for w in walks for n in w} == g.nodes


def test_weighted_walks_follow_counts():
    g = CooccurrenceGraph(frozenset("abc"), {("a", "b"): 99, ("a", "c"): 1})
    walks = random_walks(g, WalkConfig(n_walks_train=3000, walk_length=2, weighted=True))
    steps = [w[1] for w in walks if w[0] == "a"]
    assert steps.count("b") / len(steps) > 0.95


def test_single_token_vocab():
    nv = train_skipgram([["a", "a", "a"]], dims=8, epochs=2)
    assert nv.labels == ["a"] and nv.matrix.shape == (1, 8) and np.all(np.isfinite(nv.matrix))


def test_training_is_bitwise_deterministic():
    walks = random_walks(random_graph(20, 0.2, 3), WalkConfig(n_walks_train=100, walk_length=10))
    a = train_skipgram(walks, dims=16, epochs=2, seed=5)
    b = train_skipgram(walks, dims=16, epochs=2, seed=5)
    assert a.labels == b.labels and np.array_equal(a.matrix, b.matrix)


def test_cooccurring_pair_is_closer():
    # a and b only ever appear next to each other; c only next to d
    g = graph([("a", "b"), ("c", "d")])
    wins = 0
    for seed in range(10):
        walks = random_walks(g, WalkConfig(n_walks_train=200, walk_length=10, seed=seed))
        nv = train_skipgram(walks, dims=16, context=3, epochs=5, seed=seed)
        wins += nv.cosine("a", "b") > nv.cosine("a", "c")
    assert wins >= 9


def test_no_nan_over_seeds():
    g = random_graph(50, 0.1, 4)
    for seed in range(20):
        model = embed_graph(g, WalkConfig(n_walks_train=200, walk_length=10, seed=seed), dims=16, epochs=1)
        assert np.all(np.isfinite(model.vectors))


def test_embed_graph_matches_string_path():
    g = random_graph(25, 0.15, 5)
    cfg = WalkConfig(n_walks_train=150, walk_length=8, seed=3)
    fast = embed_graph(g, cfg, dims=12, epochs=2, seed=3)
    slow = fit_skipgram(random_walks(g, cfg), dims=12, epochs=2, seed=3)
    assert fast.vocab == slow.vocab
    assert np.array_equal(fast.vectors, slow.vectors)


def test_refine_leaves_global_model_untouched():
    g = random_graph(20, 0.2, 6)
    cfg = WalkConfig(n_walks_train=100, n_walks_infer=50, walk_length=8)
    model = embed_graph(g, cfg, dims=8, epochs=1)
    before = model.vectors.copy()
    sub = graph([("n00", "n01"), ("n01", "unknown")])
    nv = refine_on_graph(model, sub, cfg, seed=1)
    assert np.array_equal(model.vectors, before)
    assert nv.labels == model.vocab
    assert not np.array_equal(nv["n00"], before[model.vocab.index("n00")])


def test_edge_vectors_midpoint():
    nv = NodeVectors(2, ["a", "b", "c", "d"], np.array([[2.0, 0.0], [0.0, 2.0], [5.0, 5.0], [5.0, 5.0]]))
    cloud = edge_vectors(graph([("a", "b"), ("c", "d")]), nv)
    assert cloud.labels == ["a|b", "c|d"]
    assert np.array_equal(cloud.points, [[1.0, 1.0], [5.0, 5.0]])
    assert len(edge_vectors(graph([], nodes=["a"]), nv)) == 0


def test_edge_vectors_exact_average():
    g = random_graph(30, 0.2, 7)
    model = embed_graph(g, WalkConfig(n_walks_train=100, walk_length=6), dims=8, epochs=1)
    nv = model.node_vectors()
    cloud = edge_vectors(g, nv)
    for label, point in zip(cloud.labels, cloud.points):
        a, b = label.split("|")
        assert np.array_equal(point, (nv[a] + nv[b]) / 2)


def test_missing_node_warns(caplog):
    nv = NodeVectors(1, ["a", "b"], np.ones((2, 1)))
    cloud = edge_vectors(graph([("a", "b"), ("a", "z")]), nv)
    assert len(cloud) == 1 and "skipped 1" in caplog.text


def test_dumps_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    nv = NodeVectors(3, ["x", "y"], rng.normal(size=(2, 3)))
    back = load_node_vectors(dump_node_vectors(nv, tmp_path / "v.txt"))
    assert back.labels == nv.labels and np.array_equal(back.matrix, nv.matrix)
    assert (tmp_path / "v.txt").read_text().startswith("dims=3\n")
    cloud = PointCloud(rng.normal(size=(4, 2)), list("abcd"))
    again = load_cloud(dump_cloud(cloud, tmp_path / "c.txt"))
    assert again.labels == cloud.labels and np.array_equal(again.points, cloud.points)
    empty = load_cloud(dump_cloud(PointCloud(np.zeros((0, 2)), []), tmp_path / "e.txt"))
    assert empty.points.shape == (0, 2)


def test_config_validation():
    with pytest.raises(ValueError):
        WalkConfig(n_walks_train=0)
    with pytest.raises(ValueError):
        NodeVectors(2, ["a"], np.array([[np.nan, 0.0]]))
