"""Graph attention model: structure, attention normalization, batched
forward equivalence, analytic-gradient correctness, and persistence."""

from __future__ import annotations

import numpy as np
import pytest

from stackrca.causal import CausalEdge
from stackrca.graphmodel import (
    EDGE_TYPES,
    GraphLabels,
    attention_forward,
    build_hetgraph,
    fault_probabilities,
    init_gat,
    load_gat,
    loss_and_grads,
    predict,
    save_gat,
)
from stackrca.topology import Level, default_topology

IN_DIM = 10


def _graph(seed=0, with_causal=False):
    topo = default_topology()
    rng = np.random.default_rng(seed)
    feats = {e: rng.standard_normal(IN_DIM) for e in topo.entities()}
    causal = None
    if with_causal:
        causal = [
            CausalEdge(
                source="h1", target="p1", t=0, strength=0.7, kind="cross",
                per_step=np.array([0.7]),
            )
        ]
    return topo, build_hetgraph(topo, feats, causal)


def _random_model(seed=1, scale=0.3):
    model = init_gat(in_dim=IN_DIM, hidden=8, n_heads=2, n_layers=2, seed=seed)
    rng = np.random.default_rng(seed + 100)
    for k in model.params:
        model.params[k] = rng.standard_normal(model.params[k].shape) * scale
    return model


# ----------------------------------------------------------------------
# graph structure

def test_hetgraph_edge_counts_follow_topology():
    topo, graph = _graph()
    kinds = {}
    for src, dst, rel, weight in graph.edges:
        kinds[EDGE_TYPES[rel]] = kinds.get(EDGE_TYPES[rel], 0) + 1
    # deploy: one per pod (host-pod); member: one per pod (pod-service);
    # call: one per call pair; stored once, traversed both ways
    assert kinds["deploy"] == len(topo.pods)
    assert kinds["member"] == len(topo.pods)
    assert kinds["call"] == len(topo.calls)


def test_hetgraph_includes_causal_edges():
    topo, plain = _graph(with_causal=False)
    _, with_causal = _graph(with_causal=True)
    causal_slot = EDGE_TYPES.index("causal")
    extra = [e for e in with_causal.edges if e[2] == causal_slot]
    assert len(extra) == 1
    assert len(with_causal.edges) == len(plain.edges) + 1


def test_association_matrix_oracle():
    topo = default_topology()
    A = topo.association_matrix(Level.HOST, Level.POD)
    for i, host in enumerate(topo.entities(Level.HOST)):
        for j, pod in enumerate(topo.entities(Level.POD)):
            expected = 1.0 if pod in topo.pods_on(host) else 0.0
            assert A[i, j] == expected


# ----------------------------------------------------------------------
# forward pass

def test_attention_rows_sum_to_one():
    _, graph = _graph()
    model = _random_model()
    _, cache = attention_forward(model, graph, keep_cache=True)
    for layer_cache in cache[1:]:
        for head_cache in layer_cache:
            alpha = head_cache["alpha"]
            assert np.allclose(alpha.sum(axis=-1), 1.0, atol=1e-9)
            assert np.all(alpha >= 0.0)


def test_batched_forward_matches_single():
    _, graph = _graph()
    model = _random_model()
    rng = np.random.default_rng(9)
    batch = rng.standard_normal((5,) + graph.features.shape)
    batched = fault_probabilities(model, graph, batch)
    assert batched.shape == (5, graph.n_nodes)
    for b in range(5):
        single = fault_probabilities(model, graph, batch[b])
        assert np.array_equal(batched[b], single)


def test_predict_shapes_and_probability_ranges():
    _, graph = _graph()
    model = _random_model()
    pred = predict(model, graph)
    assert len(pred.nodes) == graph.n_nodes
    assert np.all((pred.fault_prob >= 0) & (pred.fault_prob <= 1))
    for node, dist in pred.type_dist.items():
        assert dist.sum() == pytest.approx(1.0, abs=1e-9)


# ----------------------------------------------------------------------
# analytic gradients vs central finite differences (criterion tolerance 1e-3)

def test_gat_gradients_match_finite_differences():
    _, graph = _graph(with_causal=True)
    model = _random_model()
    labels = GraphLabels(
        faulty={"h1", "p1", "s1"}, fault_class={"h1": 1, "p1": 0, "s1": 2}
    )
    _, grads = loss_and_grads(model, graph, labels)
    eps = 1e-5
    rng = np.random.default_rng(0)
    checked = 0
    worst = 0.0
    for name, arr in model.params.items():
        flat = arr.reshape(-1)
        take = min(4, flat.size)
        for i in rng.choice(flat.size, size=take, replace=False):
            orig = flat[i]
            flat[i] = orig + eps
            lp, _ = loss_and_grads(model, graph, labels)
            flat[i] = orig - eps
            lm, _ = loss_and_grads(model, graph, labels)
            flat[i] = orig
            fd = (lp - lm) / (2 * eps)
            an = grads[name].reshape(-1)[i]
            if fd == 0.0 and an == 0.0:
                continue
            rel = abs(fd - an) / max(abs(fd), abs(an))
            worst = max(worst, rel)
            checked += 1
    assert checked >= 50
    assert worst < 1e-3, f"worst relative error {worst:.2e} over {checked} coords"


def test_skip_connection_reaches_fault_head():
    # zeroing a node's own features must change its probability through
    # the direct path even when attention weights stay fixed
    _, graph = _graph()
    model = _random_model()
    model.params["fault_skip"][:] = 1.0
    base = fault_probabilities(model, graph)
    masked = graph.features.copy()
    masked[0, :] = 0.0
    out = fault_probabilities(model, graph, masked)
    assert out[0] != base[0]


# ----------------------------------------------------------------------
# persistence

def test_model_save_load_roundtrip(tmp_path):
    model = _random_model()
    path = str(tmp_path / "gat.json")
    save_gat(model, path)
    loaded = load_gat(path)
    assert loaded.n_layers == model.n_layers
    assert loaded.n_heads == model.n_heads
    assert loaded.in_dim == model.in_dim
    for k, v in model.params.items():
        assert np.array_equal(loaded.params[k], v), k
    _, graph = _graph()
    assert np.array_equal(
        fault_probabilities(loaded, graph), fault_probabilities(model, graph)
    )
