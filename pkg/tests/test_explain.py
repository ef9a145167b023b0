"""Explanation stage: chain assembly over retained edges and mask-based
feature importance."""

from __future__ import annotations

import numpy as np
import pytest

from stackrca.causal import CausalEdge, CausalEdgeSet
from stackrca.explain import build_causal_chain, mask_importance
from stackrca.graphmodel import build_hetgraph, fault_probabilities, init_gat
from stackrca.topology import default_topology


def _edge(src, dst, strength, t=0):
    return CausalEdge(
        source=src, target=dst, t=t, strength=strength, kind="intra",
        per_step=np.array([strength]),
    )


def _edge_set(edges):
    return CausalEdgeSet(edges=edges, threshold=0.3, mi_bins=8, mi_cutoff=0.01)


# ----------------------------------------------------------------------
# chain construction

def test_chain_follows_strongest_paths_and_prunes_unflagged():
    edges = _edge_set([
        _edge("r", "a", 0.9, t=1),
        _edge("a", "b", 0.8, t=2),
        _edge("r", "c", 0.7, t=1),   # c is not flagged: branch pruned
    ])
    ranking = [("r", 0.5), ("a", 0.3), ("b", 0.2)]
    chain = build_causal_chain(edges, ranking, flagged=["a", "b"], stride_s=5.0)
    assert chain.root == "r"
    got = [(e.source, e.target) for e in chain.edges]
    assert got == [("r", "a"), ("a", "b")]
    assert chain.entities == ["r", "a", "b"]
    # onset window scaled by the stride
    assert chain.edges[0].time_s == pytest.approx(1 * 5.0)


def test_chain_reports_unreachable_flags():
    edges = _edge_set([_edge("r", "a", 0.9)])
    chain = build_causal_chain(edges, [("r", 1.0)], flagged=["a", "x"], stride_s=1.0)
    assert chain.unreachable == ["x"]


def test_chain_empty_ranking_gives_no_root():
    chain = build_causal_chain(_edge_set([]), [], flagged=["a"], stride_s=1.0)
    assert chain.root is None
    assert chain.entities == []


def test_chain_prefers_stronger_parent():
    # two paths into b: the stronger edge wins the tree slot
    edges = _edge_set([
        _edge("r", "a", 0.9),
        _edge("r", "b", 0.4),
        _edge("a", "b", 0.8),
    ])
    chain = build_causal_chain(edges, [("r", 1.0)], flagged=["a", "b"], stride_s=1.0)
    got = {(e.source, e.target) for e in chain.edges}
    assert ("a", "b") in got and ("r", "b") not in got


# ----------------------------------------------------------------------
# mask importance

def _model_and_graph():
    topo = default_topology()
    rng = np.random.default_rng(0)
    feats = {e: rng.standard_normal(6) for e in topo.entities()}
    graph = build_hetgraph(topo, feats, None)
    model = init_gat(in_dim=6, hidden=8, n_heads=2, n_layers=1, seed=2)
    rng2 = np.random.default_rng(3)
    for k in model.params:
        model.params[k] = rng2.standard_normal(model.params[k].shape) * 0.4
    return model, graph


def test_mask_importance_matches_unbatched_reference():
    model, graph = _model_and_graph()
    names = [f"f{i}" for i in range(6)]
    table = mask_importance(model, graph, "p1", names, trials=8, seed=5)

    # independent reference: replay the same trial masks one forward at
    # a time instead of batched
    node = graph.nodes.index("p1")
    rng = np.random.default_rng(np.random.SeedSequence([5, node, 0x3A5]))
    base_prob = float(fault_probabilities(model, graph)[node])
    totals = np.zeros(6)
    for _ in range(8):
        masked = rng.random(6) < 0.5
        subset = graph.features.copy()
        subset[node, masked] = 0.0
        p_subset = float(fault_probabilities(model, graph, subset)[node])
        for j in range(6):
            if masked[j]:
                totals[j] += base_prob - p_subset
            else:
                alone = subset.copy()
                alone[node, j] = 0.0
                p_without = float(fault_probabilities(model, graph, alone)[node])
                totals[j] += base_prob - p_without
    ref = np.maximum(totals / 8, 0.0)
    got = {f: s for f, s in zip(table.features, table.scores)}
    want = dict(zip(names, ref))
    for name in names:
        assert got[name] == pytest.approx(want[name], abs=1e-12)


def test_mask_importance_is_deterministic():
    model, graph = _model_and_graph()
    names = [f"f{i}" for i in range(6)]
    t1 = mask_importance(model, graph, "s1", names, trials=6, seed=9)
    t2 = mask_importance(model, graph, "s1", names, trials=6, seed=9)
    assert t1.features == t2.features
    assert np.array_equal(t1.scores, t2.scores)


def test_mask_importance_ranks_loaded_feature_first():
    # make the fault head read feature 0 directly: masking it moves the
    # probability most
    model, graph = _model_and_graph()
    model.params["fault_skip"][:] = 0.0
    model.params["fault_skip"][0] = 5.0
    for k in model.params:
        if k.startswith("l0") or k == "fault_w":
            model.params[k][:] = 0.0
    names = [f"f{i}" for i in range(6)]
    graph.features[:, 0] = 2.0   # loaded feature is informative everywhere
    table = mask_importance(model, graph, "h2", names, trials=16, seed=1)
    assert table.features[0] == "f0"
