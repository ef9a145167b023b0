"""Pipeline-level behavior: structural propagation edges, ranking
fallbacks, end-to-end diagnosis artifacts, resume, and the CLI."""

from __future__ import annotations

import os
from dataclasses import replace

import numpy as np
import pytest

from stackrca import runio
from stackrca.cli import main as cli_main
from stackrca.config import RunConfig, parse_manifest, render_config
from stackrca.graphmodel import Prediction
from stackrca.pipeline import (
    _rank_entities,
    evaluate_run,
    run_diagnose,
    run_simulate,
    transmission_edges,
)
from stackrca.topology import default_topology

from conftest import QUICKSTART_SEED


def _prediction(flag_probs: dict[str, float]) -> Prediction:
    topo = default_topology()
    nodes = topo.entities()
    probs = np.array([flag_probs.get(n, 0.01) for n in nodes])
    flagged = [n for n in nodes if flag_probs.get(n, 0.0) > 0.5]
    levels = [topo.level_of(n).value for n in nodes]
    return Prediction(nodes, probs, flagged, {}, levels)


# ----------------------------------------------------------------------
# structural propagation edges

def test_transmission_edges_follow_deployment_relations():
    topo = default_topology()
    pred = _prediction({"h1": 0.9, "p1": 0.8, "s1": 0.7})
    edges = transmission_edges(topo, pred, {"h1": 3}, existing=set())
    got = {(e.source, e.target) for e in edges}
    # h1 hosts p1, p1 backs s1; no flagged call neighbors
    assert got == {("h1", "p1"), ("p1", "s1")}
    by_pair = {(e.source, e.target): e for e in edges}
    assert by_pair[("h1", "p1")].strength == pytest.approx(0.8)  # min of ends
    assert by_pair[("h1", "p1")].t == 3
    assert all(e.kind == "deploy" for e in edges)


def test_transmission_edges_callee_to_caller():
    topo = default_topology()
    # s1 calls s2: a failing callee s2 degrades its caller s1
    pred = _prediction({"s2": 0.9, "s1": 0.8})
    edges = transmission_edges(topo, pred, {}, existing=set())
    assert {(e.source, e.target) for e in edges} == {("s2", "s1")}


def test_transmission_edges_skip_unflagged_and_existing():
    topo = default_topology()
    pred = _prediction({"h1": 0.9, "p1": 0.8})
    edges = transmission_edges(topo, pred, {}, existing={("h1", "p1")})
    assert edges == []
    pred2 = _prediction({"h1": 0.9})   # endpoint missing
    assert transmission_edges(topo, pred2, {}, existing=set()) == []


def test_transmission_edges_cross_level_ablation():
    topo = default_topology()
    pred = _prediction({"h1": 0.9, "p1": 0.8, "s1": 0.8, "s2": 0.9})
    edges = transmission_edges(
        topo, pred, {}, existing=set(), include_cross_level=False
    )
    # only the same-level call relation survives the ablation
    assert {(e.source, e.target) for e in edges} == {("s2", "s1")}


# ----------------------------------------------------------------------
# ranking fallbacks

def test_ranking_empty_without_flags():
    from stackrca.causal import CausalEdgeSet

    cfg = RunConfig()
    pred = _prediction({})
    edge_set = CausalEdgeSet(edges=[], threshold=0.3, mi_bins=8, mi_cutoff=0.01)
    assert _rank_entities(cfg, edge_set, pred, pred.nodes) == []


def test_ranking_falls_back_to_flag_confidence():
    from stackrca.causal import CausalEdgeSet

    cfg = RunConfig()
    pred = _prediction({"p3": 0.9, "h2": 0.7})
    edge_set = CausalEdgeSet(edges=[], threshold=0.3, mi_bins=8, mi_cutoff=0.01)
    ranking = _rank_entities(cfg, edge_set, pred, pred.nodes)
    assert [r[0] for r in ranking] == ["p3", "h2"]
    assert sum(s for _, s in ranking) == pytest.approx(1.0)


# ----------------------------------------------------------------------
# end-to-end diagnosis artifacts

def test_diagnose_writes_all_artifacts(diagnosed_run):
    run_dir, diag = diagnosed_run
    for name in (
        runio.TENSOR_FILE,
        runio.SCHEMA_FILE,
        runio.EDGES_FILE,
        runio.PREDICTION_FILE,
        runio.REPORT_JSON_FILE,
        runio.REPORT_TEXT_FILE,
        runio.CHAIN_CSV_FILE,
        runio.TIMINGS_FILE,
    ):
        assert os.path.exists(os.path.join(run_dir, name)), name


def test_diagnose_localizes_quickstart_cascade(diagnosed_run):
    run_dir, diag = diagnosed_run
    truth = runio.read_jsonl(os.path.join(run_dir, runio.TRUTH_FILE))[0]
    root = truth["chain"][0][1]
    assert diag.chain.root == root
    assert set(truth["faulty_entities"]) == set(diag.prediction.flagged)
    got_edges = {(e.source, e.target) for e in diag.chain.edges}
    want_edges = {(a, b) for _, a, b in truth["chain"]}
    assert got_edges == want_edges
    # the report leads with the root's importance table
    assert diag.report.importances
    assert diag.report.importances[0].entity == root


def test_diagnose_metrics_per_run(diagnosed_run):
    run_dir, _ = diagnosed_run
    ev = evaluate_run(run_dir)
    assert ev["root_top1"] == 1
    assert ev["localization_f1"] == 1.0
    assert ev["causal_chain_accuracy"] == 1.0


def test_resume_reuses_artifacts(diagnosed_run, model_dir):
    run_dir, diag = diagnosed_run
    cfg = replace(RunConfig(), seed=QUICKSTART_SEED)
    resumed = run_diagnose(cfg, run_dir, model_dir, out_dir=run_dir, resume=True)
    assert resumed.chain.root == diag.chain.root
    assert [
        (e.source, e.target) for e in resumed.chain.edges
    ] == [(e.source, e.target) for e in diag.chain.edges]


def test_manifest_round_trip(diagnosed_run):
    run_dir, _ = diagnosed_run
    text = runio.read_text(os.path.join(run_dir, runio.MANIFEST_FILE))
    cfg = parse_manifest(text)
    assert render_config(cfg) == text


def test_mismatched_model_dimensions_raise(tmp_path, model_dir):
    from stackrca.runio import DataError

    cfg = RunConfig(window_s=10.0, stride_s=10.0, seed=QUICKSTART_SEED)
    run_dir = tmp_path / "narrow"
    run_simulate(cfg, str(run_dir))
    with pytest.raises(DataError):
        run_diagnose(cfg, str(run_dir), model_dir, out_dir=str(run_dir))


# ----------------------------------------------------------------------
# CLI

def test_cli_simulate_diagnose_evaluate(tmp_path, model_dir, capsys):
    run_dir = str(tmp_path / "cli_run")
    assert cli_main(["simulate", "--out", run_dir, "--seed", str(QUICKSTART_SEED)]) == 0
    assert (
        cli_main(["diagnose", "--data", run_dir, "--model-dir", model_dir,
                  "--seed", str(QUICKSTART_SEED)])
        == 0
    )
    assert cli_main(["evaluate", "--run", run_dir]) == 0
    out = capsys.readouterr().out
    assert "root_top1" in out
    assert cli_main(["report", "--run", run_dir]) == 0


def test_cli_templates_lists_catalog(capsys):
    assert cli_main(["templates"]) == 0
    out = capsys.readouterr().out
    assert "host-cpu-spike" in out and "nominal" in out
