"""Preprocessing oracles: windowing, normalization, feature derivation,
log template mining, deviation representation, and modality fusion."""

from __future__ import annotations

import math

import numpy as np
import pytest

from stackrca.config import RunConfig
from stackrca.pipeline import build_tensor, run_simulate
from stackrca.preprocessing import (
    METRIC_FEATURE_NAMES,
    anomaly_series,
    build_feature_tensor,
    denoise,
    derive_metric_features,
    deviation_tensor,
    encode_log_features,
    fuse_modalities,
    level_entities,
    load_tensor,
    mine_log_templates,
    normalize_zscore,
    save_tensor,
    segment_windows,
)
from stackrca.runio import read_jsonl
from stackrca.topology import default_topology


# ----------------------------------------------------------------------
# scalar series helpers

def test_zscore_three_points():
    # mean 2, population std sqrt(2/3): (1-2)/0.81650 = -1.224744...
    out = normalize_zscore(np.array([1.0, 2.0, 3.0]))
    assert np.allclose(out, [-1.2247448713915890, 0.0, 1.2247448713915890])


def test_zscore_constant_series_is_zero():
    out = normalize_zscore(np.full(5, 3.3))
    assert np.all(out == 0.0)


def test_denoise_centered_average():
    # centered window of 3; the spike spreads to 3/3 = 1.0 at each
    # covered position, partial windows at the edges
    out = denoise(np.array([0.0, 0.0, 3.0, 0.0, 0.0]), window=3)
    assert np.allclose(out, [0.0, 1.0, 1.0, 1.0, 0.0])


def test_segment_windows_counts():
    # 20 samples at 1 Hz, 5 s window, 5 s stride -> 4 full windows
    wins = segment_windows(20, window_s=5.0, stride_s=5.0, tick_s=1.0)
    assert wins == [(0, 5), (5, 10), (10, 15), (15, 20)]


def test_segment_windows_overlapping_stride():
    wins = segment_windows(10, window_s=4.0, stride_s=2.0, tick_s=1.0)
    assert wins == [(0, 4), (2, 6), (4, 8), (6, 10)]


def test_metric_features_slope_and_growth():
    window = np.array([1.0, 2.0, 3.0, 4.0])
    feats = derive_metric_features(window, tick_s=1.0, prev_mean=1.0)
    named = dict(zip(METRIC_FEATURE_NAMES, feats))
    assert named["mean"] == pytest.approx(2.5)
    assert named["min"] == 1.0 and named["max"] == 4.0
    assert named["last"] == 4.0
    assert named["range"] == 3.0
    # least-squares slope of a perfect ramp is its step per tick
    assert named["slope"] == pytest.approx(1.0)
    # (last - first) / window duration: (4 - 1) / 4
    assert named["growth_rate"] == pytest.approx(0.75)
    # relative shift of this window's mean vs the previous window's
    assert named["change_rate"] == pytest.approx((2.5 - 1.0) / 1.0)


# ----------------------------------------------------------------------
# log template mining

def test_template_merge_on_variable_token():
    table = mine_log_templates(
        [
            "connect to 10.0.0.1 failed",
            "connect to 10.0.0.2 failed",
            "disk check ok",
        ]
    )
    patterns = {t.pattern for t in table.templates}
    assert "connect to <*> failed" in patterns
    merged = next(t for t in table.templates if t.pattern == "connect to <*> failed")
    assert merged.count == 2


def test_template_assignment_is_partition():
    messages = [
        "connect to 10.0.0.1 failed",
        "request req-1 served in 10 ms",
        "connect to 10.0.0.9 failed",
        "request req-2 served in 12 ms",
    ]
    table = mine_log_templates(messages)
    assert len(table.assignments) == len(messages)
    valid = {t.template_id for t in table.templates}
    assert all(a in valid for a in table.assignments)
    assert sum(t.count for t in table.templates) == len(messages)


def test_tfidf_idf_formula():
    # 4 windows, template appears in 2 of them -> idf = ln(4/2)
    records = [
        {"entity": "e1", "ts": 1.0, "message": "cache miss for key alpha"},
        {"entity": "e1", "ts": 11.0, "message": "cache miss for key beta"},
    ]
    table = mine_log_templates([r["message"] for r in records])
    block, dropped = encode_log_features(
        table, records, entities=["e1"], n_windows=4, window_s=5.0, origin_ts=0.0
    )
    assert dropped == 0
    tid = table.assignments[0]
    assert block.idf[tid] == pytest.approx(math.log(4 / 2))


# ----------------------------------------------------------------------
# deviation representation

def _toy_tensor():
    """8 windows x 1 entity x 2 features with a known step in feature 0."""
    rng = np.random.default_rng(0)
    values = np.zeros((8, 1, 2))
    values[:, 0, 0] = [10.0, 10.0, 10.0, 10.0, 16.0, 16.0, 16.0, 16.0]
    values[:, 0, 1] = 5.0  # constant everywhere
    topo = default_topology()
    # build via the real simulator is overkill here; craft a minimal tensor
    from stackrca.preprocessing import FeatureTensor

    return FeatureTensor(
        values=values,
        entities=["h1"],
        levels=["host"],
        feature_names=["met.a", "met.b"],
        blocks={"metric": (0, 2), "log": (2, 2), "trace": (2, 2)},
        window_s=5.0,
        stride_s=5.0,
        tick_s=1.0,
        origin_ts=0.0,
        counts={},
    )


def test_deviation_tensor_reference_window_step():
    tensor = _toy_tensor()
    dev = deviation_tensor(tensor, reference_frac=0.25)
    # reference = first 2 windows (flat at 10): ref std 0 -> fallback to
    # full-series std; full std of [10*4, 16*4] is 3.0; (16-10)/3 = 2.0
    assert dev[0, 0, 0] == pytest.approx(0.0)
    assert dev[-1, 0, 0] == pytest.approx(2.0)
    # totally flat feature deviates by exactly zero everywhere
    assert np.all(dev[:, 0, 1] == 0.0)


def test_deviation_tensor_signed():
    tensor = _toy_tensor()
    tensor.values[:, 0, 0] = [10, 10, 10, 10, 4, 4, 4, 4]  # downward step
    dev = deviation_tensor(tensor, reference_frac=0.25)
    assert dev[-1, 0, 0] < 0


def test_anomaly_series_top_fraction_mean():
    tensor = _toy_tensor()
    anom = anomaly_series(tensor, reference_frac=0.25, top_fraction=0.5)
    # 2 features, top 50% -> k=1: score is max |deviation| per window
    dev = np.abs(deviation_tensor(tensor, reference_frac=0.25))
    assert np.allclose(anom["host"][:, 0], dev.max(axis=2)[:, 0])


def test_fuse_modalities_weights_sum_to_one():
    tensor = _toy_tensor()
    fused, weights = fuse_modalities(tensor, mode="attention")
    assert fused.shape == tensor.values.shape
    assert np.allclose(weights.sum(axis=-1), 1.0, atol=1e-9)
    fused_eq, weights_eq = fuse_modalities(tensor, mode="equal")
    assert np.allclose(weights_eq, 1.0 / 3.0)


# ----------------------------------------------------------------------
# end-to-end tensor construction on simulated telemetry

@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    cfg = RunConfig(seed=11)
    run_dir = tmp_path_factory.mktemp("sim")
    bundle, truth = run_simulate(cfg, str(run_dir))
    return cfg, str(run_dir), bundle, truth


def test_tensor_shape_and_totality(simulated):
    cfg, run_dir, bundle, truth = simulated
    topo = default_topology()
    tensor = build_tensor(
        cfg,
        read_jsonl(f"{run_dir}/metrics.jsonl"),
        read_jsonl(f"{run_dir}/logs.jsonl"),
        read_jsonl(f"{run_dir}/spans.jsonl"),
        topo,
    )
    n_windows = len(
        segment_windows(int(cfg.duration_s / cfg.tick_s), cfg.window_s, cfg.stride_s, cfg.tick_s)
    )
    assert tensor.values.shape[0] == n_windows
    assert tensor.values.shape[1] == len(topo.entities())
    assert np.all(np.isfinite(tensor.values))
    # every ingested record is either kept in a window or accounted as dropped
    for modality, counts in tensor.counts.items():
        assert counts["kept"] + counts["dropped"] == counts["ingested"], modality


def test_tensor_save_load_roundtrip(simulated, tmp_path):
    cfg, run_dir, bundle, truth = simulated
    topo = default_topology()
    tensor = build_tensor(
        cfg,
        read_jsonl(f"{run_dir}/metrics.jsonl"),
        read_jsonl(f"{run_dir}/logs.jsonl"),
        read_jsonl(f"{run_dir}/spans.jsonl"),
        topo,
    )
    save_tensor(tensor, str(tmp_path / "t.bin"), str(tmp_path / "t.json"))
    loaded = load_tensor(str(tmp_path / "t.bin"), str(tmp_path / "t.json"))
    assert np.array_equal(loaded.values, tensor.values)
    assert loaded.entities == tensor.entities
    assert loaded.feature_names == tensor.feature_names
    assert loaded.blocks == tensor.blocks


def test_level_entities_partition(simulated):
    cfg, run_dir, bundle, truth = simulated
    topo = default_topology()
    tensor = build_tensor(
        cfg,
        read_jsonl(f"{run_dir}/metrics.jsonl"),
        read_jsonl(f"{run_dir}/logs.jsonl"),
        read_jsonl(f"{run_dir}/spans.jsonl"),
        topo,
    )
    combined = (
        level_entities(tensor, "host")
        + level_entities(tensor, "pod")
        + level_entities(tensor, "service")
    )
    assert sorted(combined) == sorted(tensor.entities)
