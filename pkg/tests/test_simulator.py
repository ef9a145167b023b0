"""Simulator invariants: nominal behavior, fault signatures, causal
soundness (no effect before its cause), and determinism."""

from __future__ import annotations

import numpy as np
import pytest

from stackrca.preprocessing import denoise
from stackrca.scenarios import generate_scenario
from stackrca.telemetry import METRIC_SPECS, TIMEOUT_MS, simulate_telemetry
from stackrca.topology import Level, default_topology

DURATION = 600.0
TICK = 1.0
INJECTION = 300.0


def _simulate(template: str, seed: int):
    topo = default_topology()
    scenario, truth = generate_scenario(topo, template, seed, injection_s=INJECTION)
    bundle = simulate_telemetry(topo, scenario, DURATION, TICK, seed)
    return topo, bundle, truth


def _metric_series(bundle, entity: str, metric: str) -> np.ndarray:
    vals = [
        (r["ts"], r["value"])
        for r in bundle.metrics
        if r["entity"] == entity and r["metric"] == metric
    ]
    vals.sort()
    return np.array([v for _, v in vals])


def test_nominal_metrics_stay_near_baseline():
    topo, bundle, truth = _simulate("nominal", seed=3)
    assert truth.faulty_entities == []
    for level, specs in METRIC_SPECS.items():
        for entity in topo.entities(level):
            for metric, (mu, sigma, lo, hi) in specs.items():
                series = _metric_series(bundle, entity, metric)
                assert series.size == int(DURATION / TICK)
                if sigma == 0.0:
                    assert np.all(series == mu), (entity, metric)
                    continue
                # the series mean concentrates around the baseline and no
                # sample strays implausibly far for Gaussian noise
                assert abs(series.mean() - mu) < 0.5 * sigma, (entity, metric)
                assert np.all(np.abs(series - mu) < 6.0 * sigma), (entity, metric)


def test_nominal_has_no_error_logs_or_failed_spans():
    _, bundle, _ = _simulate("nominal", seed=4)
    assert all(r["severity"] != "ERROR" for r in bundle.logs)
    assert all(r["status"] == 200 for r in bundle.spans)


def test_memory_leak_ramps_monotonically():
    _, bundle, truth = _simulate("host-memory-leak", seed=5)
    root = truth.chain[0][1] if truth.chain else truth.faulty_entities[0]
    series = _metric_series(bundle, root, "mem_util")
    smooth = denoise(series, window=9)
    post = smooth[int(INJECTION) :]
    # consecutive 60 s block means strictly increase while the leak grows
    blocks = [post[i : i + 60].mean() for i in range(0, 240, 60)]
    assert all(b2 > b1 for b1, b2 in zip(blocks, blocks[1:])), blocks
    # and the tail sits clearly above the pre-fault mean
    pre = series[: int(INJECTION)]
    assert post[-60:].mean() > pre.mean() + 5 * pre.std()


def test_fault_effects_start_after_injection():
    _, bundle, truth = _simulate("host-cpu-spike", seed=6)
    root = truth.faulty_entities[0]
    mu, sigma, *_ = METRIC_SPECS[Level.HOST]["cpu_util"]
    series = _metric_series(bundle, root, "cpu_util")
    pre = series[: int(INJECTION) - 5]
    assert abs(pre.mean() - mu) < 0.5 * sigma
    assert np.all(np.abs(pre - mu) < 6.0 * sigma)
    assert series[int(INJECTION) + 10 :].mean() > mu + 3.0 * sigma


def test_interface_timeout_spans_hit_timeout_ceiling():
    _, bundle, truth = _simulate("service-interface-timeout", seed=7)
    root = truth.chain[0][1] if truth.chain else truth.faulty_entities[0]
    affected = [
        r
        for r in bundle.spans
        if r["service"] == root and r["start_ms"] >= INJECTION * 1000.0
    ]
    assert affected, "no spans on the faulty service during the fault"
    slow = [r for r in affected if r["duration_ms"] >= TIMEOUT_MS]
    assert len(slow) >= 0.9 * len(affected)


def test_faulty_entities_emit_error_logs():
    _, bundle, truth = _simulate("pod-restart-loop", seed=8)
    root = truth.faulty_entities[0]
    errors = [
        r
        for r in bundle.logs
        if r["entity"] == root and r["severity"] == "ERROR" and r["ts"] >= INJECTION
    ]
    assert errors
    # and none before the injection
    early = [
        r for r in bundle.logs if r["severity"] == "ERROR" and r["ts"] < INJECTION
    ]
    assert early == []


def test_ground_truth_chain_is_topology_consistent():
    topo, bundle, truth = _simulate("host-cpu-spike", seed=9)
    assert truth.chain, "cascading template must record a chain"
    for _, src, dst in truth.chain:
        src_level, dst_level = topo.level_of(src), topo.level_of(dst)
        if src_level == Level.HOST:
            assert dst in topo.pods_on(src)
        elif src_level == Level.POD:
            assert topo.service_of(src) == dst
        else:
            assert src in topo.callees_of(dst)
    # chain sources precede their targets' own onsets
    times = [t for t, _, _ in truth.chain]
    assert times == sorted(times)


def test_simulation_is_deterministic():
    _, b1, _ = _simulate("pod-memory-surge", seed=10)
    _, b2, _ = _simulate("pod-memory-surge", seed=10)
    assert b1.metrics == b2.metrics
    assert b1.logs == b2.logs
    assert b1.spans == b2.spans


def test_different_seeds_differ():
    _, b1, _ = _simulate("nominal", seed=1)
    _, b2, _ = _simulate("nominal", seed=2)
    assert b1.metrics != b2.metrics
