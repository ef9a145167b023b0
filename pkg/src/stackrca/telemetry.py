"""Seeded telemetry generation: metrics, logs and trace spans.

The generator walks the scenario event list in activation order.  Every
fault event owns an "excess" process on the tick grid (a random ramp,
a persistent elevated level, or a counter) layered on top of the nominal
baseline-plus-noise signal.  Cascade targets inherit a lag-shifted copy
of their source's normalized excess blended with a process of their own,
so downstream symptoms track upstream fluctuations the way a real
dependency would.

Nominal noise is clipped at three standard deviations: healthy series
stay inside baseline +/- 3 sigma by construction.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .scenarios import FaultScenario, FaultType
from .topology import Level, Topology

TIMEOUT_MS = 500.0          # span duration at/above this counts as a timeout
ERROR_STATUS = 500
OK_STATUS = 200


class TelemetryError(ValueError):
    pass


def _stream(seed: int, *labels: str) -> np.random.Generator:
    # stable per-purpose rng streams; generation order never matters
    digest = hashlib.blake2s("/".join(labels).encode(), digest_size=6).digest()
    return np.random.default_rng(np.random.SeedSequence([seed, int.from_bytes(digest, "big")]))


# ----------------------------------------------------------------------
# metric universe

# name -> (baseline, noise std, clamp lo, clamp hi)
METRIC_SPECS: dict[Level, dict[str, tuple[float, float, float, float]]] = {
    Level.HOST: {
        "cpu_util": (30.0, 2.0, 0.0, 100.0),
        "mem_util": (40.0, 1.5, 0.0, 100.0),
        "disk_util": (50.0, 1.0, 0.0, 100.0),
        "net_drop_rate": (0.5, 0.15, 0.0, 100.0),
        "io_wait_ms": (5.0, 1.0, 0.0, 10000.0),
        "fd_open": (300.0, 15.0, 0.0, 65536.0),
    },
    Level.POD: {
        "cpu_usage": (25.0, 2.0, 0.0, 100.0),
        "mem_usage": (35.0, 1.5, 0.0, 100.0),
        "restart_count": (0.0, 0.0, 0.0, 10000.0),
        "throttle_ratio": (0.05, 0.02, 0.0, 1.0),
    },
    Level.SERVICE: {
        "latency_ms": (80.0, 6.0, 0.0, 60000.0),
        "error_count": (0.2, 0.1, 0.0, 1e6),
        "request_rate": (50.0, 4.0, 0.0, 1e6),
    },
}


@dataclass(frozen=True)
class ExcessSpec:
    kind: str        # ramp | level | drop | counter
    scale: float     # nominal plateau of the excess in metric units
    rise_s: float = 600.0
    cap_ratio: float = 1.4


# primary symptom channel per fault type
FAULT_EFFECTS: dict[FaultType, dict[str, ExcessSpec]] = {
    FaultType.CPU_SPIKE: {"cpu_util": ExcessSpec("level", 45.0)},
    FaultType.MEMORY_LEAK: {"mem_util": ExcessSpec("ramp", 54.0, rise_s=900.0, cap_ratio=1.0)},
    FaultType.DISK_SATURATION: {"disk_util": ExcessSpec("ramp", 45.0, rise_s=900.0, cap_ratio=1.0)},
    FaultType.NETWORK_PACKET_LOSS: {"net_drop_rate": ExcessSpec("level", 9.0)},
    FaultType.IO_LATENCY: {"io_wait_ms": ExcessSpec("level", 60.0)},
    FaultType.FD_EXHAUSTION: {"fd_open": ExcessSpec("ramp", 4000.0, rise_s=800.0)},
    FaultType.RESTART_LOOP: {"restart_count": ExcessSpec("counter", 10.0)},
    FaultType.MEMORY_SURGE: {"mem_usage": ExcessSpec("ramp", 50.0, rise_s=700.0, cap_ratio=1.0)},
    FaultType.THROTTLING: {"throttle_ratio": ExcessSpec("level", 0.55)},
    FaultType.INTERFACE_TIMEOUT: {"latency_ms": ExcessSpec("level", 520.0)},
    FaultType.CALL_FAILURE: {"error_count": ExcessSpec("level", 14.0)},
    FaultType.ERROR_RATE_SURGE: {"error_count": ExcessSpec("level", 20.0)},
    FaultType.THROUGHPUT_COLLAPSE: {"request_rate": ExcessSpec("drop", 35.0)},
}

_NOMINAL_LOGS: dict[Level, list[tuple[str, float]]] = {
    Level.HOST: [("node health probe ok cpu {a} mem {b}", 0.04)],
    Level.POD: [("liveness probe succeeded in {a} ms", 0.05)],
    Level.SERVICE: [
        ("request {r} served in {a} ms", 0.15),
        ("cache refresh completed entries {a}", 0.02),
    ],
}

_FAULT_LOGS: dict[FaultType, tuple[str, str]] = {
    FaultType.CPU_SPIKE: ("WARN", "cpu runqueue length {a} sustained"),
    FaultType.MEMORY_LEAK: ("ERROR", "memory allocation failed for block {a}"),
    FaultType.DISK_SATURATION: ("ERROR", "disk usage above threshold at {a} pct"),
    FaultType.NETWORK_PACKET_LOSS: ("WARN", "packet retransmission count {a} exceeded"),
    FaultType.IO_LATENCY: ("WARN", "io wait elevated {a} ms on device sda"),
    FaultType.FD_EXHAUSTION: ("ERROR", "too many open files limit {a} reached"),
    FaultType.RESTART_LOOP: ("ERROR", "container exited with code {a} restarting"),
    FaultType.MEMORY_SURGE: ("ERROR", "oom killer invoked with score {a}"),
    FaultType.THROTTLING: ("WARN", "cpu throttled for {a} ms in last period"),
    FaultType.INTERFACE_TIMEOUT: ("ERROR", "upstream call to {s} timed out after {a} ms"),
    FaultType.CALL_FAILURE: ("ERROR", "call to {s} failed with status 503"),
    FaultType.ERROR_RATE_SURGE: ("ERROR", "internal error processing request {r}"),
    FaultType.THROUGHPUT_COLLAPSE: ("WARN", "request queue saturated depth {a}"),
}

_FAULT_LOG_PEAK_RATE = 0.3   # per second at full excess


@dataclass
class TelemetryBundle:
    metrics: list[dict]
    logs: list[dict]
    spans: list[dict]
    duration_s: float
    tick_s: float
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.counts:
            self.counts = {
                "metrics": len(self.metrics),
                "logs": len(self.logs),
                "spans": len(self.spans),
            }


# ----------------------------------------------------------------------
# excess processes

def _gen_excess(spec: ExcessSpec, n: int, tick: float, rng: np.random.Generator) -> np.ndarray:
    """Normalized excess (plateau ~ 1.0) over n active ticks."""
    if n <= 0:
        return np.zeros(0)
    if spec.kind == "ramp":
        # bursty nondecreasing climb; gamma shape < 1 gives stepwise growth
        steps = rng.gamma(shape=0.1, scale=10.0 * tick / spec.rise_s, size=n)
        out = np.minimum(np.cumsum(steps), spec.cap_ratio)
    elif spec.kind in ("level", "drop"):
        phi = 0.95 ** tick
        shocks = rng.standard_normal(n) * 1.75 * np.sqrt(tick)
        out = np.empty(n)
        prev = 0.0
        drive = (1.0 - phi)
        for i in range(n):
            prev = phi * prev + drive * (1.0 + shocks[i])
            out[i] = prev
        out = np.clip(out, 0.0, spec.cap_ratio)
    elif spec.kind == "counter":
        # restart every ~45 s with jitter; normalized by spec.scale restarts
        gaps = rng.uniform(30.0, 60.0, size=max(4, int(n * tick / 30.0) + 2))
        times = np.cumsum(gaps)
        count = np.searchsorted(times, np.arange(1, n + 1) * tick)
        out = count / spec.scale
    else:
        raise ValueError(f"unknown excess kind {spec.kind!r}")
    return out


def _primary_metric(fault: FaultType) -> str:
    return next(iter(FAULT_EFFECTS[fault]))


# ----------------------------------------------------------------------
# generation

def simulate_telemetry(
    topology: Topology,
    scenario: FaultScenario,
    duration_s: float,
    tick_s: float,
    seed: int,
) -> TelemetryBundle:
    """Render a scenario into metric, log and span records.

    Deterministic: identical arguments produce identical record lists.
    Raises TelemetryError when the run is too short for the cascade to
    complete or the tick is non-positive.
    """
    if tick_s <= 0:
        raise TelemetryError(f"tick must be positive, got {tick_s}")
    if duration_s < tick_s:
        raise TelemetryError("duration shorter than one tick")
    last_activation = max((e.start_s for e in scenario.events), default=0.0)
    if scenario.events and duration_s < last_activation + 60.0:
        raise TelemetryError(
            f"duration {duration_s}s too short: cascade completes at {last_activation}s"
            " and needs at least 60s of post-fault signal"
        )

    n = int(round(duration_s / tick_s))
    ticks = np.arange(n) * tick_s
    seed = int(seed)

    events = sorted(scenario.events, key=lambda e: (e.start_s, e.entity))
    rule_by_target = {r.target: r for r in scenario.rules}
    norm_signals: dict[str, np.ndarray] = {}   # entity -> full-length normalized excess
    excess: dict[tuple[str, str], np.ndarray] = {}

    for ev in events:
        idx0 = min(n, int(np.ceil(ev.start_s / tick_s)))
        active = n - idx0
        spec = FAULT_EFFECTS[ev.fault][_primary_metric(ev.fault)]
        rng = _stream(seed, "excess", ev.entity, ev.fault.value)
        own = _gen_excess(spec, active, tick_s, rng)
        rule = rule_by_target.get(ev.entity)
        if rule is not None and rule.source in norm_signals:
            # inherit the upstream fluctuation, shifted by the rule lag
            shift = int(round(rule.lag_s / tick_s))
            src = norm_signals[rule.source]
            shifted = np.zeros(n)
            if shift < n:
                shifted[shift:] = src[: n - shift]
            norm = np.zeros(n)
            norm[idx0:] = rule.gain * shifted[idx0:] + (1.0 - rule.gain) * own
        else:
            norm = np.zeros(n)
            norm[idx0:] = ev.magnitude * own
        if spec.kind == "ramp":
            norm = np.maximum.accumulate(norm)   # keep monotone after blending
        norm_signals[ev.entity] = norm
        for metric, mspec in FAULT_EFFECTS[ev.fault].items():
            sign = -1.0 if mspec.kind == "drop" else 1.0
            arr = excess.setdefault((ev.entity, metric), np.zeros(n))
            arr += sign * mspec.scale * norm

    # --- metrics -------------------------------------------------------
    metrics: list[dict] = []
    for level in (Level.HOST, Level.POD, Level.SERVICE):
        for entity in topology.entities(level):
            for metric, (base, std, lo, hi) in METRIC_SPECS[level].items():
                rng = _stream(seed, "metric", entity, metric)
                noise = rng.standard_normal(n) * std
                if std > 0:
                    np.clip(noise, -3.0 * std, 3.0 * std, out=noise)
                series = base + noise + excess.get((entity, metric), 0.0)
                np.clip(series, lo, hi, out=series)
                metrics.extend(
                    {"ts": float(ts), "entity": entity, "metric": metric, "value": float(v)}
                    for ts, v in zip(ticks, series)
                )
    metrics.sort(key=lambda r: (r["ts"], r["entity"], r["metric"]))

    # --- logs ----------------------------------------------------------
    logs: list[dict] = []
    for level in (Level.HOST, Level.POD, Level.SERVICE):
        for entity in topology.entities(level):
            for li, (template, rate) in enumerate(_NOMINAL_LOGS[level]):
                rng = _stream(seed, "log", entity, str(li))
                count = rng.poisson(rate * duration_s)
                times = np.sort(rng.uniform(0.0, duration_s, size=count))
                for ts in times:
                    msg = template.format(
                        a=int(rng.integers(1, 1000)),
                        b=int(rng.integers(1, 100)),
                        r="req-%05d" % rng.integers(100000),
                    )
                    logs.append({"ts": float(ts), "entity": entity, "severity": "INFO", "message": msg})

    for ev in events:
        severity, template = _FAULT_LOGS[ev.fault]
        norm = norm_signals.get(ev.entity)
        if norm is None:
            continue
        rng = _stream(seed, "faultlog", ev.entity, ev.fault.value)
        peak = _FAULT_LOG_PEAK_RATE * 1.2
        count = rng.poisson(peak * (duration_s - ev.start_s))
        times = np.sort(rng.uniform(ev.start_s, duration_s, size=count))
        accept = rng.uniform(size=count)
        for ts, u in zip(times, accept):
            local = norm[min(n - 1, int(ts / tick_s))]
            if u * 1.2 > min(local, 1.2):
                continue
            callee = topology.callees_of(ev.entity) if ev.entity in topology.services else []
            msg = template.format(
                a=int(rng.integers(1, 5000)),
                r="req-%05d" % rng.integers(100000),
                s=callee[0] if callee else "upstream",
            )
            logs.append({"ts": float(ts), "entity": ev.entity, "severity": severity, "message": msg})
    logs.sort(key=lambda r: (r["ts"], r["entity"], r["message"]))

    # --- spans ---------------------------------------------------------
    active_faults: dict[str, list[tuple[float, FaultType]]] = {}
    for ev in events:
        if ev.entity in topology.services:
            active_faults.setdefault(ev.entity, []).append((ev.start_s, ev.fault))

    def faults_at(service: str, ts: float) -> set[FaultType]:
        return {f for start, f in active_faults.get(service, []) if ts >= start}

    spans: list[dict] = []
    span_rng = _stream(seed, "spans")
    trace_no = 0
    for entry in topology.entry_services():
        t = float(span_rng.exponential(2.0))
        while t < duration_s:
            trace_no += 1
            trace_id = f"t{trace_no:07d}"
            counter = [0]

            def emit(service: str, start_ms: float, parent: str | None) -> float:
                counter[0] += 1
                span_id = f"{trace_id}.{counter[0]}"
                base_work = 15.0 + 10.0 * span_rng.random()
                child_ms = 0.0
                child_start = start_ms + 2.0
                for callee in topology.callees_of(service):
                    d = emit(callee, child_start, span_id)
                    child_ms += d + 1.0
                    child_start += d + 1.0
                duration = base_work + child_ms
                here = faults_at(service, start_ms / 1000.0)
                status = OK_STATUS
                if FaultType.INTERFACE_TIMEOUT in here:
                    duration = max(duration, TIMEOUT_MS * (1.05 + 0.2 * span_rng.random()))
                if FaultType.CALL_FAILURE in here and span_rng.random() < 0.85:
                    status = ERROR_STATUS
                if FaultType.ERROR_RATE_SURGE in here and span_rng.random() < 0.4:
                    status = ERROR_STATUS
                spans.append({
                    "trace_id": trace_id, "span_id": span_id,
                    "parent_id": parent, "service": service,
                    "start_ms": round(start_ms, 3), "duration_ms": round(duration, 3),
                    "status": status,
                })
                return duration

            emit(entry, t * 1000.0, None)
            t += float(span_rng.exponential(2.0))
    spans.sort(key=lambda r: (r["start_ms"], r["trace_id"], r["span_id"]))

    return TelemetryBundle(metrics=metrics, logs=logs, spans=spans,
                           duration_s=duration_s, tick_s=tick_s)
