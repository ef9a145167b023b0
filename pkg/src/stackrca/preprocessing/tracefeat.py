"""Span statistics per analysis window and service.

Spans are grouped into the window containing their start time.  Orphan
spans (parent id missing from their trace) are counted and skipped.
Under heavy sampling (rate below 5%) empty cells are interpolated from
the same service's spans in the surrounding windows and flagged, so a
sparsely sampled service does not read as silent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRACE_FEATURE_NAMES = (
    "latency_mean_ms",
    "latency_p95_ms",
    "error_ratio",
    "depth_max",
    "child_mean",
)
SPARSE_SAMPLING_CUTOFF = 0.05
INTERPOLATION_REACH = 3   # windows on each side


@dataclass
class TraceBlock:
    values: np.ndarray           # (n_windows, n_services, 5)
    feature_names: list[str]
    interpolated: np.ndarray     # bool (n_windows, n_services)
    orphan_count: int
    dropped: int


def _cell_features(durations, statuses, depths, children) -> np.ndarray:
    lat = np.asarray(durations, dtype=float)
    return np.array([
        float(lat.mean()),
        float(np.percentile(lat, 95)),
        float(np.mean([1.0 if s >= 500 else 0.0 for s in statuses])),
        float(max(depths)),
        float(np.mean(children)),
    ])


def build_trace_features(
    spans: list[dict],
    services: list[str],
    n_windows: int,
    window_s: float,
    origin_ts: float,
    sampling_rate: float = 1.0,
) -> TraceBlock:
    if not 0.0 < sampling_rate <= 1.0:
        raise ValueError(f"sampling rate must be in (0, 1], got {sampling_rate}")
    sindex = {s: i for i, s in enumerate(services)}

    # resolve tree structure per trace; spans with unresolvable parents are orphans
    by_trace: dict[str, dict[str, dict]] = {}
    for span in spans:
        by_trace.setdefault(span["trace_id"], {})[span["span_id"]] = span
    depth_of: dict[str, int] = {}
    children_of: dict[str, int] = {}
    orphans = 0
    kept: list[dict] = []
    for trace in by_trace.values():
        for span in trace.values():
            depth, node, ok = 1, span, True
            hops = 0
            while node["parent_id"] is not None:
                parent = trace.get(node["parent_id"])
                hops += 1
                if parent is None or hops > len(trace):
                    ok = False
                    break
                depth += 1
                node = parent
            if not ok:
                orphans += 1
                continue
            sid = span["span_id"]
            depth_of[sid] = depth
            pid = span["parent_id"]
            if pid is not None:
                children_of[pid] = children_of.get(pid, 0) + 1
            kept.append(span)

    cells: dict[tuple[int, int], list[dict]] = {}
    dropped = 0
    for span in kept:
        svc = sindex.get(span["service"])
        w = int((span["start_ms"] / 1000.0 - origin_ts) // window_s)
        if svc is None or not 0 <= w < n_windows:
            dropped += 1
            continue
        cells.setdefault((w, svc), []).append(span)

    values = np.zeros((n_windows, len(services), len(TRACE_FEATURE_NAMES)))
    filled = np.zeros((n_windows, len(services)), dtype=bool)
    interpolated = np.zeros((n_windows, len(services)), dtype=bool)
    for (w, svc), group in cells.items():
        values[w, svc] = _cell_features(
            [s["duration_ms"] for s in group],
            [s["status"] for s in group],
            [depth_of[s["span_id"]] for s in group],
            [children_of.get(s["span_id"], 0) for s in group],
        )
        filled[w, svc] = True

    if sampling_rate < SPARSE_SAMPLING_CUTOFF:
        for svc in range(len(services)):
            for w in range(n_windows):
                if filled[w, svc]:
                    continue
                pool: list[dict] = []
                for dw in range(-INTERPOLATION_REACH, INTERPOLATION_REACH + 1):
                    if dw != 0 and 0 <= w + dw < n_windows:
                        pool.extend(cells.get((w + dw, svc), []))
                if pool:
                    values[w, svc] = _cell_features(
                        [s["duration_ms"] for s in pool],
                        [s["status"] for s in pool],
                        [depth_of[s["span_id"]] for s in pool],
                        [children_of.get(s["span_id"], 0) for s in pool],
                    )
                    interpolated[w, svc] = True

    names = [f"trc.{n}" for n in TRACE_FEATURE_NAMES]
    return TraceBlock(values, names, interpolated, orphans, dropped)
