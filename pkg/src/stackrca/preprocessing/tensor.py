"""Aligned multimodal feature tensor and modal-attention fusion.

The tensor is (window, entity, feature) with the feature axis laid out
as three contiguous blocks: metric summaries, log template encodings,
trace statistics.  Every entity has a row in every window; blocks an
entity has no data for stay zero.  Construction tracks how many raw
records were ingested, kept and dropped per modality, and the total
always reconciles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..runio import DataError
from ..topology import Level, Topology
from .logmining import encode_log_features, mine_log_templates
from .series import (
    METRIC_FEATURE_NAMES,
    denoise,
    derive_metric_features,
    normalize_zscore,
    segment_windows,
)
from .tracefeat import build_trace_features

MODALITIES = ("metric", "log", "trace")


@dataclass
class FeatureTensor:
    values: np.ndarray                     # (T, E, F) float64, finite
    entities: list[str]
    levels: list[str]                      # level of each entity, aligned
    feature_names: list[str]
    blocks: dict[str, tuple[int, int]]     # modality -> [start, stop) on feature axis
    window_s: float
    stride_s: float
    tick_s: float
    origin_ts: float
    counts: dict[str, dict[str, int]] = field(default_factory=dict)
    trace_interpolated: np.ndarray | None = None

    @property
    def n_windows(self) -> int:
        return self.values.shape[0]

    def entity_index(self, entity: str) -> int:
        return self.entities.index(entity)

    def block_slice(self, modality: str) -> slice:
        start, stop = self.blocks[modality]
        return slice(start, stop)

    def validate(self) -> None:
        if not np.isfinite(self.values).all():
            raise DataError("feature tensor contains non-finite values")
        t, e, f = self.values.shape
        if e != len(self.entities) or f != len(self.feature_names):
            raise DataError("tensor shape disagrees with entity/feature lists")
        for modality, counters in self.counts.items():
            if counters["kept"] + counters["dropped"] != counters["ingested"]:
                raise DataError(f"{modality} record accounting does not reconcile")


def _window_starts(n_ticks: int, window_s: float, stride_s: float, tick_s: float):
    return segment_windows(n_ticks, window_s, stride_s, tick_s)


def build_feature_tensor(
    metrics: list[dict],
    logs: list[dict],
    spans: list[dict],
    topology: Topology,
    window_s: float = 5.0,
    stride_s: float = 5.0,
    tick_s: float = 1.0,
    denoise_window: int = 3,
    top_k_templates: int = 5,
    template_similarity: float = 0.5,
    template_depth: int = 4,
    trace_sampling_rate: float = 1.0,
) -> FeatureTensor:
    """Turn raw telemetry records into the aligned feature tensor."""
    if not metrics:
        raise DataError("no metric records; cannot establish the window grid")

    entities = (
        topology.entities(Level.HOST)
        + topology.entities(Level.POD)
        + topology.entities(Level.SERVICE)
    )
    levels = [topology.level_of(e).value for e in entities]
    eindex = {e: i for i, e in enumerate(entities)}

    origin = min(r["ts"] for r in metrics)
    last = max(r["ts"] for r in metrics)
    n_ticks = int(round((last - origin) / tick_s)) + 1

    metric_names = sorted({r["metric"] for r in metrics})
    mindex = {m: j for j, m in enumerate(metric_names)}

    raw = np.full((n_ticks, len(entities), len(metric_names)), np.nan)
    m_kept = m_dropped = 0
    for r in metrics:
        ent = eindex.get(r["entity"])
        k = int(round((r["ts"] - origin) / tick_s))
        if ent is None or not 0 <= k < n_ticks:
            m_dropped += 1
            continue
        raw[k, ent, mindex[r["metric"]]] = r["value"]
        m_kept += 1

    windows = _window_starts(n_ticks, window_s, stride_s, tick_s)
    n_win = len(windows)

    # metric block: 12 derived features per metric name
    met_values = np.zeros((n_win, len(entities), len(metric_names), len(METRIC_FEATURE_NAMES)))
    for ent in range(len(entities)):
        for j in range(len(metric_names)):
            series = raw[:, ent, j]
            present = np.isfinite(series)
            if not present.any():
                continue
            if not present.all():
                # forward-fill short gaps, then backfill the head
                idx = np.where(present, np.arange(n_ticks), -1)
                np.maximum.accumulate(idx, out=idx)
                series = np.where(idx >= 0, series[np.maximum(idx, 0)], np.nan)
                first = np.argmax(np.isfinite(series))
                series = np.where(np.isfinite(series), series, series[first])
            z = normalize_zscore(denoise(series, denoise_window))
            prev_mean = None
            for w, (a, b) in enumerate(windows):
                feats = derive_metric_features(z[a:b], tick_s, prev_mean)
                met_values[w, ent, j] = feats
                prev_mean = feats[0]
    met_values = met_values.reshape(n_win, len(entities), -1)
    met_names = [f"met.{m}.{s}" for m in metric_names for s in METRIC_FEATURE_NAMES]

    # log block
    table = mine_log_templates(
        [r["message"] for r in logs], template_similarity, template_depth
    )
    # logs and spans land in the window whose stride slot contains them
    log_block, log_dropped = encode_log_features(
        table, logs, entities, n_win, stride_s, origin, top_k_templates,
    )

    # trace block: service columns only, zero elsewhere
    services = topology.entities(Level.SERVICE)
    trace_block = build_trace_features(
        spans, services, n_win, stride_s, origin, trace_sampling_rate
    )
    trc_values = np.zeros((n_win, len(entities), len(trace_block.feature_names)))
    interpolated = np.zeros((n_win, len(entities)), dtype=bool)
    for si, svc in enumerate(services):
        trc_values[:, eindex[svc], :] = trace_block.values[:, si, :]
        interpolated[:, eindex[svc]] = trace_block.interpolated[:, si]

    values = np.concatenate([met_values, log_block.values, trc_values], axis=2)
    names = met_names + log_block.feature_names + [n for n in trace_block.feature_names]
    blocks = {
        "metric": (0, len(met_names)),
        "log": (len(met_names), len(met_names) + len(log_block.feature_names)),
        "trace": (len(met_names) + len(log_block.feature_names), len(names)),
    }
    counts = {
        "metric": {"ingested": len(metrics), "kept": m_kept, "dropped": m_dropped},
        "log": {"ingested": len(logs), "kept": len(logs) - log_dropped, "dropped": log_dropped},
        "trace": {
            "ingested": len(spans),
            "kept": len(spans) - trace_block.orphan_count - trace_block.dropped,
            "dropped": trace_block.orphan_count + trace_block.dropped,
        },
    }

    tensor = FeatureTensor(
        values=np.nan_to_num(values, nan=0.0, posinf=0.0, neginf=0.0),
        entities=entities,
        levels=levels,
        feature_names=names,
        blocks=blocks,
        window_s=window_s,
        stride_s=stride_s,
        tick_s=tick_s,
        origin_ts=origin,
        counts=counts,
        trace_interpolated=interpolated,
    )
    tensor.validate()
    return tensor


# ----------------------------------------------------------------------
# modal attention fusion

def fuse_modalities(
    tensor: FeatureTensor, mode: str = "attention"
) -> tuple[np.ndarray, np.ndarray]:
    """Fuse per-feature deviation scores with modality attention weights.

    Each feature is first expressed as its signed deviation from the
    leading reference period (see ``deviation_tensor``), which puts
    metrics, log statistics, and trace statistics on one common
    evidence scale per run — nominal behaviour sits near zero whatever
    the raw units were.  The weight of a modality is then the softmax
    (across the three blocks) of the mean absolute deviation of its
    features: a modality that departs harder from the entity's own
    baseline gets more say.  mode="equal" bypasses the scoring and
    applies 1/3 everywhere.

    Returns (fused tensor, weights) with weights shaped (T, E, 3) in
    MODALITIES order, every row summing to 1.
    """
    if mode not in ("attention", "equal"):
        raise ValueError(f"unknown fusion mode {mode!r}")
    t, e, f = tensor.values.shape
    dev = deviation_tensor(tensor)
    scores = np.zeros((t, e, len(MODALITIES)))
    for m, modality in enumerate(MODALITIES):
        block = dev[:, :, tensor.block_slice(modality)]
        scores[:, :, m] = np.abs(block).mean(axis=2) if block.shape[2] else 0.0
    if mode == "equal":
        weights = np.full((t, e, len(MODALITIES)), 1.0 / len(MODALITIES))
    else:
        shifted = scores - scores.max(axis=2, keepdims=True)
        expo = np.exp(shifted)
        weights = expo / expo.sum(axis=2, keepdims=True)
    fused = np.empty_like(dev)
    for m, modality in enumerate(MODALITIES):
        sl = tensor.block_slice(modality)
        fused[:, :, sl] = dev[:, :, sl] * weights[:, :, m:m + 1]
    return fused, weights


ANOMALY_REFERENCE_FRAC = 0.25


def deviation_tensor(
    tensor: FeatureTensor, reference_frac: float = ANOMALY_REFERENCE_FRAC
) -> np.ndarray:
    """Signed per-feature deviation from the leading reference period.

    Each feature value is re-expressed as (value - reference mean) /
    reference std, where the reference statistics come from the first
    `reference_frac` of windows.  Scoring against the leading windows
    rather than the whole run keeps a sustained fault from normalizing
    itself away: a step change scored against full-run statistics caps
    out near one standard deviation no matter how large it is, and its
    sign can even invert between runs.  Features that are flat during
    the reference period fall back to their full-run scale (so, e.g.,
    an error counter that only moves during the fault still registers);
    features flat over the whole run score zero.  Returns an array
    shaped like ``tensor.values``.
    """
    if not 0.0 < reference_frac <= 1.0:
        raise ValueError(f"reference_frac must be in (0, 1], got {reference_frac}")
    n_ref = max(2, int(round(tensor.values.shape[0] * reference_frac)))
    ref = tensor.values[:n_ref]
    mean = ref.mean(axis=0, keepdims=True)
    scale = ref.std(axis=0, keepdims=True)
    fallback = tensor.values.std(axis=0, keepdims=True)
    scale = np.where(scale < 1e-8, fallback, scale)
    scale[scale < 1e-8] = np.inf      # constant feature -> deviation 0
    return (tensor.values - mean) / scale


ANOMALY_TOP_FRACTION = 0.1


def anomaly_series(
    tensor: FeatureTensor,
    reference_frac: float = ANOMALY_REFERENCE_FRAC,
    top_fraction: float = ANOMALY_TOP_FRACTION,
) -> dict[str, np.ndarray]:
    """Per-level entity anomaly intensity matrices (T x entities of level).

    The intensity of an entity in a window is the mean of the largest
    `top_fraction` of its absolute per-feature deviations from the
    leading reference period (see ``deviation_tensor``).  Averaging only
    the strongest deviations keeps a fault that touches a handful of the
    entity's features (most of them do) from being diluted away by the
    silent majority, while still requiring several features to move
    before the intensity rises — a single freak spike cannot carry the
    average alone.  This is the scalar series the temporal causal stage
    operates on.
    """
    if not 0.0 < top_fraction <= 1.0:
        raise ValueError(f"top_fraction must be in (0, 1], got {top_fraction}")
    dev = np.abs(deviation_tensor(tensor, reference_frac))
    k = max(1, int(round(dev.shape[2] * top_fraction)))
    z = np.partition(dev, -k, axis=2)[:, :, -k:].mean(axis=2)
    out: dict[str, np.ndarray] = {}
    for level in ("host", "pod", "service"):
        cols = [i for i, lv in enumerate(tensor.levels) if lv == level]
        out[level] = z[:, cols]
    return out


def level_entities(tensor: FeatureTensor, level: str) -> list[str]:
    return [e for e, lv in zip(tensor.entities, tensor.levels) if lv == level]


# ----------------------------------------------------------------------
# serialization

SCHEMA_VERSION = 1


def save_tensor(tensor: FeatureTensor, bin_path: str, schema_path: str) -> None:
    data = np.ascontiguousarray(tensor.values, dtype="<f8")
    with open(bin_path, "wb") as fh:
        fh.write(data.tobytes())
    lines = [
        f"version {SCHEMA_VERSION}",
        "dtype float64-le",
        "shape {} {} {}".format(*tensor.values.shape),
        f"window_s {tensor.window_s!r}",
        f"stride_s {tensor.stride_s!r}",
        f"tick_s {tensor.tick_s!r}",
        f"origin_ts {tensor.origin_ts!r}",
    ]
    for modality in MODALITIES:
        a, b = tensor.blocks[modality]
        lines.append(f"block {modality} {a} {b}")
    for modality in MODALITIES:
        c = tensor.counts.get(modality, {"ingested": 0, "kept": 0, "dropped": 0})
        lines.append(f"counts {modality} {c['ingested']} {c['kept']} {c['dropped']}")
    for entity, level in zip(tensor.entities, tensor.levels):
        lines.append(f"entity {entity} {level}")
    for name in tensor.feature_names:
        lines.append(f"feature {name}")
    with open(schema_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_tensor(bin_path: str, schema_path: str) -> FeatureTensor:
    import os

    if not os.path.exists(schema_path) or not os.path.exists(bin_path):
        raise DataError("tensor artifacts missing")
    entities: list[str] = []
    levels: list[str] = []
    features: list[str] = []
    blocks: dict[str, tuple[int, int]] = {}
    counts: dict[str, dict[str, int]] = {}
    shape = None
    meta: dict[str, float] = {}
    with open(schema_path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "shape":
                shape = tuple(int(x) for x in parts[1:])
            elif parts[0] in ("window_s", "stride_s", "tick_s", "origin_ts"):
                meta[parts[0]] = float(parts[1])
            elif parts[0] == "block":
                blocks[parts[1]] = (int(parts[2]), int(parts[3]))
            elif parts[0] == "counts":
                counts[parts[1]] = {
                    "ingested": int(parts[2]), "kept": int(parts[3]), "dropped": int(parts[4]),
                }
            elif parts[0] == "entity":
                entities.append(parts[1])
                levels.append(parts[2])
            elif parts[0] == "feature":
                features.append(parts[1])
    if shape is None or len(shape) != 3:
        raise DataError(f"schema {schema_path} lacks a valid shape")
    data = np.fromfile(bin_path, dtype="<f8")
    if data.size != shape[0] * shape[1] * shape[2]:
        raise DataError("tensor binary size disagrees with schema shape")
    tensor = FeatureTensor(
        values=data.reshape(shape),
        entities=entities,
        levels=levels,
        feature_names=features,
        blocks=blocks,
        window_s=meta["window_s"],
        stride_s=meta["stride_s"],
        tick_s=meta["tick_s"],
        origin_ts=meta["origin_ts"],
        counts=counts,
    )
    tensor.validate()
    return tensor
