"""Diagnosis quality metrics and latency measurement.

Conventions for empty sets: localization with both predicted and true
sets empty scores a perfect (1, 1, 1); classification with no labeled
entities scores (1, 1); chain comparison with both edge sets empty
scores 1.  Feature-importance accuracy is skipped (None) when the
ground truth annotates no key features.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from statistics import mean

from .runio import format_float

FIA_TOP_K = 3


def localization_prf(
    predicted: set[str], actual: set[str]
) -> tuple[float, float, float]:
    """Precision, recall, F1 of the predicted faulty-entity set."""
    if not predicted and not actual:
        return 1.0, 1.0, 1.0
    tp = len(predicted & actual)
    precision = tp / len(predicted) if predicted else 0.0
    recall = tp / len(actual) if actual else 0.0
    if precision + recall == 0.0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


def type_f1(
    predicted: dict[str, str], actual: dict[str, str]
) -> tuple[float, float]:
    """(macro F1, micro F1) of fault-type labels over labeled entities.

    Only entities present in `actual` are scored; a missing prediction
    counts as a false negative of the true class.  Classes are the union
    of predicted and true labels on those entities.
    """
    if not actual:
        return 1.0, 1.0
    entities = sorted(actual)
    pairs = [(predicted.get(e), actual[e]) for e in entities]
    classes = sorted({c for p, a in pairs for c in (p, a) if c is not None})
    f1s = []
    micro_tp = 0
    for cls in classes:
        tp = sum(1 for p, a in pairs if p == cls and a == cls)
        fp = sum(1 for p, a in pairs if p == cls and a != cls)
        fn = sum(1 for p, a in pairs if p != cls and a == cls)
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom else 0.0)
        micro_tp += tp
    macro = mean(f1s) if f1s else 1.0
    micro = micro_tp / len(pairs)
    return macro, micro


def causal_chain_accuracy(
    predicted_edges: set[tuple[str, str]], actual_edges: set[tuple[str, str]]
) -> float:
    """F1 between directed edge sets, timing ignored."""
    if not predicted_edges and not actual_edges:
        return 1.0
    tp = len(predicted_edges & actual_edges)
    denom = 2 * tp + len(predicted_edges - actual_edges) + len(actual_edges - predicted_edges)
    return 2 * tp / denom if denom else 0.0


def feature_importance_accuracy(
    ranked_features: list[str], annotated: set[str], top_k: int = FIA_TOP_K
) -> float | None:
    """|top-k ∩ annotated| / |annotated|; None when nothing is annotated."""
    if not annotated:
        return None
    top = set(ranked_features[:top_k])
    return len(top & annotated) / len(annotated)


@dataclass
class LatencyStats:
    per_run_s: list[float]

    @property
    def mean_s(self) -> float:
        return mean(self.per_run_s)

    @property
    def per_minute(self) -> float:
        m = self.mean_s
        return 60.0 / m if m > 0 else float("inf")


def measure_latency(fn, repeats: int = 3) -> LatencyStats:
    """Wall-clock stats for `fn()` over `repeats` runs."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return LatencyStats(times)


@dataclass
class EvalResult:
    """Aggregated metrics for one or more diagnosed scenarios.

    `values` is an ordered mapping of metric name to value; wall-clock
    figures never belong here (they go in the timings file) so the
    serialized form is reproducible byte for byte.
    """
    values: dict[str, float | int | None] = field(default_factory=dict)

    def put(self, key: str, value: float | int | None) -> None:
        self.values[key] = value

    def lines(self) -> list[str]:
        out = []
        for key in self.values:
            val = self.values[key]
            if val is None:
                rendered = "n/a"
            elif isinstance(val, bool):
                rendered = str(int(val))
            elif isinstance(val, int):
                rendered = str(val)
            else:
                rendered = format_float(float(val))
            out.append(f"{key} = {rendered}")
        return out

    def render(self) -> str:
        return "\n".join(self.lines()) + "\n"

    @classmethod
    def parse(cls, text: str) -> "EvalResult":
        values: dict[str, float | int | None] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or "=" not in line:
                continue
            key, _, raw = line.partition("=")
            raw = raw.strip()
            if raw == "n/a":
                values[key.strip()] = None
            else:
                num = float(raw)
                values[key.strip()] = int(num) if num.is_integer() and "." not in raw else num
        return cls(values)
