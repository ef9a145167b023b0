"""Causal tensor assembly and two-stage edge filtering.

Stage one keeps ordered entity pairs whose time-mean strength clears the
retention threshold.  Stage two screens surviving edges for common-cause
artifacts: if i -> j has a common parent k (edges k -> i and k -> j both
survived stage one) and the conditional mutual information of i and j
given k is below the cutoff, the i -> j edge is judged spurious and
removed.  CMI is estimated on equal-frequency bins with a Miller-Madow
bias correction, in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_THRESHOLD = 0.3
DEFAULT_MI_BINS = 8
DEFAULT_MI_CUTOFF = 0.01
LEAD_LAG_MIN_CORR = 0.5
LEAD_LAG_MARGIN = 0.02


@dataclass
class CausalTensor:
    """Per-level and cross-level strength stacks on a shared window axis.

    levels:  level name -> (entity ids, (E, E, T') strengths)
    cross:   (from level, to level) -> (E_from, E_to, T') strengths in [0, 1]
    t_offset: window index of the first strength step (predictor lag).
    """
    levels: dict[str, tuple[list[str], np.ndarray]]
    cross: dict[tuple[str, str], np.ndarray]
    t_offset: int = 0

    def validate(self) -> None:
        for name, (entities, arr) in self.levels.items():
            if arr.shape[0] != arr.shape[1] or arr.shape[0] != len(entities):
                raise ValueError(f"level {name}: strength stack shape {arr.shape} invalid")
            if not np.isfinite(arr).all():
                raise ValueError(f"level {name}: non-finite strengths")
        for pair, arr in self.cross.items():
            if not np.isfinite(arr).all():
                raise ValueError(f"cross {pair}: non-finite strengths")
            if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
                raise ValueError(f"cross {pair}: entries outside [0, 1] after normalization")


@dataclass
class CausalEdge:
    source: str
    target: str
    t: int                  # window index where the edge first clears the threshold
    strength: float         # time-mean strength
    kind: str               # "intra" | "cross"
    per_step: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]
    t_offset: int = 0
    mi_stat: float | None = None

    def to_record(self) -> dict:
        rec = {
            "source": self.source,
            "target": self.target,
            "t": self.t,
            "strength": self.strength,
            "kind": self.kind,
            "t_offset": self.t_offset,
            "per_step": [float(v) for v in self.per_step],
        }
        if self.mi_stat is not None:
            rec["mi_stat"] = self.mi_stat
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "CausalEdge":
        return cls(
            source=rec["source"],
            target=rec["target"],
            t=int(rec["t"]),
            strength=float(rec["strength"]),
            kind=rec["kind"],
            per_step=np.asarray(rec["per_step"], dtype=float),
            t_offset=int(rec.get("t_offset", 0)),
            mi_stat=rec.get("mi_stat"),
        )


@dataclass
class CausalEdgeSet:
    edges: list[CausalEdge]
    threshold: float
    mi_bins: int
    mi_cutoff: float
    removed_by_mi: list[tuple[str, str]] = field(default_factory=list)

    def pairs(self) -> set[tuple[str, str]]:
        return {(e.source, e.target) for e in self.edges}

    def to_records(self) -> list[dict]:
        head = {
            "record": "params",
            "threshold": self.threshold,
            "mi_bins": self.mi_bins,
            "mi_cutoff": self.mi_cutoff,
            "removed_by_mi": [list(p) for p in self.removed_by_mi],
        }
        return [head] + [dict(e.to_record(), record="edge") for e in self.edges]

    @classmethod
    def from_records(cls, records: list[dict]) -> "CausalEdgeSet":
        params = next(r for r in records if r.get("record") == "params")
        edges = [CausalEdge.from_record(r) for r in records if r.get("record") == "edge"]
        return cls(
            edges=edges,
            threshold=float(params["threshold"]),
            mi_bins=int(params["mi_bins"]),
            mi_cutoff=float(params["mi_cutoff"]),
            removed_by_mi=[tuple(p) for p in params.get("removed_by_mi", [])],
        )


# ----------------------------------------------------------------------
# lead-lag orientation gate

def lead_lag_gate(
    x: np.ndarray,
    y: np.ndarray,
    max_lag: int,
    min_corr: float = LEAD_LAG_MIN_CORR,
    margin: float = LEAD_LAG_MARGIN,
) -> bool:
    """True iff x temporally leads y: evidence for a lagged x -> y link.

    Compares the best cross-correlation with x leading by 1..max_lag
    windows against both the instantaneous correlation and the best
    correlation with y leading.  Genuine propagation has a built-in
    delay, so the forward-lagged correlation must win by `margin`;
    instantaneous coupling (e.g. a caller's latency containing its
    callee's within the same window) peaks at lag zero and fails, as
    does the reverse direction.  `min_corr` rejects pairs whose best
    alignment is too weak to orient at all, which covers unrelated
    noise.  Correlation is invariant to affine rescaling, so the gate
    gives identical answers on raw and standardized series.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if max_lag < 1:
        raise ValueError(f"max_lag must be >= 1, got {max_lag}")
    if x.size != y.size:
        raise ValueError("series lengths differ")
    if x.size < max_lag + 2:
        return False

    def corr(a: np.ndarray, b: np.ndarray) -> float:
        sa, sb = a.std(), b.std()
        if sa < 1e-12 or sb < 1e-12:
            return 0.0
        return float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))

    r_zero = corr(x, y)
    r_fwd = max(corr(x[:-lag], y[lag:]) for lag in range(1, max_lag + 1))
    r_rev = max(corr(y[:-lag], x[lag:]) for lag in range(1, max_lag + 1))
    return r_fwd >= min_corr and r_fwd > r_zero + margin and r_fwd > r_rev + margin


# ----------------------------------------------------------------------
# conditional mutual information

def _equal_frequency_bins(x: np.ndarray, bins: int) -> np.ndarray:
    edges = np.quantile(x, np.linspace(0, 1, bins + 1)[1:-1])
    return np.digitize(x, edges)


def _entropy_mm(codes: np.ndarray, n: int) -> float:
    """Plug-in entropy with Miller-Madow bias correction, in nats."""
    _, counts = np.unique(codes, return_counts=True)
    p = counts / n
    h = -float(np.sum(p * np.log(p)))
    return h + (len(counts) - 1) / (2.0 * n)


def conditional_mi(
    x: np.ndarray, y: np.ndarray, z: np.ndarray, bins: int = DEFAULT_MI_BINS
) -> float:
    """I(X; Y | Z) in nats from equal-frequency binned samples."""
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    n = x.size
    if n < bins * 2 or y.size != n or z.size != n:
        raise ValueError("series too short or mismatched for CMI estimation")
    bx = _equal_frequency_bins(x, bins)
    by = _equal_frequency_bins(y, bins)
    bz = _equal_frequency_bins(z, bins)
    # combine codes positionally; bins fit easily into the radix
    radix = bins + 1
    xz = bx * radix + bz
    yz = by * radix + bz
    xyz = (bx * radix + by) * radix + bz
    return (
        _entropy_mm(xz, n) + _entropy_mm(yz, n)
        - _entropy_mm(bz, n) - _entropy_mm(xyz, n)
    )


# ----------------------------------------------------------------------
# filtering

def filter_causal(
    tensor: CausalTensor,
    threshold: float = DEFAULT_THRESHOLD,
    mi_bins: int = DEFAULT_MI_BINS,
    mi_cutoff: float = DEFAULT_MI_CUTOFF,
    series: dict[str, np.ndarray] | None = None,
) -> CausalEdgeSet:
    """Two-stage edge retention over a causal tensor.

    series maps entity id -> the scalar series used for causal mining;
    it powers the stage-two CMI screen.  Without it only the threshold
    stage runs.
    """
    tensor.validate()
    edges: list[CausalEdge] = []

    def onset(per_step: np.ndarray) -> int:
        above = np.nonzero(per_step > threshold)[0]
        idx = int(above[0]) if above.size else int(np.argmax(per_step))
        return idx + tensor.t_offset

    for level in sorted(tensor.levels):
        entities, arr = tensor.levels[level]
        for i, src in enumerate(entities):
            for j, dst in enumerate(entities):
                if i == j:
                    continue
                per_step = arr[i, j]
                mean = float(per_step.mean())
                if mean > threshold:
                    edges.append(CausalEdge(src, dst, onset(per_step), mean,
                                            "intra", per_step, tensor.t_offset))

    level_entities = {lv: ents for lv, (ents, _) in tensor.levels.items()}
    for (lv_a, lv_b) in sorted(tensor.cross):
        arr = tensor.cross[(lv_a, lv_b)]
        ents_a = level_entities[lv_a]
        ents_b = level_entities[lv_b]
        for i, src in enumerate(ents_a):
            for j, dst in enumerate(ents_b):
                per_step = arr[i, j]
                mean = float(per_step.mean())
                if mean > threshold:
                    edges.append(CausalEdge(src, dst, onset(per_step), mean,
                                            "cross", per_step, tensor.t_offset))

    edge_set = CausalEdgeSet(edges, threshold, mi_bins, mi_cutoff)
    if series is None:
        return edge_set

    parents: dict[str, set[str]] = {}
    for e in edges:
        parents.setdefault(e.target, set()).add(e.source)
    kept: list[CausalEdge] = []
    for e in edges:
        common = sorted(
            (parents.get(e.source, set()) & parents.get(e.target, set()))
            - {e.source, e.target}
        )
        verdict_keep = True
        stats = []
        for k in common:
            if not all(name in series for name in (e.source, e.target, k)):
                continue
            cmi = conditional_mi(series[e.source], series[e.target], series[k], mi_bins)
            stats.append(cmi)
            if cmi < mi_cutoff:
                verdict_keep = False
                break
        if stats:
            e.mi_stat = float(min(stats))
        if verdict_keep:
            kept.append(e)
        else:
            edge_set.removed_by_mi.append((e.source, e.target))
    edge_set.edges = kept
    return edge_set
