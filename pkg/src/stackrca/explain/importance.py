"""Mask-based feature importance for flagged entities.

Importance of a feature for an entity's fault probability is measured
by intervention: zero that feature (plus a random subset of the
entity's other features, so credit is shared across correlated
features) in the entity's input row, rerun the model, and record the
drop in the entity's fault probability.  The average drop over many
random subsets, clamped at zero, is the feature's importance score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..graphmodel import GatModel, HetGraph, fault_probabilities

DEFAULT_TRIALS = 32
DEFAULT_MASK_PROB = 0.5


@dataclass
class ImportanceTable:
    entity: str
    features: list[str]
    scores: np.ndarray          # aligned with `features`, sorted descending
    base_prob: float
    trials: int

    def top(self, k: int) -> list[tuple[str, float]]:
        return [(self.features[i], float(self.scores[i])) for i in range(min(k, len(self.features)))]

    def to_record(self) -> dict:
        return {
            "entity": self.entity,
            "base_prob": self.base_prob,
            "trials": self.trials,
            "features": list(self.features),
            "scores": [float(s) for s in self.scores],
        }


def mask_importance(
    model: GatModel,
    graph: HetGraph,
    entity: str,
    feature_names: list[str],
    trials: int = DEFAULT_TRIALS,
    mask_prob: float = DEFAULT_MASK_PROB,
    seed: int = 0,
) -> ImportanceTable:
    """Score every input feature of `entity` by masked probability drop."""
    if entity not in graph.nodes:
        raise ValueError(f"unknown entity {entity!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_feats = graph.features.shape[1]
    if len(feature_names) != n_feats:
        raise ValueError(
            f"feature_names has {len(feature_names)} entries, features have {n_feats}"
        )
    node = graph.nodes.index(entity)
    rng = np.random.default_rng(np.random.SeedSequence([seed, node, 0x3A5]))
    base_prob = float(fault_probabilities(model, graph)[node])

    totals = np.zeros(n_feats)
    for _ in range(trials):
        extra = rng.random(n_feats) < mask_prob
        subset = graph.features.copy()
        subset[node, extra] = 0.0
        # Features inside the random subset are already zero there, so
        # the subset's own probability serves them all; each remaining
        # feature gets one batch row with itself zeroed on top of the
        # subset, and the whole trial runs as a single batched forward.
        outside = np.flatnonzero(~extra)
        batch = np.broadcast_to(subset, (len(outside) + 1,) + subset.shape).copy()
        batch[np.arange(len(outside)), node, outside] = 0.0
        probs = fault_probabilities(model, graph, batch)[:, node]
        p_extra = probs[-1]
        totals[extra] += base_prob - p_extra
        totals[outside] += base_prob - probs[:-1]
    scores = np.maximum(totals / trials, 0.0)

    order = sorted(range(n_feats), key=lambda i: (-scores[i], feature_names[i]))
    return ImportanceTable(
        entity=entity,
        features=[feature_names[i] for i in order],
        scores=scores[order],
        base_prob=base_prob,
        trials=trials,
    )
