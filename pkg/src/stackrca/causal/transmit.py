"""Cross-level causal transmission.

Intra-level strengths travel to an adjacent level through the entity
association matrix: per time step the (E1, E1, T) strength stack is
multiplied by the (E1, E2) association degrees, yielding an (E1, E2, T)
cross-level stack.  Entries are then scaled into [0, 1] so stacks from
different level pairs are comparable and a fixed retention threshold is
meaningful.
"""

from __future__ import annotations

import numpy as np

_FLAT_SPREAD = 1e-12


def minmax_normalize(array: np.ndarray) -> np.ndarray:
    """Global [0, 1] rescale; constant input collapses to zeros."""
    lo = float(array.min())
    hi = float(array.max())
    if hi - lo < _FLAT_SPREAD:
        return np.zeros_like(array)
    return (array - lo) / (hi - lo)


def joint_scale_strengths(arrays: list[np.ndarray]) -> list[np.ndarray]:
    """Scale non-negative strength stacks jointly into [0, 1].

    The shared scale is the largest *time-mean* strength of any entity
    pair across all stacks, and per-step values above it are clipped to
    one.  Anchoring on a time-mean rather than the raw maximum keeps a
    single outlier step (loss ratios are heavy-tailed) from flattening
    every sustained strength toward zero: the strongest pair keeps a
    time-mean near one, weaker pairs land proportionally below it.
    Stacks with no positive signal at all collapse to zeros.
    """
    if not arrays:
        return []
    scale = 0.0
    for arr in arrays:
        if arr.size == 0 or arr.shape[2] == 0:
            continue
        scale = max(scale, float(arr.mean(axis=2).max()))
    if scale < _FLAT_SPREAD:
        return [np.zeros_like(a) for a in arrays]
    return [np.clip(a / scale, 0.0, 1.0) for a in arrays]


def cross_level_causal(
    intra: np.ndarray, relation: np.ndarray, normalize: bool = True
) -> np.ndarray:
    """Transmit (E1, E1, T) intra-level strengths through an (E1, E2)
    association matrix; returns an (E1, E2, T) cross-level stack."""
    intra = np.asarray(intra, dtype=float)
    relation = np.asarray(relation, dtype=float)
    if intra.ndim != 3 or intra.shape[0] != intra.shape[1]:
        raise ValueError(f"intra stack must be (E, E, T), got {intra.shape}")
    if relation.ndim != 2 or relation.shape[0] != intra.shape[0]:
        raise ValueError(
            f"association matrix {relation.shape} does not match {intra.shape[0]} entities"
        )
    cross = np.einsum("ikt,kj->ijt", intra, relation)
    if normalize:
        cross = joint_scale_strengths([np.clip(cross, 0.0, None)])[0]
    return cross
