"""Root-cause ranking by PageRank on the reversed causal graph.

Edges are reversed before ranking so that score flows from effects back
to their causes: an entity accumulates importance from everything it
(transitively) disturbed.  Per-step edge strengths are collapsed into a
single weight by exponential recency weighting, half-life one third of
the analysis horizon, so influence active late in the run counts more
than influence that died out.
"""

from __future__ import annotations

import numpy as np

from .filtering import CausalEdge

DEFAULT_DAMPING = 0.85
DEFAULT_TOL = 1e-9


def recency_weight(per_step: np.ndarray, half_life: float) -> float:
    """Exponentially weighted mean with the newest step at weight 1."""
    s = np.clip(np.asarray(per_step, dtype=float), 0.0, None)
    if s.size == 0:
        return 0.0
    if half_life <= 0:
        return float(s.mean())
    ages = (s.size - 1) - np.arange(s.size)
    w = 0.5 ** (ages / half_life)
    return float((w * s).sum() / w.sum())


def pagerank_rank(
    edges: list[CausalEdge],
    entities: list[str],
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOL,
    max_iter: int = 1000,
    half_life: float | None = None,
    personalization: dict[str, float] | None = None,
) -> list[tuple[str, float]]:
    """Rank entities as root-cause candidates; scores sum to 1.

    entities fixes the node universe (isolated entities keep teleport
    mass).  half_life defaults to a third of the longest per-step
    horizon among the edges.  personalization biases the teleport
    distribution (e.g. toward nodes with detected symptoms) so that
    walk mass enters at the symptoms and drains backward to their
    causes; dangling mass returns to the same distribution.  Entities
    missing from the mapping get zero teleport; a missing or all-zero
    mapping falls back to uniform.  Ties break by entity id.
    """
    if not 0.0 < damping < 1.0:
        raise ValueError(f"damping must be in (0, 1), got {damping}")
    nodes = sorted(set(entities) | {e.source for e in edges} | {e.target for e in edges})
    n = len(nodes)
    if n == 0:
        return []
    index = {e: i for i, e in enumerate(nodes)}

    if half_life is None:
        horizon = max((e.per_step.size for e in edges if e.per_step is not None), default=0)
        half_life = horizon / 3.0 if horizon else 0.0

    # reversed: weight[target][source] viewed as target -> source flow
    weight = np.zeros((n, n))
    for e in edges:
        if e.per_step is not None and e.per_step.size:
            w = recency_weight(e.per_step, half_life)
        else:
            w = max(0.0, e.strength)
        weight[index[e.target], index[e.source]] += w

    out_sum = weight.sum(axis=1)
    transition = np.zeros((n, n))
    nonzero = out_sum > 0
    transition[nonzero] = weight[nonzero] / out_sum[nonzero, None]

    teleport = np.full(n, 1.0 / n)
    if personalization is not None:
        bias = np.array([max(0.0, personalization.get(node, 0.0)) for node in nodes])
        if bias.sum() > 0:
            teleport = bias / bias.sum()
    scores = teleport.copy()
    for _ in range(max_iter):
        dangling = scores[~nonzero].sum()
        new = (1.0 - damping) * teleport + damping * (
            transition.T @ scores + dangling * teleport
        )
        if np.abs(new - scores).sum() < tol:
            scores = new
            break
        scores = new
    scores = scores / scores.sum()
    order = sorted(range(n), key=lambda i: (-scores[i], nodes[i]))
    return [(nodes[i], float(scores[i])) for i in order]
