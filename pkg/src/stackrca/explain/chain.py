"""Causal chain construction: root plus strongest propagation paths.

Starting from the top-ranked entity, grow a tree over the retained
causal edges by repeatedly attaching the strongest edge that reaches a
new entity (ties broken lexically).  The tree is then pruned to the
branches that lead to flagged entities, and edges are reported in onset
order so the chain reads as a timeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..causal import CausalEdge, CausalEdgeSet


@dataclass(frozen=True)
class ChainEdge:
    time_s: float
    source: str
    target: str
    strength: float

    def to_record(self) -> dict:
        return {
            "time_s": self.time_s,
            "source": self.source,
            "target": self.target,
            "strength": self.strength,
        }


@dataclass
class CausalChain:
    root: str | None
    edges: list[ChainEdge] = field(default_factory=list)
    unreachable: list[str] = field(default_factory=list)

    @property
    def entities(self) -> list[str]:
        """Root plus every entity on a retained branch, in chain order."""
        if self.root is None:
            return []
        seen = [self.root]
        for edge in self.edges:
            for node in (edge.source, edge.target):
                if node not in seen:
                    seen.append(node)
        return seen

    def to_record(self) -> dict:
        return {
            "root": self.root,
            "edges": [e.to_record() for e in self.edges],
            "unreachable": list(self.unreachable),
        }


def build_causal_chain(
    edge_set: CausalEdgeSet,
    ranking: list[tuple[str, float]],
    flagged: list[str],
    window_origin_s: float = 0.0,
    stride_s: float = 1.0,
) -> CausalChain:
    """Strongest-path tree from the top-ranked entity to flagged entities.

    Edge times convert onset window indices to seconds via
    `window_origin_s + t * stride_s`.  Flagged entities not reachable
    from the root over retained edges are listed as `unreachable`.
    """
    if not ranking:
        return CausalChain(root=None, unreachable=sorted(set(flagged)))
    root = ranking[0][0]

    adjacency: dict[str, list[CausalEdge]] = {}
    for edge in edge_set.edges:
        adjacency.setdefault(edge.source, []).append(edge)

    # Prim-style growth: strongest edge out of the tree wins each round.
    in_tree = {root}
    parent_edge: dict[str, CausalEdge] = {}
    while True:
        best = None
        for node in sorted(in_tree):
            for edge in adjacency.get(node, []):
                if edge.target in in_tree:
                    continue
                key = (-edge.strength, edge.source, edge.target)
                if best is None or key < best[0]:
                    best = (key, edge)
        if best is None:
            break
        edge = best[1]
        in_tree.add(edge.target)
        parent_edge[edge.target] = edge

    # Keep only branches that end in a flagged entity.
    keep: set[str] = set()
    reached_flags = [f for f in flagged if f in in_tree and f != root]
    for flag in reached_flags:
        node = flag
        while node != root and node not in keep:
            keep.add(node)
            node = parent_edge[node].source
    edges = sorted(
        (
            ChainEdge(
                time_s=window_origin_s + parent_edge[node].t * stride_s,
                source=parent_edge[node].source,
                target=parent_edge[node].target,
                strength=float(parent_edge[node].strength),
            )
            for node in keep
        ),
        key=lambda c: (c.time_s, c.source, c.target),
    )
    unreachable = sorted(set(flagged) - in_tree - {root})
    return CausalChain(root=root, edges=edges, unreachable=unreachable)
