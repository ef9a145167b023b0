"""Heterogeneous diagnosis graph: typed nodes, typed weighted edges."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..causal.filtering import CausalEdge
from ..topology import Level, Topology

NODE_TYPES = ("host", "pod", "service")
EDGE_TYPES = ("deploy", "member", "call", "causal")
SELF_LOOP_TYPE = len(EDGE_TYPES)   # attention slot for isolated-node self loops


@dataclass
class HetGraph:
    nodes: list[str]
    node_types: np.ndarray        # (N,) int index into NODE_TYPES
    features: np.ndarray          # (N, D) float
    edges: list[tuple[int, int, int, float]]   # (src, dst, etype, weight)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def node_index(self, name: str) -> int:
        return self.nodes.index(name)

    def validate(self) -> None:
        seen = set()
        for src, dst, etype, weight in self.edges:
            key = (src, dst, etype)
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            if not 0 <= src < self.n_nodes or not 0 <= dst < self.n_nodes:
                raise ValueError(f"edge endpoint out of range: {key}")
            if etype == EDGE_TYPES.index("causal") and not 0.0 <= weight <= 1.0:
                raise ValueError(f"causal edge weight {weight} outside [0, 1]")
        if not np.isfinite(self.features).all():
            raise ValueError("non-finite node features")

    def neighbor_entries(self) -> list[list[tuple[int, int]]]:
        """Per node: sorted (neighbor, edge type) entries, both directions.

        A node with no edges at all gets a single self entry so attention
        always has something to normalize over.
        """
        entries: list[set[tuple[int, int]]] = [set() for _ in range(self.n_nodes)]
        for src, dst, etype, _ in self.edges:
            entries[dst].add((src, etype))
            entries[src].add((dst, etype))
        out: list[list[tuple[int, int]]] = []
        for v, ent in enumerate(entries):
            if not ent:
                out.append([(v, SELF_LOOP_TYPE)])
            else:
                out.append(sorted(ent))
        return out


def build_hetgraph(
    topology: Topology,
    node_features: dict[str, np.ndarray],
    causal_edges: list[CausalEdge] | None = None,
) -> HetGraph:
    """Assemble the typed graph from topology relations plus causal edges.

    Structural edges carry the association degree as weight; causal edge
    weights are the time-mean strengths clamped into [0, 1].  Parallel
    causal edges between the same pair keep the strongest weight.
    """
    nodes = (
        topology.entities(Level.HOST)
        + topology.entities(Level.POD)
        + topology.entities(Level.SERVICE)
    )
    index = {n: i for i, n in enumerate(nodes)}
    types = np.array([NODE_TYPES.index(topology.level_of(n).value) for n in nodes])

    dims = {len(np.asarray(v).ravel()) for v in node_features.values()}
    if len(dims) > 1:
        raise ValueError("node feature vectors must share one dimension")
    dim = dims.pop() if dims else 0
    feats = np.zeros((len(nodes), dim))
    for name, vec in node_features.items():
        if name in index:
            feats[index[name]] = np.asarray(vec, dtype=float).ravel()

    edges: dict[tuple[int, int, int], float] = {}
    for pod, host in sorted(topology.pods.items()):
        edges[(index[host], index[pod], EDGE_TYPES.index("deploy"))] = (
            topology.association_degree(host, pod)
        )
    for svc in sorted(topology.services):
        for pod in topology.services[svc]:
            edges[(index[pod], index[svc], EDGE_TYPES.index("member"))] = (
                topology.association_degree(pod, svc)
            )
    for caller, callee in sorted(topology.calls):
        edges[(index[caller], index[callee], EDGE_TYPES.index("call"))] = (
            topology.association_degree(caller, callee)
        )
    for e in causal_edges or []:
        if e.source not in index or e.target not in index:
            continue
        key = (index[e.source], index[e.target], EDGE_TYPES.index("causal"))
        w = min(1.0, max(0.0, e.strength))
        edges[key] = max(edges.get(key, 0.0), w)

    graph = HetGraph(
        nodes=nodes,
        node_types=types,
        features=feats,
        edges=[(s, d, t, w) for (s, d, t), w in sorted(edges.items())],
    )
    graph.validate()
    return graph
