"""Human- and machine-readable diagnostic reports.

The text report has four sections — fault overview, root cause
location, propagation path, repair suggestions — and is rendered with
fixed float formatting so identical inputs produce identical bytes.
The same content is emitted as JSON records and the propagation path
as a CSV table suitable for plotting.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from ..graphmodel import Prediction
from ..scenarios import FAULT_CATALOG, FaultType
from ..topology import Level, Topology
from .chain import CausalChain
from .importance import ImportanceTable

REPORT_VERSION = 1
TOP_RANKED_SHOWN = 3
TOP_FEATURES_SHOWN = 3

REPAIR_SUGGESTIONS: dict[FaultType, str] = {
    FaultType.CPU_SPIKE: "identify runaway processes on the host and cap or reschedule them",
    FaultType.MEMORY_LEAK: "locate the leaking process, restart it, and schedule a heap inspection",
    FaultType.DISK_SATURATION: "free or expand disk capacity and throttle heavy writers",
    FaultType.NETWORK_PACKET_LOSS: "check NIC, cabling, and switch ports; reroute traffic off the host",
    FaultType.IO_LATENCY: "inspect storage health and rebalance I/O-heavy workloads",
    FaultType.FD_EXHAUSTION: "raise file-descriptor limits and fix descriptor leaks in long-lived daemons",
    FaultType.RESTART_LOOP: "inspect container exit codes and roll back the most recent deployment",
    FaultType.MEMORY_SURGE: "raise the pod memory limit or roll back the change that increased usage",
    FaultType.THROTTLING: "increase the pod CPU quota or reduce its concurrency",
    FaultType.INTERFACE_TIMEOUT: "raise downstream timeouts temporarily and fix the slow dependency",
    FaultType.CALL_FAILURE: "inspect dependency health and recent releases; enable retries with backoff",
    FaultType.ERROR_RATE_SURGE: "roll back the latest release and inspect error logs for the failing path",
    FaultType.THROUGHPUT_COLLAPSE: "check upstream admission and restart starved workers",
}


@dataclass
class DiagnosticReport:
    run_id: str
    prediction: Prediction
    ranking: list[tuple[str, float]]
    chain: CausalChain
    importances: list[ImportanceTable] = field(default_factory=list)
    topology: Topology | None = None

    # ------------------------------------------------------------------
    def _level_of(self, entity: str) -> str:
        if self.topology is not None:
            return self.topology.level_of(entity).value
        if entity in self.prediction.nodes:
            return self.prediction.levels[self.prediction.nodes.index(entity)]
        return "unknown"

    def _fault_name(self, entity: str) -> str | None:
        if entity not in self.prediction.type_dist:
            return None
        level = self._level_of(entity)
        try:
            catalog = FAULT_CATALOG[Level(level)]
        except ValueError:
            return None
        return catalog[self.prediction.predicted_type(entity)].value

    @property
    def root(self) -> str | None:
        return self.chain.root

    def to_records(self) -> list[dict]:
        """JSON records: one header, then one record per section."""
        records: list[dict] = [{
            "kind": "header",
            "version": REPORT_VERSION,
            "run_id": self.run_id,
        }]
        records.append({
            "kind": "overview",
            "flagged": [
                {
                    "entity": e,
                    "level": self._level_of(e),
                    "fault_prob": float(
                        self.prediction.fault_prob[self.prediction.nodes.index(e)]
                    ),
                    "fault_type": self._fault_name(e),
                }
                for e in self.prediction.flagged
            ],
            "n_entities": len(self.prediction.nodes),
        })
        records.append({
            "kind": "root_cause",
            "root": self.root,
            "root_fault_type": self._fault_name(self.root) if self.root else None,
            "ranking": [
                {"entity": e, "level": self._level_of(e), "score": float(s)}
                for e, s in self.ranking
            ],
        })
        records.append({
            "kind": "propagation",
            "edges": [e.to_record() for e in self.chain.edges],
            "unreachable": list(self.chain.unreachable),
        })
        records.append({
            "kind": "repair",
            "suggestions": [
                {"entity": e, "fault_type": f, "action": a}
                for e, f, a in self._suggestions()
            ],
        })
        for table in self.importances:
            records.append({"kind": "importance", **table.to_record()})
        return records

    def _suggestions(self) -> list[tuple[str, str, str]]:
        """(entity, fault type, action) for the root first, then flagged."""
        ordered: list[str] = []
        if self.root is not None:
            ordered.append(self.root)
        for e in self.prediction.flagged:
            if e not in ordered:
                ordered.append(e)
        out = []
        for e in ordered:
            fault = self._fault_name(e)
            if fault is None:
                continue
            action = REPAIR_SUGGESTIONS[FaultType(fault)]
            out.append((e, fault, action))
        return out

    # ------------------------------------------------------------------
    def render_text(self) -> str:
        return render_records_text(self.to_records())


def _record_of(records: list[dict], kind: str) -> dict:
    for rec in records:
        if rec.get("kind") == kind:
            return rec
    raise ValueError(f"report records lack a {kind!r} section")


def render_records_text(records: list[dict]) -> str:
    """Deterministic text report from the JSON report records."""
    header = _record_of(records, "header")
    overview = _record_of(records, "overview")
    root_cause = _record_of(records, "root_cause")
    propagation = _record_of(records, "propagation")
    repair = _record_of(records, "repair")
    importances = [r for r in records if r.get("kind") == "importance"]
    root = root_cause["root"]

    lines: list[str] = [f"diagnostic report (run {header['run_id']})", ""]

    lines.append("== fault overview ==")
    flagged = overview["flagged"]
    if flagged:
        lines.append(
            f"{len(flagged)} of {overview['n_entities']} entities flagged as faulty:"
        )
        for item in flagged:
            fault = item["fault_type"] or "unclassified"
            lines.append(
                f"  {item['entity']} ({item['level']})  "
                f"p={item['fault_prob']:.3f}  type={fault}"
            )
    else:
        lines.append("no entity crossed the fault threshold; system looks nominal.")
    lines.append("")

    lines.append("== root cause location ==")
    ranking = root_cause["ranking"]
    if ranking:
        for rank, item in enumerate(ranking[:TOP_RANKED_SHOWN], start=1):
            marker = " <- root cause" if rank == 1 else ""
            lines.append(
                f"  #{rank} {item['entity']} ({item['level']})  "
                f"score={item['score']:.4f}{marker}"
            )
        table = next((t for t in importances if t["entity"] == root), None)
        if table is not None:
            tops = ", ".join(
                f"{name} ({val:.4f})"
                for name, val in zip(
                    table["features"][:TOP_FEATURES_SHOWN],
                    table["scores"][:TOP_FEATURES_SHOWN],
                )
            )
            lines.append(f"  key features for {root}: {tops}")
    else:
        lines.append("  no causal activity to rank.")
    lines.append("")

    lines.append("== propagation path ==")
    edges = propagation["edges"]
    if edges:
        for edge in edges:
            lines.append(
                f"  t=+{edge['time_s']:.1f}s  {edge['source']} -> {edge['target']}"
                f"  (strength {edge['strength']:.3f})"
            )
    elif root is not None:
        lines.append(f"  fault stayed local to {root}.")
    else:
        lines.append("  no propagation detected.")
    if propagation["unreachable"]:
        lines.append(
            "  flagged but not linked to the root: "
            + ", ".join(propagation["unreachable"])
        )
    lines.append("")

    lines.append("== repair suggestions ==")
    if repair["suggestions"]:
        for item in repair["suggestions"]:
            lines.append(
                f"  {item['entity']} [{item['fault_type']}]: {item['action']}"
            )
    else:
        lines.append("  nothing to repair.")
    lines.append("")
    return "\n".join(lines)


def write_chain_csv(chain: CausalChain, topology: Topology | None, path: str) -> None:
    """Propagation edges as CSV: time_s, source, target, level, strength."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "source", "target", "level", "strength"])
        for edge in chain.edges:
            level = (
                topology.level_of(edge.source).value
                if topology is not None else "unknown"
            )
            writer.writerow([
                f"{edge.time_s:.3f}", edge.source, edge.target,
                level, f"{edge.strength:.6f}",
            ])
