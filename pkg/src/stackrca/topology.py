"""Three-level system topology: hosts, pods, services and their relations.

A topology is static for the duration of a run.  Pods are deployed on
hosts, services are backed by member pods, and services call each other
over a directed call graph.  The association degree between two entities
quantifies how tightly coupled their deployment is and is what lets
causal influence travel between levels.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

DEPLOY_DEGREE = 1.0   # host <-> pod it runs
MEMBER_DEGREE = 1.0   # pod <-> service it backs
CALL_DEGREE = 0.7     # service <-> service linked by a call edge


class Level(str, Enum):
    HOST = "host"
    POD = "pod"
    SERVICE = "service"


LEVELS = (Level.HOST, Level.POD, Level.SERVICE)


class TopologyError(ValueError):
    """Raised for inconsistent topology definitions."""


@dataclass
class Topology:
    """Entity inventory plus deploy / member / call relations.

    hosts:    sorted host ids
    pods:     mapping pod id -> host id
    services: mapping service id -> tuple of member pod ids
    calls:    directed (caller, callee) service pairs
    """

    hosts: list[str]
    pods: dict[str, str]
    services: dict[str, tuple[str, ...]]
    calls: list[tuple[str, str]]
    _degree: dict[tuple[str, str], float] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._validate()
        self._degree = self._build_degrees()

    def _validate(self) -> None:
        seen: set[str] = set()
        for name in list(self.hosts) + list(self.pods) + list(self.services):
            if name in seen:
                raise TopologyError(f"duplicate entity id {name!r}")
            seen.add(name)
        for pod, host in self.pods.items():
            if host not in self.hosts:
                raise TopologyError(f"pod {pod!r} references unknown host {host!r}")
        for svc, members in self.services.items():
            if not members:
                raise TopologyError(f"service {svc!r} has no member pods")
            for pod in members:
                if pod not in self.pods:
                    raise TopologyError(f"service {svc!r} references unknown pod {pod!r}")
        for caller, callee in self.calls:
            for svc in (caller, callee):
                if svc not in self.services:
                    raise TopologyError(f"call edge references unknown service {svc!r}")
            if caller == callee:
                raise TopologyError(f"self call on service {caller!r}")

    def _build_degrees(self) -> dict[tuple[str, str], float]:
        deg: dict[tuple[str, str], float] = {}
        for pod, host in self.pods.items():
            deg[(host, pod)] = DEPLOY_DEGREE
            deg[(pod, host)] = DEPLOY_DEGREE
        for svc, members in self.services.items():
            for pod in members:
                deg[(pod, svc)] = MEMBER_DEGREE
                deg[(svc, pod)] = MEMBER_DEGREE
        for caller, callee in self.calls:
            deg[(caller, callee)] = CALL_DEGREE
            deg[(callee, caller)] = CALL_DEGREE
        return deg

    # ------------------------------------------------------------------
    # queries

    def entities(self, level: Level | None = None) -> list[str]:
        if level is Level.HOST:
            return sorted(self.hosts)
        if level is Level.POD:
            return sorted(self.pods)
        if level is Level.SERVICE:
            return sorted(self.services)
        return self.entities(Level.HOST) + self.entities(Level.POD) + self.entities(Level.SERVICE)

    def level_of(self, entity: str) -> Level:
        if entity in self.hosts:
            return Level.HOST
        if entity in self.pods:
            return Level.POD
        if entity in self.services:
            return Level.SERVICE
        raise TopologyError(f"unknown entity {entity!r}")

    def association_degree(self, a: str, b: str) -> float:
        """Coupling strength between two entities; 0.0 when unrelated."""
        return self._degree.get((a, b), 0.0)

    def association_matrix(self, from_level: Level, to_level: Level) -> np.ndarray:
        rows = self.entities(from_level)
        cols = self.entities(to_level)
        out = np.zeros((len(rows), len(cols)))
        for i, a in enumerate(rows):
            for j, b in enumerate(cols):
                out[i, j] = self.association_degree(a, b)
        return out

    def pods_on(self, host: str) -> list[str]:
        return sorted(p for p, h in self.pods.items() if h == host)

    def service_of(self, pod: str) -> str | None:
        for svc in sorted(self.services):
            if pod in self.services[svc]:
                return svc
        return None

    def callers_of(self, service: str) -> list[str]:
        return sorted(a for a, b in self.calls if b == service)

    def callees_of(self, service: str) -> list[str]:
        return sorted(b for a, b in self.calls if a == service)

    def entry_services(self) -> list[str]:
        """Services nobody calls; trace roots start here."""
        called = {b for _, b in self.calls}
        entries = [s for s in sorted(self.services) if s not in called]
        return entries or sorted(self.services)


# ----------------------------------------------------------------------
# text format

def parse_topology(text: str) -> Topology:
    """Parse the flat ini topology format.

    [hosts]      ids = h1, h2
    [pods]       <pod> = <host>
    [services]   <service> = <pod>, <pod>
    [calls]      <caller> = <callee>, <callee>
    """
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise TopologyError(f"malformed topology file: {exc}") from exc
    if not cp.has_section("hosts") or not cp.get("hosts", "ids", fallback="").strip():
        raise TopologyError("topology needs a [hosts] section with an ids entry")

    hosts = [h.strip() for h in cp.get("hosts", "ids").split(",") if h.strip()]
    pods = {}
    if cp.has_section("pods"):
        for pod, host in cp.items("pods"):
            pods[pod.strip()] = host.strip()
    services = {}
    if cp.has_section("services"):
        for svc, members in cp.items("services"):
            services[svc.strip()] = tuple(m.strip() for m in members.split(",") if m.strip())
    calls = []
    if cp.has_section("calls"):
        for caller, callees in cp.items("calls"):
            for callee in callees.split(","):
                if callee.strip():
                    calls.append((caller.strip(), callee.strip()))
    return Topology(hosts=hosts, pods=pods, services=services, calls=calls)


def load_topology(path: str) -> Topology:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_topology(fh.read())


def dump_topology(topology: Topology) -> str:
    lines = ["[hosts]", "ids = " + ", ".join(sorted(topology.hosts)), "", "[pods]"]
    for pod in sorted(topology.pods):
        lines.append(f"{pod} = {topology.pods[pod]}")
    lines += ["", "[services]"]
    for svc in sorted(topology.services):
        lines.append(f"{svc} = " + ", ".join(topology.services[svc]))
    lines += ["", "[calls]"]
    by_caller: dict[str, list[str]] = {}
    for caller, callee in topology.calls:
        by_caller.setdefault(caller, []).append(callee)
    for caller in sorted(by_caller):
        lines.append(f"{caller} = " + ", ".join(sorted(by_caller[caller])))
    return "\n".join(lines) + "\n"


def default_topology() -> Topology:
    """The bundled 3-host / 6-pod / 4-service reference layout."""
    return Topology(
        hosts=["h1", "h2", "h3"],
        pods={"p1": "h1", "p2": "h1", "p3": "h2", "p4": "h2", "p5": "h3", "p6": "h3"},
        services={
            "s1": ("p1", "p2"),
            "s2": ("p3", "p4"),
            "s3": ("p5",),
            "s4": ("p6",),
        },
        calls=[("s1", "s2"), ("s2", "s3"), ("s2", "s4")],
    )
