"""Fault scenario catalog and seeded scenario generation.

A scenario is a single root fault plus the cascade it triggers across
levels.  Templates encode which entity types a fault can start on, how
it propagates (always along deploy / member / call relations) and which
telemetry channels carry the symptom.  Generation is deterministic for
a given topology, template and seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .topology import Level, Topology


class FaultType(str, Enum):
    # host level
    CPU_SPIKE = "cpu-spike"
    MEMORY_LEAK = "memory-leak"
    DISK_SATURATION = "disk-saturation"
    NETWORK_PACKET_LOSS = "network-packet-loss"
    IO_LATENCY = "io-latency"
    FD_EXHAUSTION = "fd-exhaustion"
    # pod level
    RESTART_LOOP = "restart-loop"
    MEMORY_SURGE = "memory-surge"
    THROTTLING = "throttling"
    # service level
    INTERFACE_TIMEOUT = "interface-timeout"
    CALL_FAILURE = "call-failure"
    ERROR_RATE_SURGE = "error-rate-surge"
    THROUGHPUT_COLLAPSE = "throughput-collapse"


FAULT_CATALOG: dict[Level, tuple[FaultType, ...]] = {
    Level.HOST: (
        FaultType.CPU_SPIKE,
        FaultType.MEMORY_LEAK,
        FaultType.DISK_SATURATION,
        FaultType.NETWORK_PACKET_LOSS,
        FaultType.IO_LATENCY,
        FaultType.FD_EXHAUSTION,
    ),
    Level.POD: (
        FaultType.RESTART_LOOP,
        FaultType.MEMORY_SURGE,
        FaultType.THROTTLING,
    ),
    Level.SERVICE: (
        FaultType.INTERFACE_TIMEOUT,
        FaultType.CALL_FAILURE,
        FaultType.ERROR_RATE_SURGE,
        FaultType.THROUGHPUT_COLLAPSE,
    ),
}

# key telemetry feature (base name) most characteristic of each fault
KEY_FEATURES: dict[FaultType, tuple[str, ...]] = {
    FaultType.CPU_SPIKE: ("cpu_util",),
    FaultType.MEMORY_LEAK: ("mem_util",),
    FaultType.DISK_SATURATION: ("disk_util",),
    FaultType.NETWORK_PACKET_LOSS: ("net_drop_rate",),
    FaultType.IO_LATENCY: ("io_wait_ms",),
    FaultType.FD_EXHAUSTION: ("fd_open",),
    FaultType.RESTART_LOOP: ("restart_count",),
    FaultType.MEMORY_SURGE: ("mem_usage",),
    FaultType.THROTTLING: ("throttle_ratio",),
    FaultType.INTERFACE_TIMEOUT: ("latency_ms",),
    FaultType.CALL_FAILURE: ("error_count",),
    FaultType.ERROR_RATE_SURGE: ("error_count",),
    FaultType.THROUGHPUT_COLLAPSE: ("request_rate",),
}


def level_of_fault(fault: FaultType) -> Level:
    for level, kinds in FAULT_CATALOG.items():
        if fault in kinds:
            return level
    raise ValueError(f"unmapped fault type {fault!r}")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class FaultEvent:
    """One fault becoming active on one entity."""
    entity: str
    fault: FaultType
    start_s: float
    magnitude: float   # template-relative severity scale, 1.0 = nominal template strength


@dataclass(frozen=True)
class PropagationRule:
    """Directed transfer of a fault effect between two entities.

    lag_s is measured from the moment the source fault became active;
    gain scales how much of the source excess signal the target inherits.
    """
    source: str
    target: str
    lag_s: float
    gain: float
    induced: FaultType


@dataclass
class FaultScenario:
    name: str
    root: str
    root_fault: FaultType | None
    injection_s: float
    events: list[FaultEvent]
    rules: list[PropagationRule]
    seed: int


@dataclass
class GroundTruth:
    """Three-tier annotation for one scenario."""
    faulty_entities: list[str]
    fault_types: dict[str, FaultType]
    key_features: dict[str, tuple[str, ...]] = field(default_factory=dict)
    # ordered (time_s, source, target); time is when the source fault became active
    chain: list[tuple[float, str, str]] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "faulty_entities": sorted(self.faulty_entities),
            "fault_types": {e: self.fault_types[e].value for e in sorted(self.fault_types)},
            "key_features": {e: list(self.key_features[e]) for e in sorted(self.key_features)},
            "chain": [[t, a, b] for t, a, b in self.chain],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "GroundTruth":
        return cls(
            faulty_entities=list(rec["faulty_entities"]),
            fault_types={e: FaultType(v) for e, v in rec["fault_types"].items()},
            key_features={e: tuple(v) for e, v in rec.get("key_features", {}).items()},
            chain=[(float(t), a, b) for t, a, b in rec.get("chain", [])],
        )


# ----------------------------------------------------------------------
# template table
#
# root fault -> (pod-level induced fault, service-level induced fault)
# for host-rooted cascades; pod roots use only the service entry.

_HOST_CASCADE: dict[FaultType, tuple[FaultType, FaultType]] = {
    FaultType.CPU_SPIKE: (FaultType.THROTTLING, FaultType.INTERFACE_TIMEOUT),
    FaultType.MEMORY_LEAK: (FaultType.MEMORY_SURGE, FaultType.INTERFACE_TIMEOUT),
    FaultType.DISK_SATURATION: (FaultType.THROTTLING, FaultType.INTERFACE_TIMEOUT),
    FaultType.NETWORK_PACKET_LOSS: (FaultType.RESTART_LOOP, FaultType.CALL_FAILURE),
    FaultType.IO_LATENCY: (FaultType.THROTTLING, FaultType.INTERFACE_TIMEOUT),
    FaultType.FD_EXHAUSTION: (FaultType.RESTART_LOOP, FaultType.CALL_FAILURE),
}

_POD_CASCADE: dict[FaultType, FaultType] = {
    FaultType.RESTART_LOOP: (FaultType.ERROR_RATE_SURGE),
    FaultType.MEMORY_SURGE: (FaultType.INTERFACE_TIMEOUT),
    FaultType.THROTTLING: (FaultType.INTERFACE_TIMEOUT),
}

# faulty callee drags its direct callers down with it
_SERVICE_CASCADE: dict[FaultType, FaultType] = {
    FaultType.INTERFACE_TIMEOUT: FaultType.INTERFACE_TIMEOUT,
    FaultType.CALL_FAILURE: FaultType.CALL_FAILURE,
    FaultType.ERROR_RATE_SURGE: FaultType.ERROR_RATE_SURGE,
    FaultType.THROUGHPUT_COLLAPSE: FaultType.THROUGHPUT_COLLAPSE,
}

NOMINAL_TEMPLATE = "nominal"


def template_names() -> list[str]:
    names = [NOMINAL_TEMPLATE]
    for level in (Level.HOST, Level.POD, Level.SERVICE):
        for fault in FAULT_CATALOG[level]:
            names.append(f"{level.value}-{fault.value}")
    return names


def _parse_template(name: str) -> tuple[Level, FaultType]:
    for level in (Level.HOST, Level.POD, Level.SERVICE):
        prefix = level.value + "-"
        if name.startswith(prefix):
            try:
                fault = FaultType(name[len(prefix):])
            except ValueError:
                raise ScenarioError(f"unknown scenario template {name!r}") from None
            if level_of_fault(fault) is not level:
                raise ScenarioError(f"unknown scenario template {name!r}")
            return level, fault
    raise ScenarioError(f"unknown scenario template {name!r}")


def generate_scenario(
    topology: Topology,
    template: str,
    seed: int,
    root: str | None = None,
    injection_s: float = 300.0,
) -> tuple[FaultScenario, GroundTruth]:
    """Instantiate a cascade template on a concrete topology.

    The root entity is drawn from the eligible entities of the template
    level unless given explicitly.  Lags and magnitudes are sampled from
    the seed, so identical inputs reproduce the scenario exactly.
    """
    if template == NOMINAL_TEMPLATE:
        scenario = FaultScenario(template, root="", root_fault=None,
                                 injection_s=injection_s, events=[], rules=[], seed=seed)
        return scenario, GroundTruth(faulty_entities=[], fault_types={})

    level, fault = _parse_template(template)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xFA]))
    eligible = topology.entities(level)
    if not eligible:
        raise ScenarioError(f"topology has no {level.value} entities for {template!r}")
    if root is None:
        root = eligible[int(rng.integers(len(eligible)))]
    elif root not in eligible:
        raise ScenarioError(f"root {root!r} is not a {level.value} entity")

    events = [FaultEvent(root, fault, injection_s, float(rng.uniform(0.9, 1.2)))]
    rules: list[PropagationRule] = []
    chain: list[tuple[float, str, str]] = []
    truth_types = {root: fault}

    def add_hop(source: str, src_start: float, target: str, induced: FaultType) -> float:
        lag = float(rng.uniform(10.0, 20.0))
        gain = float(rng.uniform(0.5, 0.8))
        start = src_start + lag
        rules.append(PropagationRule(source, target, lag, gain, induced))
        chain.append((src_start, source, target))
        events.append(FaultEvent(target, induced, start, gain))
        truth_types[target] = induced
        return start

    if level is Level.HOST:
        pod_fault, svc_fault = _HOST_CASCADE[fault]
        pods = topology.pods_on(root)
        if not pods:
            raise ScenarioError(f"host {root!r} runs no pods; cascade impossible")
        pod = pods[0]
        t_pod = add_hop(root, injection_s, pod, pod_fault)
        svc = topology.service_of(pod)
        if svc is not None:
            add_hop(pod, t_pod, svc, svc_fault)
    elif level is Level.POD:
        svc_fault = _POD_CASCADE[fault]
        svc = topology.service_of(root)
        if svc is not None:
            add_hop(root, injection_s, svc, svc_fault)
    else:
        induced = _SERVICE_CASCADE[fault]
        for caller in topology.callers_of(root):
            add_hop(root, injection_s, caller, induced)

    truth = GroundTruth(
        faulty_entities=sorted(truth_types),
        fault_types=truth_types,
        key_features={e: KEY_FEATURES[t] for e, t in truth_types.items()},
        chain=sorted(chain),
    )
    scenario = FaultScenario(template, root, fault, injection_s, events, rules, seed)
    return scenario, truth
