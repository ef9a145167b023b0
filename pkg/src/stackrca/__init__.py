"""Root-cause analysis for layered host/pod/service systems.

The package simulates a three-level system with injected cascading
faults (metrics, logs, traces plus ground truth) and diagnoses such
telemetry end to end: multimodal feature extraction, perturbation-based
temporal causal discovery, cross-level causal transmission, typed graph
attention for fault detection and classification, root-cause ranking,
and mask-based explanation.
"""

from .config import RunConfig, load_config
from .pipeline import (
    Diagnosis,
    evaluate_run,
    run_diagnose,
    run_evaluate,
    run_simulate,
    run_train,
)
from .scenarios import FaultScenario, FaultType, GroundTruth, generate_scenario, template_names
from .telemetry import TelemetryBundle, simulate_telemetry
from .topology import Level, Topology, default_topology, load_topology, parse_topology

__version__ = "0.1.0"

__all__ = [
    "Diagnosis",
    "FaultScenario",
    "FaultType",
    "GroundTruth",
    "Level",
    "RunConfig",
    "TelemetryBundle",
    "Topology",
    "__version__",
    "default_topology",
    "evaluate_run",
    "generate_scenario",
    "load_config",
    "load_topology",
    "parse_topology",
    "run_diagnose",
    "run_evaluate",
    "run_simulate",
    "run_train",
    "simulate_telemetry",
    "template_names",
]
