"""Shared fixtures: one trained model and one diagnosed run for the session.

Training and simulation are deterministic given the configuration, so
session scope is safe; tests that need special configurations build
their own artifacts in function-scoped tmp dirs.
"""

from __future__ import annotations

from dataclasses import replace

import pytest

from stackrca.config import RunConfig
from stackrca.pipeline import run_diagnose, run_simulate, run_train

QUICKSTART_SEED = 7   # held out: training seeds are hash-derived 32-bit ints


@pytest.fixture(scope="session")
def base_config() -> RunConfig:
    return RunConfig()


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory, base_config) -> str:
    path = tmp_path_factory.mktemp("models")
    run_train(base_config, str(path))
    return str(path)


@pytest.fixture(scope="session")
def quickstart_run(tmp_path_factory, base_config) -> str:
    """A simulated default-template run directory (seed held out of training)."""
    path = tmp_path_factory.mktemp("quickstart")
    cfg = replace(base_config, seed=QUICKSTART_SEED)
    run_simulate(cfg, str(path))
    return str(path)


@pytest.fixture(scope="session")
def diagnosed_run(quickstart_run, model_dir, base_config):
    """The quickstart run diagnosed in place; returns (run_dir, Diagnosis)."""
    cfg = replace(base_config, seed=QUICKSTART_SEED)
    diag = run_diagnose(cfg, quickstart_run, model_dir, out_dir=quickstart_run)
    return quickstart_run, diag
