"""Run-directory file helpers.

All artifacts are plain text (jsonl or key-value) with stable key order,
so identical pipeline inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import os
from typing import Iterable

# fixed artifact names inside a run directory
METRICS_FILE = "metrics.jsonl"
LOGS_FILE = "logs.jsonl"
SPANS_FILE = "spans.jsonl"
TRUTH_FILE = "ground_truth.jsonl"
TOPOLOGY_FILE = "topology.ini"
TENSOR_FILE = "tensor.bin"
SCHEMA_FILE = "schema.txt"
EDGES_FILE = "causal_edges.jsonl"
PREDICTION_FILE = "prediction.jsonl"
REPORT_TEXT_FILE = "report.txt"
REPORT_JSON_FILE = "report.jsonl"
CHAIN_CSV_FILE = "chain.csv"
EVAL_FILE = "eval.txt"
TIMINGS_FILE = "timings.txt"
MANIFEST_FILE = "manifest.txt"
MODEL_DIR = "models"
GAT_MODEL_FILE = "gat_model.txt"
PREDICTOR_FILE = "predictor.txt"


class DataError(ValueError):
    """Unreadable or inconsistent input data."""


def dumps_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_jsonl(path: str, records: Iterable[dict]) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(dumps_record(record))
            fh.write("\n")
    os.replace(tmp, path)


def read_jsonl(path: str) -> list[dict]:
    if not os.path.exists(path):
        raise DataError(f"missing input file {path}")
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: bad json record: {exc}") from exc
    return records


def write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_text(path: str) -> str:
    if not os.path.exists(path):
        raise DataError(f"missing input file {path}")
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def format_float(x: float) -> str:
    """Shortest round-trip decimal form; stable across runs."""
    return repr(float(x))
