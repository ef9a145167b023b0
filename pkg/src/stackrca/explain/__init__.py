"""Explanation stage: feature importance, causal chains, reports."""

from .chain import CausalChain, ChainEdge, build_causal_chain
from .importance import (
    DEFAULT_MASK_PROB,
    DEFAULT_TRIALS,
    ImportanceTable,
    mask_importance,
)
from .report import (
    REPAIR_SUGGESTIONS,
    REPORT_VERSION,
    DiagnosticReport,
    render_records_text,
    write_chain_csv,
)

__all__ = [
    "CausalChain",
    "ChainEdge",
    "build_causal_chain",
    "DEFAULT_MASK_PROB",
    "DEFAULT_TRIALS",
    "ImportanceTable",
    "mask_importance",
    "REPAIR_SUGGESTIONS",
    "REPORT_VERSION",
    "DiagnosticReport",
    "render_records_text",
    "write_chain_csv",
]
