"""Log template mining with a fixed-depth parse tree, plus tf-idf encoding.

Messages are bucketed by token count, routed through a shallow prefix
tree (tokens containing digits branch as wildcards so identifiers do not
explode the tree), and matched against leaf clusters by the share of
exactly equal tokens.  A match above the similarity threshold merges the
message into the cluster, wildcarding any positions that differ.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WILDCARD = "<*>"


@dataclass
class LogTemplate:
    template_id: int
    tokens: tuple[str, ...]
    count: int = 0

    @property
    def pattern(self) -> str:
        return " ".join(self.tokens) if self.tokens else "<empty>"


@dataclass
class LogTemplateTable:
    templates: list[LogTemplate]
    assignments: list[int]          # message index -> template id
    similarity: float
    depth: int

    def template_by_id(self, template_id: int) -> LogTemplate:
        return self.templates[template_id]


def _has_digit(token: str) -> bool:
    return any(ch.isdigit() for ch in token)


def _similarity(template: tuple[str, ...], tokens: list[str]) -> float:
    if not template:
        return 1.0 if not tokens else 0.0
    equal = sum(1 for a, b in zip(template, tokens) if a == b)
    return equal / len(template)


def mine_log_templates(
    messages: list[str],
    similarity: float = 0.5,
    depth: int = 4,
) -> LogTemplateTable:
    """Cluster raw messages into templates.

    Every message lands in exactly one template and template counts sum
    to the number of messages.  Deterministic: templates are created in
    first-seen order.
    """
    if not 0.0 < similarity <= 1.0:
        raise ValueError(f"similarity must be in (0, 1], got {similarity}")
    if depth < 2:
        raise ValueError(f"tree depth must be >= 2, got {depth}")

    templates: list[LogTemplate] = []
    assignments: list[int] = []
    # path (length, routed tokens...) -> list of template ids at the leaf
    leaves: dict[tuple, list[int]] = {}
    prefix_len = depth - 2

    for message in messages:
        tokens = message.split()
        path = [len(tokens)]
        for token in tokens[:prefix_len]:
            path.append(WILDCARD if _has_digit(token) else token)
        key = tuple(path)
        leaf = leaves.setdefault(key, [])

        best_id, best_sim = -1, -1.0
        for tid in leaf:
            sim = _similarity(templates[tid].tokens, tokens)
            if sim > best_sim:
                best_id, best_sim = tid, sim
        if best_id >= 0 and best_sim >= similarity:
            tpl = templates[best_id]
            merged = tuple(
                a if a == b else WILDCARD for a, b in zip(tpl.tokens, tokens)
            )
            templates[best_id] = LogTemplate(best_id, merged, tpl.count + 1)
            assignments.append(best_id)
        else:
            tid = len(templates)
            templates.append(LogTemplate(tid, tuple(tokens), 1))
            leaf.append(tid)
            assignments.append(tid)

    return LogTemplateTable(templates, assignments, similarity, depth)


# ----------------------------------------------------------------------
# tf-idf window encoding

LOG_EXTRA_FEATURES = ("total_count", "error_count", "warn_count")


@dataclass
class LogBlock:
    values: np.ndarray            # (n_windows, n_entities, top_k + 3)
    feature_names: list[str]
    top_template_ids: list[int]
    idf: dict[int, float] = field(default_factory=dict)


def encode_log_features(
    table: LogTemplateTable,
    records: list[dict],
    entities: list[str],
    n_windows: int,
    window_s: float,
    origin_ts: float,
    top_k: int = 5,
) -> tuple[LogBlock, int]:
    """Per-window per-entity tf-idf of the top_k templates plus count features.

    tf is the in-cell occurrence count; idf = ln(N / df) over the N
    windows of the run, df counting windows where the template fired
    anywhere.  Returns the block and the number of dropped records
    (unknown entity or timestamp outside the window grid).
    """
    if len(records) != len(table.assignments):
        raise ValueError("record list does not match the mined table")
    eindex = {e: i for i, e in enumerate(entities)}
    order = sorted(
        range(len(table.templates)),
        key=lambda tid: (-table.templates[tid].count, tid),
    )
    top = order[:top_k]
    tpos = {tid: k for k, tid in enumerate(top)}

    counts = np.zeros((n_windows, len(entities), len(table.templates)))
    totals = np.zeros((n_windows, len(entities), 3))
    dropped = 0
    for rec, tid in zip(records, table.assignments):
        ent = eindex.get(rec["entity"])
        w = int((rec["ts"] - origin_ts) // window_s)
        if ent is None or not 0 <= w < n_windows:
            dropped += 1
            continue
        counts[w, ent, tid] += 1.0
        totals[w, ent, 0] += 1.0
        if rec.get("severity") == "ERROR":
            totals[w, ent, 1] += 1.0
        elif rec.get("severity") == "WARN":
            totals[w, ent, 2] += 1.0

    idf = {}
    window_hits = counts.sum(axis=1) > 0           # (n_windows, n_templates)
    df = window_hits.sum(axis=0)
    for tid in top:
        idf[tid] = float(np.log(n_windows / df[tid])) if df[tid] > 0 else 0.0

    values = np.zeros((n_windows, len(entities), top_k + 3))
    for tid, k in tpos.items():
        values[:, :, k] = counts[:, :, tid] * idf[tid]
    values[:, :, top_k:] = totals

    names = [f"log.tpl{k + 1}_tfidf" for k in range(top_k)]
    names += [f"log.{x}" for x in LOG_EXTRA_FEATURES]
    return LogBlock(values, names, top, idf), dropped
