"""End-to-end orchestration: simulate, train, diagnose, evaluate.

A run directory holds telemetry (metrics/logs/spans + ground truth),
the manifest of the configuration that produced it, and the diagnosis
artifacts written next to the data.  Every stage is deterministic given
the manifest, so reruns with identical manifests produce byte-identical
reports; wall-clock figures are kept out of reproducible artifacts and
written to the timings file instead.
"""

from __future__ import annotations

import hashlib
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import runio
from .causal import (
    CausalEdge,
    CausalEdgeSet,
    CausalTensor,
    cross_level_causal,
    filter_causal,
    fit_latent_var,
    fit_tcn_autoencoder,
    joint_scale_strengths,
    lead_lag_gate,
    pagerank_rank,
    strength_matrix,
)
from .config import RunConfig, parse_manifest, render_config
from .evaluation import (
    EvalResult,
    causal_chain_accuracy,
    feature_importance_accuracy,
    localization_prf,
    type_f1,
)
from .explain import (
    CausalChain,
    DiagnosticReport,
    build_causal_chain,
    mask_importance,
    write_chain_csv,
)
from .graphmodel import (
    GatModel,
    GraphLabels,
    HetGraph,
    Prediction,
    build_hetgraph,
    load_gat,
    predict,
    save_gat,
    train_gat,
)
from .preprocessing import (
    FeatureTensor,
    anomaly_series,
    build_feature_tensor,
    fuse_modalities,
    level_entities,
    load_tensor,
    save_tensor,
)
from .runio import DataError
from .scenarios import (
    FAULT_CATALOG,
    GroundTruth,
    generate_scenario,
    template_names,
)
from .telemetry import TelemetryBundle, simulate_telemetry
from .topology import Level, Topology, default_topology, dump_topology, load_topology

MAX_IMPORTANCE_ENTITIES = 8
_LEVEL_ORDER = ("host", "pod", "service")
_CROSS_PAIRS = (("host", "pod"), ("pod", "service"))


def run_id_for(config: RunConfig) -> str:
    digest = hashlib.blake2s(render_config(config).encode("utf-8")).hexdigest()
    return digest[:12]


class StageTimer:
    """Collects wall-clock seconds per pipeline stage."""

    def __init__(self) -> None:
        self.timings: dict[str, float] = {}

    def measure(self, stage: str):
        timer = self

        class _Ctx:
            def __enter__(self):
                self._start = time.perf_counter()
                return self

            def __exit__(self, *exc):
                timer.timings[stage] = timer.timings.get(stage, 0.0) + (
                    time.perf_counter() - self._start
                )
                return False

        return _Ctx()

    def write(self, path: str) -> None:
        total = sum(self.timings.values())
        lines = [f"{stage} = {runio.format_float(sec)}" for stage, sec in self.timings.items()]
        lines.append(f"total = {runio.format_float(total)}")
        runio.write_text(path, "\n".join(lines) + "\n")


def _write_manifest(config: RunConfig, run_dir: str, resume: bool = False) -> None:
    path = os.path.join(run_dir, runio.MANIFEST_FILE)
    text = render_config(config)
    if resume and os.path.exists(path) and runio.read_text(path) != text:
        raise DataError(
            f"{path}: existing manifest differs from the current configuration; "
            "refusing to resume on stale artifacts"
        )
    runio.write_text(path, text)


def _load_run_topology(run_dir: str) -> Topology:
    path = os.path.join(run_dir, runio.TOPOLOGY_FILE)
    if os.path.exists(path):
        return load_topology(path)
    return default_topology()


# ----------------------------------------------------------------------
# simulate

def run_simulate(
    config: RunConfig,
    run_dir: str,
    topology: Topology | None = None,
) -> tuple[TelemetryBundle, GroundTruth]:
    os.makedirs(run_dir, exist_ok=True)
    topology = topology if topology is not None else default_topology()
    timer = StageTimer()
    with timer.measure("simulate"):
        scenario, truth = generate_scenario(
            topology, config.template, config.seed, injection_s=config.injection_s
        )
        bundle = simulate_telemetry(
            topology, scenario, config.duration_s, config.tick_s, config.seed
        )
    with timer.measure("write"):
        runio.write_text(os.path.join(run_dir, runio.TOPOLOGY_FILE), dump_topology(topology))
        runio.write_jsonl(os.path.join(run_dir, runio.METRICS_FILE), bundle.metrics)
        runio.write_jsonl(os.path.join(run_dir, runio.LOGS_FILE), bundle.logs)
        runio.write_jsonl(os.path.join(run_dir, runio.SPANS_FILE), bundle.spans)
        runio.write_jsonl(os.path.join(run_dir, runio.TRUTH_FILE), [truth.to_record()])
        _write_manifest(config, run_dir)
    timer.write(os.path.join(run_dir, runio.TIMINGS_FILE))
    return bundle, truth


# ----------------------------------------------------------------------
# shared stages

def _fit_predictor(config: RunConfig, series: np.ndarray):
    latent = config.latent_dim if config.latent_dim > 0 else None
    if config.predictor == "var":
        return fit_latent_var(
            series, lag=config.var_lag, latent_dim=latent, ridge=config.ridge
        )
    return fit_tcn_autoencoder(
        series,
        latent_dim=latent,
        channels=config.tcn_channels,
        beta=config.tcn_beta,
        learning_rate=config.tcn_learning_rate,
        epochs=config.tcn_epochs,
        seed=config.seed,
    )


def build_tensor(
    config: RunConfig,
    metrics: list[dict],
    logs: list[dict],
    spans: list[dict],
    topology: Topology,
) -> FeatureTensor:
    return build_feature_tensor(
        metrics,
        logs,
        spans,
        topology,
        window_s=config.window_s,
        stride_s=config.stride_s,
        tick_s=config.tick_s,
        denoise_window=config.denoise_window,
        top_k_templates=config.top_k_templates,
        template_similarity=config.template_similarity,
        template_depth=config.template_depth,
        trace_sampling_rate=config.trace_sampling_rate,
    )


def _standardize_columns(series: np.ndarray) -> np.ndarray:
    """Zero-mean, unit-variance columns (constant columns become zeros).

    Anomaly intensities span orders of magnitude between quiet and
    faulty entities.  A near-constant column is almost collinear with
    nothing but its own noise, and a least-squares predictor will buy
    huge coefficients on it to shave specks off the loss of a
    high-variance column — turning the perturbation test into a noise
    amplifier.  Equalizing the scales removes that leverage while
    leaving the temporal structure (what the test measures) intact.
    """
    mean = series.mean(axis=0, keepdims=True)
    std = series.std(axis=0, keepdims=True)
    std = np.where(std < 1e-12, 1.0, std)
    return (series - mean) / std


def discover_causal(
    config: RunConfig, tensor: FeatureTensor, topology: Topology
) -> tuple[CausalTensor, dict[str, np.ndarray]]:
    """Per-level strength stacks, cross-level transmission, entity series.

    Every candidate entity pair — intra-level before the transmission
    step, cross-level after it — must pass the lead-lag orientation
    gate.  Gating the intra stacks first keeps instantaneous couplings
    (and plain noise) out of the cross-level products and out of the
    joint scale anchor, where one spurious strength would compress all
    genuine edges below the retention threshold.
    """
    anomaly = anomaly_series(tensor)
    levels: dict[str, tuple[list[str], np.ndarray]] = {}
    entity_series: dict[str, np.ndarray] = {}
    lag = None
    for level in _LEVEL_ORDER:
        entities = level_entities(tensor, level)
        if not entities:
            continue
        series = _standardize_columns(anomaly[level])    # (T, E_level)
        for i, entity in enumerate(entities):
            entity_series[entity] = series[:, i]
        predictor = _fit_predictor(config, series)
        lag = predictor.lag if lag is None else lag
        if predictor.lag != lag:
            raise DataError("predictor lag differs across levels")
        strengths = strength_matrix(
            predictor,
            series,
            repeats=config.repeats,
            n_segments=config.n_segments,
            seed=config.seed,
            floor_frac=config.floor_frac,
        )
        for i in range(len(entities)):
            for j in range(len(entities)):
                if i != j and not lead_lag_gate(
                    series[:, i], series[:, j], config.var_lag
                ):
                    strengths[i, j, :] = 0.0
        levels[level] = (entities, strengths)

    cross: dict[tuple[str, str], np.ndarray] = {}
    if not config.disable_cross_level:
        for lv_a, lv_b in _CROSS_PAIRS:
            if lv_a not in levels or lv_b not in levels:
                continue
            relation = topology.association_matrix(Level(lv_a), Level(lv_b))
            intra = np.clip(levels[lv_a][1], 0.0, None)
            arr = cross_level_causal(intra, relation, normalize=False)
            ents_a, ents_b = levels[lv_a][0], levels[lv_b][0]
            for i, src in enumerate(ents_a):
                for j, dst in enumerate(ents_b):
                    if not lead_lag_gate(
                        entity_series[src], entity_series[dst], config.var_lag
                    ):
                        arr[i, j, :] = 0.0
            # Each transmission stack is scaled against its own anchor:
            # orientation gating already removed spurious couplings, so
            # the anchor is genuine and a strong hop at one level no
            # longer compresses a weaker true hop at another below the
            # retention threshold.
            cross[(lv_a, lv_b)] = joint_scale_strengths([arr])[0]

    causal = CausalTensor(levels=levels, cross=cross, t_offset=lag or 0)
    causal.validate()
    return causal, entity_series


def retained_edges(
    config: RunConfig,
    causal: CausalTensor,
    entity_series: dict[str, np.ndarray],
) -> CausalEdgeSet:
    return filter_causal(
        causal,
        threshold=config.edge_threshold,
        mi_bins=config.mi_bins,
        mi_cutoff=config.mi_cutoff,
        series=entity_series if config.use_mi_filter else None,
    )


TAIL_FRACTION = 0.25
"""Share of the run (from the end) summarised by the ``tail.`` features.

A fault that starts midway through the run contributes only half its
magnitude to the full-run mean; the tail mean captures the post-onset
steady state without that dilution.
"""


def node_feature_matrix(fused: np.ndarray) -> np.ndarray:
    """Per-entity summary of the fused tensor: time-mean, time-peak, tail-mean."""
    n_tail = max(1, int(round(fused.shape[0] * TAIL_FRACTION)))
    return np.concatenate(
        [fused.mean(axis=0), fused.max(axis=0), fused[-n_tail:].mean(axis=0)],
        axis=1,
    )


def node_feature_names(tensor: FeatureTensor) -> list[str]:
    return (
        [f"avg.{name}" for name in tensor.feature_names]
        + [f"peak.{name}" for name in tensor.feature_names]
        + [f"tail.{name}" for name in tensor.feature_names]
    )


def assemble_graph(
    config: RunConfig,
    tensor: FeatureTensor,
    topology: Topology,
    edge_set: CausalEdgeSet | None,
) -> HetGraph:
    fused, _ = fuse_modalities(tensor, mode=config.fusion_mode)
    features = node_feature_matrix(fused)
    node_features = {e: features[i] for i, e in enumerate(tensor.entities)}
    causal_edges = edge_set.edges if edge_set is not None else None
    return build_hetgraph(topology, node_features, causal_edges)


def _labels_from_truth(truth: GroundTruth, topology: Topology) -> GraphLabels:
    fault_class = {}
    for entity, fault in truth.fault_types.items():
        catalog = FAULT_CATALOG[topology.level_of(entity)]
        fault_class[entity] = catalog.index(fault)
    return GraphLabels(faulty=set(truth.faulty_entities), fault_class=fault_class)


def _template_seed(base_seed: int, template: str, k: int) -> int:
    digest = hashlib.blake2s(
        f"{base_seed}|{template}|{k}".encode("utf-8"), digest_size=4
    ).digest()
    return int.from_bytes(digest, "big")


# ----------------------------------------------------------------------
# train

def run_train(
    config: RunConfig,
    model_dir: str,
    topology: Topology | None = None,
) -> GatModel:
    """Simulate a labeled corpus over all fault templates and fit the model.

    Saves the attention model plus the manifest of the configuration it
    was trained under; diagnosis refits the temporal predictor on the
    data being diagnosed, so only the graph model needs persisting.
    """
    os.makedirs(model_dir, exist_ok=True)
    topology = topology if topology is not None else default_topology()
    timer = StageTimer()
    corpus: list[tuple[HetGraph, GraphLabels]] = []
    with timer.measure("corpus"):
        for template in template_names():
            for k in range(config.train_scenarios_per_template):
                seed = _template_seed(config.seed, template, k)
                cfg = replace(config, template=template, seed=seed)
                scenario, truth = generate_scenario(
                    topology, template, seed, injection_s=cfg.injection_s
                )
                bundle = simulate_telemetry(
                    topology, scenario, cfg.duration_s, cfg.tick_s, seed
                )
                tensor = build_tensor(
                    cfg, bundle.metrics, bundle.logs, bundle.spans, topology
                )
                causal, entity_series = discover_causal(cfg, tensor, topology)
                edge_set = retained_edges(cfg, causal, entity_series)
                graph = assemble_graph(cfg, tensor, topology, edge_set)
                corpus.append((graph, _labels_from_truth(truth, topology)))
    with timer.measure("train"):
        model = train_gat(
            corpus,
            hidden=config.gat_hidden,
            n_heads=config.gat_heads,
            n_layers=config.gat_layers,
            learning_rate=config.gat_learning_rate,
            epochs=config.gat_epochs,
            patience=config.gat_patience,
            seed=config.seed,
            disable_type_attention=config.disable_type_attention,
        )
    with timer.measure("write"):
        save_gat(model, os.path.join(model_dir, runio.GAT_MODEL_FILE))
        runio.write_text(
            os.path.join(model_dir, runio.PREDICTOR_FILE), render_config(config)
        )
        _write_manifest(config, model_dir)
    timer.write(os.path.join(model_dir, runio.TIMINGS_FILE))
    return model


# ----------------------------------------------------------------------
# diagnose

@dataclass
class Diagnosis:
    run_id: str
    tensor: FeatureTensor
    edge_set: CausalEdgeSet
    prediction: Prediction
    ranking: list[tuple[str, float]]
    chain: CausalChain
    predicted_entities: list[str]
    report: DiagnosticReport
    timings: dict[str, float] = field(default_factory=dict)


def _rank_entities(
    config: RunConfig, edge_set: CausalEdgeSet, prediction: Prediction, entities: list[str]
) -> list[tuple[str, float]]:
    if not prediction.flagged:
        return []
    if edge_set.edges:
        half_life = config.half_life_windows if config.half_life_windows > 0 else None
        # Teleport mass enters at nodes in proportion to their detected
        # fault probability and drains backward along reversed causal
        # edges, so sources of observed symptoms outrank generic hubs.
        personalization = {
            node: float(p)
            for node, p in zip(prediction.nodes, prediction.fault_prob)
        }
        return pagerank_rank(
            edge_set.edges,
            entities,
            damping=config.damping,
            tol=config.pagerank_tol,
            half_life=half_life,
            personalization=personalization,
        )
    # no causal activity: fall back to flag confidence
    probs = {
        e: float(prediction.fault_prob[prediction.nodes.index(e)])
        for e in prediction.flagged
    }
    total = sum(probs.values())
    return sorted(
        ((e, p / total) for e, p in probs.items()), key=lambda item: (-item[1], item[0])
    )


def _onset_windows(tensor: FeatureTensor) -> dict[str, int]:
    """Half-rise onset window per entity from its anomaly score series."""
    anom = anomaly_series(tensor)
    onsets: dict[str, int] = {}
    for level, block in anom.items():
        for i, entity in enumerate(level_entities(tensor, level)):
            s = block[:, i]
            span = s.max() - s.min()
            if span < 1e-12:
                onsets[entity] = 0
                continue
            onsets[entity] = int(np.argmax(s >= s.min() + 0.5 * span))
    return onsets


def transmission_edges(
    topology: Topology,
    prediction: Prediction,
    onsets: dict[str, int],
    existing: set[tuple[str, str]],
    include_cross_level: bool = True,
) -> list[CausalEdge]:
    """Propagation edges implied by deployment relations between flagged entities.

    Cascading faults travel along the relations that couple the levels: a
    failing host degrades the pods it runs, a failing pod degrades the
    service it backs, and a failing callee degrades its callers.  When
    both endpoints of such a relation are flagged, the relation is itself
    evidence of a propagation step — slow-onset faults often leave too
    little temporal signature for perturbation analysis to orient, while
    the deployment structure fixes the direction for free.  Edge strength
    is the joint flag confidence; the onset window of the source dates
    the step.

    With include_cross_level=False only the same-level call relations
    contribute, mirroring the ablation that turns off transmission
    between levels.
    """
    prob = {n: float(p) for n, p in zip(prediction.nodes, prediction.fault_prob)}
    flagged = set(prediction.flagged)

    candidates: list[tuple[str, str]] = []
    if include_cross_level:
        for host in topology.hosts:
            candidates.extend((host, pod) for pod in topology.pods_on(host))
        for pod in topology.pods:
            svc = topology.service_of(pod)
            if svc is not None:
                candidates.append((pod, svc))
    for caller, callee in topology.calls:
        candidates.append((callee, caller))

    edges = []
    for src, dst in candidates:
        if src not in flagged or dst not in flagged:
            continue
        if (src, dst) in existing:
            continue
        strength = min(prob[src], prob[dst])
        edges.append(
            CausalEdge(
                source=src,
                target=dst,
                t=onsets.get(src, 0),
                strength=strength,
                kind="deploy",
                per_step=np.array([strength]),
            )
        )
    return edges


def run_diagnose(
    config: RunConfig,
    data_dir: str,
    model_dir: str,
    out_dir: str | None = None,
    resume: bool = False,
) -> Diagnosis:
    """Full diagnosis of one telemetry directory with a trained model.

    With resume=True, stages whose artifacts already exist in the output
    directory (feature tensor, causal edges, prediction) are loaded
    instead of recomputed; the manifest must match the configuration.
    """
    out_dir = out_dir if out_dir is not None else data_dir
    os.makedirs(out_dir, exist_ok=True)
    topology = _load_run_topology(data_dir)
    model = load_gat(os.path.join(model_dir, runio.GAT_MODEL_FILE))
    _write_manifest(config, out_dir, resume=resume)
    timer = StageTimer()
    run_id = run_id_for(config)

    tensor_bin = os.path.join(out_dir, runio.TENSOR_FILE)
    schema = os.path.join(out_dir, runio.SCHEMA_FILE)
    with timer.measure("preprocess"):
        if resume and os.path.exists(tensor_bin) and os.path.exists(schema):
            tensor = load_tensor(tensor_bin, schema)
        else:
            metrics = runio.read_jsonl(os.path.join(data_dir, runio.METRICS_FILE))
            logs = runio.read_jsonl(os.path.join(data_dir, runio.LOGS_FILE))
            spans = runio.read_jsonl(os.path.join(data_dir, runio.SPANS_FILE))
            tensor = build_tensor(config, metrics, logs, spans, topology)
            save_tensor(tensor, tensor_bin, schema)

    edges_path = os.path.join(out_dir, runio.EDGES_FILE)
    with timer.measure("causal"):
        if resume and os.path.exists(edges_path):
            edge_set = CausalEdgeSet.from_records(runio.read_jsonl(edges_path))
        else:
            causal, entity_series = discover_causal(config, tensor, topology)
            edge_set = retained_edges(config, causal, entity_series)
            runio.write_jsonl(edges_path, edge_set.to_records())

    with timer.measure("graph"):
        graph = assemble_graph(config, tensor, topology, edge_set)
        if graph.features.shape[1] != model.in_dim:
            raise DataError(
                f"model expects {model.in_dim} node features, data yields "
                f"{graph.features.shape[1]}; retrain on matching telemetry"
            )
        prediction = predict(model, graph)
        # Rank and chain over the discovered edges plus the deployment
        # relations between flagged entities, so propagation steps whose
        # temporal signature was too weak to orient still appear with
        # the direction the system structure dictates.
        propagation_set = replace(
            edge_set,
            edges=edge_set.edges
            + transmission_edges(
                topology,
                prediction,
                _onset_windows(tensor),
                edge_set.pairs(),
                include_cross_level=not config.disable_cross_level,
            ),
        )
        ranking = _rank_entities(config, propagation_set, prediction, tensor.entities)

    with timer.measure("explain"):
        chain = build_causal_chain(
            propagation_set,
            ranking,
            prediction.flagged,
            window_origin_s=0.0,
            stride_s=tensor.stride_s,
        )
        predicted_entities = chain.entities
        importances = []
        if not config.disable_mask_explanation and (prediction.flagged or chain.root):
            by_prob = sorted(
                prediction.flagged,
                key=lambda e: (-prediction.fault_prob[prediction.nodes.index(e)], e),
            )
            # The root cause leads the report even when its own flag
            # stayed under threshold or other entities have higher fault
            # probabilities, so its table always comes first.
            if chain.root is not None:
                if chain.root in by_prob:
                    by_prob.remove(chain.root)
                by_prob.insert(0, chain.root)
            names = node_feature_names(tensor)
            for entity in by_prob[:MAX_IMPORTANCE_ENTITIES]:
                importances.append(
                    mask_importance(
                        model,
                        graph,
                        entity,
                        names,
                        trials=config.mask_trials,
                        mask_prob=config.mask_prob,
                        seed=config.seed,
                    )
                )
        report = DiagnosticReport(
            run_id=run_id,
            prediction=prediction,
            ranking=ranking,
            chain=chain,
            importances=importances,
            topology=topology,
        )

    with timer.measure("write"):
        prediction_records: list[dict] = [{"kind": "meta", "run_id": run_id}]
        prediction_records += [
            {"kind": "entity", **rec} for rec in prediction.to_records()
        ]
        prediction_records.append({
            "kind": "ranking",
            "ranking": [[e, float(s)] for e, s in ranking],
        })
        prediction_records.append({
            "kind": "localization",
            "root": chain.root,
            "predicted": sorted(predicted_entities),
            "flagged": list(prediction.flagged),
        })
        runio.write_jsonl(os.path.join(out_dir, runio.PREDICTION_FILE), prediction_records)
        report_records = report.to_records()
        runio.write_jsonl(os.path.join(out_dir, runio.REPORT_JSON_FILE), report_records)
        runio.write_text(os.path.join(out_dir, runio.REPORT_TEXT_FILE), report.render_text())
        write_chain_csv(chain, topology, os.path.join(out_dir, runio.CHAIN_CSV_FILE))
    timer.write(os.path.join(out_dir, runio.TIMINGS_FILE))

    return Diagnosis(
        run_id=run_id,
        tensor=tensor,
        edge_set=edge_set,
        prediction=prediction,
        ranking=ranking,
        chain=chain,
        predicted_entities=predicted_entities,
        report=report,
        timings=dict(timer.timings),
    )


# ----------------------------------------------------------------------
# evaluate

def _base_feature_name(feature: str) -> str:
    parts = feature.split(".")
    if len(parts) >= 3 and parts[1] == "met":
        return parts[2]
    if len(parts) >= 2 and parts[1] == "log":
        return "logs"
    if len(parts) >= 2 and parts[1] == "trc":
        return "traces"
    return feature


def _truth_root(truth: GroundTruth) -> str | None:
    if truth.chain:
        return truth.chain[0][1]
    if truth.faulty_entities:
        return sorted(truth.faulty_entities)[0]
    return None


def evaluate_run(run_dir: str, data_dir: str | None = None) -> dict[str, float | int | None]:
    """Metrics for one diagnosed run directory against its ground truth."""
    data_dir = data_dir if data_dir is not None else run_dir
    truth_recs = runio.read_jsonl(os.path.join(data_dir, runio.TRUTH_FILE))
    if not truth_recs:
        raise DataError(f"{data_dir}: empty ground truth file")
    truth = GroundTruth.from_record(truth_recs[0])
    topology = _load_run_topology(data_dir)

    pred_records = runio.read_jsonl(os.path.join(run_dir, runio.PREDICTION_FILE))
    report_records = runio.read_jsonl(os.path.join(run_dir, runio.REPORT_JSON_FILE))

    localization = next(
        (r for r in pred_records if r.get("kind") == "localization"), None
    )
    if localization is None:
        raise DataError(f"{run_dir}: prediction file lacks a localization record")
    entity_recs = {r["entity"]: r for r in pred_records if r.get("kind") == "entity"}
    predicted = set(localization["predicted"])
    flagged = set(localization["flagged"])
    root = localization["root"]

    # fault-type predictions for entities the pipeline called out
    predicted_types: dict[str, str] = {}
    for entity in predicted | flagged:
        rec = entity_recs.get(entity)
        if rec is None:
            continue
        catalog = FAULT_CATALOG[topology.level_of(entity)]
        predicted_types[entity] = catalog[int(np.argmax(rec["type_dist"]))].value
    actual_types = {e: f.value for e, f in truth.fault_types.items()}

    precision, recall, f1 = localization_prf(predicted, set(truth.faulty_entities))
    macro, micro = type_f1(predicted_types, actual_types)

    propagation = next(
        (r for r in report_records if r.get("kind") == "propagation"), None
    )
    if propagation is None:
        raise DataError(f"{run_dir}: report file lacks a propagation record")
    predicted_edges = {(e["source"], e["target"]) for e in propagation["edges"]}
    actual_edges = {(a, b) for _, a, b in truth.chain}
    cca = causal_chain_accuracy(predicted_edges, actual_edges)

    fia: float | None = None
    if truth.key_features:
        fia = 0.0
        table = next(
            (r for r in report_records
             if r.get("kind") == "importance" and r["entity"] == root),
            None,
        )
        if table is not None and root in truth.key_features:
            ranked_bases: list[str] = []
            for name in table["features"]:
                base = _base_feature_name(name)
                if base not in ranked_bases:
                    ranked_bases.append(base)
            fia = feature_importance_accuracy(
                ranked_bases, set(truth.key_features[root])
            )

    truth_root = _truth_root(truth)
    return {
        "localization_precision": precision,
        "localization_recall": recall,
        "localization_f1": f1,
        "type_macro_f1": macro,
        "type_micro_f1": micro,
        "causal_chain_accuracy": cca,
        "feature_importance_accuracy": fia,
        "root_top1": int(root == truth_root),
        "n_predicted": len(predicted),
        "n_actual": len(truth.faulty_entities),
    }


_MEAN_KEYS = (
    "localization_precision",
    "localization_recall",
    "localization_f1",
    "type_macro_f1",
    "type_micro_f1",
    "causal_chain_accuracy",
    "feature_importance_accuracy",
    "root_top1",
)


def run_evaluate(run_dirs: list[str], out_path: str | None = None) -> EvalResult:
    """Aggregate metrics over run directories; optionally write eval.txt."""
    if not run_dirs:
        raise DataError("no run directories to evaluate")
    result = EvalResult()
    result.put("n_runs", len(run_dirs))
    per_run = [evaluate_run(d) for d in run_dirs]
    for idx, metrics in enumerate(per_run):
        prefix = f"run{idx}." if len(per_run) > 1 else ""
        for key, value in metrics.items():
            result.put(prefix + key, value)
    if len(per_run) > 1:
        for key in _MEAN_KEYS:
            values = [m[key] for m in per_run if m[key] is not None]
            result.put(
                "mean." + key,
                sum(values) / len(values) if values else None,
            )
    if out_path is not None:
        runio.write_text(out_path, result.render())
    return result


def load_model_config(model_dir: str) -> RunConfig:
    """Configuration the model was trained under (manifest in model dir)."""
    return parse_manifest(runio.read_text(os.path.join(model_dir, runio.MANIFEST_FILE)))
