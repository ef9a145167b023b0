"""Type-aware graph attention for fault localization and classification.

Attention over a node's neighborhood combines three signals: content
attention between the transformed endpoint features, a learned logit
offset per neighbor node type, and a learned logit offset per relation
type.  Exponentiating the summed logits makes the latter two act as
multiplicative type and relation weights on the content attention.
Node type embeddings are additionally added to the input features.

Two output heads sit on the final node embeddings: a sigmoid fault
probability per node, and a per-level softmax over that level's fault
catalog.  All gradients are derived by hand (see loss_and_grads) and
verified against finite differences in the tests.

Neighborhoods are stored padded to a rectangle so every layer is plain
array algebra; padded slots carry -inf logits and never attract weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..runio import format_float
from ..scenarios import FAULT_CATALOG
from ..topology import Level
from .hetgraph import EDGE_TYPES, NODE_TYPES, HetGraph

LEAKY_SLOPE = 0.2
FLAG_THRESHOLD = 0.5
N_RELATION_SLOTS = len(EDGE_TYPES) + 1   # + self-loop slot
_CLIP = 1e-12

TYPE_HEAD_SIZES = {
    "host": len(FAULT_CATALOG[Level.HOST]),
    "pod": len(FAULT_CATALOG[Level.POD]),
    "service": len(FAULT_CATALOG[Level.SERVICE]),
}


def _sigmoid(x):
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _leaky(x):
    return np.where(x > 0, x, LEAKY_SLOPE * x)


def _dleaky(x):
    return np.where(x > 0, 1.0, LEAKY_SLOPE)


@dataclass
class _Padded:
    nb: np.ndarray      # (N, K) neighbor index, 0-padded
    rel: np.ndarray     # (N, K) relation slot, 0-padded
    mask: np.ndarray    # (N, K) bool, True on real entries


def _padded_neighbors(graph: HetGraph) -> _Padded:
    cached = getattr(graph, "_padded_cache", None)
    if cached is not None:
        return cached
    entries = graph.neighbor_entries()
    k = max(len(e) for e in entries)
    n = graph.n_nodes
    nb = np.zeros((n, k), dtype=int)
    rel = np.zeros((n, k), dtype=int)
    mask = np.zeros((n, k), dtype=bool)
    for v, ent in enumerate(entries):
        for j, (u, r) in enumerate(ent):
            nb[v, j], rel[v, j], mask[v, j] = u, r, True
    pad = _Padded(nb, rel, mask)
    graph._padded_cache = pad   # type: ignore[attr-defined]
    return pad


@dataclass
class GatModel:
    params: dict[str, np.ndarray]
    n_layers: int
    n_heads: int
    hidden: int
    in_dim: int
    feat_mean: np.ndarray
    feat_std: np.ndarray
    disable_type_attention: bool = False
    loss_history: list[float] = field(default_factory=list)

    @property
    def head_dim(self) -> int:
        return self.hidden // self.n_heads

    def standardize(self, features: np.ndarray) -> np.ndarray:
        return (features - self.feat_mean) / self.feat_std


def init_gat(
    in_dim: int,
    hidden: int = 16,
    n_heads: int = 2,
    n_layers: int = 2,
    seed: int = 0,
    disable_type_attention: bool = False,
) -> GatModel:
    if hidden % n_heads != 0:
        raise ValueError(f"hidden {hidden} not divisible by {n_heads} heads")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x6A7]))
    m = hidden // n_heads
    params: dict[str, np.ndarray] = {
        "type_emb": rng.standard_normal((len(NODE_TYPES), in_dim)) * 0.1,
    }
    for layer in range(n_layers):
        d_in = in_dim if layer == 0 else hidden
        for head in range(n_heads):
            p = f"l{layer}h{head}_"
            params[p + "w"] = rng.standard_normal((d_in, m)) / np.sqrt(d_in)
            params[p + "asrc"] = rng.standard_normal(m) / np.sqrt(m)
            params[p + "adst"] = rng.standard_normal(m) / np.sqrt(m)
            params[p + "tau"] = np.zeros(len(NODE_TYPES))
            params[p + "rho"] = np.zeros(N_RELATION_SLOTS)
    rng_out = np.random.default_rng(np.random.SeedSequence([seed, 0x0FF]))
    params["fault_w"] = rng_out.standard_normal(hidden) / np.sqrt(hidden)
    params["fault_b"] = np.zeros(1)
    # Skip connections from a node's own standardized input features to
    # the output heads.  Attention mixes neighborhoods, which lets a
    # heavily-stressed neighbor drown out a node's own signature; the
    # direct path keeps "which of MY features deviate" legible to the
    # heads.  Zero-init so training starts from the pure attention model.
    params["fault_skip"] = np.zeros(in_dim)
    for level, size in TYPE_HEAD_SIZES.items():
        params[f"type_{level}_w"] = rng_out.standard_normal((hidden, size)) / np.sqrt(hidden)
        params[f"type_{level}_b"] = np.zeros(size)
        params[f"type_{level}_skip"] = np.zeros((in_dim, size))
    return GatModel(
        params=params,
        n_layers=n_layers,
        n_heads=n_heads,
        hidden=hidden,
        in_dim=in_dim,
        feat_mean=np.zeros(in_dim),
        feat_std=np.ones(in_dim),
        disable_type_attention=disable_type_attention,
    )


# ----------------------------------------------------------------------
# forward

def attention_forward(
    model: GatModel,
    graph: HetGraph,
    features: np.ndarray | None = None,
    keep_cache: bool = False,
) -> tuple[np.ndarray, list | None]:
    """Final node embeddings (..., N, hidden); optionally the backprop cache.

    `features` overrides the graph's raw feature matrix (used by the
    masking explainer); it is standardized the same way and may carry
    leading batch dimensions, e.g. (B, N, F) evaluates B feature
    variants of the same graph in one pass.
    """
    pad = _padded_neighbors(graph)
    raw_feats = graph.features if features is None else features
    h = model.standardize(raw_feats) + model.params["type_emb"][graph.node_types]
    cache: list = [h] if keep_cache else None
    nb_types = graph.node_types[pad.nb]
    for layer in range(model.n_layers):
        outs = []
        layer_cache = []
        for head in range(model.n_heads):
            p = f"l{layer}h{head}_"
            u = h @ model.params[p + "w"]
            s_src = u @ model.params[p + "asrc"]
            s_dst = u @ model.params[p + "adst"]
            raw = s_src[..., pad.nb] + s_dst[..., :, None]
            logit = _leaky(raw)
            if not model.disable_type_attention:
                logit = logit + model.params[p + "tau"][nb_types]
                logit = logit + model.params[p + "rho"][pad.rel]
            logit = np.where(pad.mask, logit, -np.inf)
            shifted = logit - logit.max(axis=-1, keepdims=True)
            expo = np.exp(shifted)
            alpha = expo / expo.sum(axis=-1, keepdims=True)
            msg = np.einsum("...nk,...nkm->...nm", alpha, u[..., pad.nb, :])
            out = _leaky(msg)
            outs.append(out)
            if keep_cache:
                layer_cache.append({"u": u, "raw": raw, "alpha": alpha,
                                    "msg": msg, "h_in": h})
        h = np.concatenate(outs, axis=-1)
        if keep_cache:
            cache.append(layer_cache)
    return h, cache


@dataclass
class Prediction:
    nodes: list[str]
    fault_prob: np.ndarray
    flagged: list[str]
    type_dist: dict[str, np.ndarray]      # node -> softmax over its level catalog
    levels: list[str]

    def predicted_type(self, node: str) -> int:
        return int(np.argmax(self.type_dist[node]))

    def to_records(self) -> list[dict]:
        recs = []
        for i, node in enumerate(self.nodes):
            recs.append({
                "entity": node,
                "level": self.levels[i],
                "fault_prob": float(self.fault_prob[i]),
                "flagged": node in self.flagged,
                "type_dist": [float(x) for x in self.type_dist[node]],
            })
        return recs


def _softmax_rows(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def fault_probabilities(
    model: GatModel, graph: HetGraph, features: np.ndarray | None = None
) -> np.ndarray:
    """Per-node fault probability, shaped like `features` minus the last axis."""
    emb, _ = attention_forward(model, graph, features)
    x = model.standardize(graph.features if features is None else features)
    logits = (
        emb @ model.params["fault_w"]
        + x @ model.params["fault_skip"]
        + model.params["fault_b"][0]
    )
    return _sigmoid(logits)


def predict(model: GatModel, graph: HetGraph) -> Prediction:
    emb, _ = attention_forward(model, graph)
    x = model.standardize(graph.features)
    logits = (
        emb @ model.params["fault_w"]
        + x @ model.params["fault_skip"]
        + model.params["fault_b"][0]
    )
    prob = _sigmoid(logits)
    flagged = [graph.nodes[i] for i in range(graph.n_nodes) if prob[i] > FLAG_THRESHOLD]
    type_dist: dict[str, np.ndarray] = {}
    levels = [NODE_TYPES[t] for t in graph.node_types]
    for level in NODE_TYPES:
        idx = [i for i, lv in enumerate(levels) if lv == level]
        if not idx:
            continue
        tl = (
            emb[idx] @ model.params[f"type_{level}_w"]
            + x[idx] @ model.params[f"type_{level}_skip"]
            + model.params[f"type_{level}_b"]
        )
        sm = _softmax_rows(tl)
        for row, i in enumerate(idx):
            type_dist[graph.nodes[i]] = sm[row]
    return Prediction(graph.nodes, prob, flagged, type_dist, levels)


# ----------------------------------------------------------------------
# loss and hand-derived gradients

@dataclass
class GraphLabels:
    faulty: set[str]
    fault_class: dict[str, int]   # entity -> index into its level catalog


def loss_and_grads(
    model: GatModel, graph: HetGraph, labels: GraphLabels
) -> tuple[float, dict[str, np.ndarray]]:
    pad = _padded_neighbors(graph)
    nb_types = graph.node_types[pad.nb]
    emb, cache = attention_forward(model, graph, keep_cache=True)
    n = graph.n_nodes
    grads = {k: np.zeros_like(v) for k, v in model.params.items()}

    # fault head: class-balanced binary cross-entropy over all nodes.
    # Faulty nodes are a small minority of each graph; weighting the two
    # classes to equal total mass keeps the head from buying accuracy by
    # under-flagging weak faults.
    y = np.array([1.0 if graph.nodes[i] in labels.faulty else 0.0 for i in range(n)])
    weights = np.ones(n)
    n_pos = y.sum()
    if 0 < n_pos < n:
        weights[y == 1.0] = (n - n_pos) / n_pos
    weights /= weights.sum()
    x = model.standardize(graph.features)
    logits = (
        emb @ model.params["fault_w"]
        + x @ model.params["fault_skip"]
        + model.params["fault_b"][0]
    )
    prob = _sigmoid(logits)
    probc = np.clip(prob, _CLIP, 1.0 - _CLIP)
    loss = float(-(weights * (y * np.log(probc) + (1 - y) * np.log(1 - probc))).sum())
    dlogits = weights * (prob - y)
    grads["fault_w"] = emb.T @ dlogits
    grads["fault_skip"] = x.T @ dlogits
    grads["fault_b"][0] = dlogits.sum()
    demb = np.outer(dlogits, model.params["fault_w"])

    # type heads: cross-entropy on labeled faulty nodes
    levels = [NODE_TYPES[t] for t in graph.node_types]
    labeled = [
        i for i in range(n)
        if graph.nodes[i] in labels.faulty and graph.nodes[i] in labels.fault_class
    ]
    if labeled:
        inv = 1.0 / len(labeled)
        for level in NODE_TYPES:
            idx = [i for i in labeled if levels[i] == level]
            if not idx:
                continue
            w = model.params[f"type_{level}_w"]
            tl = (
                emb[idx] @ w
                + x[idx] @ model.params[f"type_{level}_skip"]
                + model.params[f"type_{level}_b"]
            )
            sm = _softmax_rows(tl)
            targets = np.array([labels.fault_class[graph.nodes[i]] for i in idx])
            picked = np.clip(sm[np.arange(len(idx)), targets], _CLIP, None)
            loss += float(-np.log(picked).sum() * inv)
            dtl = sm.copy()
            dtl[np.arange(len(idx)), targets] -= 1.0
            dtl *= inv
            grads[f"type_{level}_w"] = emb[idx].T @ dtl
            grads[f"type_{level}_skip"] = x[idx].T @ dtl
            grads[f"type_{level}_b"] = dtl.sum(axis=0)
            demb[idx] += dtl @ w.T

    # back through the attention stack
    dh = demb
    m = model.head_dim
    for layer in range(model.n_layers - 1, -1, -1):
        layer_cache = cache[1 + layer]
        h_in = layer_cache[0]["h_in"]
        dh_in = np.zeros_like(h_in)
        for head in range(model.n_heads):
            p = f"l{layer}h{head}_"
            c = layer_cache[head]
            u, alpha, raw = c["u"], c["alpha"], c["raw"]
            dout = dh[:, head * m:(head + 1) * m]
            dmsg = dout * _dleaky(c["msg"])

            u_nb = u[pad.nb]                                   # (N, K, m)
            dalpha = np.einsum("nm,nkm->nk", dmsg, u_nb)
            du = np.zeros_like(u)
            np.add.at(du, pad.nb, alpha[:, :, None] * dmsg[:, None, :])
            inner = (alpha * dalpha).sum(axis=1, keepdims=True)
            dlogit = alpha * (dalpha - inner)                  # zero on padded slots
            if not model.disable_type_attention:
                np.add.at(grads[p + "tau"], nb_types, dlogit)
                np.add.at(grads[p + "rho"], pad.rel, dlogit)
            draw = dlogit * _dleaky(raw)
            ds_src = np.zeros(len(u))
            np.add.at(ds_src, pad.nb, draw)
            ds_dst = draw.sum(axis=1)
            du += np.outer(ds_src, model.params[p + "asrc"])
            du += np.outer(ds_dst, model.params[p + "adst"])
            grads[p + "asrc"] = u.T @ ds_src
            grads[p + "adst"] = u.T @ ds_dst
            grads[p + "w"] = h_in.T @ du
            dh_in += du @ model.params[p + "w"].T
        dh = dh_in
    np.add.at(grads["type_emb"], graph.node_types, dh)
    return loss, grads


# ----------------------------------------------------------------------
# training

def train_gat(
    corpus: list[tuple[HetGraph, GraphLabels]],
    hidden: int = 16,
    n_heads: int = 2,
    n_layers: int = 2,
    learning_rate: float = 0.5,
    epochs: int = 300,
    patience: int = 10,
    validation: list[tuple[HetGraph, GraphLabels]] | None = None,
    seed: int = 0,
    disable_type_attention: bool = False,
) -> GatModel:
    """Full-batch gradient descent with early stopping.

    Monitors validation loss when a validation corpus is given, training
    loss otherwise; stops after `patience` epochs without improvement
    and restores the best parameters seen.
    """
    if not corpus:
        raise ValueError("empty training corpus")
    in_dim = corpus[0][0].features.shape[1]
    model = init_gat(in_dim, hidden, n_heads, n_layers, seed, disable_type_attention)

    stacked = np.concatenate([g.features for g, _ in corpus], axis=0)
    model.feat_mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std[std == 0.0] = 1.0
    model.feat_std = std

    best_loss = np.inf
    best_params = {k: v.copy() for k, v in model.params.items()}
    bad_epochs = 0
    for epoch in range(epochs):
        total = 0.0
        agg = {k: np.zeros_like(v) for k, v in model.params.items()}
        for graph, labels in corpus:
            loss, grads = loss_and_grads(model, graph, labels)
            total += loss
            for k, g in grads.items():
                agg[k] += g
        if not np.isfinite(total):
            raise ValueError(f"training diverged at epoch {epoch}: loss non-finite")
        scale = learning_rate / len(corpus)
        for k, g in agg.items():
            model.params[k] -= scale * g
        if validation:
            mloss = sum(
                loss_and_grads(model, g, l)[0] for g, l in validation
            ) / len(validation)
        else:
            mloss = total / len(corpus)
        model.loss_history.append(mloss)
        if mloss < best_loss - 1e-12:
            best_loss = mloss
            best_params = {k: v.copy() for k, v in model.params.items()}
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= patience:
                break
    model.params = best_params
    return model


# ----------------------------------------------------------------------
# serialization

MODEL_VERSION = 1


def save_gat(model: GatModel, path: str) -> None:
    lines = [
        f"version {MODEL_VERSION}",
        f"layers {model.n_layers}",
        f"heads {model.n_heads}",
        f"hidden {model.hidden}",
        f"in_dim {model.in_dim}",
        f"disable_type_attention {int(model.disable_type_attention)}",
    ]
    buffers = dict(model.params)
    buffers["feat_mean"] = model.feat_mean
    buffers["feat_std"] = model.feat_std
    for name in sorted(buffers):
        arr = np.asarray(buffers[name], dtype=float)
        shape = ",".join(str(s) for s in arr.shape)
        body = " ".join(format_float(x) for x in arr.ravel())
        lines.append(f"param {name} {shape} {body}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_gat(path: str) -> GatModel:
    meta: dict[str, int] = {}
    buffers: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "param":
                name = parts[1]
                shape = tuple(int(s) for s in parts[2].split(",") if s)
                vals = np.array([float(x) for x in parts[3:]])
                buffers[name] = vals.reshape(shape) if shape else vals
            elif parts[0] != "version":
                meta[parts[0]] = int(parts[1])
    feat_mean = buffers.pop("feat_mean")
    feat_std = buffers.pop("feat_std")
    return GatModel(
        params=buffers,
        n_layers=meta["layers"],
        n_heads=meta["heads"],
        hidden=meta["hidden"],
        in_dim=meta["in_dim"],
        feat_mean=feat_mean,
        feat_std=feat_std,
        disable_type_attention=bool(meta.get("disable_type_attention", 0)),
    )
