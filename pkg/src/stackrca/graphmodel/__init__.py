from .hetgraph import EDGE_TYPES, NODE_TYPES, HetGraph, build_hetgraph
from .gat import (
    FLAG_THRESHOLD,
    GatModel,
    GraphLabels,
    Prediction,
    attention_forward,
    fault_probabilities,
    init_gat,
    load_gat,
    loss_and_grads,
    predict,
    save_gat,
    train_gat,
)

__all__ = [
    "EDGE_TYPES",
    "FLAG_THRESHOLD",
    "GatModel",
    "GraphLabels",
    "HetGraph",
    "NODE_TYPES",
    "Prediction",
    "attention_forward",
    "build_hetgraph",
    "fault_probabilities",
    "init_gat",
    "load_gat",
    "loss_and_grads",
    "predict",
    "save_gat",
    "train_gat",
]
