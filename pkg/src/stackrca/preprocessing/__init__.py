from .series import (
    METRIC_FEATURE_NAMES,
    denoise,
    derive_metric_features,
    normalize_zscore,
    segment_windows,
)
from .logmining import LogTemplate, LogTemplateTable, encode_log_features, mine_log_templates
from .tracefeat import TRACE_FEATURE_NAMES, TraceBlock, build_trace_features
from .tensor import (
    MODALITIES,
    FeatureTensor,
    anomaly_series,
    build_feature_tensor,
    deviation_tensor,
    fuse_modalities,
    level_entities,
    load_tensor,
    save_tensor,
)

__all__ = [
    "METRIC_FEATURE_NAMES",
    "MODALITIES",
    "TRACE_FEATURE_NAMES",
    "FeatureTensor",
    "LogTemplate",
    "LogTemplateTable",
    "TraceBlock",
    "anomaly_series",
    "build_feature_tensor",
    "build_trace_features",
    "denoise",
    "derive_metric_features",
    "deviation_tensor",
    "encode_log_features",
    "fuse_modalities",
    "level_entities",
    "load_tensor",
    "mine_log_templates",
    "normalize_zscore",
    "save_tensor",
    "segment_windows",
]
