"""Run configuration: defaults, INI files, and command-line overrides.

Precedence is defaults < INI file < explicit overrides.  The full
effective configuration is rendered into the run manifest so a run can
be reproduced from its output directory alone.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields

CONFIG_SECTION = "stackrca"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # simulation
    template: str = "host-cpu-spike"
    seed: int = 0
    duration_s: float = 600.0
    injection_s: float = 300.0
    tick_s: float = 1.0

    # preprocessing
    window_s: float = 5.0
    stride_s: float = 5.0
    denoise_window: int = 3
    top_k_templates: int = 5
    template_similarity: float = 0.5
    template_depth: int = 4
    trace_sampling_rate: float = 1.0
    fusion_mode: str = "attention"

    # causal discovery
    predictor: str = "var"          # "var" or "tcn"
    var_lag: int = 4
    latent_dim: int = 0             # 0 = choose automatically
    ridge: float = 150.0
    repeats: int = 10
    n_segments: int = 4
    floor_frac: float = 0.1
    edge_threshold: float = 0.3
    mi_bins: int = 8
    mi_cutoff: float = 0.01
    use_mi_filter: bool = True
    tcn_epochs: int = 200
    tcn_learning_rate: float = 0.3
    tcn_beta: float = 1.0
    tcn_channels: int = 4

    # graph model
    gat_hidden: int = 16
    gat_heads: int = 2
    gat_layers: int = 2
    gat_learning_rate: float = 0.1
    gat_epochs: int = 300
    gat_patience: int = 10
    train_scenarios_per_template: int = 6

    # ranking
    damping: float = 0.85
    pagerank_tol: float = 1e-9
    half_life_windows: float = 0.0  # 0 = horizon / 3

    # explanation
    mask_trials: int = 32
    mask_prob: float = 0.5

    # ablation switches
    disable_cross_level: bool = False
    disable_type_attention: bool = False
    disable_modal_attention: bool = False
    disable_mask_explanation: bool = False

    def validate(self) -> None:
        if self.predictor not in ("var", "tcn"):
            raise ConfigError(f"predictor must be 'var' or 'tcn', got {self.predictor!r}")
        if self.fusion_mode not in ("attention", "equal"):
            raise ConfigError(
                f"fusion_mode must be 'attention' or 'equal', got {self.fusion_mode!r}"
            )
        for name in ("duration_s", "tick_s", "window_s", "stride_s"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.disable_modal_attention:
            self.fusion_mode = "equal"


_BOOL_WORDS = {
    "1": True, "true": True, "yes": True, "on": True,
    "0": False, "false": False, "no": False, "off": False,
}


def _coerce(name: str, kind: type, raw: str):
    raw = raw.strip()
    if kind is bool:
        try:
            return _BOOL_WORDS[raw.lower()]
        except KeyError:
            raise ConfigError(f"{name}: expected a boolean, got {raw!r}") from None
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: expected {kind.__name__}, got {raw!r}") from None
    return raw


def _field_types() -> dict[str, type]:
    types = {}
    for f in fields(RunConfig):
        default = getattr(RunConfig, f.name)
        types[f.name] = type(default)
    return types


def apply_overrides(config: RunConfig, pairs: list[str]) -> RunConfig:
    """Apply `key=value` strings in order; unknown keys are errors."""
    types = _field_types()
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, _, raw = pair.partition("=")
        key = key.strip()
        if key not in types:
            raise ConfigError(f"unknown configuration key {key!r}")
        setattr(config, key, _coerce(key, types[key], raw))
    return config


def load_config(path: str | None = None, overrides: list[str] | None = None) -> RunConfig:
    config = RunConfig()
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read configuration file {path!r}")
        if parser.has_section(CONFIG_SECTION):
            section = parser[CONFIG_SECTION]
        else:
            section = parser.defaults()
        types = _field_types()
        for key in section:
            if key not in types:
                raise ConfigError(f"{path}: unknown configuration key {key!r}")
            setattr(config, key, _coerce(key, types[key], section[key]))
    if overrides:
        apply_overrides(config, overrides)
    config.validate()
    return config


def render_config(config: RunConfig) -> str:
    """Deterministic `key = value` block, one line per field, sorted."""
    lines = [f"[{CONFIG_SECTION}]"]
    for name in sorted(f.name for f in fields(RunConfig)):
        value = getattr(config, name)
        if isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{name} = {rendered}")
    return "\n".join(lines) + "\n"


def parse_manifest(text: str) -> RunConfig:
    """Inverse of render_config (ignores unknown lines)."""
    config = RunConfig()
    types = _field_types()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("[") or "=" not in line:
            continue
        key, _, raw = line.partition("=")
        key = key.strip()
        if key in types:
            setattr(config, key, _coerce(key, types[key], raw))
    config.validate()
    return config
