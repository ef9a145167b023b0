"""Scalar series cleanup and per-window derived metric features."""

from __future__ import annotations

import numpy as np

# fixed order; downstream schema and masking rely on it
METRIC_FEATURE_NAMES = (
    "mean",
    "variance",
    "min",
    "max",
    "last",
    "growth_rate",
    "slope",
    "range",
    "autocorr1",
    "spike_count",
    "energy",
    "change_rate",
)
N_METRIC_FEATURES = len(METRIC_FEATURE_NAMES)


def denoise(series: np.ndarray, window: int = 3) -> np.ndarray:
    """Centered moving average; the window shrinks near the edges."""
    if window < 1 or window % 2 == 0:
        raise ValueError(f"denoise window must be odd and >= 1, got {window}")
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("denoise expects a 1-d series")
    if window == 1 or x.size == 0:
        return x.copy()
    half = window // 2
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(x.size)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, x.size)
    return (csum[hi] - csum[lo]) / (hi - lo)


def normalize_zscore(series: np.ndarray) -> np.ndarray:
    """Population z-score; an all-constant series maps to zeros."""
    x = np.asarray(series, dtype=float)
    std = float(x.std())
    if std == 0.0 or not np.isfinite(std):
        return np.zeros_like(x)
    return (x - x.mean()) / std


def segment_windows(
    n_samples: int, window_s: float, stride_s: float, tick_s: float
) -> list[tuple[int, int]]:
    """Index ranges [start, stop) of every full window over a tick grid.

    Partial trailing windows are discarded.  Raises when the series is
    shorter than one window.
    """
    if min(window_s, stride_s, tick_s) <= 0:
        raise ValueError("window, stride and tick must be positive")
    if window_s < tick_s:
        raise ValueError(f"window {window_s}s shorter than tick {tick_s}s")
    w = max(1, int(round(window_s / tick_s)))
    s = max(1, int(round(stride_s / tick_s)))
    if n_samples < w:
        raise ValueError(f"series of {n_samples} samples shorter than one {w}-sample window")
    return [(start, start + w) for start in range(0, n_samples - w + 1, s)]


def derive_metric_features(
    window_values: np.ndarray,
    tick_s: float = 1.0,
    prev_mean: float | None = None,
) -> np.ndarray:
    """The 12 summary features of one window, in METRIC_FEATURE_NAMES order.

    growth_rate is (last - first) / window duration, slope the
    least-squares trend per second, spike_count the number of samples
    above mean + 3 std, and change_rate the relative shift of this
    window's mean against the previous one (0 for the first window).
    """
    x = np.asarray(window_values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("derive_metric_features expects a non-empty 1-d window")
    n = x.size
    mean = float(x.mean())
    var = float(x.var())
    std = var ** 0.5
    lo = float(x.min())
    hi = float(x.max())
    duration = n * tick_s

    growth = (float(x[-1]) - float(x[0])) / duration
    if n > 1:
        t = np.arange(n) * tick_s
        tc = t - t.mean()
        denom = float(tc @ tc)
        slope = float(tc @ (x - mean)) / denom if denom > 0 else 0.0
    else:
        slope = 0.0
    if n > 1 and var > 0:
        d = x - mean
        autocorr = float(d[:-1] @ d[1:]) / (n * var)
    else:
        autocorr = 0.0
    spikes = float(np.count_nonzero(x > mean + 3.0 * std)) if std > 0 else 0.0
    energy = float((x * x).mean())
    if prev_mean is None:
        change = 0.0
    else:
        change = (mean - prev_mean) / max(abs(prev_mean), 1e-8)

    return np.array([
        mean, var, lo, hi, float(x[-1]),
        growth, slope, hi - lo, autocorr, spikes, energy, change,
    ])
