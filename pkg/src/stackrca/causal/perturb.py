"""Perturbation-based temporal causal strength.

The strength of i -> j at step t is the relative increase of the
predictor's squared error on feature j at t when feature i's history is
scrambled:

    C(i -> j, t) = (loss_perturbed - loss_original) / loss_original

The perturbation shuffles i's series inside contiguous chronological
segments, so the value multiset is preserved while temporal order is
destroyed.  Strengths are averaged over independent shuffles.

The denominator gets a floor of max(1e-8, floor_frac * mean original
loss): single time steps where the predictor happens to be near-exact
would otherwise blow the ratio up arbitrarily.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

EPS_LOSS = 1e-8


class TemporalPredictor(Protocol):
    lag: int

    def predict(self, series: np.ndarray) -> np.ndarray: ...


def perturb_segmented(
    series: np.ndarray, n_segments: int, rng: np.random.Generator
) -> np.ndarray:
    """Shuffle values within n_segments contiguous chunks of a 1-d series."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("perturb_segmented expects a 1-d series")
    if n_segments < 1:
        raise ValueError(f"segment count must be >= 1, got {n_segments}")
    out = x.copy()
    bounds = np.linspace(0, x.size, n_segments + 1).astype(int)
    for a, b in zip(bounds[:-1], bounds[1:]):
        if b - a > 1:
            out[a:b] = rng.permutation(out[a:b])
    return out


@dataclass
class StrengthSeries:
    per_step: np.ndarray    # (T - lag,)
    mean: float


def _losses_for_source(
    predictor: TemporalPredictor,
    series: np.ndarray,
    source: int,
    repeats: int,
    n_segments: int,
    rng: np.random.Generator,
    perturb_fn: Callable[[np.ndarray, int, np.random.Generator], np.ndarray],
) -> np.ndarray:
    """Mean perturbed per-step losses against the original targets, (T-lag, n)."""
    target_rows = series[predictor.lag:]
    acc = np.zeros_like(target_rows)
    for _ in range(repeats):
        perturbed = series.copy()
        perturbed[:, source] = perturb_fn(series[:, source], n_segments, rng)
        acc += (predictor.predict(perturbed) - target_rows) ** 2
    return acc / repeats


def _ratio(base: np.ndarray, perturbed: np.ndarray, floor: float) -> np.ndarray:
    return (perturbed - base) / np.maximum(base, floor)


def _loss_floor(base: np.ndarray, floor_frac: float) -> float:
    """Denominator floor shared by every target of one series matrix.

    Relative loss change is meaningless on a target the predictor already
    fits almost perfectly: division by its tiny base loss turns numeric
    jitter into huge ratios.  Flooring by a fraction of the mean base
    loss over *all* targets keeps ratios comparable across targets while
    leaving pairs with healthy base losses untouched.
    """
    return max(EPS_LOSS, floor_frac * float(base.mean()))


def causal_strength(
    predictor: TemporalPredictor,
    series: np.ndarray,
    source: int,
    target: int,
    repeats: int = 10,
    n_segments: int = 4,
    seed: int = 0,
    floor_frac: float = 0.1,
    perturb_fn: Callable[[np.ndarray, int, np.random.Generator], np.ndarray] | None = None,
) -> StrengthSeries:
    """Per-step and mean causal strength of one ordered feature pair.

    The predictor must have been fitted on this very series matrix.
    source == target is rejected here; self-sensitivity is available
    through strength_matrix.
    """
    x = np.asarray(series, dtype=float)
    if source == target:
        raise ValueError("source and target must differ")
    n = x.shape[1]
    if not (0 <= source < n and 0 <= target < n):
        raise ValueError(f"feature index out of range for {n} features")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed, source, 0xC5]))
    fn = perturb_fn or perturb_segmented
    base = (predictor.predict(x) - x[predictor.lag:]) ** 2
    pert = _losses_for_source(predictor, x, source, repeats, n_segments, rng, fn)
    floor = _loss_floor(base, floor_frac)
    c = _ratio(base[:, target], pert[:, target], floor)
    return StrengthSeries(per_step=c, mean=float(c.mean()))


def strength_matrix(
    predictor: TemporalPredictor,
    series: np.ndarray,
    repeats: int = 10,
    n_segments: int = 4,
    seed: int = 0,
    floor_frac: float = 0.1,
    include_self: bool = True,
) -> np.ndarray:
    """All ordered pair strengths, shape (n, n, T - lag).

    Entry [i, i] is the self-sensitivity of feature i: how much its own
    forecast degrades when its history is scrambled.  It quantifies how
    much exploitable temporal structure the series carries and is what
    cross-level transmission scales by the association degree.
    """
    x = np.asarray(series, dtype=float)
    t, n = x.shape
    base = (predictor.predict(x) - x[predictor.lag:]) ** 2
    floor = _loss_floor(base, floor_frac)
    out = np.zeros((n, n, t - predictor.lag))
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i, 0xC5]))
        pert = _losses_for_source(
            predictor, x, i, repeats, n_segments, rng, perturb_segmented
        )
        for j in range(n):
            if i == j and not include_self:
                continue
            out[i, j] = _ratio(base[:, j], pert[:, j], floor)
    return out
