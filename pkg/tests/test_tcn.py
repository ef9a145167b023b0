"""Dilated temporal-convolution autoencoder: gradient correctness,
training progress, and causal (no-lookahead) structure."""

from __future__ import annotations

import numpy as np
import pytest

from stackrca.causal import fit_tcn_autoencoder, init_tcn


def _series(T=60, F=3, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(T)
    base = np.column_stack(
        [np.sin(t / 7.0), np.cos(t / 11.0), 0.02 * t]
    )[:, :F]
    return base + 0.05 * rng.standard_normal((T, F))


def test_tcn_gradients_match_finite_differences():
    series = _series()
    model = init_tcn(n_features=3, latent_dim=2, channels=3, seed=1)
    rng = np.random.default_rng(2)
    for k in model.params:
        model.params[k] = rng.standard_normal(model.params[k].shape) * 0.3
    _, grads = model.gradients(series)
    eps = 1e-6
    checked = 0
    worst = 0.0
    rng2 = np.random.default_rng(3)
    for name, arr in model.params.items():
        flat = arr.reshape(-1)
        take = min(8, flat.size)
        for i in rng2.choice(flat.size, size=take, replace=False):
            orig = flat[i]
            flat[i] = orig + eps
            lp = model.loss(series)
            flat[i] = orig - eps
            lm = model.loss(series)
            flat[i] = orig
            fd = (lp - lm) / (2 * eps)
            an = grads[name].reshape(-1)[i]
            if fd == 0.0 and an == 0.0:
                continue
            rel = abs(fd - an) / max(abs(fd), abs(an))
            worst = max(worst, rel)
            checked += 1
    assert checked >= 50
    assert worst < 1e-4, f"worst relative error {worst:.2e} over {checked} coords"


def test_training_reduces_loss():
    series = _series(seed=4)
    model = fit_tcn_autoencoder(series, latent_dim=2, epochs=60, seed=5)
    assert len(model.loss_history) >= 2
    assert model.loss_history[-1] < model.loss_history[0]


def test_prediction_is_causal():
    # prediction at step t must not depend on values at steps >= t:
    # changing the future leaves earlier predictions untouched
    series = _series(seed=6)
    model = fit_tcn_autoencoder(series, latent_dim=2, epochs=10, seed=7)
    pred_full = model.predict(series)
    tampered = series.copy()
    tampered[40:, :] += 100.0
    pred_tampered = model.predict(tampered)
    assert np.allclose(pred_full[: 40 - model.lag], pred_tampered[: 40 - model.lag])


def test_prediction_losses_per_step_and_feature():
    series = _series(seed=8)
    model = fit_tcn_autoencoder(series, latent_dim=2, epochs=5, seed=9)
    losses = model.prediction_losses(series)
    assert losses.shape == (series.shape[0] - model.lag, series.shape[1])
    assert np.all(losses >= 0.0)
