"""Dilated-causal-convolution autoencoder with a latent one-step forecaster.

Encoder: one causal conv layer per kernel scale (tanh, dilation 1, left
zero padding so output t sees only input <= t), channels concatenated
and linearly projected to the latent dim.  A latent transition matrix
provides one-step forecasts; a linear decoder maps latent vectors back
to feature space.  Loss is reconstruction MSE plus the latent forecast
MSE.

Gradients are derived by hand below and checked against central finite
differences in the test suite; training is plain full-batch gradient
descent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .latentvar import FitError

DEFAULT_KERNELS = (3, 5, 7)


def _shifted(x: np.ndarray, back: int) -> np.ndarray:
    """x delayed by `back` steps, zero-filled at the head."""
    if back == 0:
        return x
    out = np.zeros_like(x)
    out[back:] = x[:-back]
    return out


@dataclass
class TcnAutoencoder:
    params: dict[str, np.ndarray]
    kernel_sizes: tuple[int, ...]
    channels: int
    latent_dim: int
    n_features: int
    beta: float = 1.0
    loss_history: list[float] = field(default_factory=list)
    lag: int = 1

    # ------------------------------------------------------------------
    def _encode(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        cache: dict[str, np.ndarray] = {}
        parts = []
        for k in self.kernel_sizes:
            w, b = self.params[f"w{k}"], self.params[f"b{k}"]
            s = np.tile(b, (x.shape[0], 1))
            for tau in range(k):
                s += _shifted(x, k - 1 - tau) @ w[tau]
            h = np.tanh(s)
            cache[f"h{k}"] = h
            parts.append(h)
        hcat = np.concatenate(parts, axis=1)
        cache["hcat"] = hcat
        z = hcat @ self.params["wz"] + self.params["bz"]
        cache["z"] = z
        return z, cache

    def encode(self, series: np.ndarray) -> np.ndarray:
        return self._encode(np.asarray(series, dtype=float))[0]

    def predict(self, series: np.ndarray) -> np.ndarray:
        """One-step forecasts for t in [1, T), shape (T-1, n)."""
        x = np.asarray(series, dtype=float)
        if x.shape[0] < 2:
            raise FitError("need at least two steps to forecast")
        z, _ = self._encode(x)
        zhat = z[:-1] @ self.params["a"]
        return zhat @ self.params["wd"] + self.params["bd"]

    def prediction_losses(self, series: np.ndarray) -> np.ndarray:
        x = np.asarray(series, dtype=float)
        return (self.predict(x) - x[1:]) ** 2

    def reconstruct(self, series: np.ndarray) -> np.ndarray:
        z, _ = self._encode(np.asarray(series, dtype=float))
        return z @ self.params["wd"] + self.params["bd"]

    # ------------------------------------------------------------------
    def loss(self, series: np.ndarray) -> float:
        x = np.asarray(series, dtype=float)
        z, _ = self._encode(x)
        recon = z @ self.params["wd"] + self.params["bd"]
        lrec = float(((recon - x) ** 2).mean())
        err = z[1:] - z[:-1] @ self.params["a"]
        lvar = float((err ** 2).mean())
        return lrec + self.beta * lvar

    def gradients(self, series: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
        """Analytic gradient of loss() for every parameter."""
        x = np.asarray(series, dtype=float)
        t, n = x.shape
        p = self.params
        z, cache = self._encode(x)
        grads = {name: np.zeros_like(arr) for name, arr in p.items()}

        recon = z @ p["wd"] + p["bd"]
        diff = recon - x
        lrec = float((diff ** 2).mean())
        ddiff = 2.0 * diff / diff.size

        err = z[1:] - z[:-1] @ p["a"]
        lvar = float((err ** 2).mean())
        derr = 2.0 * self.beta * err / err.size

        grads["wd"] = z.T @ ddiff
        grads["bd"] = ddiff.sum(axis=0)
        dz = ddiff @ p["wd"].T
        dz[1:] += derr
        dz[:-1] -= derr @ p["a"].T
        grads["a"] = -(z[:-1].T @ derr)

        hcat = cache["hcat"]
        grads["wz"] = hcat.T @ dz
        grads["bz"] = dz.sum(axis=0)
        dh = dz @ p["wz"].T

        col = 0
        for k in self.kernel_sizes:
            h = cache[f"h{k}"]
            ds = dh[:, col:col + self.channels] * (1.0 - h * h)
            col += self.channels
            for tau in range(k):
                grads[f"w{k}"][tau] = _shifted(x, k - 1 - tau).T @ ds
            grads[f"b{k}"] = ds.sum(axis=0)

        return lrec + self.beta * lvar, grads


def init_tcn(
    n_features: int,
    latent_dim: int,
    kernel_sizes: tuple[int, ...] = DEFAULT_KERNELS,
    channels: int = 4,
    beta: float = 1.0,
    seed: int = 0,
) -> TcnAutoencoder:
    if any(k % 2 == 0 or k < 1 for k in kernel_sizes):
        raise ValueError(f"kernel sizes must be odd and positive, got {kernel_sizes}")
    if latent_dim < 1 or channels < 1:
        raise ValueError("latent_dim and channels must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x7C4]))
    params: dict[str, np.ndarray] = {}
    for k in kernel_sizes:
        params[f"w{k}"] = rng.standard_normal((k, n_features, channels)) / np.sqrt(k * n_features)
        params[f"b{k}"] = np.zeros(channels)
    cat = channels * len(kernel_sizes)
    params["wz"] = rng.standard_normal((cat, latent_dim)) / np.sqrt(cat)
    params["bz"] = np.zeros(latent_dim)
    params["a"] = np.eye(latent_dim) * 0.5
    params["wd"] = rng.standard_normal((latent_dim, n_features)) / np.sqrt(latent_dim)
    params["bd"] = np.zeros(n_features)
    return TcnAutoencoder(params, tuple(kernel_sizes), channels, latent_dim, n_features, beta)


def fit_tcn_autoencoder(
    series: np.ndarray,
    latent_dim: int | None = None,
    kernel_sizes: tuple[int, ...] = DEFAULT_KERNELS,
    channels: int = 4,
    beta: float = 1.0,
    learning_rate: float = 0.3,
    epochs: int = 200,
    seed: int = 0,
) -> TcnAutoencoder:
    """Gradient-descent fit; loss history is stored on the model.

    Raises FitError if the loss ever goes non-finite (divergence), naming
    the epoch it happened at.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 2:
        raise FitError("series must be a (T, n) matrix")
    t, n = x.shape
    if t < max(kernel_sizes) + 2:
        raise FitError(f"series of length {t} too short for kernels {kernel_sizes}")
    d = min(n, 8) if latent_dim is None else latent_dim
    model = init_tcn(n, d, kernel_sizes, channels, beta, seed)
    for epoch in range(epochs):
        loss, grads = model.gradients(x)
        if not np.isfinite(loss):
            raise FitError(f"training diverged at epoch {epoch}: loss non-finite")
        model.loss_history.append(loss)
        for name, g in grads.items():
            model.params[name] -= learning_rate * g
    return model
