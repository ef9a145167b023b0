"""Latent-space vector autoregression.

The series matrix is centered, projected onto its top principal
directions, and a ridge-regularized VAR(p) is fit in that latent space
by closed-form least squares.  Predictions are mapped back through the
(orthonormal) projection, so the model both forecasts and reconstructs
in original feature units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class FitError(ValueError):
    pass


@dataclass
class LatentVar:
    """Fitted predictor state."""
    mean: np.ndarray            # (n,)
    projection: np.ndarray      # (n, d), orthonormal columns
    coeffs: np.ndarray          # (p, d, d); coeffs[l] maps z_{t-1-l} -> z_t
    lag: int
    ridge: float

    @property
    def latent_dim(self) -> int:
        return self.projection.shape[1]

    def encode(self, series: np.ndarray) -> np.ndarray:
        return (np.asarray(series, dtype=float) - self.mean) @ self.projection

    def decode(self, latent: np.ndarray) -> np.ndarray:
        return latent @ self.projection.T + self.mean

    def predict(self, series: np.ndarray) -> np.ndarray:
        """One-step-ahead forecasts for t in [lag, T) from the given history.

        Output has shape (T - lag, n): row k forecasts series[lag + k].
        """
        z = self.encode(series)
        t_total = z.shape[0]
        if t_total <= self.lag:
            raise FitError(f"series of length {t_total} shorter than lag {self.lag}")
        zhat = np.zeros((t_total - self.lag, self.latent_dim))
        for l in range(self.lag):
            zhat += z[self.lag - 1 - l: t_total - 1 - l] @ self.coeffs[l]
        return self.decode(zhat)

    def prediction_losses(self, series: np.ndarray) -> np.ndarray:
        """Squared one-step errors, shape (T - lag, n)."""
        x = np.asarray(series, dtype=float)
        return (self.predict(x) - x[self.lag:]) ** 2


def fit_latent_var(
    series: np.ndarray,
    lag: int = 1,
    latent_dim: int | None = None,
    ridge: float = 1e-6,
) -> LatentVar:
    """Fit the projection and VAR coefficients on one series matrix.

    series is (T, n).  latent_dim defaults to min(n, 8).  Raises FitError
    for series too short to form one regression row (T <= lag + latent_dim
    is rejected as hopelessly underdetermined) and for a singular design
    when ridge is zero.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 2:
        raise FitError("series must be a (T, n) matrix")
    t_total, n = x.shape
    if lag < 1:
        raise FitError(f"lag must be >= 1, got {lag}")
    if ridge < 0:
        raise FitError(f"ridge must be >= 0, got {ridge}")
    d = min(n, 8) if latent_dim is None else latent_dim
    if not 1 <= d <= n:
        raise FitError(f"latent dim {d} out of range for {n} features")
    if t_total <= lag + d:
        raise FitError(f"series of length {t_total} too short for lag {lag}, dim {d}")

    mean = x.mean(axis=0)
    centered = x - mean
    # principal directions via SVD; deterministic sign: largest entry positive
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    proj = vt[:d].T
    flip = np.sign(proj[np.argmax(np.abs(proj), axis=0), np.arange(d)])
    flip[flip == 0] = 1.0
    proj = proj * flip

    z = centered @ proj
    rows = t_total - lag
    design = np.concatenate([z[lag - 1 - l: t_total - 1 - l] for l in range(lag)], axis=1)
    target = z[lag:]
    gram = design.T @ design + ridge * np.eye(lag * d)
    if ridge == 0.0:
        if np.linalg.matrix_rank(gram) < gram.shape[0]:
            raise FitError("singular design matrix; use a positive ridge")
    try:
        beta = np.linalg.solve(gram, design.T @ target)
    except np.linalg.LinAlgError as exc:
        raise FitError(f"normal equations unsolvable: {exc}") from exc
    coeffs = beta.reshape(lag, d, d)
    return LatentVar(mean=mean, projection=proj, coeffs=coeffs, lag=lag, ridge=ridge)
