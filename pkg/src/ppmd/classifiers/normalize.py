"""Feature standardization: (x - mu) / sigma with training-sample statistics.

sigma is the population standard deviation of the training rows. Statistics
are frozen at fit time and applied unchanged to test rows; a zero-variance
feature transforms to 0 instead of dividing by zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TrainingError


@dataclass(frozen=True)
class NormalizationParams:
    mu: np.ndarray
    sigma: np.ndarray

    def to_dict(self) -> dict:
        return {"mu": self.mu.tolist(), "sigma": self.sigma.tolist()}

    @staticmethod
    def from_dict(d: dict) -> "NormalizationParams":
        return NormalizationParams(
            mu=np.asarray(d["mu"], dtype=np.float64),
            sigma=np.asarray(d["sigma"], dtype=np.float64),
        )


def normalize_fit(train_rows: np.ndarray) -> NormalizationParams:
    train_rows = np.asarray(train_rows, dtype=np.float64)
    if train_rows.ndim != 2 or train_rows.shape[0] == 0:
        raise TrainingError("normalization needs a non-empty 2-d training matrix")
    return NormalizationParams(
        mu=train_rows.mean(axis=0),
        sigma=train_rows.std(axis=0),  # population std (ddof=0)
    )


def normalize_apply(rows: np.ndarray, params: NormalizationParams) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    safe_sigma = np.where(params.sigma == 0, 1.0, params.sigma)
    out = (rows - params.mu) / safe_sigma
    return np.where(params.sigma == 0, 0.0, out)
