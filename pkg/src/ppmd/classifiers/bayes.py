"""Gaussian naive Bayes: argmax over log P(y) + sum_j log P(x_j | y).

Class-conditional likelihoods are Gaussian with per-class per-feature mean
and population variance; every variance gets a smoothing floor proportional
to the largest feature variance so that constant features stay finite.
"""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError


class GaussianNaiveBayes:
    def __init__(self, var_floor_ratio: float = 1e-9):
        self.var_floor_ratio = var_floor_ratio
        self.log_priors: np.ndarray | None = None
        self.means: np.ndarray | None = None  # (n_classes, d)
        self.variances: np.ndarray | None = None
        self.n_classes = 0

    def fit(self, X, y, n_classes: int):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        counts = np.bincount(y, minlength=n_classes)
        if (counts == 0).any():
            missing = np.flatnonzero(counts == 0).tolist()
            raise TrainingError(f"classes {missing} have no training rows")
        self.n_classes = n_classes
        d = X.shape[1]
        self.means = np.zeros((n_classes, d))
        self.variances = np.zeros((n_classes, d))
        for c in range(n_classes):
            rows = X[y == c]
            self.means[c] = rows.mean(axis=0)
            self.variances[c] = rows.var(axis=0)
        overall_var = X.var(axis=0).max() if X.size else 0.0
        floor = max(self.var_floor_ratio * overall_var, np.finfo(np.float64).tiny)
        self.variances = np.maximum(self.variances, floor)
        self.log_priors = np.log(counts / counts.sum())
        return self

    def log_posteriors(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty((len(X), self.n_classes))
        for c in range(self.n_classes):
            var = self.variances[c]
            ll = -0.5 * (np.log(2.0 * np.pi * var) + (X - self.means[c]) ** 2 / var)
            out[:, c] = self.log_priors[c] + ll.sum(axis=1)
        return out

    def predict(self, X) -> np.ndarray:
        return self.log_posteriors(X).argmax(axis=1).astype(np.int64)

    def params(self) -> dict:
        return {
            "var_floor_ratio": self.var_floor_ratio,
            "log_priors": self.log_priors.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "n_classes": self.n_classes,
        }

    @staticmethod
    def from_params(p: dict) -> "GaussianNaiveBayes":
        m = GaussianNaiveBayes(var_floor_ratio=p["var_floor_ratio"])
        m.log_priors = np.asarray(p["log_priors"], dtype=np.float64)
        m.means = np.asarray(p["means"], dtype=np.float64)
        m.variances = np.asarray(p["variances"], dtype=np.float64)
        m.n_classes = p["n_classes"]
        return m
