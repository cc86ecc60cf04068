"""K-nearest-neighbour classifier with Euclidean distance and majority vote.

Neighbour order is (distance, label) so predictions do not depend on the
storage order of training rows even when distances tie at the k-th boundary;
vote ties resolve to the lowest class index.
"""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError


class Knn:
    def __init__(self, k: int = 5):
        self.k = k
        self.X: np.ndarray | None = None
        self.y: np.ndarray | None = None
        self.n_classes = 0

    def fit(self, X, y, n_classes: int):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if not 1 <= self.k <= len(X):
            raise TrainingError(f"k={self.k} outside [1, {len(X)}]")
        self.X = X
        self.y = y
        self.n_classes = n_classes
        return self

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(len(X), dtype=np.int64)
        for i, row in enumerate(X):
            d2 = ((self.X - row) ** 2).sum(axis=1)
            order = np.lexsort((self.y, d2))  # primary distance, secondary label
            votes = np.bincount(self.y[order[: self.k]], minlength=self.n_classes)
            out[i] = votes.argmax()
        return out

    def params(self) -> dict:
        return {
            "k": self.k,
            "X": self.X.tolist(),
            "y": self.y.tolist(),
            "n_classes": self.n_classes,
        }

    @staticmethod
    def from_params(p: dict) -> "Knn":
        m = Knn(k=p["k"])
        m.X = np.asarray(p["X"], dtype=np.float64)
        m.y = np.asarray(p["y"], dtype=np.int64)
        m.n_classes = p["n_classes"]
        return m
