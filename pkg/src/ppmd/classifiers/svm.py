"""Linear support vector machine trained by stochastic sub-gradient descent
on the L2-regularized hinge loss.

The decision rule is the thresholded linear score: class 1 when w.x + b > 0,
class 0 otherwise. With more than two classes a one-vs-rest machine is trained
per class and prediction takes the argmax margin (lowest class index on ties);
for exactly two classes a single binary machine is used.
"""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError


class LinearSvm:
    def __init__(self, lam: float = 1e-4, lr: float = 0.01, epochs: int = 100, seed: int = 0):
        self.lam = lam
        self.lr = lr
        self.epochs = epochs
        self.seed = seed
        self.weights: np.ndarray | None = None  # (n_machines, d)
        self.biases: np.ndarray | None = None
        self.n_classes = 0

    def _fit_binary(self, X, target, rng):
        """target in {-1, +1}. Returns (w, b)."""
        n, d = X.shape
        w = np.zeros(d)
        b = 0.0
        for _ in range(self.epochs):
            for i in rng.permutation(n):
                margin = target[i] * (X[i] @ w + b)
                if margin < 1:
                    w += self.lr * (target[i] * X[i] - self.lam * w)
                    b += self.lr * target[i]
                else:
                    w -= self.lr * self.lam * w
        return w, b

    def fit(self, X, y, n_classes: int):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if len(np.unique(y)) < 2:
            raise TrainingError("linear SVM needs at least two classes in the training data")
        self.n_classes = n_classes
        rng = np.random.default_rng(self.seed)
        if n_classes == 2:
            w, b = self._fit_binary(X, np.where(y == 1, 1.0, -1.0), rng)
            self.weights = w[np.newaxis, :]
            self.biases = np.array([b])
        else:
            ws, bs = [], []
            for c in range(n_classes):
                w, b = self._fit_binary(X, np.where(y == c, 1.0, -1.0), rng)
                ws.append(w)
                bs.append(b)
            self.weights = np.vstack(ws)
            self.biases = np.asarray(bs)
        return self

    def decision_scores(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return X @ self.weights.T + self.biases

    def predict(self, X) -> np.ndarray:
        scores = self.decision_scores(X)
        if self.n_classes == 2:
            return (scores[:, 0] > 0).astype(np.int64)
        return scores.argmax(axis=1).astype(np.int64)  # argmax takes the lowest tied index

    def params(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "biases": self.biases.tolist(),
            "n_classes": self.n_classes,
            "lam": self.lam,
            "lr": self.lr,
            "epochs": self.epochs,
            "seed": self.seed,
        }

    @staticmethod
    def from_params(p: dict) -> "LinearSvm":
        m = LinearSvm(lam=p["lam"], lr=p["lr"], epochs=p["epochs"], seed=p["seed"])
        m.weights = np.asarray(p["weights"], dtype=np.float64)
        m.biases = np.asarray(p["biases"], dtype=np.float64)
        m.n_classes = p["n_classes"]
        return m
