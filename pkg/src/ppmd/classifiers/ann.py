"""One-hidden-layer perceptron trained by full-batch backpropagation.

Architecture: input -> ReLU hidden layer -> output layer, where the output is
a single sigmoid unit for two classes and a softmax over all classes
otherwise. Such a forward pass is exactly two rounds of weighted sums plus
biases; the code keeps that structure explicit. Weights start Glorot-uniform
from a seeded generator, biases at zero. Losses are mean cross-entropy in a
numerically stable logits formulation, so analytic gradients are exact and
can be validated against central finite differences.
"""

from __future__ import annotations

import numpy as np

from ..errors import DivergenceError, TrainingError


def _relu(z):
    return np.maximum(z, 0.0)


def _log_softmax(z):
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


class Mlp:
    def __init__(self, hidden: int = 64, lr: float = 0.01, epochs: int = 200, seed: int = 0):
        if hidden < 1:
            raise TrainingError(f"hidden width must be >= 1, got {hidden}")
        if epochs < 1:
            raise TrainingError(f"epochs must be >= 1, got {epochs}")
        if lr <= 0:
            raise TrainingError(f"learning rate must be positive, got {lr}")
        self.hidden = hidden
        self.lr = lr
        self.epochs = epochs
        self.seed = seed
        self.W1: np.ndarray | None = None
        self.b1: np.ndarray | None = None
        self.W2: np.ndarray | None = None
        self.b2: np.ndarray | None = None
        self.n_classes = 0

    @property
    def n_outputs(self) -> int:
        return 1 if self.n_classes == 2 else self.n_classes

    def init_params(self, n_features: int, n_classes: int, rng: np.random.Generator | None = None):
        self.n_classes = n_classes
        rng = rng or np.random.default_rng(self.seed)
        out = self.n_outputs

        def glorot(fan_in, fan_out):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-limit, limit, size=(fan_in, fan_out))

        self.W1 = glorot(n_features, self.hidden)
        self.b1 = np.zeros(self.hidden)
        self.W2 = glorot(self.hidden, out)
        self.b2 = np.zeros(out)
        return self

    def forward(self, X) -> np.ndarray:
        """Output-layer activations: sigmoid probabilities (binary) or
        softmax probabilities (multi-class)."""
        X = np.asarray(X, dtype=np.float64)
        h = _relu(X @ self.W1 + self.b1)
        z = h @ self.W2 + self.b2
        if self.n_outputs == 1:
            return 1.0 / (1.0 + np.exp(-z))
        return np.exp(_log_softmax(z))

    def loss_and_grads(self, X, y):
        """Mean cross-entropy and its gradients w.r.t. all four parameters.
        Overflow is allowed to reach inf/nan; the trainer turns a non-finite
        loss into a divergence error."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        n = len(y)
        with np.errstate(over="ignore", invalid="ignore"):
            a1 = X @ self.W1 + self.b1
            h = _relu(a1)
            z = h @ self.W2 + self.b2
            if self.n_outputs == 1:
                zz = z[:, 0]
                t = y.astype(np.float64)
                # softplus(z) - t*z, stable for large |z|
                loss = float(np.mean(np.maximum(zz, 0) - t * zz + np.log1p(np.exp(-np.abs(zz)))))
                dz = ((1.0 / (1.0 + np.exp(-zz)) - t) / n)[:, None]
            else:
                logp = _log_softmax(z)
                loss = float(-logp[np.arange(n), y].mean())
                dz = np.exp(logp)
                dz[np.arange(n), y] -= 1.0
                dz /= n
            dW2 = h.T @ dz
            db2 = dz.sum(axis=0)
            dh = dz @ self.W2.T
            dh[a1 <= 0] = 0.0
            dW1 = X.T @ dh
            db1 = dh.sum(axis=0)
        return loss, {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}

    def fit(self, X, y, n_classes: int):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if len(y) == 0:
            raise TrainingError("cannot train on an empty set")
        self.init_params(X.shape[1], n_classes)
        for epoch in range(self.epochs):
            loss, grads = self.loss_and_grads(X, y)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}", epoch=epoch)
            self.W1 -= self.lr * grads["W1"]
            self.b1 -= self.lr * grads["b1"]
            self.W2 -= self.lr * grads["W2"]
            self.b2 -= self.lr * grads["b2"]
        return self

    def predict(self, X) -> np.ndarray:
        probs = self.forward(X)
        if self.n_outputs == 1:
            return (probs[:, 0] > 0.5).astype(np.int64)
        return probs.argmax(axis=1).astype(np.int64)  # ties resolve to class 0 first

    def get_flat_params(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in (self.W1, self.b1, self.W2, self.b2)])

    def set_flat_params(self, flat: np.ndarray):
        shapes = [self.W1.shape, self.b1.shape, self.W2.shape, self.b2.shape]
        offset = 0
        parts = []
        for shape in shapes:
            size = int(np.prod(shape))
            parts.append(np.asarray(flat[offset: offset + size], dtype=np.float64).reshape(shape))
            offset += size
        self.W1, self.b1, self.W2, self.b2 = parts

    def params(self) -> dict:
        return {
            "hidden": self.hidden,
            "lr": self.lr,
            "epochs": self.epochs,
            "seed": self.seed,
            "n_classes": self.n_classes,
            "W1": self.W1.tolist(),
            "b1": self.b1.tolist(),
            "W2": self.W2.tolist(),
            "b2": self.b2.tolist(),
        }

    @staticmethod
    def from_params(p: dict) -> "Mlp":
        m = Mlp(hidden=p["hidden"], lr=p["lr"], epochs=p["epochs"], seed=p["seed"])
        m.n_classes = p["n_classes"]
        m.W1 = np.asarray(p["W1"], dtype=np.float64)
        m.b1 = np.asarray(p["b1"], dtype=np.float64)
        m.W2 = np.asarray(p["W2"], dtype=np.float64)
        m.b2 = np.asarray(p["b2"], dtype=np.float64)
        return m
