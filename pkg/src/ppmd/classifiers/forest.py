"""Random forest of CART-style gini trees.

Each tree trains on a bootstrap sample (optional) and considers a fresh
random feature subset at every split; thresholds are midpoints between
consecutive distinct sorted values. The forest predicts by majority vote of
the trees, ties resolving to the lowest class index. Per-tree generators are
spawned from one seed sequence so the whole forest is reproducible.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import TrainingError


def _best_split(values: np.ndarray, y: np.ndarray, n_classes: int):
    """Best gini split of one feature column. Returns (gain, threshold) or None."""
    order = np.argsort(values, kind="stable")
    xs = values[order]
    ys = y[order]
    boundary = np.flatnonzero(xs[1:] != xs[:-1])
    if boundary.size == 0:
        return None
    m = len(ys)
    onehot = np.zeros((m, n_classes))
    onehot[np.arange(m), ys] = 1.0
    cum = onehot.cumsum(axis=0)
    total = cum[-1]
    n_left = (boundary + 1).astype(np.float64)
    n_right = m - n_left
    c_left = cum[boundary]
    c_right = total - c_left
    gini_left = 1.0 - ((c_left / n_left[:, None]) ** 2).sum(axis=1)
    gini_right = 1.0 - ((c_right / n_right[:, None]) ** 2).sum(axis=1)
    parent = 1.0 - ((total / m) ** 2).sum()
    gains = parent - (n_left * gini_left + n_right * gini_right) / m
    best = int(gains.argmax())
    cut = boundary[best]
    return float(gains[best]), float((xs[cut] + xs[cut + 1]) / 2.0)


class DecisionTree:
    """Flat-array binary tree: internal nodes route on feature <= threshold."""

    def __init__(self, max_depth: int | None = None, min_samples_split: int = 2):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.label: list[int] = []

    def _add_node(self, label: int) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.label.append(label)
        return len(self.label) - 1

    def fit(self, X, y, n_classes: int, rng: np.random.Generator, max_features: int):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        stack = [(np.arange(len(y)), -1, False, 0)]
        while stack:
            idx, parent, is_right, depth = stack.pop()
            counts = np.bincount(y[idx], minlength=n_classes)
            node = self._add_node(int(counts.argmax()))
            if parent >= 0:
                (self.right if is_right else self.left)[parent] = node
            if (
                len(idx) < self.min_samples_split
                or counts.max() == len(idx)
                or (self.max_depth is not None and depth >= self.max_depth)
            ):
                continue
            feats = rng.choice(X.shape[1], size=min(max_features, X.shape[1]), replace=False)
            best = None
            for f in feats:
                found = _best_split(X[idx, f], y[idx], n_classes)
                if found is not None and (best is None or found[0] > best[0]):
                    best = (found[0], int(f), found[1])
            # zero-gain splits are kept: an impure node may need them (xor-like
            # patterns have no first split with positive gini gain)
            if best is None:
                continue
            _, f, thr = best
            self.feature[node] = f
            self.threshold[node] = thr
            mask = X[idx, f] <= thr
            # push left last so it is grown first (stable node numbering)
            stack.append((idx[~mask], node, True, depth + 1))
            stack.append((idx[mask], node, False, depth + 1))
        return self

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(len(X), dtype=np.int64)
        for i, row in enumerate(X):
            node = 0
            while self.feature[node] >= 0:
                node = self.left[node] if row[self.feature[node]] <= self.threshold[node] else self.right[node]
            out[i] = self.label[node]
        return out

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "label": self.label,
        }

    @staticmethod
    def from_dict(d: dict) -> "DecisionTree":
        t = DecisionTree()
        t.feature = [int(v) for v in d["feature"]]
        t.threshold = [float(v) for v in d["threshold"]]
        t.left = [int(v) for v in d["left"]]
        t.right = [int(v) for v in d["right"]]
        t.label = [int(v) for v in d["label"]]
        return t


class RandomForest:
    def __init__(
        self,
        n_trees: int = 100,
        max_depth: int | None = None,
        max_features: str | int = "sqrt",
        bootstrap: bool = True,
        seed: int = 0,
    ):
        if n_trees < 1:
            raise TrainingError(f"need at least one tree, got {n_trees}")
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed
        self.trees: list[DecisionTree] = []
        self.n_classes = 0

    def _features_per_split(self, d: int) -> int:
        if self.max_features == "sqrt":
            return max(1, math.ceil(math.sqrt(d)))
        if self.max_features == "all":
            return d
        return max(1, min(int(self.max_features), d))

    def fit(self, X, y, n_classes: int):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.n_classes = n_classes
        m = self._features_per_split(X.shape[1])
        self.trees = []
        for child in np.random.SeedSequence(self.seed).spawn(self.n_trees):
            rng = np.random.default_rng(child)
            if self.bootstrap:
                sample = rng.integers(0, len(y), size=len(y))
                Xs, ys = X[sample], y[sample]
            else:
                Xs, ys = X, y
            tree = DecisionTree(max_depth=self.max_depth)
            tree.fit(Xs, ys, n_classes, rng, m)
            self.trees.append(tree)
        return self

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        votes = np.zeros((len(X), self.n_classes), dtype=np.int64)
        for tree in self.trees:
            pred = tree.predict(X)
            votes[np.arange(len(X)), pred] += 1
        return votes.argmax(axis=1).astype(np.int64)

    def params(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "max_features": self.max_features,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
            "n_classes": self.n_classes,
            "trees": [t.to_dict() for t in self.trees],
        }

    @staticmethod
    def from_params(p: dict) -> "RandomForest":
        m = RandomForest(
            n_trees=p["n_trees"],
            max_depth=p["max_depth"],
            max_features=p["max_features"],
            bootstrap=p["bootstrap"],
            seed=p["seed"],
        )
        m.n_classes = p["n_classes"]
        m.trees = [DecisionTree.from_dict(t) for t in p["trees"]]
        return m
