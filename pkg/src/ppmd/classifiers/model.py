"""Uniform training/prediction facade over the five classifier variants.

A trained model bundles the variant implementation with the normalization
parameters frozen on its training rows, so prediction always applies the same
transform the model saw during training. Models serialize to a versioned JSON
artifact that reproduces identical predictions after a round trip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import SchemaError
from .ann import Mlp
from .bayes import GaussianNaiveBayes
from .forest import RandomForest
from .knn import Knn
from .normalize import NormalizationParams, normalize_apply, normalize_fit
from .svm import LinearSvm

SVM, KNN, RF, NB, ANN = "svm", "knn", "rf", "nb", "ann"
VARIANTS = (SVM, KNN, RF, NB, ANN)

ARTIFACT_VERSION = 1


@dataclass(frozen=True)
class ClassifierConfig:
    """Hyperparameters for all variants; unset values fall back to defaults."""

    knn_k: int = 5
    rf_trees: int = 100
    rf_max_depth: int | None = None
    rf_max_features: str | int = "sqrt"
    rf_bootstrap: bool = True
    svm_lambda: float = 1e-4
    svm_lr: float = 0.01
    svm_epochs: int = 100
    nb_var_floor_ratio: float = 1e-9
    ann_hidden: int = 64
    ann_lr: float = 0.01
    ann_epochs: int = 200
    seed: int = 0

    def with_seed(self, seed: int) -> "ClassifierConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        return {
            "knn_k": self.knn_k,
            "rf_trees": self.rf_trees,
            "rf_max_depth": self.rf_max_depth,
            "rf_max_features": self.rf_max_features,
            "rf_bootstrap": self.rf_bootstrap,
            "svm_lambda": self.svm_lambda,
            "svm_lr": self.svm_lr,
            "svm_epochs": self.svm_epochs,
            "nb_var_floor_ratio": self.nb_var_floor_ratio,
            "ann_hidden": self.ann_hidden,
            "ann_lr": self.ann_lr,
            "ann_epochs": self.ann_epochs,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "ClassifierConfig":
        defaults = ClassifierConfig().to_dict()
        unknown = set(d) - set(defaults)
        if unknown:
            raise SchemaError(f"unknown classifier options: {sorted(unknown)}")
        defaults.update(d)
        return ClassifierConfig(**defaults)


@dataclass
class TrainedModel:
    variant: str
    n_classes: int
    norm: NormalizationParams
    impl: object
    config: ClassifierConfig = field(default_factory=ClassifierConfig)


def _build(variant: str, config: ClassifierConfig):
    if variant == SVM:
        return LinearSvm(
            lam=config.svm_lambda, lr=config.svm_lr,
            epochs=config.svm_epochs, seed=config.seed,
        )
    if variant == KNN:
        return Knn(k=config.knn_k)
    if variant == RF:
        return RandomForest(
            n_trees=config.rf_trees, max_depth=config.rf_max_depth,
            max_features=config.rf_max_features, bootstrap=config.rf_bootstrap,
            seed=config.seed,
        )
    if variant == NB:
        return GaussianNaiveBayes(var_floor_ratio=config.nb_var_floor_ratio)
    if variant == ANN:
        return Mlp(
            hidden=config.ann_hidden, lr=config.ann_lr,
            epochs=config.ann_epochs, seed=config.seed,
        )
    raise SchemaError(f"unknown classifier variant {variant!r} (choose from {VARIANTS})")


def train_model(
    variant: str,
    train_X: np.ndarray,
    train_y: np.ndarray,
    n_classes: int,
    config: ClassifierConfig | None = None,
) -> TrainedModel:
    """Fit normalization on the training rows, then fit the variant on the
    transformed rows."""
    config = config or ClassifierConfig()
    norm = normalize_fit(train_X)
    impl = _build(variant, config)
    impl.fit(normalize_apply(train_X, norm), np.asarray(train_y, dtype=np.int64), n_classes)
    return TrainedModel(variant=variant, n_classes=n_classes, norm=norm, impl=impl, config=config)


def predict(model: TrainedModel, rows: np.ndarray) -> np.ndarray:
    """Label vector for the given rows, applying the frozen normalization."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise SchemaError(f"expected a 2-d row matrix, got shape {rows.shape}")
    if rows.shape[1] != len(model.norm.mu):
        raise SchemaError(
            f"row width {rows.shape[1]} does not match training width {len(model.norm.mu)}"
        )
    if rows.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    return model.impl.predict(normalize_apply(rows, model.norm))


def save_model(model: TrainedModel, path) -> None:
    payload = {
        "version": ARTIFACT_VERSION,
        "variant": model.variant,
        "n_classes": model.n_classes,
        "norm": model.norm.to_dict(),
        "config": model.config.to_dict(),
        "params": model.impl.params(),
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True))


def load_model(path) -> TrainedModel:
    payload = json.loads(Path(path).read_text())
    if payload.get("version") != ARTIFACT_VERSION:
        raise SchemaError(f"unsupported model artifact version {payload.get('version')}")
    loaders = {
        SVM: LinearSvm.from_params,
        KNN: Knn.from_params,
        RF: RandomForest.from_params,
        NB: GaussianNaiveBayes.from_params,
        ANN: Mlp.from_params,
    }
    variant = payload["variant"]
    if variant not in loaders:
        raise SchemaError(f"unknown classifier variant {variant!r}")
    return TrainedModel(
        variant=variant,
        n_classes=payload["n_classes"],
        norm=NormalizationParams.from_dict(payload["norm"]),
        impl=loaders[variant](payload["params"]),
        config=ClassifierConfig.from_dict(payload["config"]),
    )
