"""End-to-end single-run pipeline: placement -> noise -> split -> train ->
evaluate. Both the bench harness and the protocol simulation drive their
training through these helpers so that their results are directly comparable.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .classifiers import ClassifierConfig, TrainedModel, predict, train_model
from .dataset import Dataset, SplitIndices, split, take_rows
from .errors import SchemaError
from .evaluation import BINARY, MACRO, MetricsReport, confusion, metrics
from .partition import PartitionSpec, partition, partition_columns
from .privacy import NoiseConfig, NoiseRecord, sanitize_partition

CLEAN = "clean"
PPMD = "ppmd"
ALL = "all"
PLACEMENTS = (CLEAN, PPMD, ALL)


def derive_seed(master: int, *tags) -> int:
    """Stable sub-seed for a named stream under one master seed."""
    entropy = [int(master) & 0xFFFFFFFFFFFFFFFF]
    entropy += [zlib.crc32(str(t).encode("utf-8")) for t in tags]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def default_averaging(n_classes: int) -> str:
    return BINARY if n_classes == 2 else MACRO


def apply_placement(
    ds: Dataset,
    placement: str,
    partition_spec: PartitionSpec | None,
    noise_config: NoiseConfig,
) -> tuple[Dataset, NoiseRecord | None]:
    """Produce the dataset actually uploaded for a noise placement.

    clean: untouched. ppmd: noise on the configured sensitive part only.
    all: noise on every feature column (the noise-everything emulation).
    """
    if placement == CLEAN:
        return ds, None
    if placement == PPMD:
        if partition_spec is None:
            raise SchemaError("ppmd placement requires a partition spec")
        pd = partition(ds, partition_spec)
    elif placement == ALL:
        pd = partition_columns(ds, ds.feature_names)
    else:
        raise SchemaError(f"unknown placement {placement!r} (choose from {PLACEMENTS})")
    sanitized = sanitize_partition(pd, noise_config)
    return sanitized.data, sanitized.noise_log


@dataclass
class EvaluationOutcome:
    model: TrainedModel
    report: MetricsReport
    confusion_matrix: np.ndarray
    split_indices: SplitIndices


def evaluate_dataset(
    ds: Dataset,
    variant: str,
    clf_config: ClassifierConfig,
    fraction=Fraction(9, 10),
    split_seed: int = 0,
    stratified: bool = False,
    averaging: str | None = None,
    positive_class: int = 1,
) -> EvaluationOutcome:
    """Split, train, predict the held-out rows, and score them."""
    indices = split(ds, fraction=fraction, seed=split_seed, stratified=stratified)
    train_X, train_y = take_rows(ds, indices.train)
    test_X, test_y = take_rows(ds, indices.test)
    model = train_model(variant, train_X, train_y, ds.n_classes, clf_config)
    predicted = predict(model, test_X)
    cm = confusion(test_y, predicted, ds.n_classes)
    report = metrics(
        cm,
        averaging=averaging or default_averaging(ds.n_classes),
        positive_class=positive_class,
    )
    return EvaluationOutcome(
        model=model, report=report, confusion_matrix=cm, split_indices=indices
    )


@dataclass
class CellResult:
    """One grid cell of the experiment: everything needed to rebuild the
    aggregate tables, plus the error message when the cell failed."""

    dataset: str
    classifier: str
    placement: str
    seed: int
    n_train: int
    n_test: int
    report: MetricsReport | None
    confusion_matrix: np.ndarray | None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "classifier": self.classifier,
            "placement": self.placement,
            "seed": self.seed,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "metrics": None if self.report is None else self.report.to_dict(),
            "confusion": None
            if self.confusion_matrix is None
            else [[int(v) for v in row] for row in self.confusion_matrix],
            "error": self.error,
        }


def run_cell(
    ds: Dataset,
    placement: str,
    partition_spec: PartitionSpec | None,
    noise_config: NoiseConfig,
    variant: str,
    clf_config: ClassifierConfig,
    fraction=Fraction(9, 10),
    seed: int = 0,
    stratified: bool = False,
    averaging: str | None = None,
    positive_class: int = 1,
) -> tuple[CellResult, TrainedModel]:
    """Execute one (dataset, placement, classifier, seed) cell.

    Sub-seeds for the split, the noise draw, and classifier initialization
    derive from the master seed by role, so the clean and noised placements
    of the same master seed share one split and results pair up exactly.
    """
    noise_cfg = replace(noise_config, seed=derive_seed(seed, "noise"))
    sanitized, _ = apply_placement(ds, placement, partition_spec, noise_cfg)
    outcome = evaluate_dataset(
        sanitized,
        variant,
        clf_config.with_seed(derive_seed(seed, "clf", variant)),
        fraction=fraction,
        split_seed=derive_seed(seed, "split"),
        stratified=stratified,
        averaging=averaging,
        positive_class=positive_class,
    )
    cell = CellResult(
        dataset=ds.name,
        classifier=variant,
        placement=placement,
        seed=seed,
        n_train=len(outcome.split_indices.train),
        n_test=len(outcome.split_indices.test),
        report=outcome.report,
        confusion_matrix=outcome.confusion_matrix,
    )
    return cell, outcome.model
