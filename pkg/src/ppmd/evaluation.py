"""Classification metrics and the paired signed-rank significance test.

Accuracy is trace/total of the confusion matrix. Precision, recall and
F1-score use the per-class TP/FP/FN counting rules; in binary mode they are
reported for the designated positive class, in macro mode averaged over all
classes. A class with no predicted (or no true) instances contributes 0 and
is flagged rather than propagating NaN.

The significance test is the Wilcoxon signed-rank test with midranks for
tied absolute differences, tie-corrected variance, and a two-sided normal
approximation without continuity correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, UndefinedTestError

BINARY = "binary"
MACRO = "macro"

METRIC_NAMES = ("ca", "precision", "recall", "f1")


def confusion(true_labels, predicted_labels, n_classes: int) -> np.ndarray:
    """n_classes x n_classes count matrix; rows are true, columns predicted."""
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError(f"label vectors must be 1-d and equal length, got {t.shape} vs {p.shape}")
    if len(t) and (min(t.min(), p.min()) < 0 or max(t.max(), p.max()) >= n_classes):
        raise ValueError(f"labels must lie in [0, {n_classes - 1}]")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


@dataclass(frozen=True)
class MetricsReport:
    ca: float
    precision: float
    recall: float
    f1: float
    per_class: tuple[dict, ...]
    averaging: str
    positive_class: int | None
    flags: tuple[str, ...]

    def values(self) -> dict:
        return {"ca": self.ca, "precision": self.precision, "recall": self.recall, "f1": self.f1}

    def to_dict(self) -> dict:
        return {
            **self.values(),
            "per_class": list(self.per_class),
            "averaging": self.averaging,
            "positive_class": self.positive_class,
            "flags": list(self.flags),
        }


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean 2PR/(P+R), defined as 0 when P + R = 0."""
    s = precision + recall
    return 2.0 * precision * recall / s if s > 0 else 0.0


def metrics(cm: np.ndarray, averaging: str = BINARY, positive_class: int = 1) -> MetricsReport:
    cm = np.asarray(cm, dtype=np.int64)
    total = int(cm.sum())
    if total == 0:
        raise ValueError("confusion matrix is empty (zero test size)")
    n_classes = cm.shape[0]
    if averaging not in (BINARY, MACRO):
        raise ValueError(f"unknown averaging mode {averaging!r}")
    if averaging == BINARY and not 0 <= positive_class < n_classes:
        raise ValueError(f"positive class {positive_class} outside [0, {n_classes - 1}]")

    ca = float(np.trace(cm)) / total

    per_class = []
    flags = []
    for c in range(n_classes):
        tp = int(cm[c, c])
        fp = int(cm[:, c].sum()) - tp
        fn = int(cm[c, :].sum()) - tp
        if tp + fp == 0:
            p = 0.0
            flags.append(f"class {c}: no predicted instances, precision reported as 0")
        else:
            p = tp / (tp + fp)
        if tp + fn == 0:
            r = 0.0
            flags.append(f"class {c}: no true instances, recall reported as 0")
        else:
            r = tp / (tp + fn)
        per_class.append(
            {"class": c, "tp": tp, "fp": fp, "fn": fn,
             "precision": p, "recall": r, "f1": f1_score(p, r)}
        )

    if averaging == BINARY:
        chosen = per_class[positive_class]
        p, r, f = chosen["precision"], chosen["recall"], chosen["f1"]
        pos = positive_class
    else:
        p = float(np.mean([c["precision"] for c in per_class]))
        r = float(np.mean([c["recall"] for c in per_class]))
        f = float(np.mean([c["f1"] for c in per_class]))
        pos = None

    return MetricsReport(
        ca=ca, precision=p, recall=r, f1=f,
        per_class=tuple(per_class), averaging=averaging,
        positive_class=pos, flags=tuple(flags),
    )


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i: j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # the smaller signed-rank sum W
    z: float          # normal deviate of W+ (sign flips when x and y swap)
    p_value: float
    n_effective: int
    alpha: float
    reject: bool

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "z": self.z,
            "p_value": self.p_value,
            "n_effective": self.n_effective,
            "alpha": self.alpha,
            "reject": self.reject,
        }


def wilcoxon_signed_rank(x, y, alpha: float = 0.05) -> WilcoxonResult:
    """Two-sided paired signed-rank test of x against y.

    Zero differences are dropped; at least two non-zero pairs are required.
    Midranks handle ties in |difference|, the variance carries the standard
    tie correction, and no continuity correction is applied.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"paired samples must be 1-d and equal length, got {x.shape} vs {y.shape}")
    d = x - y
    d = d[d != 0]
    n = len(d)
    if n < 2:
        raise UndefinedTestError(
            f"need at least 2 non-zero paired differences, got {n}"
        )
    ranks = _midranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(((tie_counts.astype(np.float64) ** 3) - tie_counts).sum()) / 48.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    z = (w_plus - mean) / math.sqrt(var)
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return WilcoxonResult(
        statistic=min(w_plus, w_minus),
        z=z,
        p_value=p,
        n_effective=n,
        alpha=alpha,
        reject=p < alpha,
    )


def compare_metric_grids(grid_a: dict, grid_b: dict, alpha: float = 0.05) -> dict:
    """Per-(dataset, metric) signed-rank comparison of two result grids.

    Each grid maps dataset -> classifier -> {metric -> value}. For every
    dataset and metric the paired samples are the per-classifier values of
    the two grids. Cells where the test is undefined (e.g. identical values
    everywhere) are reported as {"undefined": reason}.
    """
    if set(grid_a) != set(grid_b):
        raise GridMismatchError(
            f"datasets differ: {sorted(grid_a)} vs {sorted(grid_b)}"
        )
    table: dict = {}
    for dataset in sorted(grid_a):
        if set(grid_a[dataset]) != set(grid_b[dataset]):
            raise GridMismatchError(
                f"classifiers differ on {dataset}: "
                f"{sorted(grid_a[dataset])} vs {sorted(grid_b[dataset])}"
            )
        classifiers = sorted(grid_a[dataset])
        table[dataset] = {}
        for metric in METRIC_NAMES:
            a = [grid_a[dataset][c][metric] for c in classifiers]
            b = [grid_b[dataset][c][metric] for c in classifiers]
            try:
                table[dataset][metric] = wilcoxon_signed_rank(a, b, alpha).to_dict()
            except UndefinedTestError as err:
                table[dataset][metric] = {"undefined": str(err)}
    return table
