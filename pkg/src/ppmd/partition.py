"""Sensitive / non-sensitive partitioning.

Two modes are supported because the source material demonstrates both:

* ``column`` -- project a named subset of feature columns into the sensitive
  part; everything else (always including the class label) stays
  non-sensitive. Row alignment is preserved.
* ``row`` -- sample floor(n/k) distinct records without replacement into the
  sensitive part; the rest form the non-sensitive part. Labels travel with
  their rows but are never perturbed.

Both modes carry enough provenance to reconstruct the original dataset
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LABEL, AttributeSchema, Dataset
from .errors import IntegrityError, PartitionError

COLUMN = "column"
ROW = "row"


@dataclass(frozen=True)
class PartitionSpec:
    mode: str = COLUMN
    sensitive_columns: tuple[str, ...] = ()
    k: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (COLUMN, ROW):
            raise PartitionError(f"unknown partition mode {self.mode!r}")
        if self.mode == COLUMN and not self.sensitive_columns:
            raise PartitionError("column mode requires at least one sensitive column")
        if self.mode == ROW and self.k < 1:
            raise PartitionError(f"row mode requires k >= 1, got {self.k}")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "sensitive_columns": list(self.sensitive_columns),
            "k": self.k,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "PartitionSpec":
        return PartitionSpec(
            mode=d.get("mode", COLUMN),
            sensitive_columns=tuple(d.get("sensitive_columns", ())),
            k=int(d.get("k", 2)),
            seed=int(d.get("seed", 0)),
        )


@dataclass
class PartitionedDataset:
    """The two halves of a partition plus the alignment needed to undo it.

    ``sensitive`` is the matrix of cells eligible for noise. In column mode
    it is (n_rows, n_sensitive_columns) and ``sensitive_index`` lists feature
    column positions; in row mode it is (n_sensitive_rows, n_features) and
    the index lists row positions. Labels always live on the non-sensitive
    side (column mode) or alongside their rows unperturbed (row mode).
    """

    spec: PartitionSpec
    name: str
    schema: tuple[AttributeSchema, ...]
    n_rows: int
    sensitive: np.ndarray
    non_sensitive: np.ndarray
    sensitive_index: tuple[int, ...]
    non_sensitive_index: tuple[int, ...]
    non_sensitive_y: np.ndarray
    sensitive_y: np.ndarray | None = None  # row mode only

    @property
    def mode(self) -> str:
        return self.spec.mode

    @property
    def sensitive_column_names(self) -> tuple[str, ...]:
        feature_names = [a.name for a in self.schema if a.kind != LABEL]
        if self.mode == COLUMN:
            return tuple(feature_names[j] for j in self.sensitive_index)
        return tuple(feature_names)


def partition_columns(ds: Dataset, sensitive_columns) -> PartitionedDataset:
    """Project the named feature columns into the sensitive part (original
    column order is kept on both sides)."""
    sensitive_columns = tuple(sensitive_columns)
    if not sensitive_columns:
        raise PartitionError("need at least one sensitive column")
    label_name = ds.label_attribute.name
    names = list(ds.feature_names)
    requested = set()
    for col in sensitive_columns:
        if col == label_name:
            raise PartitionError(f"label column {col!r} cannot be sensitive")
        if col not in names:
            raise PartitionError(f"unknown column {col!r} (features: {names})")
        requested.add(col)

    sens_idx = tuple(j for j, n in enumerate(names) if n in requested)
    rest_idx = tuple(j for j, n in enumerate(names) if n not in requested)
    return PartitionedDataset(
        spec=PartitionSpec(mode=COLUMN, sensitive_columns=sensitive_columns),
        name=ds.name,
        schema=ds.schema,
        n_rows=ds.n_rows,
        sensitive=ds.X[:, sens_idx].copy(),
        non_sensitive=ds.X[:, rest_idx].copy(),
        sensitive_index=sens_idx,
        non_sensitive_index=rest_idx,
        non_sensitive_y=ds.y.copy(),
    )


def partition_rows(ds: Dataset, k: int, seed: int = 0) -> PartitionedDataset:
    """Move floor(n/k) seeded-random distinct records to the sensitive part."""
    n = ds.n_rows
    if k < 1:
        raise PartitionError(f"k must be >= 1, got {k}")
    if k > n:
        raise PartitionError(f"k={k} exceeds the number of records n={n}")
    p = n // k
    rng = np.random.default_rng(seed)
    chosen = rng.choice(n, size=p, replace=False)
    rest = np.setdiff1d(np.arange(n), chosen)
    return PartitionedDataset(
        spec=PartitionSpec(mode=ROW, k=k, seed=seed),
        name=ds.name,
        schema=ds.schema,
        n_rows=n,
        sensitive=ds.X[chosen].copy(),
        non_sensitive=ds.X[rest].copy(),
        sensitive_index=tuple(int(i) for i in chosen),
        non_sensitive_index=tuple(int(i) for i in rest),
        non_sensitive_y=ds.y[rest].copy(),
        sensitive_y=ds.y[chosen].copy(),
    )


def partition(ds: Dataset, spec: PartitionSpec) -> PartitionedDataset:
    if spec.mode == COLUMN:
        return partition_columns(ds, spec.sensitive_columns)
    return partition_rows(ds, spec.k, spec.seed)


def recombine(pd: PartitionedDataset, sensitive: np.ndarray | None = None) -> Dataset:
    """Reassemble the original dataset layout. ``sensitive`` substitutes a
    (noise-injected) replacement for the sensitive cells; by default the
    stored sensitive part is used, making recombine(partition(ds)) == ds."""
    sens = pd.sensitive if sensitive is None else np.asarray(sensitive, dtype=np.float64)
    if sens.shape != pd.sensitive.shape:
        raise IntegrityError(
            f"sensitive part has shape {sens.shape}, expected {pd.sensitive.shape}"
        )
    n_features = len(pd.schema) - 1
    covered = sorted(pd.sensitive_index) + sorted(pd.non_sensitive_index)
    axis = n_features if pd.mode == COLUMN else pd.n_rows
    if sorted(covered) != list(range(axis)):
        raise IntegrityError("partition provenance does not cover the dataset exactly")

    X = np.empty((pd.n_rows, n_features), dtype=np.float64)
    if pd.mode == COLUMN:
        if pd.non_sensitive.shape != (pd.n_rows, n_features - sens.shape[1]):
            raise IntegrityError("non-sensitive part shape does not match provenance")
        X[:, list(pd.sensitive_index)] = sens
        X[:, list(pd.non_sensitive_index)] = pd.non_sensitive
        y = pd.non_sensitive_y.copy()
    else:
        if pd.sensitive_y is None:
            raise IntegrityError("row-mode partition lacks sensitive labels")
        if pd.non_sensitive.shape != (len(pd.non_sensitive_index), n_features):
            raise IntegrityError("non-sensitive part shape does not match provenance")
        X[list(pd.sensitive_index)] = sens
        X[list(pd.non_sensitive_index)] = pd.non_sensitive
        y = np.empty(pd.n_rows, dtype=np.int64)
        y[list(pd.sensitive_index)] = pd.sensitive_y
        y[list(pd.non_sensitive_index)] = pd.non_sensitive_y
    return Dataset(name=pd.name, schema=pd.schema, X=X, y=y)
