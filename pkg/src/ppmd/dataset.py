"""Tabular dataset ingestion: CSV loading, categorical encoding, imputation,
and deterministic train/test splitting.

A loaded dataset stores all feature columns as float64 (categoricals are
label-encoded to 0-based integer codes in first-appearance order) plus an
integer class-label vector. The class label is itself an encoded categorical
and is never part of the feature matrix.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import (
    CsvParseError,
    EncodingError,
    IngestionError,
    SchemaError,
    SplitError,
)

MISSING_MARKERS = ("", "?")

NUMERIC = "numeric"
CATEGORICAL = "categorical"
LABEL = "label"


@dataclass(frozen=True)
class AttributeSchema:
    """One column of a dataset: a numeric feature, a categorical feature, or
    the class label. ``levels`` holds categorical/label level names in code
    order (code i <-> levels[i])."""

    name: str
    kind: str
    levels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL, LABEL):
            raise SchemaError(f"unknown attribute kind {self.kind!r}")
        if self.kind == NUMERIC and self.levels:
            raise SchemaError(f"numeric attribute {self.name!r} cannot carry levels")


@dataclass
class Dataset:
    """Encoded tabular dataset.

    ``X`` has one column per non-label attribute, in schema order; ``y`` holds
    0-based class indices. ``provenance`` carries ingestion metadata (source
    path, checksum, imputed values) and is not part of the data identity.
    """

    name: str
    schema: tuple[AttributeSchema, ...]
    X: np.ndarray
    y: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.validate()

    def validate(self):
        labels = [a for a in self.schema if a.kind == LABEL]
        if len(labels) != 1:
            raise SchemaError(f"schema must contain exactly one label attribute, got {len(labels)}")
        if not labels[0].levels:
            raise SchemaError("label attribute must carry its class levels")
        names = [a.name for a in self.schema]
        if len(set(names)) != len(names):
            raise SchemaError("attribute names must be unique")
        for a in self.schema:
            if a.kind == CATEGORICAL and not a.levels:
                raise SchemaError(f"categorical attribute {a.name!r} must carry levels")
        if self.X.ndim != 2 or self.X.shape[1] != len(self.schema) - 1:
            raise SchemaError(
                f"feature matrix width {self.X.shape} does not match schema "
                f"({len(self.schema) - 1} non-label attributes)"
            )
        if self.y.shape != (self.X.shape[0],):
            raise SchemaError("label vector length must equal the row count")
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= self.n_classes):
            raise SchemaError(f"label indices must lie in [0, {self.n_classes - 1}]")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def label_attribute(self) -> AttributeSchema:
        return next(a for a in self.schema if a.kind == LABEL)

    @property
    def n_classes(self) -> int:
        return len(self.label_attribute.levels)

    @property
    def feature_schema(self) -> tuple[AttributeSchema, ...]:
        return tuple(a for a in self.schema if a.kind != LABEL)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.feature_schema)

    def record(self, i: int) -> tuple[tuple[float, ...], int]:
        """Row i as (feature values, label index)."""
        return tuple(self.X[i].tolist()), int(self.y[i])

    def replace(self, **kwargs) -> "Dataset":
        base = dict(
            name=self.name, schema=self.schema, X=self.X, y=self.y,
            provenance=dict(self.provenance),
        )
        base.update(kwargs)
        return Dataset(**base)


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint covering train/test row indices of one deterministic split."""

    train: tuple[int, ...]
    test: tuple[int, ...]
    seed: int
    fraction: Fraction


def data_equal(a: Dataset, b: Dataset) -> bool:
    """Exact (bit-level) equality of schema, features and labels."""
    return (
        a.schema == b.schema
        and a.X.shape == b.X.shape
        and np.array_equal(a.X, b.X, equal_nan=True)
        and np.array_equal(a.y, b.y)
    )


def encode_categorical(
    column, levels: list[str] | tuple[str, ...] | None = None
) -> tuple[list[int], list[str]]:
    """Label-encode a text column to 0-based codes.

    Without frozen ``levels`` the level order is first appearance. With frozen
    levels, an unseen value raises EncodingError.
    """
    if len(column) == 0:
        raise EncodingError("cannot encode an empty column")
    frozen = levels is not None
    lev = list(levels) if frozen else []
    index = {v: i for i, v in enumerate(lev)}
    codes = []
    for v in column:
        if v not in index:
            if frozen:
                raise EncodingError(f"unseen categorical level {v!r} (levels are frozen)")
            index[v] = len(lev)
            lev.append(v)
        codes.append(index[v])
    return codes, lev


def decode_categorical(codes, levels) -> list[str]:
    levels = list(levels)
    out = []
    for c in codes:
        c = int(c)
        if not 0 <= c < len(levels):
            raise EncodingError(f"code {c} outside level range 0..{len(levels) - 1}")
        out.append(levels[c])
    return out


def _is_missing(cell: str) -> bool:
    return cell.strip() in MISSING_MARKERS


def _parses_as_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def _sniff_header(rows: list[list[str]]) -> bool:
    """Heuristic: row 0 is a header if some column has a non-numeric first
    cell over an otherwise numeric column. Falls back to no-header."""
    if len(rows) < 2:
        return False
    for j in range(len(rows[0])):
        top = rows[0][j]
        if _is_missing(top) or _parses_as_float(top):
            continue
        rest = [r[j] for r in rows[1:] if not _is_missing(r[j])]
        if rest and all(_parses_as_float(c) for c in rest):
            return True
    return False


def _mode_first_appearance(values: list[str]) -> str:
    counts: dict[str, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    best = max(counts.values())
    for v in values:  # first-appearance tie break
        if counts[v] == best:
            return v
    raise AssertionError("unreachable")


def load_csv(
    path,
    label_column,
    schema_hint: list[AttributeSchema] | None = None,
    name: str | None = None,
    header: bool | None = None,
) -> Dataset:
    """Load a comma-separated file into an encoded Dataset.

    ``label_column`` is a column name (requires a header or schema_hint) or a
    0-based index. Cells equal to "?" or empty are treated as missing and
    imputed with the full-column mean (numeric) or mode (categorical).
    Column kinds are inferred (all-float -> numeric) unless ``schema_hint``
    forces them; frozen levels in the hint are enforced.
    """
    path = Path(path)
    raw = path.read_bytes()
    text = raw.decode("utf-8-sig")
    rows = [row for row in csv.reader(text.splitlines()) if row]
    if not rows:
        raise IngestionError(f"{path}: no rows")

    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise CsvParseError(f"{path}: row {i + 1} has {len(row)} cells, expected {width}")

    if schema_hint is not None and len(schema_hint) != width:
        raise SchemaError(
            f"schema hint has {len(schema_hint)} attributes but file has {width} columns"
        )

    if header is None:
        header = schema_hint is None and _sniff_header(rows)
    col_names = rows[0] if header else None
    body = rows[1:] if header else rows
    if not body:
        raise IngestionError(f"{path}: header only, no data rows")

    if schema_hint is not None:
        names = [a.name for a in schema_hint]
    elif col_names is not None:
        names = [c.strip() for c in col_names]
    else:
        names = [f"col{j}" for j in range(width)]

    if isinstance(label_column, int):
        label_idx = label_column if label_column >= 0 else width + label_column
        if not 0 <= label_idx < width:
            raise SchemaError(f"label column index {label_column} out of range for width {width}")
    else:
        if label_column not in names:
            raise SchemaError(f"unknown label column {label_column!r} (columns: {names})")
        label_idx = names.index(label_column)

    columns = [[body[i][j].strip() for i in range(len(body))] for j in range(width)]

    imputed: dict[str, object] = {}
    schema: list[AttributeSchema] = []
    encoded: list[np.ndarray] = []
    y: np.ndarray | None = None

    for j, colname in enumerate(names):
        col = columns[j]
        is_label = j == label_idx
        hint = schema_hint[j] if schema_hint is not None else None
        if hint is not None and (hint.kind == LABEL) != is_label:
            raise SchemaError(f"schema hint marks {hint.name!r} as {hint.kind}, "
                              f"but label column is {names[label_idx]!r}")

        present = [c for c in col if not _is_missing(c)]
        if is_label:
            if len(present) != len(col):
                raise IngestionError(f"{path}: column {colname!r} is the label and has missing cells")
            frozen = hint.levels if hint is not None and hint.levels else None
            codes, levels = encode_categorical(col, frozen)
            schema.append(AttributeSchema(colname, LABEL, tuple(levels)))
            y = np.asarray(codes, dtype=np.int64)
            continue

        if not present:
            raise IngestionError(f"{path}: column {colname!r} has no usable values")

        if hint is not None:
            numeric = hint.kind == NUMERIC
        else:
            numeric = all(_parses_as_float(c) for c in present)

        if numeric:
            vals = np.array(
                [float(c) if not _is_missing(c) else np.nan for c in col], dtype=np.float64
            )
            if np.isnan(vals).any():
                mean = float(np.nanmean(vals))
                imputed[colname] = mean
                vals = np.where(np.isnan(vals), mean, vals)
            schema.append(AttributeSchema(colname, NUMERIC))
            encoded.append(vals)
        else:
            if any(_is_missing(c) for c in col):
                fill = _mode_first_appearance(present)
                imputed[colname] = fill
                col = [fill if _is_missing(c) else c for c in col]
            frozen = hint.levels if hint is not None and hint.levels else None
            codes, levels = encode_categorical(col, frozen)
            schema.append(AttributeSchema(colname, CATEGORICAL, tuple(levels)))
            encoded.append(np.asarray(codes, dtype=np.float64))

    assert y is not None
    X = np.column_stack(encoded) if encoded else np.empty((len(body), 0))
    return Dataset(
        name=name or path.stem,
        schema=tuple(schema),
        X=X,
        y=y,
        provenance={
            "source": str(path),
            "sha256": hashlib.sha256(raw).hexdigest(),
            "imputed": imputed,
        },
    )


def as_fraction(fraction) -> Fraction:
    """Accept Fraction, float, int ratio string like '9/10', or decimal string."""
    if isinstance(fraction, Fraction):
        return fraction
    if isinstance(fraction, str):
        return Fraction(fraction)
    return Fraction(fraction).limit_denominator(10**9)


def split(ds: Dataset, fraction=Fraction(9, 10), seed: int = 0,
          stratified: bool = False) -> SplitIndices:
    """Deterministic train/test split: seeded shuffle, then prefix of size
    floor(fraction * n) becomes the training set.

    With ``stratified`` the same total training size is allocated across
    classes by largest remainder, shuffling within each class.
    """
    frac = as_fraction(fraction)
    if not (0 < frac < 1):
        raise SplitError(f"fraction must lie strictly between 0 and 1, got {frac}")
    n = ds.n_rows
    if n == 0:
        raise SplitError("cannot split an empty dataset")
    n_train = (frac.numerator * n) // frac.denominator
    if n_train == 0 or n_train == n:
        raise SplitError(f"fraction {frac} yields an empty train or test set for n={n}")

    rng = np.random.default_rng(seed)
    if not stratified:
        perm = rng.permutation(n)
        train, test = perm[:n_train], perm[n_train:]
    else:
        classes = np.unique(ds.y)
        counts = {int(c): int((ds.y == c).sum()) for c in classes}
        quota = {c: n_train * counts[c] / n for c in counts}
        take = {c: int(np.floor(quota[c])) for c in counts}
        leftover = n_train - sum(take.values())
        by_remainder = sorted(counts, key=lambda c: (-(quota[c] - take[c]), c))
        for c in by_remainder[:leftover]:
            take[c] += 1
        train_parts, test_parts = [], []
        for c in sorted(counts):
            idx = np.flatnonzero(ds.y == c)
            idx = idx[rng.permutation(len(idx))]
            train_parts.append(idx[: take[c]])
            test_parts.append(idx[take[c]:])
        train = np.concatenate(train_parts)
        test = np.concatenate(test_parts)
        train = train[rng.permutation(len(train))]
        test = test[rng.permutation(len(test))]

    return SplitIndices(
        train=tuple(int(i) for i in train),
        test=tuple(int(i) for i in test),
        seed=seed,
        fraction=frac,
    )


def take_rows(ds: Dataset, indices) -> tuple[np.ndarray, np.ndarray]:
    idx = np.asarray(indices, dtype=np.int64)
    return ds.X[idx], ds.y[idx]


def schema_to_dict(schema: tuple[AttributeSchema, ...]) -> list[dict]:
    return [{"name": a.name, "kind": a.kind, "levels": list(a.levels)} for a in schema]


def schema_from_dict(items) -> tuple[AttributeSchema, ...]:
    return tuple(AttributeSchema(d["name"], d["kind"], tuple(d["levels"])) for d in items)


def dataset_to_dict(ds: Dataset) -> dict:
    """JSON-ready form; float values round-trip exactly through json."""
    return {
        "name": ds.name,
        "schema": schema_to_dict(ds.schema),
        "X": [[float(v) for v in row] for row in ds.X],
        "y": [int(v) for v in ds.y],
    }


def dataset_from_dict(d: dict) -> Dataset:
    n, width = len(d["y"]), len(d["schema"]) - 1
    return Dataset(
        name=d["name"],
        schema=schema_from_dict(d["schema"]),
        X=np.asarray(d["X"], dtype=np.float64).reshape(n, width),
        y=np.asarray(d["y"], dtype=np.int64),
    )


def build_manifest(ds: Dataset) -> dict:
    """Dataset manifest: schema, encoding levels, imputation values, source
    checksum, and basic shape information."""
    return {
        "name": ds.name,
        "rows": ds.n_rows,
        "features": ds.n_features,
        "classes": ds.n_classes,
        "schema": schema_to_dict(ds.schema),
        "imputed": ds.provenance.get("imputed", {}),
        "source": ds.provenance.get("source"),
        "sha256": ds.provenance.get("sha256"),
    }


def save_manifest(ds: Dataset, path) -> None:
    Path(path).write_text(json.dumps(build_manifest(ds), indent=2, sort_keys=True))


def load_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
