"""Built-in benchmark dataset registry.

Five medical-style tabular benchmarks are registered with the row counts and
class counts of their well-known public originals. When a real CSV is present
in the data directory it is loaded as-is (prepared form: header row, label
column named as registered, "?" for missing cells). When absent, a
deterministic synthetic stand-in with the same shape is generated and cached
there, so the full harness runs self-contained; reports record which origin
was used via the file checksum.

Stand-in generation is seeded per dataset and draws class-conditional feature
values (continuous, integer-valued, binary, and text-categorical columns plus
optional missing cells), with the class signal spread across many columns.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset, load_csv
from .errors import IngestionError

DATA_DIR_ENV = "PPMD_DATA_DIR"
DEFAULT_DATA_DIR = "data"

NUM = "num"
INT = "int"
BIN = "bin"
SEX = "sex"  # text Male/Female


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    offset: float = 0.0
    scale: float = 1.0
    decimals: int = 2


@dataclass(frozen=True)
class BuiltinDataset:
    name: str
    rows: int
    n_classes: int
    label: str
    label_levels: tuple[str, ...]
    class_probs: tuple[float, ...]
    sensitive: tuple[str, ...]
    columns: tuple[ColumnSpec, ...]
    separation: float
    gen_seed: int
    missing_rate: float = 0.0


def _heart_columns() -> tuple[ColumnSpec, ...]:
    return (
        ColumnSpec("age", INT, 54, 9),
        ColumnSpec("sex", BIN),
        ColumnSpec("cp", INT, 1.5, 1.0),
        ColumnSpec("trestbps", INT, 131, 17),
        ColumnSpec("chol", INT, 246, 51),
        ColumnSpec("fbs", BIN),
        ColumnSpec("restecg", INT, 1.0, 0.8),
        ColumnSpec("thalach", INT, 149, 22),
        ColumnSpec("exang", BIN),
        ColumnSpec("oldpeak", NUM, 1.0, 1.1, 1),
        ColumnSpec("slope", INT, 1.4, 0.6),
        ColumnSpec("ca", INT, 0.7, 0.9),
        ColumnSpec("thal", INT, 4.7, 1.9),
    )


def _hepatitis_columns() -> tuple[ColumnSpec, ...]:
    names_bin = (
        "steroid", "antivirals", "fatigue", "malaise", "anorexia", "liver_big",
        "liver_firm", "spleen_palpable", "spiders", "ascites", "varices", "histology",
    )
    cols = [ColumnSpec("age", INT, 41, 12), ColumnSpec("sex", BIN)]
    cols += [ColumnSpec(n, BIN) for n in names_bin]
    cols += [
        ColumnSpec("bilirubin", NUM, 1.4, 1.2, 1),
        ColumnSpec("alk_phosphate", INT, 105, 50),
        ColumnSpec("sgot", INT, 85, 80),
        ColumnSpec("albumin", NUM, 3.8, 0.65, 1),
        ColumnSpec("protime", INT, 62, 20),
    ]
    return tuple(cols)


def _indian_liver_columns() -> tuple[ColumnSpec, ...]:
    return (
        ColumnSpec("age", INT, 45, 16),
        ColumnSpec("gender", SEX),
        ColumnSpec("tb", NUM, 3.3, 6.2, 1),
        ColumnSpec("db", NUM, 1.5, 2.8, 1),
        ColumnSpec("alkphos", INT, 290, 240),
        ColumnSpec("sgpt", INT, 80, 180),
        ColumnSpec("sgot", INT, 110, 280),
        ColumnSpec("tp", NUM, 6.5, 1.1, 1),
        ColumnSpec("alb", NUM, 3.1, 0.8, 1),
        ColumnSpec("ag_ratio", NUM, 0.95, 0.32, 2),
    )


def _framingham_columns() -> tuple[ColumnSpec, ...]:
    return (
        ColumnSpec("male", BIN),
        ColumnSpec("age", INT, 49, 8),
        ColumnSpec("education", INT, 2.0, 1.0),
        ColumnSpec("currentSmoker", BIN),
        ColumnSpec("cigsPerDay", INT, 9, 12),
        ColumnSpec("BPMeds", BIN),
        ColumnSpec("prevalentStroke", BIN),
        ColumnSpec("prevalentHyp", BIN),
        ColumnSpec("diabetes", BIN),
        ColumnSpec("totChol", INT, 237, 45),
        ColumnSpec("sysBP", NUM, 132, 22, 1),
        ColumnSpec("diaBP", NUM, 83, 12, 1),
        ColumnSpec("BMI", NUM, 25.8, 4.1, 2),
        ColumnSpec("heartRate", INT, 76, 12),
        ColumnSpec("glucose", INT, 82, 24),
    )


def _arrhythmia_columns() -> tuple[ColumnSpec, ...]:
    cols = [ColumnSpec("age", INT, 46, 16), ColumnSpec("sex", BIN)]
    cols += [ColumnSpec(f"a{j:03d}", NUM, 0.0, 1.0, 3) for j in range(3, 280)]
    return tuple(cols)


def _arrhythmia_probs() -> tuple[float, ...]:
    rest = [0.055] * 12
    return tuple([1.0 - sum(rest)] + rest)


REGISTRY: dict[str, BuiltinDataset] = {
    b.name: b
    for b in (
        BuiltinDataset(
            name="heart_disease", rows=303, n_classes=2, label="target",
            label_levels=("0", "1"), class_probs=(0.54, 0.46),
            sensitive=("age", "sex"), columns=_heart_columns(),
            separation=0.5, gen_seed=70301,
        ),
        BuiltinDataset(
            name="arrhythmia", rows=452, n_classes=13, label="class",
            label_levels=tuple(str(i + 1) for i in range(13)),
            class_probs=_arrhythmia_probs(),
            sensitive=("age", "sex"), columns=_arrhythmia_columns(),
            separation=0.3, gen_seed=70302,
        ),
        BuiltinDataset(
            name="hepatitis", rows=155, n_classes=2, label="class",
            label_levels=("1", "2"), class_probs=(0.21, 0.79),
            sensitive=("age", "sex"), columns=_hepatitis_columns(),
            separation=0.4, gen_seed=70303, missing_rate=0.04,
        ),
        BuiltinDataset(
            name="indian_liver", rows=583, n_classes=2, label="selector",
            label_levels=("1", "2"), class_probs=(0.71, 0.29),
            sensitive=("age", "gender"), columns=_indian_liver_columns(),
            separation=0.35, gen_seed=70304,
        ),
        BuiltinDataset(
            name="framingham", rows=303, n_classes=2, label="TenYearCHD",
            label_levels=("0", "1"), class_probs=(0.55, 0.45),
            sensitive=("age", "male"), columns=_framingham_columns(),
            separation=0.85, gen_seed=70305,
        ),
    )
}


def builtin_names() -> tuple[str, ...]:
    return tuple(REGISTRY)


def _format_value(col: ColumnSpec, value: float) -> str:
    if col.kind == INT:
        return str(int(round(value)))
    if col.kind == BIN:
        return str(int(value))
    if col.kind == SEX:
        return "Male" if value > 0 else "Female"
    return f"{value:.{col.decimals}f}"


def generate_csv(name: str) -> str:
    """Deterministic stand-in CSV for a registered dataset."""
    spec = REGISTRY[name]
    rng = np.random.default_rng(spec.gen_seed)
    n, d, k = spec.rows, len(spec.columns), spec.n_classes

    y = rng.choice(k, size=n, p=np.asarray(spec.class_probs))
    # class signal lives in a random ~3/4 of the columns
    informative = rng.random(d) < 0.75
    centers = rng.normal(0.0, 1.0, size=(k, d)) * spec.separation * informative
    latent = centers[y] + rng.normal(0.0, 1.0, size=(n, d))

    cells = np.empty((n, d), dtype=object)
    for j, col in enumerate(spec.columns):
        for i in range(n):
            if col.kind in (BIN, SEX):
                cells[i, j] = _format_value(col, 1.0 if latent[i, j] > 0 else 0.0)
            else:
                cells[i, j] = _format_value(col, col.offset + col.scale * latent[i, j])
    if spec.missing_rate > 0:
        holes = rng.random((n, d)) < spec.missing_rate
        cells[holes] = "?"

    header = ",".join([c.name for c in spec.columns] + [spec.label])
    lines = [header]
    for i in range(n):
        lines.append(",".join(list(cells[i]) + [spec.label_levels[y[i]]]))
    return "\n".join(lines) + "\n"


def data_dir(path: str | os.PathLike | None = None) -> Path:
    if path is not None:
        return Path(path)
    return Path(os.environ.get(DATA_DIR_ENV, DEFAULT_DATA_DIR))


def dataset_path(name: str, directory: str | os.PathLike | None = None) -> Path:
    return data_dir(directory) / f"{name}.csv"


def ensure_dataset_file(name: str, directory: str | os.PathLike | None = None) -> Path:
    """Return the CSV path for a registered dataset, generating the stand-in
    if no file exists yet."""
    if name not in REGISTRY:
        raise IngestionError(f"unknown dataset {name!r} (registered: {builtin_names()})")
    path = dataset_path(name, directory)
    if not path.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(generate_csv(name))
    return path


def resolve_dataset(
    name_or_path: str,
    directory: str | os.PathLike | None = None,
    label_column: str | int | None = None,
) -> Dataset:
    """Load a registered dataset by name (generating the stand-in when there
    is no file) or an arbitrary CSV by path (label column required)."""
    if name_or_path in REGISTRY:
        spec = REGISTRY[name_or_path]
        path = ensure_dataset_file(name_or_path, directory)
        ds = load_csv(path, label_column=spec.label, name=spec.name, header=True)
        expected = hashlib.sha256(generate_csv(name_or_path).encode()).hexdigest()
        ds.provenance["origin"] = (
            "bundled-synthetic" if ds.provenance.get("sha256") == expected else "external-csv"
        )
        return ds
    path = Path(name_or_path)
    if not path.exists():
        raise IngestionError(f"dataset {name_or_path!r} is neither registered nor an existing file")
    if label_column is None:
        raise IngestionError(f"loading {path}: a label column must be specified for csv paths")
    ds = load_csv(path, label_column=label_column)
    ds.provenance["origin"] = "external-csv"
    return ds


def default_sensitive_columns(name: str) -> tuple[str, ...]:
    if name in REGISTRY:
        return REGISTRY[name].sensitive
    return ()
