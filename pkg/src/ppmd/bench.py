"""Experiment grid harness: datasets x classifiers x noise placements x seeds.

A run resolves its datasets, executes every grid cell through the shared
pipeline, and emits a canonical JSON report (plus derived CSV tables): raw
per-cell metrics, per-configuration aggregates over seeds, gap tables between
placements, and per-(dataset, metric) signed-rank comparisons across the
classifier axis. Reports are free of wall-clock state and fully reproducible:
re-running the emitted config snapshot yields byte-identical JSON.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .builtin_data import default_sensitive_columns, resolve_dataset
from .classifiers import VARIANTS, ClassifierConfig
from .dataset import Dataset, as_fraction, build_manifest
from .errors import GridMismatchError, PpmdError, SchemaError
from .evaluation import METRIC_NAMES, compare_metric_grids
from .partition import COLUMN, ROW, PartitionSpec
from .pipeline import ALL, CLEAN, PLACEMENTS, PPMD, CellResult, derive_seed, run_cell
from .privacy import NoiseConfig
from .protocol import make_owners, run_protocol, scan_trace

GAP_PAIRS = ((CLEAN, PPMD), (PPMD, ALL))


@dataclass
class RunConfig:
    """Everything one grid run depends on. Unset fields take the defaults
    below and are written back into the emitted snapshot."""

    datasets: tuple[str, ...] = ("heart_disease",)
    classifiers: tuple[str, ...] = VARIANTS
    placements: tuple[str, ...] = (CLEAN, PPMD)
    seeds: tuple[int, ...] = tuple(range(10))
    fraction: str = "9/10"
    stratified: bool = False
    partition_mode: str = COLUMN
    sensitive_columns: dict = field(default_factory=dict)  # dataset -> [columns]
    row_k: int = 2
    noise: dict = field(default_factory=dict)  # NoiseConfig fields
    classifier_config: dict = field(default_factory=dict)  # ClassifierConfig fields
    averaging: str = "auto"  # auto | binary | macro
    positive_class: int = 1
    alpha: float = 0.05
    schedule_seed: int = 0  # protocol upload order (simulate only)
    label_columns: dict = field(default_factory=dict)  # csv-path datasets
    data_dir: str | None = None
    out_dir: str = "out"

    def __post_init__(self):
        self.datasets = tuple(self.datasets)
        self.classifiers = tuple(self.classifiers)
        self.placements = tuple(self.placements)
        self.seeds = tuple(int(s) for s in self.seeds)
        for v in self.classifiers:
            if v not in VARIANTS:
                raise SchemaError(f"unknown classifier {v!r} (choose from {VARIANTS})")
        for p in self.placements:
            if p not in PLACEMENTS:
                raise SchemaError(f"unknown placement {p!r} (choose from {PLACEMENTS})")
        if self.partition_mode not in (COLUMN, ROW):
            raise SchemaError(f"unknown partition mode {self.partition_mode!r}")
        if self.averaging not in ("auto", "binary", "macro"):
            raise SchemaError(f"unknown averaging {self.averaging!r}")
        if not self.datasets:
            raise SchemaError("need at least one dataset")
        if not self.seeds:
            raise SchemaError("need at least one seed")

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        known = set(RunConfig().__dict__)
        unknown = set(d) - known
        if unknown:
            raise SchemaError(f"unknown config keys: {sorted(unknown)}")
        return RunConfig(**d)

    def noise_config(self) -> NoiseConfig:
        return NoiseConfig.from_dict(self.noise)

    def clf_config(self) -> ClassifierConfig:
        return ClassifierConfig.from_dict(self.classifier_config)

    def averaging_override(self) -> str | None:
        return None if self.averaging == "auto" else self.averaging

    def sensitive_for(self, name: str) -> tuple[str, ...]:
        cols = tuple(self.sensitive_columns.get(name, ()))
        return cols or default_sensitive_columns(name)

    def partition_spec_for(self, name: str) -> PartitionSpec:
        if self.partition_mode == ROW:
            return PartitionSpec(mode=ROW, k=self.row_k)
        cols = self.sensitive_for(name)
        if not cols:
            raise SchemaError(
                f"no sensitive columns configured for dataset {name!r}"
            )
        return PartitionSpec(mode=COLUMN, sensitive_columns=cols)

    def snapshot(self) -> dict:
        """Fully materialized config: every default and every per-dataset
        resolution written out."""
        return {
            "datasets": list(self.datasets),
            "classifiers": list(self.classifiers),
            "placements": list(self.placements),
            "seeds": list(self.seeds),
            "fraction": str(as_fraction(self.fraction)),
            "stratified": self.stratified,
            "partition_mode": self.partition_mode,
            "sensitive_columns": {
                name: list(self.sensitive_for(name)) for name in self.datasets
            },
            "row_k": self.row_k,
            "noise": self.noise_config().to_dict(),
            "classifier_config": self.clf_config().to_dict(),
            "averaging": self.averaging,
            "positive_class": self.positive_class,
            "alpha": self.alpha,
            "schedule_seed": self.schedule_seed,
            "label_columns": dict(self.label_columns),
            "data_dir": self.data_dir,
            "out_dir": self.out_dir,
        }


def load_config(path) -> RunConfig:
    """Read a TOML or JSON run configuration."""
    raw = Path(path).read_bytes()
    if str(path).endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:  # python 3.10
            import tomli as tomllib
        data = tomllib.loads(raw.decode())
    else:
        data = json.loads(raw.decode())
    return RunConfig.from_dict(data)


@dataclass
class BenchReport:
    config: dict
    cells: list[CellResult]
    manifests: dict
    aggregates: dict
    gap_tables: dict
    wilcoxon: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "cells": [c.to_dict() for c in self.cells],
            "manifests": self.manifests,
            "aggregates": self.aggregates,
            "gap_tables": self.gap_tables,
            "wilcoxon": self.wilcoxon,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _mean_std(values: list[float]) -> dict:
    n = len(values)
    if n == 0:
        return {"mean": None, "std": None, "n": 0}
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return {"mean": mean, "std": var ** 0.5, "n": n}


def aggregate_cells(cells: list[CellResult]) -> dict:
    """dataset -> classifier -> placement -> metric -> {mean, std, n}."""
    table: dict = {}
    for cell in cells:
        slot = (
            table.setdefault(cell.dataset, {})
            .setdefault(cell.classifier, {})
            .setdefault(cell.placement, {m: [] for m in METRIC_NAMES})
        )
        if cell.report is not None:
            for m, v in cell.report.values().items():
                slot[m].append(v)
    return {
        ds: {
            clf: {plc: {m: _mean_std(vals) for m, vals in slot.items()}
                  for plc, slot in by_plc.items()}
            for clf, by_plc in by_clf.items()
        }
        for ds, by_clf in table.items()
    }


def gap_tables(aggregates: dict, placements: tuple[str, ...]) -> dict:
    """Mean-metric differences between placements (a minus b), per
    dataset/classifier/metric; recomputable from the aggregate cells."""
    tables: dict = {}
    for a, b in GAP_PAIRS:
        if a not in placements or b not in placements:
            continue
        key = f"{a}_minus_{b}"
        tables[key] = {}
        for ds, by_clf in aggregates.items():
            tables[key][ds] = {}
            for clf, by_plc in by_clf.items():
                row = {}
                for m in METRIC_NAMES:
                    ma = by_plc.get(a, {}).get(m, {}).get("mean")
                    mb = by_plc.get(b, {}).get(m, {}).get("mean")
                    row[m] = None if ma is None or mb is None else ma - mb
                tables[key][ds][clf] = row
    return tables


def _placement_grid(aggregates: dict, placement: str) -> dict:
    """dataset -> classifier -> {metric: mean} for one placement, dropping
    classifiers without a complete mean vector."""
    grid: dict = {}
    for ds, by_clf in aggregates.items():
        grid[ds] = {}
        for clf, by_plc in by_clf.items():
            means = {m: by_plc.get(placement, {}).get(m, {}).get("mean") for m in METRIC_NAMES}
            if all(v is not None for v in means.values()):
                grid[ds][clf] = means
    return grid


def wilcoxon_tables(aggregates: dict, placements: tuple[str, ...], alpha: float) -> dict:
    """Signed-rank comparison across the classifier axis, one test per
    (dataset, metric), for each placement pair present."""
    tables: dict = {}
    for a, b in GAP_PAIRS:
        if a not in placements or b not in placements:
            continue
        grid_a = _placement_grid(aggregates, a)
        grid_b = _placement_grid(aggregates, b)
        for ds in list(grid_a):
            common = set(grid_a[ds]) & set(grid_b[ds])
            grid_a[ds] = {c: grid_a[ds][c] for c in common}
            grid_b[ds] = {c: grid_b[ds][c] for c in common}
        tables[f"{a}_vs_{b}"] = compare_metric_grids(grid_a, grid_b, alpha)
    return tables


def run_bench(config: RunConfig) -> BenchReport:
    """Execute the full grid. Cell failures (degenerate training and the
    like) are recorded as error cells; the run continues."""
    datasets: list[Dataset] = []
    manifests: dict = {}
    for name in config.datasets:
        ds = resolve_dataset(
            name, directory=config.data_dir,
            label_column=config.label_columns.get(name),
        )
        datasets.append(ds)
        manifests[ds.name] = {**build_manifest(ds), "origin": ds.provenance.get("origin")}

    fraction = as_fraction(config.fraction)
    noise_cfg = config.noise_config()
    clf_cfg = config.clf_config()

    cells: list[CellResult] = []
    for ds in datasets:
        spec = config.partition_spec_for(ds.name)
        for placement in config.placements:
            for variant in config.classifiers:
                for seed in config.seeds:
                    cell_spec = spec
                    if spec.mode == ROW:
                        cell_spec = replace(spec, seed=derive_seed(seed, "partition"))
                    try:
                        cell, _ = run_cell(
                            ds, placement, cell_spec, noise_cfg, variant, clf_cfg,
                            fraction=fraction, seed=seed,
                            stratified=config.stratified,
                            averaging=config.averaging_override(),
                            positive_class=config.positive_class,
                        )
                    except PpmdError as err:
                        cell = CellResult(
                            dataset=ds.name, classifier=variant, placement=placement,
                            seed=seed, n_train=0, n_test=0, report=None,
                            confusion_matrix=None, error=f"{type(err).__name__}: {err}",
                        )
                    cells.append(cell)

    expected = (
        len(config.datasets) * len(config.placements)
        * len(config.classifiers) * len(config.seeds)
    )
    if len(cells) != expected:
        raise PpmdError(f"grid integrity violated: {len(cells)} cells, expected {expected}")

    aggregates = aggregate_cells(cells)
    return BenchReport(
        config=config.snapshot(),
        cells=cells,
        manifests=manifests,
        aggregates=aggregates,
        gap_tables=gap_tables(aggregates, config.placements),
        wilcoxon=wilcoxon_tables(aggregates, config.placements, config.alpha),
    )


def run_simulation(config: RunConfig, n_owners: int) -> tuple[BenchReport, dict]:
    """Execute the grid with training driven through the owner/provider
    protocol.

    Returns the report plus {cell key: {"trace": TraceLog, "leakage":
    violations-or-None}}; the leakage scan runs once per pooled upload. With
    one owner the report equals the plain `run_bench` report for the same
    config.
    """
    datasets: list[Dataset] = []
    manifests: dict = {}
    for name in config.datasets:
        ds = resolve_dataset(
            name, directory=config.data_dir,
            label_column=config.label_columns.get(name),
        )
        datasets.append(ds)
        manifests[ds.name] = {**build_manifest(ds), "origin": ds.provenance.get("origin")}

    fraction = as_fraction(config.fraction)
    noise_cfg = config.noise_config()
    clf_cfg = config.clf_config()

    cells: list[CellResult] = []
    traces: dict = {}
    for ds in datasets:
        spec = config.partition_spec_for(ds.name)
        for placement in config.placements:
            for seed in config.seeds:
                cell_spec = spec
                if spec.mode == ROW:
                    cell_spec = replace(spec, seed=derive_seed(seed, "partition"))
                owners = make_owners(
                    ds, n_owners, cell_spec,
                    replace(noise_cfg, seed=derive_seed(seed, "noise")),
                    placement=placement, master_seed=seed,
                )
                for variant in config.classifiers:
                    for owner in owners:
                        owner.inbox.clear()
                    try:
                        run = run_protocol(
                            owners, variant, clf_cfg, fraction=fraction,
                            master_seed=seed, schedule_seed=config.schedule_seed,
                            stratified=config.stratified,
                            averaging=config.averaging_override(),
                            positive_class=config.positive_class,
                        )
                    except PpmdError as err:
                        cells.append(CellResult(
                            dataset=ds.name, classifier=variant, placement=placement,
                            seed=seed, n_train=0, n_test=0, report=None,
                            confusion_matrix=None, error=f"{type(err).__name__}: {err}",
                        ))
                        continue
                    outcome = run.outcome
                    cells.append(CellResult(
                        dataset=ds.name, classifier=variant, placement=placement,
                        seed=seed,
                        n_train=len(outcome.split_indices.train),
                        n_test=len(outcome.split_indices.test),
                        report=outcome.report,
                        confusion_matrix=outcome.confusion_matrix,
                    ))
                    entry = {"trace": run.trace, "leakage": None}
                    if variant == config.classifiers[0]:
                        entry["leakage"] = scan_trace(run.trace, run.owners).violations
                    traces[f"{ds.name}_{placement}_{variant}_seed{seed}"] = entry

    aggregates = aggregate_cells(cells)
    report = BenchReport(
        config=config.snapshot(),
        cells=cells,
        manifests=manifests,
        aggregates=aggregates,
        gap_tables=gap_tables(aggregates, config.placements),
        wilcoxon=wilcoxon_tables(aggregates, config.placements, config.alpha),
    )
    return report, traces


def cells_csv(report: BenchReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", "classifier", "placement", "seed",
                "ca", "precision", "recall", "f1", "n_train", "n_test", "error"])
    for c in report.cells:
        vals = c.report.values() if c.report else {m: "" for m in METRIC_NAMES}
        w.writerow([c.dataset, c.classifier, c.placement, c.seed,
                    vals["ca"], vals["precision"], vals["recall"], vals["f1"],
                    c.n_train, c.n_test, c.error or ""])
    return buf.getvalue()


def aggregates_csv(report: BenchReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", "classifier", "placement", "metric", "mean", "std", "n"])
    for ds in sorted(report.aggregates):
        for clf in sorted(report.aggregates[ds]):
            for plc in sorted(report.aggregates[ds][clf]):
                for m in METRIC_NAMES:
                    s = report.aggregates[ds][clf][plc][m]
                    w.writerow([ds, clf, plc, m, s["mean"], s["std"], s["n"]])
    return buf.getvalue()


def gaps_csv(report: BenchReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["comparison", "dataset", "classifier", "metric", "gap"])
    for key in sorted(report.gap_tables):
        for ds in sorted(report.gap_tables[key]):
            for clf in sorted(report.gap_tables[key][ds]):
                for m in METRIC_NAMES:
                    w.writerow([key, ds, clf, m, report.gap_tables[key][ds][clf][m]])
    return buf.getvalue()


def wilcoxon_csv(report: BenchReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["comparison", "dataset", "metric", "p_value", "statistic", "z",
                "n_effective", "decision"])
    for key in sorted(report.wilcoxon):
        for ds in sorted(report.wilcoxon[key]):
            for m in METRIC_NAMES:
                cell = report.wilcoxon[key][ds][m]
                if "undefined" in cell:
                    w.writerow([key, ds, m, "", "", "", "", f"undefined: {cell['undefined']}"])
                else:
                    w.writerow([key, ds, m, cell["p_value"], cell["statistic"],
                                cell["z"], cell["n_effective"],
                                "reject" if cell["reject"] else "accept"])
    return buf.getvalue()


def write_report(report: BenchReport, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    (out / "config.json").write_text(
        json.dumps(report.config, sort_keys=True, indent=2) + "\n"
    )
    (out / "cells.csv").write_text(cells_csv(report))
    (out / "aggregates.csv").write_text(aggregates_csv(report))
    (out / "gaps.csv").write_text(gaps_csv(report))
    (out / "wilcoxon.csv").write_text(wilcoxon_csv(report))
    return out / "report.json"


def load_report(path) -> dict:
    return json.loads(Path(path).read_text())


def _report_grid(report: dict, placement: str | None) -> tuple[str, dict]:
    """Pick a placement (the report's only one, else 'ppmd', else first) and
    extract its dataset -> classifier -> metric-mean grid."""
    placements = report["config"]["placements"]
    if placement is None:
        placement = placements[0] if len(placements) == 1 else (
            PPMD if PPMD in placements else placements[0]
        )
    if placement not in placements:
        raise GridMismatchError(f"placement {placement!r} not in report ({placements})")
    return placement, _placement_grid(report["aggregates"], placement)


def compare_reports(
    report_a: dict, report_b: dict, alpha: float = 0.05,
    placement_a: str | None = None, placement_b: str | None = None,
) -> dict:
    """Cross-report comparison in the Table-8/9/10 shape: per-cell metric
    gaps plus per-(dataset, metric) signed-rank tests over the classifiers."""
    plc_a, grid_a = _report_grid(report_a, placement_a)
    plc_b, grid_b = _report_grid(report_b, placement_b)
    if set(grid_a) != set(grid_b):
        raise GridMismatchError(
            f"reports cover different datasets: {sorted(grid_a)} vs {sorted(grid_b)}"
        )
    gaps: dict = {}
    for ds in sorted(grid_a):
        if set(grid_a[ds]) != set(grid_b[ds]):
            raise GridMismatchError(f"reports cover different classifiers on {ds}")
        gaps[ds] = {
            clf: {m: grid_a[ds][clf][m] - grid_b[ds][clf][m] for m in METRIC_NAMES}
            for clf in sorted(grid_a[ds])
        }
    return {
        "placement_a": plc_a,
        "placement_b": plc_b,
        "gaps": gaps,
        "wilcoxon": compare_metric_grids(grid_a, grid_b, alpha),
    }
