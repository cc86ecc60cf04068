"""Command-line harness.

Subcommands: run (experiment grid), simulate (grid through the multi-owner
protocol), report (compare saved reports), partition / noise (one-off data
preparation), inspect (dataset manifest). Exit codes: 0 ok, 1 internal error,
2 bad input. The default data directory comes from $PPMD_DATA_DIR.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench
from .builtin_data import builtin_names, default_sensitive_columns, resolve_dataset
from .classifiers import VARIANTS
from .dataset import build_manifest, save_manifest
from .errors import PpmdError
from .evaluation import METRIC_NAMES
from .partition import COLUMN, ROW, partition_columns, partition_rows
from .privacy import NoiseConfig, sanitize_partition


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="run configuration file (.json or .toml)")
    p.add_argument("--out-dir", help="output directory (default: out)")
    p.add_argument("--data-dir", help="dataset directory (default: $PPMD_DATA_DIR or ./data)")
    p.add_argument("--datasets", help="comma-separated dataset names or csv paths")
    p.add_argument("--classifiers", help=f"comma-separated subset of {','.join(VARIANTS)}")
    p.add_argument("--placement", help="comma-separated subset of clean,ppmd,all")
    p.add_argument("--seed", type=int, help="single master seed (replaces the seed list)")
    p.add_argument("--seeds", help="comma-separated master seeds")


def _build_config(args) -> bench.RunConfig:
    config = bench.load_config(args.config) if args.config else bench.RunConfig()
    updates = {}
    if args.datasets:
        updates["datasets"] = tuple(args.datasets.split(","))
    if args.classifiers:
        updates["classifiers"] = tuple(args.classifiers.split(","))
    if args.placement:
        updates["placements"] = tuple(args.placement.split(","))
    if args.seed is not None:
        updates["seeds"] = (args.seed,)
    if args.seeds:
        updates["seeds"] = tuple(int(s) for s in args.seeds.split(","))
    if args.out_dir:
        updates["out_dir"] = args.out_dir
    if args.data_dir:
        updates["data_dir"] = args.data_dir
    if updates:
        config = replace(config, **updates)
    return config


def _summarize(report: bench.BenchReport) -> str:
    lines = []
    for ds in sorted(report.aggregates):
        for clf in sorted(report.aggregates[ds]):
            for plc in sorted(report.aggregates[ds][clf]):
                stats = report.aggregates[ds][clf][plc]
                cells = " ".join(
                    f"{m}={stats[m]['mean']:.4f}" if stats[m]["mean"] is not None else f"{m}=n/a"
                    for m in METRIC_NAMES
                )
                lines.append(f"{ds:>14} {clf:>4} {plc:>5}  {cells}")
    return "\n".join(lines)


def cmd_run(args) -> int:
    config = _build_config(args)
    report = bench.run_bench(config)
    path = bench.write_report(report, config.out_dir)
    print(_summarize(report))
    errors = [c for c in report.cells if c.error]
    if errors:
        print(f"{len(errors)} cell(s) recorded errors (see {path})")
    print(f"report written to {path}")
    return 0


def cmd_simulate(args) -> int:
    config = _build_config(args)
    report, traces = bench.run_simulation(config, args.owners)
    out = Path(config.out_dir)
    path = bench.write_report(report, out)
    trace_dir = out / "traces"
    trace_dir.mkdir(parents=True, exist_ok=True)
    leaks = 0
    for key, entry in traces.items():
        entry["trace"].save(trace_dir / f"{key}.jsonl")
        if entry["leakage"]:
            leaks += len(entry["leakage"])
            for v in entry["leakage"]:
                print(f"LEAKAGE {key}: {v}", file=sys.stderr)
    print(_summarize(report))
    print(f"{len(traces)} trace(s) written to {trace_dir}; leakage violations: {leaks}")
    print(f"report written to {path}")
    return 0 if leaks == 0 else 1


def cmd_report(args) -> int:
    reports = [bench.load_report(p) for p in args.reports]
    if len(reports) < 2:
        raise PpmdError("need at least two report files to compare")
    base = reports[0]
    out = {}
    for path, other in zip(args.reports[1:], reports[1:]):
        out[f"{args.reports[0]} vs {path}"] = bench.compare_reports(
            base, other, alpha=args.alpha,
            placement_a=args.placement_a, placement_b=args.placement_b,
        )
    text = json.dumps(out, sort_keys=True, indent=2)
    if args.out_dir:
        dest = Path(args.out_dir)
        dest.mkdir(parents=True, exist_ok=True)
        (dest / "comparison.json").write_text(text + "\n")
        print(f"comparison written to {dest / 'comparison.json'}")
    else:
        print(text)
    return 0


def cmd_partition(args) -> int:
    ds = resolve_dataset(args.dataset, directory=args.data_dir, label_column=args.label_column)
    if args.mode == COLUMN:
        cols = args.columns.split(",") if args.columns else list(
            default_sensitive_columns(args.dataset)
        )
        pd = partition_columns(ds, cols)
    else:
        pd = partition_rows(ds, args.k, args.seed or 0)
    out = Path(args.out_dir or "out")
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "sensitive.csv", pd.sensitive, delimiter=",", fmt="%.17g")
    np.savetxt(out / "non_sensitive.csv", pd.non_sensitive, delimiter=",", fmt="%.17g")
    provenance = {
        "spec": pd.spec.to_dict(),
        "sensitive_index": list(pd.sensitive_index),
        "non_sensitive_index": list(pd.non_sensitive_index),
    }
    manifest = {**build_manifest(ds), "partition": provenance}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    (out / "partition.json").write_text(json.dumps(provenance, indent=2, sort_keys=True))
    print(f"sensitive part {pd.sensitive.shape}, non-sensitive part {pd.non_sensitive.shape}")
    print(f"parts and provenance written to {out}")
    return 0


def cmd_noise(args) -> int:
    ds = resolve_dataset(args.dataset, directory=args.data_dir, label_column=args.label_column)
    cols = args.columns.split(",") if args.columns else list(
        default_sensitive_columns(args.dataset)
    )
    pd = partition_columns(ds, cols)
    config = NoiseConfig(scale=args.scale, epsilon=args.epsilon, seed=args.seed or 0)
    sanitized = sanitize_partition(pd, config)
    out = Path(args.out_dir or "out")
    out.mkdir(parents=True, exist_ok=True)
    header = ",".join(ds.feature_names + (ds.label_attribute.name,))
    rows = [header]
    for i in range(sanitized.data.n_rows):
        rows.append(",".join([repr(float(v)) for v in sanitized.data.X[i]]
                             + [str(int(sanitized.data.y[i]))]))
    (out / "sanitized.csv").write_text("\n".join(rows) + "\n")
    # the noise log is owner-private: keep it next to the manifest, never upload it
    np.savetxt(out / "noise_log.private.csv", sanitized.noise_log.noise, delimiter=",", fmt="%.17g")
    save_manifest(ds, out / "manifest.json")
    print(f"sanitized dataset and private noise log written to {out}")
    return 0


def cmd_inspect(args) -> int:
    ds = resolve_dataset(args.dataset, directory=args.data_dir, label_column=args.label_column)
    manifest = {**build_manifest(ds), "origin": ds.provenance.get("origin")}
    print(json.dumps(manifest, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppmd",
        description="privacy-preserving multi-owner classification harness "
                    f"(built-in datasets: {', '.join(builtin_names())})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute the experiment grid")
    _add_common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("simulate", help="execute the grid through the owner/provider protocol")
    _add_common(p)
    p.add_argument("--owners", type=int, default=3, help="number of data owners (default 3)")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("report", help="compare two or more saved reports")
    p.add_argument("reports", nargs="+", help="report.json paths")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--placement-a", help="placement to read from the first report")
    p.add_argument("--placement-b", help="placement to read from the other reports")
    p.add_argument("--out-dir")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("partition", help="split a dataset into sensitive/non-sensitive parts")
    p.add_argument("dataset", help="registered dataset name or csv path")
    p.add_argument("--mode", choices=[COLUMN, ROW], default=COLUMN)
    p.add_argument("--columns", help="comma-separated sensitive columns (column mode)")
    p.add_argument("--k", type=int, default=2, help="k for row mode (selects floor(n/k) records)")
    p.add_argument("--seed", type=int, help="row-mode selection seed")
    p.add_argument("--label-column", help="label column for csv paths")
    p.add_argument("--data-dir")
    p.add_argument("--out-dir")
    p.set_defaults(fn=cmd_partition)

    p = sub.add_parser("noise", help="sanitize a dataset (column partition + noise)")
    p.add_argument("dataset")
    p.add_argument("--columns", help="comma-separated sensitive columns")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--label-column")
    p.add_argument("--data-dir")
    p.add_argument("--out-dir")
    p.set_defaults(fn=cmd_noise)

    p = sub.add_parser("inspect", help="print a dataset manifest")
    p.add_argument("dataset")
    p.add_argument("--label-column")
    p.add_argument("--data-dir")
    p.set_defaults(fn=cmd_inspect)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (PpmdError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # pragma: no cover - internal failures
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
