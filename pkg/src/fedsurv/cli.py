"""Command-line front end.

Subcommands:

* ``generate`` — write per-center CSV datasets plus a metadata sidecar.
* ``run``      — execute a federated run; emits metrics.csv, reputation.csv,
                 node_reputation.csv, run_report.txt and a config echo.
* ``sweep``    — fan ``run`` out over one parameter axis and seed list,
                 collecting a combined summary.csv.
* ``report``   — comparison/trend tables (text + CSV) with figures rendered
                 alongside.

Exit codes: 0 success, 2 usage/config error, 3 runtime failure. The
environment variable ``FEDSURV_OUTPUT_ROOT`` supplies the default output
root when ``--out`` is omitted.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import yaml

from . import datasets, figures, reporting
from .config import (ConfigError, ExperimentConfig, SWEEP_PARAMETERS,
                     apply_overrides, apply_sweep_value, dump_config,
                     load_config)
from .federation import METHODS, run_simulation
from .synthetic import generate_universe

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3

OUTPUT_ROOT_ENV = "FEDSURV_OUTPUT_ROOT"


def _default_out(kind: str, config_path: str | None) -> Path:
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    stem = Path(config_path).stem if config_path else kind
    return root / kind / stem


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedsurv",
        description="reputation-weighted federated survival analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write synthetic center datasets")
    gen.add_argument("--config", required=True)
    gen.add_argument("--out", default=None)

    run = sub.add_parser("run", help="execute one federated run")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None)
    run.add_argument("--method", choices=METHODS, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--no-dp", action="store_true",
                     help="disable the private peer channel (ablation)")
    run.add_argument("--workers", type=int, default=None)

    sweep = sub.add_parser("sweep", help="fan a run out over one parameter")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    sweep.add_argument("--values", required=True,
                       help="comma-separated sweep values")
    sweep.add_argument("--seeds", default="1,2,3,4,5",
                       help="comma-separated seed list")
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--method", choices=METHODS, default=None)
    sweep.add_argument("--no-dp", action="store_true")
    sweep.add_argument("--workers", type=int, default=1,
                       help="parallel runs during fan-out")

    report = sub.add_parser("report", help="tables and figures from runs")
    report.add_argument("inputs", nargs="+",
                        help="run directories or sweep summary dirs")
    report.add_argument("--out", default=None)
    return parser


def _write_run_outputs(out: Path, config: ExperimentConfig, state) -> None:
    out.mkdir(parents=True, exist_ok=True)
    reporting.write_metrics_csv(out / reporting.METRICS_FILE, state)
    reporting.write_reputation_csv(out / reporting.REPUTATION_FILE, state)
    reporting.write_node_reputation_csv(
        out / reporting.NODE_REPUTATION_FILE, state)
    reporting.write_run_report(out / reporting.REPORT_FILE, config, state)
    dump_config(config, out / reporting.CONFIG_ECHO_FILE)


def _cmd_generate(args) -> int:
    config = load_config(args.config)
    out = Path(args.out) if args.out else _default_out("generate",
                                                       args.config)
    out.mkdir(parents=True, exist_ok=True)
    clients, metadata = generate_universe(config.generation)
    for center, data in enumerate(clients):
        datasets.write_csv(data, out / f"center_{center:02d}.csv")
    with (out / "metadata.yaml").open("w") as fh:
        yaml.safe_dump({"seed": config.generation.seed,
                        "centers": metadata}, fh, sort_keys=True)
    print(f"wrote {len(clients)} center files to {out}")
    return EXIT_OK


def _execute_run(config: ExperimentConfig, out: Path) -> None:
    state = run_simulation(config.generation, config.federation,
                           config.privacy, config.profiles(), config.seed)
    _write_run_outputs(out, config, state)


def _cmd_run(args) -> int:
    config = load_config(args.config)
    config = apply_overrides(config, method=args.method, seed=args.seed,
                             no_dp=args.no_dp, workers=args.workers)
    out = Path(args.out) if args.out else _default_out("run", args.config)
    _execute_run(config, out)
    print(f"run complete: {out / reporting.METRICS_FILE}")
    return EXIT_OK


def _parse_values(raw: str) -> list[str]:
    values = [v.strip() for v in raw.split(",") if v.strip() != ""]
    if not values:
        raise ConfigError("no sweep values given")
    return values


def _cmd_sweep(args) -> int:
    base = load_config(args.config)
    base = apply_overrides(base, method=args.method, no_dp=args.no_dp)
    values = _parse_values(args.values)
    seeds = [int(s) for s in _parse_values(args.seeds)]
    if not seeds:
        raise ConfigError("empty seed list")
    out = Path(args.out) if args.out else _default_out("sweep", args.config)
    out.mkdir(parents=True, exist_ok=True)

    jobs = []
    for value in values:
        swept = apply_sweep_value(base, args.param, value)
        for seed in seeds:
            run_config = apply_overrides(swept, seed=seed)
            run_dir = out / f"{args.param}={value}" / f"seed={seed}"
            jobs.append((value, seed, run_config, run_dir))

    def execute(job):
        value, seed, run_config, run_dir = job
        _execute_run(run_config, run_dir)
        return job

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            list(pool.map(execute, jobs))
    else:
        for job in jobs:
            execute(job)

    rows = []
    for value, seed, _, run_dir in jobs:
        metrics = reporting.read_metrics_csv(
            run_dir / reporting.METRICS_FILE)
        node = reporting.read_node_reputation_csv(
            run_dir / reporting.NODE_REPUTATION_FILE)
        summary = reporting.summarize_metrics(metrics)
        rows.append({
            "parameter": args.param,
            "value": value,
            "seed": seed,
            "final_c_index": repr(summary["final_c_index"]),
            "mean_c_index": repr(summary["mean_c_index"]),
            "stability": repr(reporting.stability_from_node_file(node)),
            "total_messages": summary["total_messages"],
            "run_dir": str(run_dir),
        })
    reporting.write_summary_csv(out / reporting.SUMMARY_FILE, rows)
    print(f"sweep complete: {out / reporting.SUMMARY_FILE}")
    return EXIT_OK


def _cmd_report(args) -> int:
    out = Path(args.out) if args.out else _default_out("report", None)
    out.mkdir(parents=True, exist_ok=True)
    run_dirs = []
    sweep_dirs = []
    for raw in args.inputs:
        path = Path(raw)
        if not path.exists():
            raise ConfigError(f"input not found: {path}")
        if (path / reporting.SUMMARY_FILE).exists():
            sweep_dirs.append(path)
        elif (path / reporting.METRICS_FILE).exists():
            run_dirs.append(path)
        else:
            raise ConfigError(f"{path} holds neither a run nor a sweep")

    wrote = []
    if run_dirs:
        try:
            table = reporting.build_comparison(run_dirs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        table.to_csv(out / "comparison.csv")
        (out / "comparison.txt").write_text(
            reporting.comparison_text(table))
        figures.comparison_figure(table, out / "comparison.png")
        wrote += ["comparison.csv", "comparison.txt", "comparison.png"]
        for run_dir in run_dirs:
            node = reporting.read_node_reputation_csv(
                run_dir / reporting.NODE_REPUTATION_FILE)
            adversaries = _adversaries_of(run_dir)
            name = f"reputation_{reporting._run_method(run_dir)}_{run_dir.name}"
            figures.reputation_figure(node, adversaries,
                                      out / f"{name}.png", title=name)
            wrote.append(f"{name}.png")
    for sweep_dir in sweep_dirs:
        summary = reporting.read_summary_csv(
            sweep_dir / reporting.SUMMARY_FILE)
        parameter = str(summary["parameter"].iloc[0])
        agg = reporting.aggregate_summary(summary)
        agg.to_csv(out / f"trend_{parameter}.csv", index=False)
        figures.trend_figure(agg, parameter, out / f"trend_{parameter}.png")
        wrote += [f"trend_{parameter}.csv", f"trend_{parameter}.png"]
        if parameter == "update_frequency":
            figures.overhead_figure(agg, out / "overhead_tradeoff.png")
            wrote.append("overhead_tradeoff.png")
    if not wrote:
        raise ConfigError("no reportable inputs found")
    print(f"report written to {out}: {', '.join(wrote)}")
    return EXIT_OK


def _adversaries_of(run_dir: Path) -> list[int]:
    echo = run_dir / reporting.CONFIG_ECHO_FILE
    if not echo.exists():
        return []
    raw = yaml.safe_load(echo.read_text()) or {}
    return sorted(int(a["client"]) for a in raw.get("adversaries", []))


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    handlers = {
        "generate": _cmd_generate,
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
