"""Command-line entry point.

Verbs: run (execute an experiment), oracle (reference evidence values only),
boxplot (re-emit plot data from a written report), validate (config and
dataset checks without execution).  Exit codes: 0 success, 1 at least one
failed cell, 2 configuration or dataset problems.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys

from ..models.datasets import DatasetError
from .build import build_models
from .config import ConfigError, parse_config
from .report import ReportError, emit_boxplot_data, load_report
from .runner import format_float, run_experiment

EXIT_OK = 0
EXIT_FAILED_CELLS = 1
EXIT_BAD_INPUT = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evidencebench",
        description="Benchmark model-evidence estimators against analytic oracles.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="execute every (model, method, replicate) cell")
    run_p.add_argument("config", help="experiment TOML file")
    run_p.add_argument("--output-dir", help="override the configured output directory")
    run_p.add_argument("--quiet", action="store_true", help="suppress per-cell progress")

    oracle_p = sub.add_parser("oracle", help="print reference evidence values")
    oracle_p.add_argument("config", help="experiment TOML file")
    oracle_p.add_argument(
        "--quadrature",
        action="store_true",
        help="also compute the numerical-integration oracle (models of dimension <= 3)",
    )
    oracle_p.add_argument("--output-dir", help="also write oracle.csv to this directory")

    box_p = sub.add_parser("boxplot", help="emit long-format plot data from a report")
    box_p.add_argument("report_dir", help="directory written by 'run'")
    box_p.add_argument("--output", help="destination CSV (default: stdout)")

    val_p = sub.add_parser("validate", help="check a config and its dataset, no execution")
    val_p.add_argument("config", help="experiment TOML file")
    return parser


def _load_config(path: str, output_dir_override: str | None):
    config = parse_config(path)
    if output_dir_override:
        config = dataclasses.replace(config, output_dir=output_dir_override)
    return config


def _cmd_run(args) -> int:
    config = _load_config(args.config, args.output_dir)

    def progress(done, total, cell):
        if args.quiet:
            return
        status = "failed: " + cell.error if cell.failed else (
            "log_evidence=" + format_float(cell.log_evidence)
        )
        print(
            f"[{done}/{total}] {cell.model_label} {cell.method} "
            f"replicate={cell.replicate} {cell.seconds:.2f}s {status}",
            file=sys.stderr,
        )

    report = run_experiment(config, progress=progress)
    n_failed = len(report.failed_cells)
    print(f"report written to {config.output_dir}", file=sys.stderr)
    if n_failed:
        print(f"{n_failed} cell(s) failed:", file=sys.stderr)
        for cell in report.failed_cells:
            print(
                f"  {cell.model_label} {cell.method} replicate={cell.replicate}: {cell.error}",
                file=sys.stderr,
            )
        return EXIT_FAILED_CELLS
    return EXIT_OK


def _cmd_oracle(args) -> int:
    config = _load_config(args.config, args.output_dir)
    models, _ = build_models(config)
    rows = []
    for model in models:
        analytic = None
        if "analytic-evidence" in model.capabilities():
            analytic = float(model.analytic_log_evidence())
        quad = None
        if args.quadrature and model.dimension <= 3:
            from ..oracles import quadrature_log_evidence

            quad = float(quadrature_log_evidence(model))
        rows.append((model.label, analytic, quad))

    header = ("model", "analytic_log_evidence", "quadrature_log_evidence")
    for label, analytic, quad in rows:
        parts = [f"{label}:"]
        parts.append(
            "analytic=" + (format_float(analytic) if analytic is not None else "unavailable")
        )
        if args.quadrature:
            parts.append(
                "quadrature=" + (format_float(quad) if quad is not None else "unavailable")
            )
        print(" ".join(parts))

    by_label = {r[0]: r for r in rows}
    num = config.bayes_factor_numerator
    den = config.bayes_factor_denominator
    if num != den:
        num_val = by_label[num][1]
        den_val = by_label[den][1]
        if num_val is not None and den_val is not None:
            import math

            log_bf = num_val - den_val
            print(
                f"bayes_factor {num} vs {den}: {format_float(math.exp(log_bf))} "
                f"(log {format_float(log_bf)})"
            )

    if args.output_dir:
        os.makedirs(args.output_dir, exist_ok=True)
        path = os.path.join(args.output_dir, "oracle.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for label, analytic, quad in rows:
                writer.writerow(
                    (
                        label,
                        "" if analytic is None else format_float(analytic),
                        "" if quad is None else format_float(quad),
                    )
                )
    return EXIT_OK


def _cmd_boxplot(args) -> int:
    view = load_report(args.report_dir)
    replicate_counts = {}
    for cell in view.cells:
        key = (cell.model_label, cell.method)
        replicate_counts[key] = max(replicate_counts.get(key, 0), cell.replicate + 1)
    max_replicates = max(replicate_counts.values(), default=0)
    if max_replicates < 5:
        print(
            f"error: boxplot data needs at least 5 replicates, report has {max_replicates}",
            file=sys.stderr,
        )
        return EXIT_BAD_INPUT
    rows = emit_boxplot_data(view)
    out = open(args.output, "w", encoding="utf-8", newline="") if args.output else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(("method", "replicate", "quantity", "value"))
        for method, replicate, quantity, value in rows:
            writer.writerow((method, replicate, quantity, format_float(value)))
    finally:
        if args.output:
            out.close()
    return EXIT_OK


def _cmd_validate(args) -> int:
    config = parse_config(args.config)
    models, info = build_models(config)
    n_cells = 0
    from .config import DETERMINISTIC_METHODS

    for _ in config.models:
        for method in config.methods:
            n_cells += 1 if method in DETERMINISTIC_METHODS else config.replicates
    print(f"config OK: {len(models)} model(s), {len(config.methods)} method(s), "
          f"{config.replicates} replicate(s), {n_cells} cells")
    if "sha256" in info:
        print(f"dataset OK: {info['name']} ({info['n_rows']} rows, sha256 {info['sha256']})")
    else:
        print(f"dataset OK: synthetic '{info['label']}' (n={info['n']})")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "oracle": _cmd_oracle,
        "boxplot": _cmd_boxplot,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.verb](args)
    except (ConfigError, DatasetError, ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
