"""Report tables derived from executed cells, and their CSV serializations."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .runner import CellResult, RunReport, format_float

SUMMARY_FILE = "summary.csv"
BAYES_FILE = "bayes_factors.csv"
BOXPLOT_FILE = "boxplot.csv"
TIMINGS_FILE = "timings.csv"
SPEED_FILE = "speed.csv"
MANIFEST_FILE = "manifest.json"

REFERENCE_METHOD = "reference"


class ReportError(ValueError):
    """A report cannot be assembled or loaded."""


def mean_and_se(values) -> tuple[float, float | None]:
    """Replicate mean and standard error (None below two values)."""
    arr = np.asarray(values, dtype=float)
    mean = float(np.mean(arr))
    if arr.size < 2:
        return mean, None
    se = float(np.std(arr, ddof=1) / math.sqrt(arr.size))
    return mean, se


def summary_rows(report) -> list:
    """Per (model, method): replicate count, mean and SE of log evidence."""
    report = as_view(report)
    rows = []
    for label in report.model_labels:
        for method in report.methods:
            values = [
                c.log_evidence
                for c in report.cells
                if c.model_label == label and c.method == method and not c.failed
            ]
            if not values:
                continue
            mean, se = mean_and_se(values)
            rows.append((label, method, len(values), mean, se))
    return rows


def bayes_factor_rows(report) -> list:
    """Per method: replicate-paired Bayes factors for the configured pair."""
    report = as_view(report)
    num, den = report.bf_numerator, report.bf_denominator
    rows = []
    for method in report.methods:
        num_cells = {
            c.replicate: c.log_evidence
            for c in report.cells
            if c.model_label == num and c.method == method and not c.failed
        }
        den_cells = {
            c.replicate: c.log_evidence
            for c in report.cells
            if c.model_label == den and c.method == method and not c.failed
        }
        shared = sorted(set(num_cells) & set(den_cells))
        if not shared:
            continue
        log_bfs = [num_cells[r] - den_cells[r] for r in shared]
        bfs = [math.exp(v) for v in log_bfs]
        mean_bf, se_bf = mean_and_se(bfs)
        mean_log, se_log = mean_and_se(log_bfs)
        rows.append((method, len(shared), mean_bf, se_bf, mean_log, se_log))
    return rows


def emit_boxplot_data(report) -> list:
    """Long-format rows (method, replicate, quantity, value) plus references.

    Quantities cover the first two declared models' log evidences and the
    configured Bayes factor.  Reference rows carry the analytic values when
    the models have them.
    """
    report = as_view(report)
    labels = report.model_labels
    if len(labels) < 2:
        raise ReportError("boxplot output needs at least two models")
    first, second = labels[0], labels[1]
    num, den = report.bf_numerator, report.bf_denominator
    rows = []
    for method in report.methods:
        per_label = {}
        for label in (first, second, num, den):
            per_label[label] = {
                c.replicate: c.log_evidence
                for c in report.cells
                if c.model_label == label and c.method == method and not c.failed
            }
        for replicate in sorted(per_label[first]):
            rows.append((method, replicate, "log_evidence_model1", per_label[first][replicate]))
        for replicate in sorted(per_label[second]):
            rows.append((method, replicate, "log_evidence_model2", per_label[second][replicate]))
        shared = sorted(set(per_label[num]) & set(per_label[den]))
        for replicate in shared:
            value = math.exp(per_label[num][replicate] - per_label[den][replicate])
            rows.append((method, replicate, "bayes_factor", value))
    refs = report.references
    if first in refs:
        rows.append((REFERENCE_METHOD, "", "log_evidence_model1", refs[first]))
    if second in refs:
        rows.append((REFERENCE_METHOD, "", "log_evidence_model2", refs[second]))
    if num in refs and den in refs:
        rows.append((REFERENCE_METHOD, "", "bayes_factor", math.exp(refs[num] - refs[den])))
    return rows


@dataclass
class ReportView:
    """The report fields the table builders need, however they were obtained."""

    cells: list
    model_labels: list
    methods: list
    bf_numerator: str
    bf_denominator: str
    references: dict


def as_view(report) -> ReportView:
    if isinstance(report, ReportView):
        return report
    return ReportView(
        cells=report.cells,
        model_labels=[m.label for m in report.config.models],
        methods=list(report.config.methods),
        bf_numerator=report.config.bayes_factor_numerator,
        bf_denominator=report.config.bayes_factor_denominator,
        references=report.reference_log_evidences,
    )


def _write_csv(path: str, header, rows, formatters) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for fmt, v in zip(formatters, row)])


def _plain(v):
    return "" if v is None else str(v)


def _full(v):
    return "" if v is None else format_float(v)


def write_artifacts(report: RunReport, out_dir: str) -> None:
    """Write every derived table. rows.csv is the runner's responsibility."""
    view = as_view(report)
    _write_csv(
        os.path.join(out_dir, SUMMARY_FILE),
        ("model", "method", "n_replicates", "mean_log_evidence", "se_log_evidence"),
        summary_rows(view),
        (_plain, _plain, _plain, _full, _full),
    )
    _write_csv(
        os.path.join(out_dir, BAYES_FILE),
        ("method", "n_pairs", "mean_bayes_factor", "se_bayes_factor",
         "mean_log_bayes_factor", "se_log_bayes_factor"),
        bayes_factor_rows(view),
        (_plain, _plain, _full, _full, _full, _full),
    )
    if len(view.model_labels) >= 2:
        _write_csv(
            os.path.join(out_dir, BOXPLOT_FILE),
            ("method", "replicate", "quantity", "value"),
            emit_boxplot_data(view),
            (_plain, _plain, _plain, _full),
        )
    _write_csv(
        os.path.join(out_dir, TIMINGS_FILE),
        ("model", "method", "replicate", "seconds"),
        [(c.model_label, c.method, c.replicate, c.seconds) for c in report.cells],
        (_plain, _plain, _plain, lambda v: "%.6f" % v),
    )
    _write_csv(
        os.path.join(out_dir, SPEED_FILE),
        ("method", "n_cells", "total_seconds", "mean_seconds", "relative_speed"),
        speed_rows(report),
        (_plain, _plain, lambda v: "%.6f" % v, lambda v: "%.6f" % v, lambda v: "%.3f" % v),
    )
    manifest = {
        "tool": "evidencebench",
        "dataset": report.dataset_info,
        "base_seed": report.config.base_seed,
        "replicates": report.config.replicates,
        "parallelism": report.config.parallelism,
        "methods": list(report.config.methods),
        "models": [
            {"family": m.family, "label": m.label, "params": m.params}
            for m in report.config.models
        ],
        "bayes_factor": {
            "numerator": report.config.bayes_factor_numerator,
            "denominator": report.config.bayes_factor_denominator,
        },
        "settings": report.config.settings,
        "references": {k: format_float(v) for k, v in report.reference_log_evidences.items()},
        "failed_cells": len(report.failed_cells),
    }
    with open(os.path.join(out_dir, MANIFEST_FILE), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def speed_rows(report: RunReport) -> list:
    """Wall-clock totals per method, normalized so the fastest method is 1."""
    totals: dict = {}
    counts: dict = {}
    for cell in report.cells:
        totals[cell.method] = totals.get(cell.method, 0.0) + cell.seconds
        counts[cell.method] = counts.get(cell.method, 0) + 1
    means = {m: totals[m] / counts[m] for m in totals}
    fastest = min(means.values()) if means else 1.0
    if fastest <= 0:
        fastest = 1.0
    ordered = sorted(means)
    return [
        (m, counts[m], totals[m], means[m], means[m] / fastest)
        for m in ordered
    ]


def load_report(out_dir: str) -> ReportView:
    """Rebuild the report view from a written report directory."""
    manifest_path = os.path.join(out_dir, MANIFEST_FILE)
    rows_path = os.path.join(out_dir, "rows.csv")
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise ReportError(f"no manifest found at {manifest_path}")
    except json.JSONDecodeError as exc:
        raise ReportError(f"manifest {manifest_path} is not valid JSON: {exc}")
    cells = []
    try:
        with open(rows_path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != (
                "model", "method", "replicate", "log_evidence", "error", "diagnostics",
            ):
                raise ReportError(f"unexpected rows.csv header in {rows_path}: {header}")
            for record in reader:
                model, method, replicate, log_evidence, error, diagnostics = record
                cells.append(
                    CellResult(
                        model_label=model,
                        method=method,
                        replicate=int(replicate),
                        log_evidence=float(log_evidence) if log_evidence else None,
                        diagnostics=json.loads(diagnostics) if diagnostics else {},
                        error=error or None,
                    )
                )
    except FileNotFoundError:
        raise ReportError(f"no rows.csv found in {out_dir}")
    return ReportView(
        cells=cells,
        model_labels=[m["label"] for m in manifest["models"]],
        methods=list(manifest["methods"]),
        bf_numerator=manifest["bayes_factor"]["numerator"],
        bf_denominator=manifest["bayes_factor"]["denominator"],
        references={k: float(v) for k, v in manifest["references"].items()},
    )
