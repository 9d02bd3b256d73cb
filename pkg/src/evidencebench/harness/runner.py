"""Experiment execution: seeded cells, a work pool, and crash-safe artifacts."""

from __future__ import annotations

import csv
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..core import RngStream, derive_stream_id
from ..estimators import (
    TemperatureLadder,
    annealed_importance_sampling,
    chib,
    chib_plan_for,
    harmonic_mean,
    laplace,
    laplace_at_map,
    nested_sampling,
    power_posteriors,
)
from ..estimators.laplace import NewtonConfig
from ..samplers import ChainConfig, kernel_factory, make_kernel, run_chain
from .build import build_models
from .config import DETERMINISTIC_METHODS, ExperimentConfig

ROWS_FILE = "rows.csv"
ROWS_HEADER = ("model", "method", "replicate", "log_evidence", "error", "diagnostics")


@dataclass
class CellResult:
    model_label: str
    method: str
    replicate: int
    log_evidence: float | None = None
    diagnostics: dict = field(default_factory=dict)
    seconds: float = 0.0
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class RunReport:
    config: ExperimentConfig
    dataset_info: dict
    cells: list
    reference_log_evidences: dict

    @property
    def failed_cells(self) -> list:
        return [c for c in self.cells if c.failed]


def _json_safe(value):
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_json_safe(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def encode_diagnostics(diagnostics: dict) -> str:
    return json.dumps(_json_safe(diagnostics), sort_keys=True, separators=(",", ":"))


def format_float(x: float) -> str:
    """Log-evidence serialization: 17 significant digits round-trips binary64."""
    return "%.17g" % x


def _execute_cell(model, method: str, settings: dict, rng):
    """Dispatch one estimator run. Returns an EvidenceEstimate."""
    if method == "exact":
        from ..estimators.base import EvidenceEstimate

        return EvidenceEstimate(method="exact", log_evidence=model.analytic_log_evidence())
    if method == "laplace":
        cfg = NewtonConfig(
            tol=settings.get("tol", 1e-8),
            grad_tol=settings.get("grad_tol", 1e-6),
            max_iterations=settings.get("max_iterations", 200),
        )
        return laplace(model, config=cfg)
    if method in ("harmonic-mean", "laplace-map"):
        kernel = make_kernel(
            model, 1.0, proposal_precision=settings.get("proposal_precision", 2.0)
        )
        config = ChainConfig(
            iterations=settings["iterations"],
            burn_in_fraction=settings["burn_in_fraction"],
            thinning=settings.get("thinning", 1),
        )
        result = run_chain(kernel, model.prior_mean(), config, rng)
        if method == "harmonic-mean":
            return harmonic_mean(model.log_likelihood_batch(result.states))
        return laplace_at_map(model, result.states)
    if method == "chib":
        plan = chib_plan_for(model)
        main = ChainConfig(
            iterations=settings["iterations"],
            burn_in_fraction=settings["burn_in_fraction"],
        )
        reduced = None
        if "reduced_iterations" in settings:
            reduced = ChainConfig(
                iterations=settings["reduced_iterations"],
                burn_in_fraction=settings.get("reduced_burn_in_fraction", 0.0),
            )
        return chib(
            model,
            plan,
            main,
            rng,
            reduced_config=reduced,
            n_candidates=settings.get("n_candidates", 128),
        )
    if method == "ais":
        ladder = TemperatureLadder.power(
            settings["n_rungs"], settings["exponent"], descending=True
        )
        factory = kernel_factory(
            model, proposal_precision=settings.get("proposal_precision", 2.0)
        )
        return annealed_importance_sampling(
            model,
            ladder,
            settings["n_samples"],
            rng,
            kernel_factory=factory,
            sweeps=settings["sweeps"],
        )
    if method == "power-posteriors":
        ladder = TemperatureLadder.power(settings["n_rungs"], settings["exponent"])
        factory = kernel_factory(
            model, proposal_precision=settings.get("proposal_precision", 2.0)
        )
        config = ChainConfig(
            iterations=settings["iterations"],
            burn_in_fraction=settings["burn_in_fraction"],
            thinning=settings.get("thinning", 1),
        )
        return power_posteriors(
            model,
            ladder,
            config,
            rng,
            kernel_factory=factory,
            warm_start=settings.get("warm_start", "mean"),
        )
    if method == "nested-sampling":
        return nested_sampling(
            model,
            settings["n_live"],
            rng,
            epsilon=settings["epsilon"],
            n_moves=settings["n_moves"],
            replacement=settings.get("replacement", "random-walk"),
        )
    raise AssertionError(method)


def plan_cells(config: ExperimentConfig):
    """The (model, method, replicate) grid. Deterministic methods run once."""
    cells = []
    for spec in config.models:
        for method in config.methods:
            n = 1 if method in DETERMINISTIC_METHODS else config.replicates
            for replicate in range(n):
                cells.append((spec.label, method, replicate))
    return cells


class _RowWriter:
    """Append-and-flush CSV writer; every completed row survives a crash."""

    def __init__(self, path: str):
        self._lock = threading.Lock()
        self._fh = open(path, "w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(ROWS_HEADER)
        self._fh.flush()

    def append(self, cell: CellResult):
        with self._lock:
            self._writer.writerow(_row_fields(cell))
            self._fh.flush()

    def close(self):
        self._fh.close()


def _row_fields(cell: CellResult):
    return (
        cell.model_label,
        cell.method,
        str(cell.replicate),
        "" if cell.log_evidence is None else format_float(cell.log_evidence),
        cell.error or "",
        encode_diagnostics(cell.diagnostics),
    )


def rewrite_rows(path: str, cells) -> None:
    """Replace the append-order file with a canonically sorted copy."""
    ordered = sorted(cells, key=lambda c: (c.model_label, c.method, c.replicate))
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ROWS_HEADER)
        for cell in ordered:
            writer.writerow(_row_fields(cell))
    os.replace(tmp, path)


def run_experiment(config: ExperimentConfig, progress=None) -> RunReport:
    """Execute every (model, method, replicate) cell and write the report.

    Cell failures are recorded, not raised; the caller inspects
    ``report.failed_cells``.  Results are deterministic in the base seed:
    each cell draws from its own stream keyed by (method, replicate) and the
    model label, so scheduling order cannot affect estimates.
    """
    models, dataset_info = build_models(config)
    by_label = {m.label: m for m in models}
    out_dir = config.output_dir
    os.makedirs(out_dir, exist_ok=True)

    cells = plan_cells(config)
    writer = _RowWriter(os.path.join(out_dir, ROWS_FILE))
    results = []
    results_lock = threading.Lock()

    def run_one(key):
        label, method, replicate = key
        rng = RngStream(config.base_seed, derive_stream_id(method, replicate)).child(label)
        cell = CellResult(model_label=label, method=method, replicate=replicate)
        start = time.perf_counter()
        try:
            estimate = _execute_cell(by_label[label], method, config.settings_for(method), rng)
            cell.log_evidence = float(estimate.log_evidence)
            cell.diagnostics = estimate.diagnostics
        except Exception as exc:  # cell isolation: record and continue
            cell.error = f"{type(exc).__name__}: {exc}"
        cell.seconds = time.perf_counter() - start
        writer.append(cell)
        with results_lock:
            results.append(cell)
            done = len(results)
        if progress is not None:
            progress(done, len(cells), cell)
        return cell

    try:
        if config.parallelism > 1:
            with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                list(pool.map(run_one, cells))
        else:
            for key in cells:
                run_one(key)
    finally:
        writer.close()

    rewrite_rows(os.path.join(out_dir, ROWS_FILE), results)

    references = {}
    for model in models:
        if "analytic-evidence" in model.capabilities():
            references[model.label] = float(model.analytic_log_evidence())

    report = RunReport(
        config=config,
        dataset_info=dataset_info,
        cells=sorted(results, key=lambda c: (c.model_label, c.method, c.replicate)),
        reference_log_evidences=references,
    )
    from .report import write_artifacts

    write_artifacts(report, out_dir)
    return report
