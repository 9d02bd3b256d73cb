"""Assemble models and data tables from a validated configuration."""

from __future__ import annotations

import numpy as np

from ..core import RngStream, derive_stream_id
from ..models import (
    GaussianLinearRegressionModel,
    GaussianMeanPrecisionModel,
    LogisticRegressionModel,
    NormalGammaModel,
    load_pima,
    load_radiata,
)
from ..models.datasets import PIMA_SCHEMA, RADIATA_SCHEMA, TableData, ingest_dataset
from .config import ConfigError, DatasetSpec, ExperimentConfig, ModelSpec


def build_table(dataset: DatasetSpec, base_seed: int):
    """Load (or synthesize) the experiment data.

    Returns (table_or_none, y_or_none, description_dict).  Synthetic datasets
    yield a plain vector; file datasets yield a TableData.
    """
    if dataset.name == "synthetic-normal":
        rng = RngStream(base_seed, derive_stream_id(dataset.label))
        y = rng.normal(dataset.mean, dataset.sd, size=dataset.n)
        info = {
            "name": dataset.name,
            "label": dataset.label,
            "n": dataset.n,
            "mean": dataset.mean,
            "sd": dataset.sd,
        }
        return None, y, info

    schema = RADIATA_SCHEMA if dataset.name == "radiata" else PIMA_SCHEMA
    loader = load_radiata if dataset.name == "radiata" else load_pima
    if dataset.path is None and dataset.sha256 is None and dataset.verify_checksum:
        table = loader()
    else:
        path = dataset.path
        if path is None:
            from ..models.datasets import bundled_path

            path = str(bundled_path(f"{dataset.name}.csv"))
        if not dataset.verify_checksum:
            table = ingest_dataset(path, schema, expected_sha256=None)
        elif dataset.sha256 is not None:
            table = ingest_dataset(path, schema, expected_sha256=dataset.sha256)
        else:
            table = ingest_dataset(path, schema)
    info = {
        "name": dataset.name,
        "path": table.path,
        "sha256": table.sha256,
        "n_rows": table.n_rows,
    }
    return table, None, info


def build_model(spec: ModelSpec, table: TableData | None, y: np.ndarray | None):
    """Instantiate one model from its spec against the loaded data."""
    p = spec.params
    if spec.family in ("gaussian-mean-precision", "normal-gamma"):
        if y is None:
            column = p.get("column")
            if column is None:
                raise ConfigError(
                    f"model '{spec.label}' needs a 'column' key to pick its data "
                    f"column from dataset '{table.name}'"
                )
            data = table.column(column)
        else:
            data = y
        if spec.family == "gaussian-mean-precision":
            return GaussianMeanPrecisionModel(
                data, p["xi"], p["nu"], p["a0"], p["b0"], label=spec.label
            )
        return NormalGammaModel(data, p["mu0"], p["tau0"], p["a0"], p["b0"], label=spec.label)

    if table is None:
        raise ConfigError(
            f"model '{spec.label}' ({spec.family}) requires a file dataset, "
            "not a synthetic one"
        )
    if spec.family == "linear-regression":
        response = p.get("response", "y")
        coef_mean = np.asarray([float(v) for v in p["coef_prior_mean"]], dtype=float)
        if coef_mean.shape != (2,):
            raise ConfigError(
                f"model '{spec.label}': coef_prior_mean must have exactly 2 entries, "
                f"got {coef_mean.size}"
            )
        return GaussianLinearRegressionModel(
            table.column(response),
            table.column(p["covariate"]),
            coef_mean,
            p["r0"],
            p["s0"],
            p["a0"],
            p["b0"],
            label=spec.label,
        )
    if spec.family == "logistic-regression":
        response = p.get("response", "diabetes")
        names = [str(c) for c in p["covariates"]]
        if not names:
            raise ConfigError(f"model '{spec.label}': covariates must be non-empty")
        return LogisticRegressionModel(
            table.column(response),
            table.matrix(names),
            p["tau_prior"],
            covariate_names=names,
            label=spec.label,
        )
    raise AssertionError(spec.family)


def build_models(config: ExperimentConfig):
    """Returns (models, dataset_info)."""
    table, y, info = build_table(config.dataset, config.base_seed)
    models = [build_model(spec, table, y) for spec in config.models]
    return models, info
