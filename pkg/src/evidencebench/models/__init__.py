"""Model families with known or benchmarkable evidence."""

from .base import Model, ModelError, PriorAxis
from .conjugate import GaussianMeanPrecisionModel, NormalGammaModel
from .datasets import (
    ChecksumMismatchError,
    DatasetError,
    DatasetSchema,
    ParseError,
    PIMA_SCHEMA,
    RADIATA_SCHEMA,
    RowCountError,
    TableData,
    bundled_path,
    ingest_dataset,
    load_pima,
    load_radiata,
)
from .logistic import LogisticRegressionModel, standardize_covariates
from .regression import GaussianLinearRegressionModel

__all__ = [
    "Model",
    "ModelError",
    "PriorAxis",
    "GaussianMeanPrecisionModel",
    "NormalGammaModel",
    "GaussianLinearRegressionModel",
    "LogisticRegressionModel",
    "standardize_covariates",
    "DatasetError",
    "ChecksumMismatchError",
    "RowCountError",
    "ParseError",
    "DatasetSchema",
    "TableData",
    "RADIATA_SCHEMA",
    "PIMA_SCHEMA",
    "ingest_dataset",
    "load_radiata",
    "load_pima",
    "bundled_path",
]
