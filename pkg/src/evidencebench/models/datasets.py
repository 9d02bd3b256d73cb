"""Bundled benchmark datasets and validated CSV ingestion.

Two datasets ship with the package:

* ``radiata``: 42 trees with maximum compression strength (y), density
  (x) and adjusted density (z), used by the linear regression benchmark.
* ``pima``: 532 complete records from the Pima diabetes study (seven
  covariates plus the binary diagnosis), used by the logistic benchmark.

Every load verifies structure and a SHA-256 checksum, so a silently
corrupted file fails loudly instead of shifting benchmark numbers.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
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


class DatasetError(ValueError):
    """Base class for dataset ingestion failures."""


class ChecksumMismatchError(DatasetError):
    """File content does not match the expected SHA-256 digest."""


class RowCountError(DatasetError):
    """File parsed cleanly but has the wrong number of rows."""


class ParseError(DatasetError):
    """File structure or cell contents could not be parsed."""


@dataclass(frozen=True)
class DatasetSchema:
    name: str
    columns: tuple[str, ...]
    n_rows: int
    sha256: str | None = None
    binary_columns: tuple[str, ...] = ()


RADIATA_SCHEMA = DatasetSchema(
    name="radiata",
    columns=("y", "x", "z"),
    n_rows=42,
    sha256="3f84aed50f271f76e6f7294211a892317c80e8eb568e7c38d96d49e91f8522dd",
)

PIMA_SCHEMA = DatasetSchema(
    name="pima",
    columns=("NP", "PGC", "BP", "TST", "BMI", "DP", "AGE", "diabetes"),
    n_rows=532,
    sha256="01dbf34682249adb64f6c538262accf0ff75741bd593778b4e27dddc423ffca7",
    binary_columns=("diabetes",),
)

_SCHEMAS = {s.name: s for s in (RADIATA_SCHEMA, PIMA_SCHEMA)}


@dataclass(frozen=True)
class TableData:
    """Validated tabular dataset with named float columns."""

    name: str
    columns: tuple[str, ...]
    values: np.ndarray
    path: str
    sha256: str

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.columns.index(name)
        except ValueError:
            raise KeyError(f"dataset {self.name} has no column {name!r}") from None
        return self.values[:, j].copy()

    def matrix(self, names) -> np.ndarray:
        return np.column_stack([self.column(n) for n in names])

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]


def bundled_path(name: str) -> Path:
    """Filesystem path of a dataset shipped inside the package."""
    if name not in _SCHEMAS:
        raise DatasetError(f"unknown bundled dataset {name!r}")
    with resources.as_file(resources.files("evidencebench.data") / f"{name}.csv") as p:
        return Path(p)


_SCHEMA_DEFAULT = object()


def ingest_dataset(path, schema: DatasetSchema,
                   expected_sha256=_SCHEMA_DEFAULT) -> TableData:
    """Load and validate a CSV file against a schema.

    Checks run in order: checksum (when pinned), header and cell parse,
    row count, finiteness, and any binary-column constraints.  Each
    failure mode raises its own error type so callers can distinguish a
    corrupted download from a truncated file.

    ``expected_sha256`` defaults to the schema's pinned digest; pass an
    explicit digest to override it, or None to skip the check.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"dataset file not found: {path}")
    raw = path.read_bytes()

    digest = hashlib.sha256(raw).hexdigest()
    pinned = schema.sha256 if expected_sha256 is _SCHEMA_DEFAULT else expected_sha256
    if pinned is not None and digest != pinned:
        raise ChecksumMismatchError(
            f"checksum mismatch for {path.name}: expected {pinned}, got {digest}"
        )

    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path.name} is not UTF-8 text: {exc}") from exc
    reader = csv.reader(text.splitlines())
    try:
        header = tuple(next(reader))
    except StopIteration:
        raise ParseError(f"{path.name} is empty") from None
    if header != schema.columns:
        raise ParseError(
            f"{path.name} header {header} does not match "
            f"expected columns {schema.columns}"
        )

    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(schema.columns):
            raise ParseError(
                f"{path.name} line {lineno}: expected {len(schema.columns)} "
                f"fields, got {len(row)}"
            )
        try:
            rows.append([float(cell) for cell in row])
        except ValueError as exc:
            raise ParseError(f"{path.name} line {lineno}: {exc}") from exc

    values = np.asarray(rows, dtype=float)
    if values.shape[0] != schema.n_rows:
        raise RowCountError(
            f"{path.name} has {values.shape[0]} data rows, expected {schema.n_rows}"
        )
    if not np.all(np.isfinite(values)):
        raise ParseError(f"{path.name} contains non-finite values")
    for col in schema.binary_columns:
        j = schema.columns.index(col)
        if not np.all(np.isin(values[:, j], (0.0, 1.0))):
            raise ParseError(f"{path.name} column {col} must contain only 0 or 1")

    return TableData(
        name=schema.name,
        columns=schema.columns,
        values=values,
        path=str(path),
        sha256=digest,
    )


def load_radiata(path=None) -> TableData:
    """The tree-strength regression dataset (42 rows)."""
    return ingest_dataset(path or bundled_path("radiata"), RADIATA_SCHEMA)


def load_pima(path=None) -> TableData:
    """The diabetes classification dataset (532 complete rows)."""
    return ingest_dataset(path or bundled_path("pima"), PIMA_SCHEMA)
