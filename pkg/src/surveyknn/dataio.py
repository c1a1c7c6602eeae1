"""Dataset ingestion and tidy result emission.

The white-wine quality file ships from its source as a semicolon-delimited
CSV of 11 physicochemical measurements plus a quality score; ingestion
preserves row order (the embedded-population ladders are row prefixes)
and drops the near-collinear density column by default.  Results go out
as comma-delimited long-format CSV with 17-significant-digit floats, so a
round trip reproduces every value exactly.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .population import Population
from .results import RESULT_COLUMNS, StudyRecord, StudyResult

WINE_COLUMNS = (
    "fixed acidity",
    "volatile acidity",
    "citric acid",
    "residual sugar",
    "chlorides",
    "free sulfur dioxide",
    "total sulfur dioxide",
    "density",
    "pH",
    "sulphates",
    "alcohol",
    "quality",
)
WINE_EXPECTED_ROWS = 4898
WINE_RESPONSE = "quality"
WINE_DROPPED = ("density",)


@dataclass(frozen=True)
class TabularSchema:
    """Column names and parsing conventions of a delimited file."""

    columns: tuple[str, ...]
    delimiter: str = ";"
    decimal: str = "."

    def __post_init__(self) -> None:
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("column names must be unique")
        if len(self.delimiter) != 1:
            raise ValueError("delimiter must be a single character")


WINE_SCHEMA = TabularSchema(columns=WINE_COLUMNS)


def read_table(path, schema: TabularSchema) -> tuple[list[str], np.ndarray]:
    """Read a delimited numeric file with a header matching the schema."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: file is empty") from None
        header = [h.strip().strip('"') for h in header]
        if tuple(header) != schema.columns:
            raise DataFormatError(
                f"{path}: header {header} does not match expected columns {list(schema.columns)}"
            )
        rows = []
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(schema.columns):
                raise DataFormatError(
                    f"{path}: row {row_number} has {len(row)} fields, expected {len(schema.columns)}"
                )
            parsed = []
            for name, cell in zip(schema.columns, row):
                text = cell.strip().strip('"')
                if schema.decimal != ".":
                    text = text.replace(schema.decimal, ".")
                try:
                    parsed.append(float(text))
                except ValueError:
                    raise DataFormatError(
                        f"{path}: row {row_number}, column {name!r}: cannot parse {cell!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return list(schema.columns), np.asarray(rows, dtype=float)


def read_wine_csv(
    path,
    schema: TabularSchema = WINE_SCHEMA,
    drop: tuple[str, ...] = WINE_DROPPED,
    response: str = WINE_RESPONSE,
) -> Population:
    """Load the white-wine file as a Population, dropping the density column.

    Row order is preserved so that the first N rows define the embedded
    populations.  A row count other than 4898 only warns, so truncated
    extracts remain usable.
    """
    names, data = read_table(path, schema)
    if data.shape[0] != WINE_EXPECTED_ROWS:
        warnings.warn(
            f"{path}: expected {WINE_EXPECTED_ROWS} rows, found {data.shape[0]}",
            stacklevel=2,
        )
    keep = [i for i, name in enumerate(names) if name != response and name not in drop]
    y = data[:, names.index(response)]
    return Population(x=data[:, keep], y=y)


def _format_value(v: float) -> str:
    return format(float(v), ".17g")


def write_results(result: StudyResult, path, delimiter: str = ",") -> None:
    """Write a result as long-format CSV: fixed header, sorted rows, lossless floats."""
    path = Path(path)
    records = result.sorted().records
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            writer.writerow(RESULT_COLUMNS)
            for r in records:
                writer.writerow(
                    [
                        r.study,
                        r.N,
                        r.n,
                        r.kn,
                        r.design,
                        r.grid_id,
                        r.replicate,
                        r.statistic,
                        _format_value(r.value),
                    ]
                )
    except OSError as exc:
        raise DataFormatError(f"cannot write results to {path}: {exc}") from exc


def read_results(path, delimiter: str = ",") -> StudyResult:
    """Read back a result file written by ``write_results``."""
    path = Path(path)
    result = StudyResult()
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if header is None or tuple(header) != RESULT_COLUMNS:
            raise DataFormatError(f"{path}: not a results file (header {header})")
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                result.records.append(
                    StudyRecord(
                        study=row[0],
                        N=int(row[1]),
                        n=int(row[2]),
                        kn=int(row[3]),
                        design=row[4],
                        grid_id=int(row[5]),
                        replicate=int(row[6]),
                        statistic=row[7],
                        value=float(row[8]),
                    )
                )
            except (IndexError, ValueError) as exc:
                raise DataFormatError(f"{path}: row {row_number}: {exc}") from exc
    return result


def write_matrix_csv(path, header: list[str], rows: np.ndarray) -> None:
    """Write a plain numeric matrix with a header row, lossless floats."""
    path = Path(path)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, delimiter=",", lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_value(v) for v in row])


def read_sample_csv(path, delimiter: str = ","):
    """Read ad-hoc sample data: covariate columns plus ``y`` and optional ``pi``.

    Returns (covariate names, x, y, pi); pi defaults to 1 for every row when
    the column is absent.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        header = next(csv.reader(fh, delimiter=delimiter), None)
    if header is None:
        raise DataFormatError(f"{path}: file is empty")
    header = [h.strip().strip('"') for h in header]
    if "y" not in header:
        raise DataFormatError(f"{path}: sample file needs a 'y' column")
    schema = TabularSchema(columns=tuple(header), delimiter=delimiter)
    names, data = read_table(path, schema)
    covariates = [c for c in names if c not in ("y", "pi")]
    if not covariates:
        raise DataFormatError(f"{path}: sample file needs at least one covariate column")
    x = data[:, [names.index(c) for c in covariates]]
    y = data[:, names.index("y")]
    pi = data[:, names.index("pi")] if "pi" in names else np.ones(len(y))
    return covariates, x, y, pi


def read_points_csv(path, covariates: list[str], delimiter: str = ","):
    """Read evaluation points whose header matches the sample's covariates."""
    schema = TabularSchema(columns=tuple(covariates), delimiter=delimiter)
    _, data = read_table(path, schema)
    return data
