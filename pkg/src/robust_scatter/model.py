"""Core data model: datasets, symmetric matrices, covariances and norms.

Conventions used throughout the package: a dataset is an n-by-p real matrix
whose rows are observations, the sample covariance keeps the 1/n
normalization (also for leave-one-out versions), and indices are zero-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CsvFormatError

__all__ = [
    "Provenance",
    "Dataset",
    "ScatterMatrix",
    "NormReport",
    "sample_covariance",
    "leave_one_out_covariance",
    "matrix_norms",
    "load_dataset_csv",
    "save_matrix_csv",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Provenance:
    """Descriptive record of how a dataset was produced. Never affects numerics."""

    family: Optional[str] = None
    seed: Optional[int] = None
    shape: Optional[str] = None
    mean: Optional[str] = None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable n x p sample matrix, one observation per row."""

    samples: np.ndarray
    provenance: Optional[Provenance] = None

    def __post_init__(self):
        a = np.asarray(self.samples, dtype=float)
        if a.ndim != 2:
            raise ValueError(f"samples must be a 2-d array, got ndim={a.ndim}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"samples must be at least 1x1, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("samples must contain only finite values")
        object.__setattr__(self, "samples", _readonly(a))

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def p(self) -> int:
        return self.samples.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.samples[i]


@dataclass(frozen=True, eq=False)
class ScatterMatrix:
    """Symmetric p x p matrix, stored fully and symmetrized on construction."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"entries must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("entries must contain only finite values")
        # symmetrize on write so downstream solves never see drift
        object.__setattr__(self, "entries", _readonly((a + a.T) / 2.0))

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    def is_spd(self) -> bool:
        """True when a Cholesky factorization succeeds."""
        try:
            np.linalg.cholesky(self.entries)
            return True
        except np.linalg.LinAlgError:
            return False

    def require_spd(self, what: str = "matrix") -> None:
        if not self.is_spd():
            raise ValueError(f"{what} is not symmetric positive definite")

    def trace(self) -> float:
        return float(np.trace(self.entries))


@dataclass(frozen=True)
class NormReport:
    """Entrywise max, entrywise l1 and operator (spectral) norms of a matrix."""

    max_norm: float
    l1_norm: float
    operator_norm: float


def sample_covariance(data: Dataset) -> ScatterMatrix:
    """Sample covariance (1/n) * sum_i x_i x_i^T of the rows of `data`."""
    x = data.samples
    return ScatterMatrix(x.T @ x / data.n)


def leave_one_out_covariance(data: Dataset, j: int) -> ScatterMatrix:
    """Sample covariance with row j removed, keeping the 1/n normalization.

    Equals sample_covariance(data) - (1/n) x_j x_j^T, so the n-1 remaining
    rows are still divided by n (not n-1).
    """
    if not 0 <= j < data.n:
        raise IndexError(f"row index {j} out of range for n={data.n}")
    x = data.samples
    xj = x[j]
    s = x.T @ x / data.n - np.outer(xj, xj) / data.n
    return ScatterMatrix(s)


def matrix_norms(m: np.ndarray) -> NormReport:
    """Entrywise max / entrywise l1 / largest-singular-value norms of `m`."""
    a = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix must contain only finite values")
    return NormReport(
        max_norm=float(np.max(np.abs(a))),
        l1_norm=float(np.sum(np.abs(a))),
        operator_norm=float(np.linalg.norm(a, 2)),
    )


def load_dataset_csv(path) -> Dataset:
    """Read a dataset CSV: one row per line, comma-separated decimal fields,
    no header, '.' decimal separator. Errors report the offending line and
    column (both 1-based)."""
    rows = []
    width = None
    with open(path, "r", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if line == "" and width is not None:
                # tolerate a single trailing newline at EOF
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise CsvFormatError(
                    f"line {lineno}: expected {width} fields, found {len(fields)}",
                    line=lineno,
                )
            parsed = []
            for colno, tok in enumerate(fields, start=1):
                try:
                    v = float(tok)
                except ValueError:
                    raise CsvFormatError(
                        f"line {lineno}, column {colno}: cannot parse {tok!r} as a number",
                        line=lineno,
                        column=colno,
                    ) from None
                if not np.isfinite(v):
                    raise CsvFormatError(
                        f"line {lineno}, column {colno}: non-finite value {tok!r}",
                        line=lineno,
                        column=colno,
                    )
                parsed.append(v)
            rows.append(parsed)
    if not rows:
        raise CsvFormatError("empty file: expected at least one data row", line=1)
    return Dataset(np.array(rows, dtype=float))


def save_matrix_csv(m: np.ndarray, path, digits: int = 10) -> None:
    """Write a matrix in the dataset CSV format with `digits` significant digits."""
    a = np.asarray(m, dtype=float)
    with open(path, "w", newline="\n") as fh:
        for row in np.atleast_2d(a):
            fh.write(",".join(f"{v:.{digits}g}" for v in row))
            fh.write("\n")
