"""Datasets, standardization and residual correlations.

All path engines work on data whose predictors are centered and scaled to
unit Euclidean norm, with a centered response.  Results are mapped back to
the original scale with :func:`destandardize`.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DataError

def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Raw design matrix ``X`` (n x p), response ``y`` and column labels."""

    X: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...] = ()

    def __post_init__(self):
        X = _frozen(self.X)
        y = _frozen(self.y)
        if X.ndim != 2:
            raise DataError(f"X must be two-dimensional, got shape {X.shape}")
        n, p = X.shape
        if y.shape != (n,):
            raise DataError(f"y has shape {y.shape}, expected ({n},)")
        if n < 2 or p < 1:
            raise DataError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("dataset contains non-finite entries")
        names = tuple(self.column_names) or tuple(f"x{j}" for j in range(p))
        if len(names) != p:
            raise DataError(f"{len(names)} column names for {p} columns")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def constant_columns(self) -> list[str]:
        """Names of predictors with zero variance (rejected by standardize)."""
        spread = np.ptp(self.X, axis=0)
        return [self.column_names[j] for j in np.flatnonzero(spread == 0)]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.X[rows], self.y[rows], self.column_names)


@dataclass(frozen=True)
class Scaling:
    """Back-transform metadata: column means, column norms and response mean."""

    col_means: np.ndarray
    col_scales: np.ndarray
    y_mean: float

    def __post_init__(self):
        object.__setattr__(self, "col_means", _frozen(self.col_means))
        object.__setattr__(self, "col_scales", _frozen(self.col_scales))
        object.__setattr__(self, "y_mean", float(self.y_mean))

    def to_dict(self) -> dict:
        return {
            "col_means": self.col_means.tolist(),
            "col_scales": self.col_scales.tolist(),
            "y_mean": self.y_mean,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scaling":
        return cls(d["col_means"], d["col_scales"], d["y_mean"])


@dataclass(frozen=True)
class StandardizedDataset:
    """Centered, unit-norm predictors ``Xs`` and centered response ``ys``."""

    Xs: np.ndarray
    ys: np.ndarray
    col_means: np.ndarray
    col_scales: np.ndarray
    y_mean: float
    column_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        for name in ("Xs", "ys", "col_means", "col_scales"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(self, "y_mean", float(self.y_mean))
        if not self.column_names:
            object.__setattr__(
                self, "column_names", tuple(f"x{j}" for j in range(self.p))
            )

    @property
    def n(self) -> int:
        return self.Xs.shape[0]

    @property
    def p(self) -> int:
        return self.Xs.shape[1]

    @property
    def scaling(self) -> Scaling:
        return Scaling(self.col_means, self.col_scales, self.y_mean)

    def as_dataset(self) -> Dataset:
        return Dataset(self.Xs, self.ys, self.column_names)


@dataclass(frozen=True)
class CoefficientEstimate:
    """Coefficients on the original scale plus intercept."""

    beta: np.ndarray
    intercept: float

    def __post_init__(self):
        object.__setattr__(self, "beta", _frozen(self.beta))
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.beta))

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.beta + self.intercept


def load_csv(path, response: str) -> Dataset:
    """Read a headed, comma-separated numeric file into a :class:`Dataset`.

    The ``response`` column becomes ``y``; the remaining columns keep their
    file order.  Constant predictors are accepted with a warning.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if response not in header:
        raise DataError(f"{path}: response column '{response}' not found in header")
    ncol = len(header)
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != ncol:
            raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {ncol}")
        parsed = []
        for col, cell in zip(header, row):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: row {lineno}, column '{col}': cannot parse {cell!r}"
                ) from None
            if not math.isfinite(v):
                raise DataError(
                    f"{path}: row {lineno}, column '{col}': non-finite value {cell!r}"
                )
            parsed.append(v)
        values.append(parsed)
    data = np.array(values, dtype=float).reshape(len(values), ncol)
    r = header.index(response)
    keep = [k for k in range(ncol) if k != r]
    d = Dataset(data[:, keep], data[:, r], tuple(header[k] for k in keep))
    const = d.constant_columns
    if const:
        warnings.warn(f"{path}: zero-variance predictors {const}", stacklevel=2)
    return d


def standardize(d: Dataset) -> StandardizedDataset:
    """Center every column, scale it to unit L2 norm, and center ``y``."""
    means = d.X.mean(axis=0)
    Xc = d.X - means
    scales = np.linalg.norm(Xc, axis=0)
    # relative test: rounding in the mean leaves ~1e-16 * |mean| residue
    tiny = 1e-12 * np.maximum(1.0, np.abs(means)) * math.sqrt(d.n)
    bad = np.flatnonzero(scales <= tiny)
    if bad.size:
        names = [d.column_names[j] for j in bad]
        raise DataError(f"zero-variance predictor(s): {', '.join(names)}")
    y_mean = d.y.mean()
    return StandardizedDataset(
        Xs=Xc / scales,
        ys=d.y - y_mean,
        col_means=means,
        col_scales=scales,
        y_mean=y_mean,
        column_names=d.column_names,
    )


def destandardize(beta_std, sd) -> CoefficientEstimate:
    """Map standardized-scale coefficients back to the original scale.

    ``sd`` can be a :class:`StandardizedDataset` or a bare :class:`Scaling`.
    """
    beta_std = np.asarray(beta_std, dtype=float)
    if beta_std.shape != sd.col_scales.shape:
        raise DataError(
            f"coefficient vector has length {beta_std.size}, expected {sd.col_scales.size}"
        )
    beta = beta_std / sd.col_scales
    intercept = sd.y_mean - float(beta @ sd.col_means)
    return CoefficientEstimate(beta, intercept)


def residual_correlations(sd: StandardizedDataset, beta) -> np.ndarray:
    """``Xs^T (ys - Xs beta)``."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (sd.p,):
        raise DataError(f"beta has shape {beta.shape}, expected ({sd.p},)")
    return sd.Xs.T @ (sd.ys - sd.Xs @ beta)
