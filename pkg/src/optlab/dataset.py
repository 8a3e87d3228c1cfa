"""Tabular containers, CSV I/O, feature engineering, scaling and splitting."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._util import atomic_write, fmt_float
from .exceptions import DataError, InvalidArgumentError, ParseError, SchemaError

BASE_COLUMNS = ("S", "K", "r", "T", "sigma")
TARGET = "price"


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """Feature rows with ordered column names and an optional target column."""

    features: np.ndarray
    columns: tuple
    target: np.ndarray | None = None
    target_name: str = TARGET

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64, copy=True)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, len(self.columns))
        if X.ndim != 2:
            raise InvalidArgumentError(f"features must be 2-D, got shape {X.shape}")
        cols = tuple(str(c) for c in self.columns)
        if X.shape[1] != len(cols):
            raise SchemaError(f"{X.shape[1]} feature columns but {len(cols)} names")
        if len(set(cols)) != len(cols):
            raise SchemaError("duplicate column names: " + ",".join(cols))
        X.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "columns", cols)
        if self.target is not None:
            y = np.array(self.target, dtype=np.float64, copy=True).ravel()
            if y.shape[0] != X.shape[0]:
                raise SchemaError(f"target has {y.shape[0]} rows, features have {X.shape[0]}")
            if not np.all(np.isfinite(y)):
                bad = int(np.flatnonzero(~np.isfinite(y))[0])
                raise DataError(f"non-finite target at row {bad}")
            y.setflags(write=False)
            object.__setattr__(self, "target", y)

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.features[:, self.columns.index(name)]
        except ValueError:
            raise SchemaError(f"no column {name!r}", missing=[name]) from None

    def require(self, names):
        missing = [c for c in names if c not in self.columns]
        if missing:
            raise SchemaError("required columns absent", missing=missing)

    def take(self, rows) -> "DataMatrix":
        rows = np.asarray(rows, dtype=np.intp)
        y = None if self.target is None else self.target[rows]
        return DataMatrix(self.features[rows], self.columns, y, self.target_name)

    def with_target(self, y) -> "DataMatrix":
        return DataMatrix(self.features, self.columns, y, self.target_name)

    def select(self, names) -> "DataMatrix":
        self.require(names)
        idx = [self.columns.index(c) for c in names]
        return DataMatrix(self.features[:, idx], tuple(names), self.target, self.target_name)

    def to_csv_bytes(self) -> bytes:
        header = list(self.columns)
        if self.target is not None:
            header.append(self.target_name)
        lines = [",".join(header)]
        cols = [self.features[:, j] for j in range(self.features.shape[1])]
        if self.target is not None:
            cols.append(self.target)
        for row in zip(*cols):
            lines.append(",".join(fmt_float(v) for v in row))
        return ("\n".join(lines) + "\n").encode()

    def to_csv(self, path) -> Path:
        return atomic_write(path, self.to_csv_bytes())

    @classmethod
    def from_csv(cls, path, target_name: str = TARGET) -> "DataMatrix":
        """Read the dataset CSV format; the target column is optional."""
        path = Path(path)
        if not path.exists():
            raise DataError(f"dataset not found: {path}")
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ParseError("empty file", line=1, path=path) from None
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                if len(rec) != len(header):
                    raise ParseError(f"expected {len(header)} fields, got {len(rec)}", lineno, path)
                try:
                    rows.append([float(v) for v in rec])
                except ValueError as exc:
                    raise ParseError(str(exc), lineno, path) from None
        arr = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
        if target_name in header:
            j = header.index(target_name)
            feats = [c for i, c in enumerate(header) if i != j]
            X = np.delete(arr, j, axis=1)
            return cls(X, tuple(feats), arr[:, j], target_name)
        return cls(arr, tuple(header), None, target_name)


def as_matrix(X, columns=BASE_COLUMNS) -> DataMatrix:
    """Wrap a bare array (base column order assumed) as a DataMatrix."""
    if isinstance(X, DataMatrix):
        return X
    X = np.asarray(X, dtype=np.float64)
    return DataMatrix(X, tuple(columns[: X.shape[1]]))


# ---------------------------------------------------------------------------
# feature engineering

ENGINEERED = {
    "moneyness": lambda c: c["S"] / c["K"],
    "log_moneyness": lambda c: np.log(c["S"] / c["K"]),
    "S_sigma": lambda c: c["S"] * c["sigma"],
    "K_r": lambda c: c["K"] * c["r"],
}


@dataclass(frozen=True)
class FeatureSpec:
    """Base columns plus the engineered columns to append, in order."""

    engineered: tuple = ()
    base: tuple = field(default=BASE_COLUMNS)

    def __post_init__(self):
        unknown = [e for e in self.engineered if e not in ENGINEERED]
        if unknown:
            raise InvalidArgumentError(f"unknown engineered features: {unknown}")
        names = tuple(self.base) + tuple(self.engineered)
        if len(set(names)) != len(names):
            raise InvalidArgumentError("feature names must be unique")

    @property
    def columns(self):
        return tuple(self.base) + tuple(self.engineered)


ALL_ENGINEERED = FeatureSpec(tuple(ENGINEERED))


def engineer_features(data: DataMatrix, spec: FeatureSpec) -> DataMatrix:
    """Append engineered columns computed from the base columns."""
    data.require(spec.base)
    base = {c: data.column(c) for c in spec.base}
    if "log_moneyness" in spec.engineered:
        bad = np.flatnonzero(~(base["S"] / base["K"] > 0))
        if bad.size:
            raise DataError(f"log-moneyness undefined at row {int(bad[0])} (S/K <= 0)")
    extra = [ENGINEERED[name](base) for name in spec.engineered]
    X = np.column_stack([base[c] for c in spec.base] + extra) if extra else data.select(spec.base).features
    return DataMatrix(X, spec.columns, data.target, data.target_name)


class FeatureEngineer(BaseEstimator, TransformerMixin):
    """Transformer wrapper around :func:`engineer_features` (stateless)."""

    def __init__(self, engineered=tuple(ENGINEERED)):
        self.engineered = engineered

    def fit(self, X, y=None):
        self.spec_ = FeatureSpec(tuple(self.engineered))
        return self

    def transform(self, X):
        spec = getattr(self, "spec_", None) or FeatureSpec(tuple(self.engineered))
        out = engineer_features(as_matrix(X), spec)
        return out if isinstance(X, DataMatrix) else out.features


# ---------------------------------------------------------------------------
# standardisation

STD_FLOOR = 1e-12


class Standardizer(BaseEstimator, TransformerMixin):
    """Per-column z-score scaling, fit on training rows only.

    Columns whose standard deviation falls below ``1e-12`` are scaled by the
    floor instead; they are listed in ``constant_columns_`` and a warning is
    emitted.
    """

    def fit(self, X, y=None):
        A = X.features if isinstance(X, DataMatrix) else np.asarray(X, dtype=np.float64)
        if A.shape[0] < 2:
            raise InvalidArgumentError("standardisation needs at least 2 rows")
        self.mean_ = A.mean(axis=0)
        std = A.std(axis=0)
        const = std < STD_FLOOR
        self.scale_ = np.where(const, STD_FLOOR, std)
        self.constant_columns_ = np.flatnonzero(const).tolist()
        self.n_features_in_ = A.shape[1]
        if self.constant_columns_:
            warnings.warn(f"constant columns {self.constant_columns_}: std floored at {STD_FLOOR}")
        return self

    def transform(self, X):
        if isinstance(X, DataMatrix):
            Z = (X.features - self.mean_) / self.scale_
            return DataMatrix(Z, X.columns, X.target, X.target_name)
        return (np.asarray(X, dtype=np.float64) - self.mean_) / self.scale_

    def inverse_transform(self, Z):
        if isinstance(Z, DataMatrix):
            return DataMatrix(Z.features * self.scale_ + self.mean_, Z.columns, Z.target, Z.target_name)
        return np.asarray(Z) * self.scale_ + self.mean_


def standardize_fit(data) -> Standardizer:
    return Standardizer().fit(data)


# ---------------------------------------------------------------------------
# splitting


@dataclass(frozen=True, eq=False)
class SplitResult:
    train: DataMatrix
    test: DataMatrix
    seed: int
    fraction: float
    train_index: np.ndarray
    test_index: np.ndarray


def split_indices(n: int, fraction: float, seed: int):
    """Row indices (train, test), each sorted ascending."""
    if not 0.0 < fraction < 1.0:
        raise InvalidArgumentError(f"fraction must lie in (0, 1), got {fraction}")
    if n < 2:
        raise InvalidArgumentError(f"need at least 2 rows to split, got {n}")
    n_test = int(math.floor(fraction * n + 0.5))
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def train_test_split(data: DataMatrix, fraction: float = 0.2, seed: int = 0) -> SplitResult:
    """Seeded holdout split; ``round(fraction * n)`` rows go to the test side."""
    tr, te = split_indices(len(data), fraction, seed)
    return SplitResult(data.take(tr), data.take(te), seed, fraction, tr, te)
