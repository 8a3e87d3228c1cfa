"""Synthetic datasets: parameter grid, unique sampling, pricing, distortions.

Grid coordinates are generated as ``start + i * step`` in exact rational
arithmetic and rounded to float once, so two grid points are equal exactly
when their integer indices are equal.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from ._util import atomic_write, derive_seed
from .dataset import BASE_COLUMNS, DataMatrix
from .exceptions import DataError, InvalidArgumentError, NumericalError, SchemaError
from .learners.formula import BlackScholesPricer, HestonPricer
from .pricing import PricingInputs

MANIFEST_VERSION = 1


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


@dataclass(frozen=True)
class Axis:
    """Closed range ``[start, stop]`` walked in steps of ``step``."""

    start: Fraction
    stop: Fraction
    step: Fraction

    def __post_init__(self):
        for name in ("start", "stop", "step"):
            object.__setattr__(self, name, _frac(getattr(self, name)))
        if self.step <= 0:
            raise InvalidArgumentError(f"axis step must be positive, got {self.step}")
        if self.stop < self.start:
            raise InvalidArgumentError(f"empty axis [{self.start}, {self.stop}]")
        span = (self.stop - self.start) / self.step
        if span.denominator != 1:
            raise InvalidArgumentError(f"axis [{self.start}, {self.stop}] is not a whole number of {self.step} steps")

    @property
    def count(self) -> int:
        return int((self.stop - self.start) / self.step) + 1

    def values(self) -> np.ndarray:
        return np.array([float(self.start + i * self.step) for i in range(self.count)])

    def to_dict(self):
        return {"start": str(self.start), "stop": str(self.stop), "step": str(self.step)}


@dataclass(frozen=True)
class GridSpec:
    """Per-variable axes of the pricing grid, in column order S, K, r, T, sigma."""

    S: Axis = field(default_factory=lambda: Axis(50, 60, 1))
    K: Axis = field(default_factory=lambda: Axis(20, 90, 1))
    r: Axis = field(default_factory=lambda: Axis("1/100", "5/100", "1/100"))
    T: Axis = field(default_factory=lambda: Axis("1/4", 2, "1/12"))
    sigma: Axis = field(default_factory=lambda: Axis("1/10", "8/10", "1/10"))

    @property
    def axes(self):
        return (self.S, self.K, self.r, self.T, self.sigma)

    @property
    def size(self) -> int:
        n = 1
        for ax in self.axes:
            n *= ax.count
        return n

    def to_dict(self):
        return {name: ax.to_dict() for name, ax in zip(BASE_COLUMNS, self.axes)}

    @classmethod
    def from_dict(cls, d):
        return cls(*(Axis(**d[name]) for name in BASE_COLUMNS))

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def decode(self, flat) -> np.ndarray:
        """Map flat lexicographic indices to an ``(n, 5)`` array of coordinates."""
        flat = np.asarray(flat, dtype=np.int64)
        out = np.empty((flat.size, 5))
        rest = flat.copy()
        for j in range(4, -1, -1):
            ax = self.axes[j]
            out[:, j] = ax.values()[rest % ax.count]
            rest //= ax.count
        return out


def enumerate_grid(spec: GridSpec = GridSpec()):
    """Yield every grid point once, lexicographically (S slowest, sigma fastest)."""
    for combo in itertools.product(*(ax.values().tolist() for ax in spec.axes)):
        yield PricingInputs(*combo)


def sample_indices(spec: GridSpec, n: int, seed: int) -> np.ndarray:
    total = spec.size
    if n < 0 or n > total:
        raise InvalidArgumentError(f"cannot draw {n} unique points from a grid of {total}")
    return np.random.default_rng(seed).choice(total, size=n, replace=False)


def sample_unique(spec: GridSpec, n: int, seed: int):
    """``n`` distinct grid points drawn uniformly without replacement."""
    coords = spec.decode(sample_indices(spec, n, seed))
    return [PricingInputs(*row) for row in coords.tolist()]


def points_to_matrix(points) -> DataMatrix:
    X = np.array([[p.S, p.K, p.r, p.T, p.sigma] for p in points], dtype=np.float64).reshape(-1, 5)
    return DataMatrix(X, BASE_COLUMNS)


def price_dataset(points, pricer) -> DataMatrix:
    """Attach theoretical prices from ``pricer`` (a formula pricer estimator)."""
    data = points if isinstance(points, DataMatrix) else points_to_matrix(points)
    try:
        y = pricer.predict(data)
    except NumericalError as exc:
        row = exc.diagnostics.get("row")
        raise NumericalError(f"pricing failed at row {row}: {exc}", **exc.diagnostics) from exc
    return data.with_target(y)


def gaussian_noise(n: int, noise_std: float, seed: int) -> np.ndarray:
    """Noise vector indexed by row: entry ``i`` depends only on ``(seed, i)`` and ``n``."""
    if not noise_std >= 0:
        raise InvalidArgumentError(f"noise_std must be non-negative, got {noise_std}")
    return noise_std * np.random.default_rng(seed).standard_normal(n)


def distort_gaussian(data: DataMatrix, noise_std: float, seed: int) -> DataMatrix:
    """Add i.i.d. N(0, noise_std^2) noise to the target."""
    eps = gaussian_noise(len(data), noise_std, seed)
    if noise_std == 0:
        return data
    return data.with_target(data.target + eps)


def distort_sinusoidal(data: DataMatrix, amplitude: float) -> DataMatrix:
    """Add ``amplitude * sin(S)`` to the target."""
    if "S" not in data.columns:
        raise SchemaError("sinusoidal distortion needs the spot column", missing=["S"])
    if amplitude == 0:
        return data
    return data.with_target(data.target + amplitude * np.sin(data.column("S")))


# ---------------------------------------------------------------------------
# manifests


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.replace(microsecond=0).isoformat().replace("+00:00", "Z")


@dataclass
class DatasetManifest:
    """Everything needed to regenerate a synthetic dataset."""

    seed: int
    pricer: str = "bs"
    pricer_params: dict = field(default_factory=dict)
    distortion: str = "gaussian"
    distortion_params: dict = field(default_factory=dict)
    rows: int = 20000
    grid: dict = field(default_factory=lambda: GridSpec().to_dict())
    grid_hash: str = ""
    created_at: str = ""
    version: int = MANIFEST_VERSION

    def __post_init__(self):
        if self.pricer not in ("bs", "heston"):
            raise InvalidArgumentError(f"unknown pricer {self.pricer!r}")
        if self.distortion not in ("gaussian", "sinusoidal", "none"):
            raise InvalidArgumentError(f"unknown distortion {self.distortion!r}")
        digest = GridSpec.from_dict(self.grid).digest()
        if self.grid_hash and self.grid_hash != digest:
            raise DataError("manifest grid hash does not match its grid")
        self.grid_hash = digest
        if not self.created_at:
            self.created_at = _timestamp()

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        return cls(**json.loads(text))

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        return cls.from_json(Path(path).read_text())


def manifest_path(dataset_path) -> Path:
    p = Path(dataset_path)
    return p.with_name(p.stem + ".manifest.json")


def generate(manifest: DatasetManifest) -> DataMatrix:
    """Build the dataset described by ``manifest`` (pure function of it)."""
    spec = GridSpec.from_dict(manifest.grid)
    points = spec.decode(sample_indices(spec, manifest.rows, derive_seed(manifest.seed, "sampling")))
    data = DataMatrix(points, BASE_COLUMNS)
    pricer = HestonPricer(**manifest.pricer_params) if manifest.pricer == "heston" else BlackScholesPricer()
    data = price_dataset(data, pricer)
    params = manifest.distortion_params
    if manifest.distortion == "gaussian":
        data = distort_gaussian(data, params.get("noise_std", 0.0975), derive_seed(manifest.seed, "noise"))
    elif manifest.distortion == "sinusoidal":
        data = distort_sinusoidal(data, params.get("amplitude", 0.2))
    return data


def write_dataset(data: DataMatrix, path, manifest: DatasetManifest | None = None) -> Path:
    path = Path(path)
    data.to_csv(path)
    if manifest is not None:
        atomic_write(manifest_path(path), manifest.to_json())
    return path
