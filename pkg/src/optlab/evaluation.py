"""Error metrics, binned error tables, timing and report files."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import clone

from ._util import atomic_write, fmt_float
from .dataset import DataMatrix
from .exceptions import InvalidArgumentError, OptlabError, UndefinedMetricError


def _pair(actual, predicted):
    a = np.asarray(actual, dtype=np.float64).ravel()
    p = np.asarray(predicted, dtype=np.float64).ravel()
    if a.size != p.size:
        raise InvalidArgumentError(f"length mismatch: {a.size} actual vs {p.size} predicted")
    if a.size == 0:
        raise InvalidArgumentError("metrics need at least one row")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
        raise InvalidArgumentError("metrics need finite values")
    return a, p


def mse(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    r = a - p
    return float(np.mean(r * r))


def mae(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return float(np.mean(np.abs(a - p)))


def r2(actual, predicted) -> float:
    """``1 - SS_res / SS_tot`` with ``SS_tot`` taken about the mean of ``actual``."""
    a, p = _pair(actual, predicted)
    dev = a - a.mean()
    ss_tot = float(dev @ dev)
    if ss_tot == 0.0:
        raise UndefinedMetricError("R^2 is undefined for a constant target")
    res = a - p
    return 1.0 - float(res @ res) / ss_tot


# column aliases accepted by binned_mae
DIMENSIONS = {"strike": "K", "maturity": "T", "vol": "sigma", "volatility": "sigma", "spot": "S",
              "rate": "r"}


@dataclass
class BinTable:
    """Per-bin MAE; ``mae[i]`` is None for empty bins."""

    dimension: str
    column: str
    edges: list
    counts: list
    mae: list
    overflow: int = 0

    def recombined_mae(self) -> float:
        total = sum(self.counts)
        return sum(c * m for c, m in zip(self.counts, self.mae) if c) / total


def default_edges(values, n_bins: int = 10) -> np.ndarray:
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi == lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n_bins + 1)


def binned_mae(rows: DataMatrix, predictions, dimension: str, edges=None) -> BinTable:
    """MAE per half-open bin ``[e_i, e_{i+1})``; the last bin is closed.

    Rows outside ``[e_0, e_last]`` are counted in ``overflow`` and excluded.
    """
    column = DIMENSIONS.get(dimension, dimension)
    values = rows.column(column)
    actual, predicted = _pair(rows.target, predictions)
    edges = default_edges(values) if edges is None else np.asarray(edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise InvalidArgumentError("bin edges must be strictly increasing with at least 2 entries")
    n_bins = edges.size - 1
    idx = np.searchsorted(edges, values, side="right") - 1
    idx[values == edges[-1]] = n_bins - 1
    inside = (idx >= 0) & (idx < n_bins)
    err = np.abs(actual - predicted)
    counts = np.bincount(idx[inside], minlength=n_bins)
    sums = np.bincount(idx[inside], weights=err[inside], minlength=n_bins)
    maes = [float(s / c) if c else None for s, c in zip(sums, counts)]
    return BinTable(dimension, column, edges.tolist(), counts.tolist(), maes, int((~inside).sum()))


@dataclass
class Timing:
    """Median wall-clock seconds; ``fit_seconds`` is None where fitting does not apply."""

    predict_seconds: float
    rows: int
    repetitions: int
    fit_seconds: float | None = None

    @property
    def per_row(self) -> float:
        return self.predict_seconds / self.rows


def benchmark(model, rows: DataMatrix, repetitions: int = 3, train: DataMatrix | None = None) -> Timing:
    """Median fit and prediction time over ``repetitions`` runs.

    Formula pricers are timed through their per-row scalar path and report
    no fit time.  Learners are timed on a vectorised prediction pass over
    all rows; the fit is timed only when ``train`` is given.
    """
    if repetitions < 3:
        raise InvalidArgumentError("benchmark needs at least 3 repetitions")
    formula = getattr(model, "is_formula", False)
    fit_times = []
    if train is not None and not formula:
        for _ in range(repetitions):
            fresh = clone(model)
            start = time.perf_counter()
            fresh.fit(train)
            fit_times.append(time.perf_counter() - start)
    call = model.price_each if formula else model.predict
    call(rows.take(np.arange(min(len(rows), 8))))  # warm caches and compiled kernels
    times = []
    for _ in range(repetitions):
        start = time.perf_counter()
        call(rows)
        times.append(time.perf_counter() - start)
    return Timing(float(np.median(times)), len(rows), repetitions,
                  float(np.median(fit_times)) if fit_times else None)


@dataclass
class MetricsReport:
    model: str
    dataset: str
    n: int
    mse: float
    mae: float
    r2: float | None
    bins: list = field(default_factory=list)
    timing: Timing | None = None

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["bins"] = [BinTable(**b) for b in d.get("bins", [])]
        d["timing"] = Timing(**d["timing"]) if d.get("timing") else None
        return cls(**d)


def evaluate_predictions(model_name, dataset_id, rows: DataMatrix, predictions, bins=(),
                         timing=None) -> MetricsReport:
    actual = rows.target
    try:
        score = r2(actual, predictions)
    except UndefinedMetricError:
        score = None
    tables = [binned_mae(rows, predictions, dim) for dim in bins]
    return MetricsReport(model_name, dataset_id, len(rows), mse(actual, predictions),
                         mae(actual, predictions), score, tables, timing)


CSV_COLUMNS = ("model", "dataset", "n", "mse", "mae", "r2", "fit_seconds", "predict_seconds",
               "rows_timed")


def _check_report(rep: MetricsReport):
    if rep.mse < 0 or rep.mae < 0 or (rep.r2 is not None and rep.r2 > 1):
        raise OptlabError(f"{rep.model}: metrics out of range")
    if rep.mae > math.sqrt(rep.mse) * (1 + 1e-12) + 1e-300:
        raise OptlabError(f"{rep.model}: MAE exceeds sqrt(MSE)")


def _cell(v):
    if v is None:
        return "N/A"
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        t = rep.timing
        w.writerow([_cell(v) for v in (
            rep.model, rep.dataset, rep.n, rep.mse, rep.mae, rep.r2,
            t.fit_seconds if t else None, t.predict_seconds if t else None, t.rows if t else None)])
    return buf.getvalue()


def reports_from_csv(text: str) -> list:
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        num = lambda k: None if rec[k] in ("N/A", "") else float(rec[k])
        timing = None
        if rec["predict_seconds"] != "N/A":
            timing = Timing(num("predict_seconds"), int(rec["rows_timed"]), 0, num("fit_seconds"))
        out.append(MetricsReport(rec["model"], rec["dataset"], int(rec["n"]), num("mse"), num("mae"),
                                 num("r2"), [], timing))
    return out


def reports_to_json(reports) -> str:
    body = {"reports": [rep.to_dict() for rep in reports]}
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def reports_from_json(text: str) -> list:
    return [MetricsReport.from_dict(d) for d in json.loads(text)["reports"]]


def bins_to_csv(reports, dimension: str) -> str:
    """One row per bin, one ``<model>_mae``/``<model>_count`` column pair per model.

    Empty bins read ``NaN`` and overflow counts go in ``#`` comment lines,
    which gnuplot skips (use ``set datafile separator ","``).
    """
    tables = [(rep.model, next(b for b in rep.bins if b.dimension == dimension)) for rep in reports
              if any(b.dimension == dimension for b in rep.bins)]
    if not tables:
        raise InvalidArgumentError(f"no binned tables for {dimension!r}")
    edges = tables[0][1].edges
    buf = io.StringIO()
    for model, table in tables:
        if table.edges != edges:
            raise InvalidArgumentError("bin edges differ between models")
        if table.overflow:
            buf.write(f"# overflow {model} {table.overflow}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_lo", "bin_hi", "bin_mid"] + [f"{m}_{k}" for m, _ in tables for k in ("mae", "count")])
    for i in range(len(edges) - 1):
        row = [fmt_float(edges[i]), fmt_float(edges[i + 1]), fmt_float(0.5 * (edges[i] + edges[i + 1]))]
        for _, table in tables:
            m = table.mae[i]
            row += ["NaN" if m is None else fmt_float(m), str(table.counts[i])]
        w.writerow(row)
    return buf.getvalue()


def emit_report(reports, path, fmt: str | None = None) -> Path:
    """Write reports as CSV or JSON (chosen from ``fmt`` or the file suffix)."""
    reports = list(reports)
    if not reports:
        raise InvalidArgumentError("emit_report needs at least one report")
    for rep in reports:
        _check_report(rep)
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "csv":
        text = reports_to_csv(reports)
    elif fmt == "json":
        text = reports_to_json(reports)
    else:
        raise InvalidArgumentError(f"unknown report format {fmt!r}")
    return atomic_write(path, text)


def emit_bins(reports, directory) -> list:
    """Write ``bins_<dimension>.csv`` for every binned dimension present."""
    dims = []
    for rep in reports:
        for b in rep.bins:
            if b.dimension not in dims:
                dims.append(b.dimension)
    return [atomic_write(Path(directory) / f"bins_{d}.csv", bins_to_csv(reports, d)) for d in dims]
