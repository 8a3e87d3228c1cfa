"""Option-chain snapshot ingestion for the real-market stage.

Option chain CSV header: ``contract,strike,expiry,bid,ask,implied_vol``
(expiry as ISO-8601 date, implied vol as a decimal).  Yield curve CSV
header: ``tenor_years,par_yield`` (par yield as a decimal, used directly as
the continuously compounded rate).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date
from importlib import resources
from pathlib import Path

import numpy as np

from .dataset import BASE_COLUMNS, DataMatrix
from .exceptions import DataError, InvalidArgumentError, ParseError

CHAIN_HEADER = ["contract", "strike", "expiry", "bid", "ask", "implied_vol"]
CURVE_HEADER = ["tenor_years", "par_yield"]
DAYS_PER_YEAR = 365.0

# bundled snapshot (see data/README.md for how it was produced)
FIXTURE_CHAIN = "aapl_calls_2025-01-01.csv"
FIXTURE_CURVE = "par_yield_2024-12-31.csv"
FIXTURE_SPOT = 250.42
FIXTURE_VALUATION_DATE = date(2025, 1, 1)


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("optlab") / "data" / name))


@dataclass(frozen=True)
class OptionQuote:
    contract: str
    strike: float
    expiry: date
    bid: float
    ask: float
    implied_vol: float

    @property
    def mid(self) -> float:
        return mid_price(self.bid, self.ask)


@dataclass(frozen=True)
class LoadedChain:
    quotes: list
    dropped: int
    valuation_date: date
    spot: float

    def __len__(self):
        return len(self.quotes)


def mid_price(bid: float, ask: float) -> float:
    if bid < 0 or ask < bid:
        raise InvalidArgumentError(f"need ask >= bid >= 0, got bid={bid}, ask={ask}")
    return 0.5 * (bid + ask)


def year_fraction(valuation_date: date, expiry: date) -> float:
    """ACT/365 fixed."""
    days = (expiry - valuation_date).days
    if days < 0:
        raise InvalidArgumentError(f"expiry {expiry} precedes valuation date {valuation_date}")
    return days / DAYS_PER_YEAR


def _read_rows(path, header):
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            raise ParseError("empty file", 1, path)
        if [h.strip() for h in first] != header:
            raise ParseError(f"header must be {','.join(header)}, got {','.join(first)}", 1, path)
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(rec)}", lineno, path)
            yield lineno, rec


def _is_liquid(bid, ask, iv):
    return bid > 0 and ask >= bid and iv > 0


def load_option_chain(path, valuation_date: date, spot: float) -> LoadedChain:
    """Parse a chain snapshot and drop illiquid quotes.

    A quote is dropped when ``bid <= 0``, ``ask < bid`` or
    ``implied_vol <= 0``; ``LoadedChain.dropped`` counts them.
    """
    if not spot > 0:
        raise InvalidArgumentError(f"spot must be positive, got {spot}")
    quotes, dropped = [], 0
    for lineno, rec in _read_rows(path, CHAIN_HEADER):
        try:
            contract = rec[0].strip()
            strike, bid, ask, iv = (float(rec[i]) for i in (1, 3, 4, 5))
            expiry = date.fromisoformat(rec[2].strip())
        except ValueError as exc:
            raise ParseError(str(exc), lineno, path) from None
        if not all(math.isfinite(v) for v in (strike, bid, ask, iv)) or strike <= 0 or not contract:
            raise ParseError("strike must be positive and all prices finite", lineno, path)
        if expiry < valuation_date:
            raise ParseError(f"contract {contract} expired on {expiry}", lineno, path)
        if not _is_liquid(bid, ask, iv):
            dropped += 1
            continue
        quotes.append(OptionQuote(contract, strike, expiry, bid, ask, iv))
    if not quotes:
        raise DataError(f"no liquid quotes left in {path} after filtering ({dropped} dropped)")
    return LoadedChain(quotes, dropped, valuation_date, float(spot))


@dataclass(frozen=True)
class YieldCurve:
    """Par-yield knots with strictly increasing positive tenors."""

    tenors: tuple
    yields: tuple

    def __post_init__(self):
        t = np.asarray(self.tenors, dtype=float)
        y = np.asarray(self.yields, dtype=float)
        if t.size < 2 or t.size != y.size:
            raise InvalidArgumentError("a yield curve needs at least 2 (tenor, yield) knots")
        if np.any(t <= 0) or np.any(np.diff(t) <= 0):
            raise InvalidArgumentError("tenors must be positive and strictly increasing")
        if not np.all(np.isfinite(y)):
            raise InvalidArgumentError("yields must be finite")
        object.__setattr__(self, "tenors", tuple(t.tolist()))
        object.__setattr__(self, "yields", tuple(y.tolist()))

    @classmethod
    def from_csv(cls, path) -> "YieldCurve":
        knots = []
        for lineno, rec in _read_rows(path, CURVE_HEADER):
            try:
                knots.append((float(rec[0]), float(rec[1])))
            except ValueError as exc:
                raise ParseError(str(exc), lineno, path) from None
        if len(knots) < 2:
            raise DataError(f"{path}: a yield curve needs at least 2 knots")
        knots.sort()
        return cls(tuple(k[0] for k in knots), tuple(k[1] for k in knots))


def interpolate_rate(curve: YieldCurve, T: float) -> float:
    """Linear in maturity between knots, flat beyond the first and last knot."""
    if len(curve.tenors) < 2:
        raise InvalidArgumentError("a yield curve needs at least 2 knots")
    if not T > 0:
        raise InvalidArgumentError(f"maturity must be positive, got {T}")
    return float(np.interp(T, curve.tenors, curve.yields))


def build_market_dataset(quotes, curve: YieldCurve, spot: float, valuation_date: date) -> DataMatrix:
    """Rows ``(S=spot, K, r(T), T, sigma=implied vol)`` with the mid price as target."""
    if isinstance(quotes, LoadedChain):
        quotes = quotes.quotes
    rows, target = [], []
    for q in quotes:
        try:
            T = year_fraction(valuation_date, q.expiry)
            r = interpolate_rate(curve, T)
            mid = q.mid
        except InvalidArgumentError as exc:
            raise InvalidArgumentError(f"contract {q.contract}: {exc}") from exc
        rows.append((spot, q.strike, r, T, q.implied_vol))
        target.append(mid)
    X = np.array(rows, dtype=np.float64).reshape(-1, len(BASE_COLUMNS))
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite features in market dataset")
    return DataMatrix(X, BASE_COLUMNS, np.array(target))


def load_fixture():
    """The bundled chain snapshot as ``(LoadedChain, YieldCurve)``."""
    chain = load_option_chain(fixture_path(FIXTURE_CHAIN), FIXTURE_VALUATION_DATE, FIXTURE_SPOT)
    return chain, YieldCurve.from_csv(fixture_path(FIXTURE_CURVE))
