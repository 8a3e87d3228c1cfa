"""Regenerate the bundled option-chain snapshot and par-yield curve.

The snapshot is synthetic.  Its layout follows a listed equity call chain
(contract ids in OCC format, the usual expiry calendar, a strike ladder that
widens with maturity) valued on 2025-01-01 with spot 250.42.

* "True" prices come from a Heston model whose parameters differ from the
  textbook set used by the Heston benchmark, plus a small quote-level
  perturbation.
* Bid/ask straddle the perturbed price with a spread that grows with price,
  rounded to cents.
* The vendor implied vol is backed out from a stale last trade.  For deep
  in-the-money contracts (where vega is tiny and stale prints sit below
  intrinsic) it is replaced by an unreliable value, as is common in free
  chain feeds.
* Exactly 13 rows are made illiquid (zero bid, zero vol or a crossed quote).

Run from the repo root: ``python3 scripts/make_market_fixture.py``.
"""
import csv
import io
from datetime import date
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from optlab._util import atomic_write
from optlab.market import (FIXTURE_CHAIN, FIXTURE_CURVE, FIXTURE_SPOT, FIXTURE_VALUATION_DATE,
                           YieldCurve, interpolate_rate, year_fraction)
from optlab.pricing import HestonParams, bs_call_array, heston_call_array

SEED = 20250101
OUT = Path(__file__).resolve().parents[1] / "src" / "optlab" / "data"
MARKET = HestonParams(v0=0.055, kappa=1.1, theta=0.085, sigma_v=0.55, rho=-0.6)

# 2024-12-31 par yields (percent), rounded
CURVE = [
    (1 / 12, 4.40), (2 / 12, 4.36), (3 / 12, 4.37), (4 / 12, 4.32), (6 / 12, 4.24),
    (1.0, 4.16), (2.0, 4.25), (3.0, 4.27), (5.0, 4.38), (7.0, 4.48), (10.0, 4.58),
    (20.0, 4.86), (30.0, 4.78),
]

EXPIRIES = [
    date(2025, 1, 3), date(2025, 1, 10), date(2025, 1, 17), date(2025, 1, 24), date(2025, 1, 31),
    date(2025, 2, 7), date(2025, 2, 21), date(2025, 3, 21), date(2025, 4, 17), date(2025, 5, 16),
    date(2025, 6, 20), date(2025, 7, 18), date(2025, 8, 15), date(2025, 9, 19), date(2025, 10, 17),
    date(2025, 12, 19), date(2026, 1, 16), date(2026, 6, 18), date(2026, 12, 18), date(2027, 1, 15),
    date(2027, 6, 17), date(2027, 12, 17),
]
STRIKES_PER_EXPIRY = 50
N_ILLIQUID = 13


def strike_ladder(T):
    """50 strikes spread wider for longer maturities, on the usual increments."""
    lo = max(30.0, FIXTURE_SPOT * (1.0 - 0.25 - 0.55 * np.sqrt(T)))
    hi = FIXTURE_SPOT * (1.0 + 0.15 + 0.45 * np.sqrt(T))
    raw = np.linspace(lo, hi, STRIKES_PER_EXPIRY)
    step = np.where(raw < 100, 2.5, np.where(raw < 300, 5.0, 10.0))
    ks = np.round(raw / step) * step
    out = sorted(set(ks.tolist()))
    extra = hi
    while len(out) < STRIKES_PER_EXPIRY:
        extra += 10.0
        out.append(float(np.round(extra / 10.0) * 10.0))
    return np.array(sorted(out)[:STRIKES_PER_EXPIRY])


def implied_vol(price, S, K, r, T):
    intrinsic = max(S - K * np.exp(-r * T), 0.0)
    if not intrinsic < price < S:
        return None
    f = lambda s: bs_call_array(S, K, r, T, s)[0] - price
    try:
        return brentq(f, 1e-4, 5.0, xtol=1e-10)
    except ValueError:
        return None


def contract_id(expiry, strike):
    return f"AAPL{expiry:%y%m%d}C{int(round(strike * 1000)):08d}"


def build():
    rng = np.random.default_rng(SEED)
    curve = YieldCurve(tuple(t for t, _ in CURVE), tuple(y / 100 for _, y in CURVE))
    S = FIXTURE_SPOT
    rows = []
    for expiry in EXPIRIES:
        T = year_fraction(FIXTURE_VALUATION_DATE, expiry)
        r = interpolate_rate(curve, T)
        Ks = strike_ladder(T)
        true = heston_call_array(np.full(Ks.size, S), Ks, np.full(Ks.size, r), np.full(Ks.size, T), MARKET)
        for K, price in zip(Ks, true):
            rows.append([expiry, float(K), T, r, float(price)])

    n = len(rows)
    out = []
    for i, (expiry, K, T, r, price) in enumerate(rows):
        mid = max(price * (1.0 + 0.01 * rng.standard_normal()) + 0.02 * rng.standard_normal(), 0.005)
        half = max(0.005, 0.004 * mid + 0.01)
        bid = max(round(mid - half, 2), 0.01)
        ask = max(round(mid + half, 2), bid + 0.01)
        stale = price * (1.0 + 0.04 * rng.standard_normal())
        iv = implied_vol(stale, S, K, r, T)
        deep_itm = K / S < 0.8 and T < 1.5
        if iv is None or deep_itm:
            iv = float(rng.uniform(0.45, 1.6))
        out.append([contract_id(expiry, K), K, expiry.isoformat(), bid, ask, round(iv, 5)])

    # illiquid rows: cheapest far out-of-the-money quotes lose their bid,
    # plus two zero-vol prints and one crossed quote
    cheap = np.argsort([o[3] + o[4] for o in out], kind="stable")[:N_ILLIQUID - 3]
    for i in cheap:
        out[i][3] = 0.0
    rest = [i for i in rng.permutation(n) if i not in set(cheap.tolist())]
    for i in rest[:2]:
        out[i][5] = 0.0
    j = rest[2]
    out[j][3], out[j][4] = out[j][4] + 0.05, out[j][4]
    assert len(out) == len(EXPIRIES) * STRIKES_PER_EXPIRY
    assert sum(not (b > 0 and a >= b and iv > 0) for _, _, _, b, a, iv in out) == N_ILLIQUID
    return out, curve


def write(out, curve):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["contract", "strike", "expiry", "bid", "ask", "implied_vol"])
    for c, K, e, b, a, iv in out:
        w.writerow([c, f"{K:g}", e, f"{b:.2f}", f"{a:.2f}", f"{iv:.5f}"])
    atomic_write(OUT / FIXTURE_CHAIN, buf.getvalue())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tenor_years", "par_yield"])
    for t, y in CURVE:
        w.writerow([f"{t:.6f}", f"{y / 100:.4f}"])
    atomic_write(OUT / FIXTURE_CURVE, buf.getvalue())


if __name__ == "__main__":
    rows, curve = build()
    write(rows, curve)
    print(f"wrote {len(rows)} quotes to {OUT / FIXTURE_CHAIN}")
