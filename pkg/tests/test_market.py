from datetime import date

import numpy as np
import pytest

from optlab.exceptions import DataError, InvalidArgumentError, ParseError
from optlab.market import (
    FIXTURE_SPOT,
    FIXTURE_VALUATION_DATE,
    OptionQuote,
    YieldCurve,
    build_market_dataset,
    interpolate_rate,
    load_fixture,
    load_option_chain,
    mid_price,
    year_fraction,
)

HEADER = "contract,strike,expiry,bid,ask,implied_vol\n"
VAL = date(2025, 1, 1)
CURVE = YieldCurve((0.25, 0.5), (0.045, 0.044))


def write_chain(tmp_path, *rows):
    path = tmp_path / "chain.csv"
    path.write_text(HEADER + "".join(r + "\n" for r in rows))
    return path


def test_mid_price():
    assert mid_price(10.0, 10.4) == pytest.approx(10.2, abs=1e-15)
    assert mid_price(0.0, 0.01) == 0.005
    assert mid_price(5, 5) == 5
    with pytest.raises(InvalidArgumentError):
        mid_price(10.4, 10.0)
    with pytest.raises(InvalidArgumentError):
        mid_price(-1.0, 1.0)


def test_year_fraction():
    assert year_fraction(date(2025, 1, 1), date(2026, 1, 1)) == 1.0
    assert year_fraction(VAL, VAL) == 0.0
    assert year_fraction(VAL, date(2025, 1, 17)) == pytest.approx(0.04384, abs=1e-5)
    assert year_fraction(VAL, date(2025, 1, 17)) == 16 / 365
    with pytest.raises(InvalidArgumentError):
        year_fraction(VAL, date(2024, 12, 31))


def test_interpolate_rate():
    assert interpolate_rate(CURVE, 0.375) == pytest.approx(0.0445, abs=1e-15)
    assert interpolate_rate(CURVE, 0.5) == 0.044
    assert interpolate_rate(CURVE, 0.25) == 0.045
    assert interpolate_rate(CURVE, 30.0) == 0.044
    assert interpolate_rate(CURVE, 0.01) == 0.045
    with pytest.raises(InvalidArgumentError):
        interpolate_rate(CURVE, 0.0)
    with pytest.raises(InvalidArgumentError):
        YieldCurve((0.5,), (0.04,))
    with pytest.raises(InvalidArgumentError):
        YieldCurve((0.5, 0.25), (0.04, 0.05))


def test_interpolation_continuous_and_monotone_on_fixture_curve():
    _, curve = load_fixture()
    T = np.linspace(1e-3, 35, 20001)
    r = np.array([interpolate_rate(curve, t) for t in T])
    slope = np.max(np.abs(np.diff(curve.yields) / np.diff(curve.tenors)))
    assert np.max(np.abs(np.diff(r))) <= slope * (T[1] - T[0]) * (1 + 1e-9)
    for (t0, y0), (t1, y1) in zip(zip(curve.tenors, curve.yields), zip(curve.tenors[1:], curve.yields[1:])):
        seg = np.array([interpolate_rate(curve, t) for t in np.linspace(t0, t1, 11)])
        steps = np.diff(seg) * np.sign(y1 - y0)
        assert np.all(steps >= -1e-15)


def test_load_single_quote(tmp_path):
    path = write_chain(tmp_path, "AAPL250117C00150000,150,2025-01-17,10.0,10.4,0.25")
    chain = load_option_chain(path, VAL, 250.0)
    assert chain.dropped == 0 and len(chain) == 1
    q = chain.quotes[0]
    assert q == OptionQuote("AAPL250117C00150000", 150.0, date(2025, 1, 17), 10.0, 10.4, 0.25)
    assert q.mid == pytest.approx(10.2, abs=1e-15)
    data = build_market_dataset(chain, CURVE, 250.0, VAL)
    assert data.features.tolist() == [[250.0, 150.0, 0.045, 16 / 365, 0.25]]
    assert data.target[0] == pytest.approx(10.2, abs=1e-15)


def test_liquidity_filter(tmp_path):
    path = write_chain(
        tmp_path,
        "A,150,2025-01-17,10.0,10.4,0.25",
        "B,150,2025-01-17,0,0.4,0.25",
        "C,150,2025-01-17,10.5,10.4,0.25",
        "D,150,2025-01-17,10.0,10.4,0",
    )
    chain = load_option_chain(path, VAL, 250.0)
    assert [q.contract for q in chain.quotes] == ["A"] and chain.dropped == 3


def test_parse_errors(tmp_path):
    with pytest.raises(ParseError) as info:
        load_option_chain(write_chain(tmp_path, "A,150,2025-01-17,10,10.4,0.25", "B,abc,2025-01-17,1,2,0.3"),
                          VAL, 250.0)
    assert info.value.line == 3
    with pytest.raises(ParseError) as info:
        load_option_chain(write_chain(tmp_path, "A,150,17/01/2025,10,10.4,0.25"), VAL, 250.0)
    assert info.value.line == 2
    with pytest.raises(ParseError):
        load_option_chain(write_chain(tmp_path, "A,150,2025-01-17,10,10.4"), VAL, 250.0)
    with pytest.raises(ParseError):
        load_option_chain(write_chain(tmp_path, "A,150,2025-01-17,nan,10.4,0.25"), VAL, 250.0)
    bad_header = tmp_path / "h.csv"
    bad_header.write_text("contract,strike,expiry,bid,ask\n")
    with pytest.raises(ParseError):
        load_option_chain(bad_header, VAL, 250.0)
    with pytest.raises(DataError):
        load_option_chain(tmp_path / "missing.csv", VAL, 250.0)


def test_empty_after_filter(tmp_path):
    with pytest.raises(DataError, match="2 dropped"):
        load_option_chain(write_chain(tmp_path, "A,1,2025-02-01,0,1,0.2", "B,1,2025-02-01,1,2,0"), VAL, 250.0)


def test_shared_expiry_shares_r_and_T():
    quotes = [OptionQuote("A", 150.0, date(2025, 6, 20), 1, 2, 0.3),
              OptionQuote("B", 170.0, date(2025, 6, 20), 3, 4, 0.2)]
    data = build_market_dataset(quotes, CURVE, 250.0, VAL)
    assert data.column("r")[0] == data.column("r")[1]
    assert data.column("T")[0] == data.column("T")[1]


def test_build_error_names_contract():
    quotes = [OptionQuote("OLD1", 150.0, date(2024, 6, 20), 1, 2, 0.3)]
    with pytest.raises(InvalidArgumentError, match="OLD1"):
        build_market_dataset(quotes, CURVE, 250.0, VAL)


def test_fixture():
    chain, curve = load_fixture()
    assert len(chain) == 1087 and chain.dropped == 13
    data = build_market_dataset(chain, curve, FIXTURE_SPOT, FIXTURE_VALUATION_DATE)
    assert len(data) == 1087
    assert np.all(np.isfinite(data.features))
    assert np.all(data.column("S") == FIXTURE_SPOT)
    assert data.target.min() > 0
    again = build_market_dataset(*load_fixture(), FIXTURE_SPOT, FIXTURE_VALUATION_DATE)
    assert again.to_csv_bytes() == data.to_csv_bytes()
