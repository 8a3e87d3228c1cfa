import json
import math

import numpy as np
import pytest

from optlab.dataset import BASE_COLUMNS, DataMatrix
from optlab.evaluation import (
    CSV_COLUMNS,
    MetricsReport,
    Timing,
    benchmark,
    binned_mae,
    bins_to_csv,
    emit_bins,
    emit_report,
    evaluate_predictions,
    mae,
    mse,
    r2,
    reports_from_csv,
    reports_from_json,
)
from optlab.exceptions import InvalidArgumentError, OptlabError, UndefinedMetricError
from optlab.experiment import market_dataset
from optlab.learners import BlackScholesPricer, HestonPricer, ObliviousBoostingRegressor


def matrix(K, y):
    K = np.asarray(K, dtype=float)
    X = np.column_stack([np.full_like(K, 50.0), K, np.full_like(K, 0.02), np.ones_like(K), np.full_like(K, 0.3)])
    return DataMatrix(X, BASE_COLUMNS, y)


def test_metric_examples():
    a = np.array([1.0, 2.0, 3.0])
    assert (mse(a, a), mae(a, a), r2(a, a)) == (0.0, 0.0, 1.0)
    assert r2(a, np.full(3, 2.0)) == 0.0
    assert mse(a, np.full(3, 2.0)) == pytest.approx(2 / 3, abs=1e-15)
    z = np.zeros(4)
    assert mse(z, z + 1) == 1.0 and mae(z, z + 1) == 1.0
    with pytest.raises(UndefinedMetricError):
        r2(z, z + 1)


def test_metric_input_errors():
    with pytest.raises(InvalidArgumentError):
        mse([1, 2], [1])
    with pytest.raises(InvalidArgumentError):
        mae([], [])
    with pytest.raises(InvalidArgumentError):
        r2([1, np.nan], [1, 2])


def test_r2_matches_direct_formula():
    rng = np.random.default_rng(0)
    a, p = rng.normal(size=500), rng.normal(size=500)
    direct = 1 - np.sum((a - p) ** 2) / np.sum((a - a.mean()) ** 2)
    assert r2(a, p) == pytest.approx(direct, rel=1e-13)


def test_binned_examples():
    rows = matrix([10, 20, 30, 40], [0.0, 0.0, 0.0, 0.0])
    pred = np.array([1.0, -1.0, 3.0, -3.0])
    single = binned_mae(rows, pred, "strike", [10, 40])
    assert single.counts == [4] and single.mae == [mae(rows.target, pred)]
    two = binned_mae(rows, pred, "strike", [10, 25, 40])
    assert two.counts == [2, 2] and two.mae == [1.0, 3.0]
    assert two.column == "K" and two.overflow == 0


def test_bins_half_open_last_closed_and_overflow():
    rows = matrix([10, 20, 30, 40, 50], np.zeros(5))
    table = binned_mae(rows, np.ones(5), "strike", [10, 20, 30, 40])
    assert table.counts == [1, 1, 2]
    assert table.overflow == 1
    empty = binned_mae(rows, np.ones(5), "strike", [0, 5, 60])
    assert empty.counts == [0, 5] and empty.mae == [None, 1.0]
    with pytest.raises(InvalidArgumentError):
        binned_mae(rows, np.ones(5), "strike", [10, 10])


def test_weighted_recombination():
    rng = np.random.default_rng(1)
    rows = matrix(rng.uniform(20, 90, 300), rng.normal(size=300))
    pred = rng.normal(size=300)
    table = binned_mae(rows, pred, "strike")
    assert len(table.counts) == 10 and sum(table.counts) == 300 and table.overflow == 0
    assert table.recombined_mae() == pytest.approx(mae(rows.target, pred), rel=1e-13)


def test_benchmark_procedure():
    data = market_dataset()
    t = benchmark(BlackScholesPricer().fit(data), data, 3)
    assert t.repetitions == 3 and t.rows == 1087 and t.fit_seconds is None
    with pytest.raises(InvalidArgumentError):
        benchmark(BlackScholesPricer(), data, 2)
    gbm = ObliviousBoostingRegressor(n_iterations=50, depth=4)
    tg = benchmark(gbm.fit(data), data, 3, train=data)
    assert tg.fit_seconds is not None and tg.fit_seconds > 0


def test_timing_orderings_on_fixture():
    data = market_dataset()
    bs = benchmark(BlackScholesPricer().fit(data), data, 3)
    heston = benchmark(HestonPricer().fit(data), data.take(np.arange(200)), 3)
    gbm = benchmark(ObliviousBoostingRegressor(n_iterations=200, depth=6).fit(data), data, 3)
    assert heston.per_row > bs.per_row
    assert gbm.per_row < heston.per_row


def test_formula_timing_grows_with_rows():
    data = market_dataset()
    pricer = BlackScholesPricer().fit(data)
    small = data.take(np.arange(500))
    big = data.take(np.arange(1000))
    ts = min(benchmark(pricer, small, 3).predict_seconds for _ in range(3))
    tb = min(benchmark(pricer, big, 3).predict_seconds for _ in range(3))
    assert tb >= 1.5 * ts


def test_report_invariants():
    rows = matrix([20, 30, 40], [1.0, 2.0, 4.0])
    rep = evaluate_predictions("m", "d", rows, [1.5, 2.0, 3.0], bins=("strike",))
    assert rep.mae <= math.sqrt(rep.mse)
    assert rep.r2 <= 1
    const = evaluate_predictions("m", "d", matrix([20, 30], [1.0, 1.0]), [1.0, 2.0])
    assert const.r2 is None


def test_emit_csv_and_json_round_trip(tmp_path):
    rows = matrix([20, 30, 40, 50], [1.0, 2.0, 4.0, 3.0])
    a = evaluate_predictions("bs", "set1", rows, [1.5, 2.0, 3.0, 3.0], bins=("strike", "maturity"),
                             timing=Timing(0.25, 4, 3))
    b = evaluate_predictions("gbm", "set1", rows, [1.0, 2.5, 4.0, 2.0], timing=Timing(0.125, 4, 3, 1.5))
    path = emit_report([a], tmp_path / "one.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS) and len(lines) == 2
    assert lines[1].split(",")[6] == "N/A"
    two = reports_from_csv(emit_report([a, b], tmp_path / "two.csv").read_text())
    assert [r.dataset for r in two] == ["set1", "set1"]
    assert [(r.mse, r.mae, r.r2) for r in two] == [(a.mse, a.mae, a.r2), (b.mse, b.mae, b.r2)]
    assert two[1].timing.fit_seconds == 1.5
    back = reports_from_json(emit_report([a, b], tmp_path / "r.json").read_text())
    assert back == [a, b]
    text = (tmp_path / "r.json").read_text()
    assert list(json.loads(text)["reports"][0]) == sorted(json.loads(text)["reports"][0])


def test_emit_rejects_inconsistent_reports(tmp_path):
    bad = MetricsReport("x", "d", 3, mse=1.0, mae=2.0, r2=0.5)
    with pytest.raises(OptlabError):
        emit_report([bad], tmp_path / "r.csv")
    with pytest.raises(InvalidArgumentError):
        emit_report([], tmp_path / "r.csv")
    good = MetricsReport("x", "d", 3, mse=1.0, mae=1.0, r2=0.5)
    with pytest.raises(InvalidArgumentError):
        emit_report([good], tmp_path / "r.xml")
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        emit_report([good], blocker / "r.csv")


def test_bins_csv(tmp_path):
    rows = matrix([10, 20, 30, 40], np.zeros(4))
    reps = [evaluate_predictions(m, "d", rows, p, bins=("strike",))
            for m, p in (("bs", [1.0, 1, 1, 1]), ("gbm", [0.5, 0.5, 0.5, 0.5]))]
    text = bins_to_csv(reps, "strike")
    header, first = text.splitlines()[:2]
    assert header == "bin_lo,bin_hi,bin_mid,bs_mae,bs_count,gbm_mae,gbm_count"
    assert first.startswith("10,13,11.5,1,1,0.5,1")
    assert "NaN" in text  # equal-width bins over 4 points leave some empty
    paths = emit_bins(reps, tmp_path)
    assert [p.name for p in paths] == ["bins_strike.csv"]
