import numpy as np
import pytest

from optlab.dataset import (
    ALL_ENGINEERED,
    BASE_COLUMNS,
    DataMatrix,
    FeatureEngineer,
    FeatureSpec,
    Standardizer,
    engineer_features,
    standardize_fit,
    train_test_split,
)
from optlab.exceptions import DataError, InvalidArgumentError, ParseError, SchemaError


def rows(*data, target=None):
    return DataMatrix(np.array(data, dtype=float), BASE_COLUMNS, target)


def test_engineered_examples():
    data = rows([55, 50, 0.02, 1, 0.3], [50, 50, 0.04, 1, 0.3])
    out = engineer_features(data, ALL_ENGINEERED)
    assert out.columns == BASE_COLUMNS + ("moneyness", "log_moneyness", "S_sigma", "K_r")
    assert abs(out.column("moneyness")[0] - 1.1) < 1e-15
    assert out.column("log_moneyness")[1] == 0.0
    assert out.column("S_sigma")[1] == 15.0
    assert abs(out.column("K_r")[1] - 2.0) < 1e-15
    assert len(out) == len(data)


def test_engineering_is_reproducible_and_defaults_off():
    data = rows(*np.random.default_rng(0).uniform(1, 90, (30, 5)))
    a = engineer_features(data, ALL_ENGINEERED)
    b = engineer_features(a.select(BASE_COLUMNS), ALL_ENGINEERED)
    np.testing.assert_array_equal(a.features, b.features)
    assert engineer_features(data, FeatureSpec()).columns == BASE_COLUMNS
    np.testing.assert_array_equal(FeatureEngineer().fit_transform(data.features), a.features)


def test_log_moneyness_domain_error():
    data = DataMatrix([[55, 50], [-1, 50]], ("S", "K"))
    with pytest.raises(DataError, match="row 1"):
        engineer_features(data, FeatureSpec(("log_moneyness",), base=("S", "K")))


def test_feature_spec_validation():
    with pytest.raises(InvalidArgumentError):
        FeatureSpec(("cube",))
    with pytest.raises(InvalidArgumentError):
        FeatureSpec(("moneyness", "moneyness"))


def test_split_sizes_and_determinism():
    data = rows(*np.arange(50).reshape(10, 5))
    s = train_test_split(data, 0.2, 3)
    assert len(s.train) == 8 and len(s.test) == 2
    again = train_test_split(data, 0.2, 3)
    np.testing.assert_array_equal(s.test_index, again.test_index)
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(InvalidArgumentError):
            train_test_split(data, bad, 3)
    with pytest.raises(InvalidArgumentError):
        train_test_split(data.take([0]), 0.2, 3)


def test_split_disjoint_and_exhaustive_large():
    n = 100_000
    data = DataMatrix(np.arange(n, dtype=float)[:, None], ("id",))
    s = train_test_split(data, 0.2, 11)
    assert len(s.test) == 20_000
    train_ids = set(s.train.column("id").tolist())
    test_ids = set(s.test.column("id").tolist())
    assert not train_ids & test_ids
    assert len(train_ids | test_ids) == n


def test_split_invariant_to_row_order():
    data = DataMatrix(np.arange(40, dtype=float)[:, None], ("id",))
    shuffled = data.take(np.random.default_rng(1).permutation(40))
    a, b = train_test_split(data, 0.25, 5), train_test_split(shuffled, 0.25, 5)
    np.testing.assert_array_equal(a.test_index, b.test_index)


def test_standardize_examples():
    sc = standardize_fit(DataMatrix([[1.0], [3.0]], ("x",)))
    assert sc.mean_.tolist() == [2.0] and sc.scale_.tolist() == [1.0]
    assert sc.transform(np.array([[1.0], [3.0]])).ravel().tolist() == [-1.0, 1.0]
    with pytest.warns(UserWarning, match="constant"):
        sc = Standardizer().fit(np.array([[5.0], [5.0], [5.0]]))
    assert sc.transform(np.array([[5.0], [5.0], [5.0]])).ravel().tolist() == [0.0, 0.0, 0.0]
    assert sc.constant_columns_ == [0]


def test_standardize_fit_on_train_only():
    X = np.random.default_rng(2).normal(30, 7, (500, 5))
    data = rows(*X)
    split = train_test_split(data, 0.2, 0)
    sc = standardize_fit(split.train)
    Z = sc.transform(split.train).features
    assert np.all(np.abs(Z.mean(axis=0)) < 1e-12)
    np.testing.assert_allclose(Z.std(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(sc.inverse_transform(sc.transform(split.test)).features, split.test.features)


def test_datamatrix_invariants():
    with pytest.raises(SchemaError):
        DataMatrix(np.zeros((2, 3)), ("a", "b"))
    with pytest.raises(SchemaError):
        DataMatrix(np.zeros((2, 2)), ("a", "a"))
    with pytest.raises(DataError):
        DataMatrix(np.zeros((2, 1)), ("a",), [1.0, np.nan])
    with pytest.raises(SchemaError):
        DataMatrix(np.zeros((2, 1)), ("a",)).column("b")


def test_csv_round_trip_exact(tmp_path):
    X = np.random.default_rng(4).uniform(0, 1, (20, 5))
    data = rows(*X, target=np.random.default_rng(5).normal(size=20))
    path = data.to_csv(tmp_path / "x.csv")
    back = DataMatrix.from_csv(path)
    np.testing.assert_array_equal(back.features, data.features)
    np.testing.assert_array_equal(back.target, data.target)
    assert back.to_csv_bytes() == path.read_bytes()


def test_csv_errors(tmp_path):
    with pytest.raises(DataError):
        DataMatrix.from_csv(tmp_path / "missing.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("S,K,price\n1,2,3\n1,x,3\n")
    with pytest.raises(ParseError, match=r"bad\.csv:3:") as info:
        DataMatrix.from_csv(bad)
    assert info.value.line == 3
    bad.write_text("S,K,price\n1,2\n")
    with pytest.raises(ParseError) as info:
        DataMatrix.from_csv(bad)
    assert info.value.line == 2
