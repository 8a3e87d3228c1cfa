"""Input checks shared by every estimator in the package."""
import numpy as np
from sklearn.utils.validation import check_array

from ..dataset import DataMatrix
from ..exceptions import DataError, InvalidArgumentError, SchemaError


def _names_of(X):
    if isinstance(X, DataMatrix):
        return list(X.columns)
    cols = getattr(X, "columns", None)
    if cols is not None and not isinstance(X, np.ndarray):
        return [str(c) for c in cols]
    return None


def _array_of(X):
    if isinstance(X, DataMatrix):
        return X.features
    return X


def validate_fit(est, X, y=None):
    """Return ``(X, y)`` as float arrays and record the training schema.

    ``y`` may be omitted when ``X`` is a :class:`DataMatrix` carrying a target.
    """
    if y is None and isinstance(X, DataMatrix):
        y = X.target
    if y is None:
        raise InvalidArgumentError("no target given")
    names = _names_of(X)
    A = _array_of(X)
    if np.asarray(A).shape[0] == 0:
        raise InvalidArgumentError("cannot fit on empty training data")
    A = check_array(A, dtype=np.float64, ensure_min_samples=1)
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != A.shape[0]:
        raise InvalidArgumentError(f"X has {A.shape[0]} rows but y has {y.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise DataError("target contains non-finite values")
    est.n_features_in_ = A.shape[1]
    if names is not None:
        est.feature_names_in_ = np.asarray(names, dtype=object)
    elif hasattr(est, "feature_names_in_"):
        del est.feature_names_in_
    return A, y


def validate_predict(est, X):
    """Return ``X`` as a float array after checking it against the training schema."""
    names = _names_of(X)
    trained = getattr(est, "feature_names_in_", None)
    if names is not None and trained is not None:
        trained = list(trained)
        if names != trained:
            missing = [c for c in trained if c not in names]
            extra = [c for c in names if c not in trained]
            if missing or extra:
                raise SchemaError("feature schema does not match training schema", missing, extra)
            raise SchemaError(f"column order {names} differs from training order {trained}")
    A = np.asarray(_array_of(X), dtype=np.float64)
    if A.ndim == 2 and A.shape[0] == 0:
        if A.shape[1] != est.n_features_in_:
            raise SchemaError(f"expected {est.n_features_in_} features, got {A.shape[1]}")
        return A
    A = check_array(A, dtype=np.float64)
    if A.shape[1] != est.n_features_in_:
        raise SchemaError(f"expected {est.n_features_in_} features, got {A.shape[1]}")
    return A
