"""Black-Scholes and Heston pricers exposed through the estimator interface.

They have nothing to learn: ``fit`` only records the feature schema so the
pricers can sit next to the learned regressors in the evaluation harness.
"""
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ..dataset import BASE_COLUMNS, DataMatrix
from ..exceptions import InvalidArgumentError, SchemaError
from ..pricing import (
    HestonParams,
    PricingInputs,
    QuadratureConfig,
    bs_call,
    bs_call_array,
    heston_call,
    heston_call_array,
)


def _base_columns(X):
    if isinstance(X, DataMatrix):
        X.require(BASE_COLUMNS)
        return [X.column(c) for c in BASE_COLUMNS]
    A = np.asarray(X, dtype=np.float64)
    if A.ndim != 2 or A.shape[1] < len(BASE_COLUMNS):
        raise SchemaError(f"expected columns {BASE_COLUMNS}, got array of shape {A.shape}")
    return [A[:, j] for j in range(len(BASE_COLUMNS))]


class _FormulaPricer(BaseEstimator, RegressorMixin):
    # evaluation reports fit time as not applicable for these
    is_formula = True

    def fit(self, X, y=None):
        _base_columns(X)
        self.n_features_in_ = len(BASE_COLUMNS)
        return self

    def price_each(self, X):
        """Price row by row through the scalar pricing function."""
        cols = _base_columns(X)
        price = self._scalar
        return np.array([price(PricingInputs(*row)) for row in zip(*(c.tolist() for c in cols))])


class BlackScholesPricer(_FormulaPricer):
    """Closed-form Black-Scholes call price from ``(S, K, r, T, sigma)``."""

    def predict(self, X):
        return bs_call_array(*_base_columns(X))

    def _scalar(self, inputs):
        return bs_call(inputs)


class HestonPricer(_FormulaPricer):
    """Heston call price with fixed model parameters; the ``sigma`` column is unused."""

    def __init__(self, v0=0.04, kappa=2.0, theta=0.04, sigma_v=0.5, rho=-0.7,
                 node_count=128, truncation_bound=200.0, scheme="gauss-legendre", tolerance=1e-8):
        self.v0 = v0
        self.kappa = kappa
        self.theta = theta
        self.sigma_v = sigma_v
        self.rho = rho
        self.node_count = node_count
        self.truncation_bound = truncation_bound
        self.scheme = scheme
        self.tolerance = tolerance

    @property
    def heston_params(self):
        return HestonParams(self.v0, self.kappa, self.theta, self.sigma_v, self.rho)

    @property
    def quadrature(self):
        return QuadratureConfig(self.node_count, self.truncation_bound, self.scheme, self.tolerance,
                                max(2048, 4 * self.node_count))

    def predict(self, X):
        S, K, r, T, _ = _base_columns(X)
        return heston_call_array(S, K, r, T, self.heston_params, self.quadrature)

    def _scalar(self, inputs):
        return heston_call(inputs, self._params_cache, self._quad_cache)

    def price_each(self, X):
        self._params_cache, self._quad_cache = self.heston_params, self.quadrature
        return super().price_each(X)


def make_pricer(name: str, **params):
    """``"bs"`` or ``"heston"`` to a pricer instance."""
    name = name.lower()
    if name in ("bs", "black-scholes", "blackscholes"):
        return BlackScholesPricer()
    if name == "heston":
        return HestonPricer(**params)
    raise InvalidArgumentError(f"unknown pricer {name!r}")
