"""Regressors sharing the estimator interface (fit / predict / get_params)."""
from .boosting import ObliviousBoostingRegressor
from .forest import ForestRegressor
from .formula import BlackScholesPricer, HestonPricer, make_pricer
from .mlp import MLPRegressor

__all__ = [
    "MLPRegressor",
    "ForestRegressor",
    "ObliviousBoostingRegressor",
    "BlackScholesPricer",
    "HestonPricer",
    "make_pricer",
]
