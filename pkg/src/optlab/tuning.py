"""Seeded random hyperparameter search with a holdout validation split."""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, clone
from sklearn.utils.validation import check_is_fitted

from ._util import derive_seed, thread_cap
from .dataset import DataMatrix, split_indices
from .exceptions import InvalidArgumentError, OptlabError, TuningError


@dataclass(frozen=True)
class Categorical:
    choices: tuple

    def sample(self, rng):
        return self.choices[int(rng.integers(len(self.choices)))]


@dataclass(frozen=True)
class IntRange:
    """Integers in ``[low, high]`` inclusive."""

    low: int
    high: int

    def sample(self, rng):
        return int(rng.integers(self.low, self.high + 1))


@dataclass(frozen=True)
class LogUniform:
    low: float
    high: float

    def __post_init__(self):
        if not 0 < self.low <= self.high:
            raise InvalidArgumentError("log-uniform bounds need 0 < low <= high")

    def sample(self, rng):
        return float(math.exp(rng.uniform(math.log(self.low), math.log(self.high))))


def _mlp_layers(cfg):
    cfg = dict(cfg)
    n_layers = cfg.pop("n_layers", None)
    width = cfg.pop("width", None)
    if n_layers is not None:
        cfg["hidden_layer_sizes"] = (width,) * n_layers
    return cfg


@dataclass
class SearchSpace:
    """Independent distributions per hyperparameter plus fixed overrides.

    ``build`` maps a raw sample onto estimator parameters (used to turn the
    MLP's layer count and width into ``hidden_layer_sizes``).
    """

    distributions: dict
    fixed: dict = field(default_factory=dict)
    build: object = None

    def sample(self, rng) -> dict:
        cfg = {name: self.distributions[name].sample(rng) for name in sorted(self.distributions)}
        if self.build is not None:
            cfg = self.build(cfg)
        cfg.update(self.fixed)
        return cfg


def default_space(model: str, **fixed) -> SearchSpace:
    model = model.lower()
    if model == "mlp":
        return SearchSpace({
            "n_layers": Categorical((1, 2, 3)),
            "width": Categorical((32, 64, 128)),
            "learning_rate": LogUniform(1e-4, 1e-2),
            "alpha": LogUniform(1e-6, 1e-2),
        }, fixed, _mlp_layers)
    if model == "forest":
        return SearchSpace({
            "n_estimators": Categorical((100, 200, 400)),
            "max_depth": Categorical((8, 12, 16, None)),
            "min_samples_split": Categorical((2, 5, 10)),
            "min_samples_leaf": Categorical((1, 2, 4)),
        }, fixed)
    if model == "gbm":
        return SearchSpace({
            "n_iterations": Categorical((200, 500, 1000)),
            "depth": Categorical((4, 6, 8)),
            "learning_rate": LogUniform(0.01, 0.3),
            "l2_leaf_reg": LogUniform(0.1, 10.0),
        }, fixed)
    raise InvalidArgumentError(f"no default search space for {model!r}")


DEFAULT_BUDGETS = {"mlp": 25, "forest": 25, "gbm": 40}


def _jsonable(params):
    return {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()}


@dataclass
class Trial:
    params: dict
    val_mse: float | None
    fit_seconds: float | None
    error: str | None = None


@dataclass
class TrialLog:
    """Trials in sampling order; ``best_index`` has the lowest validation MSE (earliest on ties)."""

    trials: list
    best_index: int
    seed: int

    @property
    def best(self) -> Trial:
        return self.trials[self.best_index]

    def __len__(self):
        return len(self.trials)

    def to_json(self, include_timings: bool = False) -> str:
        """JSON text; fit times are left out unless asked for so reruns stay byte-identical."""
        trials = []
        for t in self.trials:
            d = dict(asdict(t), params=_jsonable(t.params))
            if not include_timings:
                d["fit_seconds"] = None
            trials.append(d)
        body = {"seed": self.seed, "best_index": self.best_index, "trials": trials}
        return json.dumps(body, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text) -> "TrialLog":
        body = json.loads(text)
        return cls([Trial(**t) for t in body["trials"]], body["best_index"], body["seed"])


def _restore(params):
    out = dict(params)
    if isinstance(out.get("hidden_layer_sizes"), list):
        out["hidden_layer_sizes"] = tuple(out["hidden_layer_sizes"])
    return out


def random_search(estimator, space: SearchSpace, budget: int, train: DataMatrix, seed: int,
                  fraction: float = 0.2) -> TrialLog:
    """Sample ``budget`` configurations and score each on an inner holdout split."""
    if budget < 1:
        raise InvalidArgumentError(f"budget must be at least 1, got {budget}")
    rng = np.random.default_rng(derive_seed(seed, "configs"))
    configs = [space.sample(rng) for _ in range(budget)]
    tr, va = split_indices(len(train), fraction, derive_seed(seed, "inner-split"))
    fit_part, val_part = train.take(tr), train.take(va)
    learner_seed = derive_seed(seed, "learner")

    def run(cfg):
        model = clone(estimator).set_params(**cfg, random_state=learner_seed)
        start = time.perf_counter()
        try:
            model.fit(fit_part)
            pred = model.predict(val_part)
            mse = float(np.mean((pred - val_part.target) ** 2))
            if not math.isfinite(mse):
                raise TuningError("validation MSE is not finite")
        except (OptlabError, ValueError, FloatingPointError) as exc:
            return Trial(cfg, None, time.perf_counter() - start, f"{type(exc).__name__}: {exc}")
        return Trial(cfg, mse, time.perf_counter() - start)

    workers = min(thread_cap(), budget)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            trials = list(pool.map(run, configs))
    else:
        trials = [run(cfg) for cfg in configs]

    scored = [(t.val_mse, i) for i, t in enumerate(trials) if t.val_mse is not None]
    if not scored:
        raise TuningError("every tuning trial failed", [(i, t.error) for i, t in enumerate(trials)])
    best = min(scored)[1]
    return TrialLog(trials, best, seed)


class RandomizedSearch(BaseEstimator, RegressorMixin):
    """Random search followed by a refit of the best configuration on all rows."""

    def __init__(self, estimator, space, budget=10, random_state=0):
        self.estimator = estimator
        self.space = space
        self.budget = budget
        self.random_state = random_state

    def fit(self, X, y=None):
        data = X if isinstance(X, DataMatrix) else DataMatrix(np.asarray(X), [f"x{j}" for j in range(np.shape(X)[1])], y)
        if y is not None and isinstance(X, DataMatrix):
            data = X.with_target(y)
        self.trial_log_ = random_search(self.estimator, self.space, self.budget, data, self.random_state)
        self.best_params_ = _restore(self.trial_log_.best.params)
        self.best_estimator_ = clone(self.estimator).set_params(
            **self.best_params_, random_state=derive_seed(self.random_state, "learner"))
        self.best_estimator_.fit(data)
        return self

    def predict(self, X):
        check_is_fitted(self, "best_estimator_")
        return self.best_estimator_.predict(X)
