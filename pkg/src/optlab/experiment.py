"""Experiment configuration and the end-to-end stage pipelines."""
from __future__ import annotations

import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ._util import atomic_write, derive_seed
from .dataset import DataMatrix, train_test_split
from .evaluation import benchmark, emit_bins, emit_report, evaluate_predictions
from .exceptions import ConfigError
from .learners import ForestRegressor, MLPRegressor, ObliviousBoostingRegressor, make_pricer
from .learners.persist import save_model
from .market import FIXTURE_SPOT, FIXTURE_VALUATION_DATE, build_market_dataset, load_fixture
from .synthetic import DatasetManifest, generate, write_dataset
from .tuning import DEFAULT_BUDGETS, RandomizedSearch, default_space

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("optlab")

LEARNERS = {"mlp": MLPRegressor, "forest": ForestRegressor, "gbm": ObliviousBoostingRegressor}
PRICERS = ("bs", "heston")
STAGE_DISTORTION = {1: "gaussian", 2: "sinusoidal"}
MARKET_BINS = ("strike", "maturity", "vol")


@dataclass(frozen=True)
class ExperimentConfig:
    """One stage run.  Every field is serialised into the run directory.

    ``distortion`` defaults to the stage's own (gaussian for stage 1,
    sinusoidal for stage 2).  ``rows``, ``pricer`` and the distortion
    settings are ignored by stage 3, which reads the bundled market fixture.
    """

    stage: int = 1
    seed: int = 0
    rows: int = 20000
    pricer: str = "bs"
    distortion: str = ""
    noise_std: float = 0.0975
    amplitude: float = 0.2
    test_fraction: float = 0.2
    models: tuple = ("mlp", "forest", "gbm")
    tune: bool = True
    budgets: dict = field(default_factory=lambda: dict(DEFAULT_BUDGETS))
    mlp_max_epochs: int = 1000
    bins: tuple = ()
    bench: bool = False
    repetitions: int = 3
    output_dir: str = ""

    def __post_init__(self):
        if self.stage not in (1, 2, 3):
            raise ConfigError(f"stage must be 1, 2 or 3, got {self.stage}")
        if not self.distortion and self.stage in STAGE_DISTORTION:
            object.__setattr__(self, "distortion", STAGE_DISTORTION[self.stage])
        if self.distortion not in ("", "gaussian", "sinusoidal", "none"):
            raise ConfigError(f"unknown distortion {self.distortion!r}")
        if self.pricer not in PRICERS:
            raise ConfigError(f"unknown pricer {self.pricer!r}")
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "bins", tuple(self.bins))
        unknown = [m for m in self.models if m not in LEARNERS]
        if unknown:
            raise ConfigError(f"unknown model(s): {', '.join(unknown)}")
        budgets = dict(DEFAULT_BUDGETS)
        budgets.update(self.budgets)
        object.__setattr__(self, "budgets", {k: budgets[k] for k in sorted(budgets)})
        if any(not isinstance(b, int) or b < 1 for b in budgets.values()):
            raise ConfigError("tuning budgets must be positive integers")
        if self.rows < 2 or not 0 < self.test_fraction < 1 or self.mlp_max_epochs < 1:
            raise ConfigError("rows, test_fraction or mlp_max_epochs out of range")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be non-negative")
        if self.repetitions < 3:
            raise ConfigError("repetitions must be at least 3")
        if not self.output_dir:
            object.__setattr__(self, "output_dir", f"runs/stage{self.stage}-seed{self.seed}")

    @classmethod
    def from_mapping(cls, d) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        extra = sorted(set(d) - names)
        if extra:
            raise ConfigError(f"unknown config key(s): {', '.join(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        """Read a TOML (or JSON) file of top-level keys plus an optional ``[budgets]`` table."""
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        try:
            d = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
        except (ValueError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_mapping(d)

    def override(self, **flags) -> "ExperimentConfig":
        """Apply non-None overrides (flags win over the file)."""
        flags = {k: v for k, v in flags.items() if v is not None}
        if "budgets" in flags:
            flags["budgets"] = {**self.budgets, **flags["budgets"]}
        try:
            return replace(self, **flags)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_json(self) -> str:
        d = asdict(self)
        d["models"], d["bins"] = list(self.models), list(self.bins)
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @property
    def dataset_id(self) -> str:
        if self.stage == 3:
            return "market-fixture"
        return f"stage{self.stage}-{self.pricer}-{self.distortion}-n{self.rows}-seed{self.seed}"


# ---------------------------------------------------------------------------
# building blocks shared with the CLI


def manifest_for(cfg: ExperimentConfig) -> DatasetManifest:
    params = {}
    if cfg.distortion == "gaussian":
        params = {"noise_std": cfg.noise_std}
    elif cfg.distortion == "sinusoidal":
        params = {"amplitude": cfg.amplitude}
    return DatasetManifest(seed=cfg.seed, pricer=cfg.pricer, distortion=cfg.distortion,
                           distortion_params=params, rows=cfg.rows)


def market_dataset() -> DataMatrix:
    chain, curve = load_fixture()
    return build_market_dataset(chain, curve, FIXTURE_SPOT, FIXTURE_VALUATION_DATE)


def build_dataset(cfg: ExperimentConfig):
    """``(data, manifest or None)`` for the configured stage."""
    if cfg.stage == 3:
        return market_dataset(), None
    manifest = manifest_for(cfg)
    return generate(manifest), manifest


def split_seed(root: int) -> int:
    return derive_seed(root, "split")


def fit_learner(name: str, train: DataMatrix, seed: int, tune: bool, budget: int, mlp_max_epochs: int):
    """Fit one learner, tuned or with defaults; returns ``(model, trial_log or None)``."""
    base = LEARNERS[name]()
    fixed = {"max_epochs": mlp_max_epochs} if name == "mlp" else {}
    if not tune:
        model = base.set_params(**fixed, random_state=derive_seed(seed, f"learner/{name}"))
        return model.fit(train), None
    search = RandomizedSearch(base, default_space(name, **fixed), budget, derive_seed(seed, f"tune/{name}"))
    search.fit(train)
    return search.best_estimator_, search.trial_log_


def score_models(models: dict, test: DataMatrix, dataset_id: str, bins=(), bench=False, repetitions=3,
                 train: DataMatrix | None = None):
    """One :class:`MetricsReport` per named model, in the given order."""
    reports = []
    for name, model in models.items():
        pred = model.predict(test)
        timing = None
        if bench:
            fit_rows = None if getattr(model, "is_formula", False) else train
            timing = benchmark(model, test, repetitions, fit_rows)
        reports.append(evaluate_predictions(name, dataset_id, test, pred, bins, timing))
    return reports


def run_stage(cfg: ExperimentConfig, out_dir=None):
    """Full pipeline for one stage; returns the list of reports."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write(out / "config.json", cfg.to_json())

    data, manifest = build_dataset(cfg)
    write_dataset(data, out / "dataset.csv", manifest)
    log.info("stage %d: %d rows", cfg.stage, len(data))
    split = train_test_split(data, cfg.test_fraction, split_seed(cfg.seed))

    models = {p: make_pricer(p).fit(split.train) for p in PRICERS}
    for name in cfg.models:
        log.info("fitting %s", name)
        model, trials = fit_learner(name, split.train, cfg.seed, cfg.tune, cfg.budgets[name],
                                    cfg.mlp_max_epochs)
        meta = {"dataset": cfg.dataset_id, "seed": cfg.seed, "tuned": cfg.tune}
        save_model(model, out / "models" / f"{name}.json", meta)
        if trials is not None:
            atomic_write(out / "models" / f"{name}.trials.json", trials.to_json(cfg.bench))
        models[name] = model

    bins = cfg.bins or (MARKET_BINS if cfg.stage == 3 else ())
    reports = score_models(models, split.test, cfg.dataset_id, bins, cfg.bench, cfg.repetitions, split.train)
    emit_report(reports, out / "report.csv")
    emit_report(reports, out / "report.json")
    if bins:
        emit_bins(reports, out)
    return reports

