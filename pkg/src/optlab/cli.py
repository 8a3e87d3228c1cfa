"""Command-line entry point: ``optlab {generate,train,evaluate,bench,reproduce}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical or
training error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ._util import atomic_write
from .dataset import DataMatrix, train_test_split
from .evaluation import benchmark, emit_bins, emit_report
from .exceptions import ConfigError, DataError, InvalidArgumentError, OptlabError
from .experiment import (LEARNERS, PRICERS, ExperimentConfig, build_dataset, fit_learner, run_stage,
                         score_models, split_seed)
from .learners import make_pricer
from .learners.persist import load_model, save_model
from .synthetic import write_dataset

log = logging.getLogger("optlab")

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 2, 3, 4


def _csv_list(text):
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _config(args, **extra) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if getattr(args, "config", None) else ExperimentConfig()
    flags = dict(
        stage=getattr(args, "stage", None),
        seed=getattr(args, "seed", None),
        rows=getattr(args, "rows", None),
        pricer=getattr(args, "pricer", None),
        distortion=getattr(args, "distortion", None),
        noise_std=getattr(args, "noise_std", None),
        amplitude=getattr(args, "amplitude", None),
        test_fraction=getattr(args, "test_fraction", None),
        mlp_max_epochs=getattr(args, "max_epochs", None),
        output_dir=getattr(args, "out", None),
    )
    flags.update(extra)
    if getattr(args, "stage", None) is not None and flags.get("distortion") is None:
        flags["distortion"] = ""  # let the new stage pick its own distortion
    cfg = cfg.override(**flags)
    return cfg


def _load_dataset(path) -> DataMatrix:
    return DataMatrix.from_csv(path)


def _split(data, cfg):
    return train_test_split(data, cfg.test_fraction, split_seed(cfg.seed))


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args):
    cfg = _config(args)
    data, manifest = build_dataset(cfg)
    path = Path(args.output) if args.output else Path(cfg.output_dir) / "dataset.csv"
    write_dataset(data, path, manifest)
    print(f"wrote {len(data)} rows to {path}")
    return 0


def cmd_train(args):
    cfg = _config(args)
    if args.budget is not None:
        cfg = cfg.override(budgets={args.model: args.budget})
    data = _load_dataset(args.dataset)
    train = data if args.all_rows else _split(data, cfg).train
    model, trials = fit_learner(args.model, train, cfg.seed, args.tune, cfg.budgets[args.model],
                                cfg.mlp_max_epochs)
    out = Path(cfg.output_dir)
    meta = {"dataset": Path(args.dataset).name, "seed": cfg.seed, "tuned": bool(args.tune),
            "train_rows": len(train)}
    path = save_model(model, out / f"{args.model}.json", meta)
    print(f"wrote {path}")
    if trials is not None:
        tpath = atomic_write(out / f"{args.model}.trials.json", trials.to_json())
        print(f"wrote {tpath} ({len(trials)} trials, best #{trials.best_index})")
    return 0


def _models_for(args, train):
    models = {}
    for p in _csv_list(args.pricers) if args.pricers else ():
        if p not in PRICERS:
            raise ConfigError(f"unknown pricer {p!r}")
        models[p] = make_pricer(p).fit(train)
    for path in args.models or ():
        model, _ = load_model(path)
        models[Path(path).stem] = model
    if not models:
        raise ConfigError("nothing to evaluate: give --models and/or --pricers")
    return models


def cmd_evaluate(args):
    cfg = _config(args)
    data = _load_dataset(args.dataset)
    split = _split(data, cfg)
    rows = data if args.all_rows else split.test
    models = _models_for(args, split.train)
    bins = _csv_list(args.bins) if args.bins else ()
    reports = score_models(models, rows, Path(args.dataset).stem, bins, args.bench, args.repetitions)
    out = Path(cfg.output_dir)
    emit_report(reports, out / "report.csv")
    emit_report(reports, out / "report.json")
    if bins:
        emit_bins(reports, out)
    for rep in reports:
        r2 = "N/A" if rep.r2 is None else f"{rep.r2:.6f}"
        print(f"{rep.model:>10}  MSE {rep.mse:.6g}  MAE {rep.mae:.6g}  R2 {r2}")
    return 0


def cmd_bench(args):
    cfg = _config(args)
    data = _load_dataset(args.dataset)
    split = _split(data, cfg)
    rows = data.take(np.arange(min(args.rows_timed, len(data)))) if args.rows_timed else data
    models = _models_for(args, split.train)
    results = {}
    for name, model in models.items():
        t = benchmark(model, rows, args.repetitions)
        results[name] = {"predict_seconds": t.predict_seconds, "rows": t.rows,
                         "per_row_seconds": t.per_row, "fit_seconds": t.fit_seconds}
        print(f"{name:>10}  {t.predict_seconds:.6f} s  ({t.per_row * 1e6:.3f} us/row)")
    atomic_write(Path(cfg.output_dir) / "bench.json", json.dumps(results, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_reproduce(args):
    extra = {"bench": args.bench or None}
    if args.models:
        extra["models"] = _csv_list(args.models)
    if args.budget is not None:
        extra["budgets"] = {m: args.budget for m in LEARNERS}
    if args.no_tune:
        extra["tune"] = False
    if args.bins:
        extra["bins"] = _csv_list(args.bins)
    cfg = _config(args, **extra)
    reports = run_stage(cfg)
    for rep in reports:
        r2 = "N/A" if rep.r2 is None else f"{rep.r2:.6f}"
        print(f"{rep.model:>10}  MSE {rep.mse:.6g}  MAE {rep.mae:.6g}  R2 {r2}")
    print(f"outputs in {cfg.output_dir}")
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="optlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data_opts=False):
        p.add_argument("--config", help="TOML experiment config; flags override it")
        p.add_argument("--seed", type=int, help="root seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--test-fraction", type=float)
        if data_opts:
            p.add_argument("--stage", type=int, choices=(1, 2, 3))
            p.add_argument("--rows", type=int, help="synthetic sample size")
            p.add_argument("--pricer", choices=PRICERS, help="pricer that generates synthetic targets")
            p.add_argument("--distortion", choices=("gaussian", "sinusoidal", "none"))
            p.add_argument("--noise-std", type=float)
            p.add_argument("--amplitude", type=float)

    p = sub.add_parser("generate", help="write a dataset CSV and its manifest")
    common(p, data_opts=True)
    p.add_argument("--output", help="dataset path (default <out>/dataset.csv)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="fit one learner on the training split of a dataset")
    common(p)
    p.add_argument("dataset")
    p.add_argument("--model", required=True, choices=sorted(LEARNERS))
    p.add_argument("--tune", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--budget", type=int, help="tuning trials")
    p.add_argument("--max-epochs", type=int, help="MLP epoch cap")
    p.add_argument("--all-rows", action="store_true", help="train on every row instead of the split")
    p.set_defaults(func=cmd_train)

    for name, func, text in (("evaluate", cmd_evaluate, "score models and pricers on a dataset"),
                             ("bench", cmd_bench, "time predictions")):
        p = sub.add_parser(name, help=text)
        common(p)
        p.add_argument("dataset")
        p.add_argument("--models", nargs="*", help="model artifact files")
        p.add_argument("--pricers", default="bs,heston", help="comma list of formula pricers ('' for none)")
        p.add_argument("--repetitions", type=int, default=3)
        if name == "evaluate":
            p.add_argument("--all-rows", action="store_true", help="score every row, not just the test split")
            p.add_argument("--bins", help="comma list of strike,maturity,vol")
            p.add_argument("--bench", action="store_true", help="add timings to the report")
        else:
            p.add_argument("--rows-timed", type=int, help="time only the first N rows")
        p.set_defaults(func=func)

    p = sub.add_parser("reproduce", help="run a full stage pipeline")
    common(p, data_opts=True)
    p.add_argument("--models", help="comma list (default mlp,forest,gbm)")
    p.add_argument("--budget", type=int, help="tuning trials for every learner")
    p.add_argument("--no-tune", action="store_true", help="use default hyperparameters")
    p.add_argument("--max-epochs", type=int, help="MLP epoch cap")
    p.add_argument("--bins", help="comma list of strike,maturity,vol")
    p.add_argument("--bench", action="store_true", help="add timings to the report")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        code, kind = exit_code(exc)
        if code is None:
            raise
        print(f"optlab: {kind}: {exc}", file=sys.stderr)
        return code


def exit_code(exc):
    """``(exit code, label)`` for an exception, or ``(None, None)`` if it is not ours."""
    if isinstance(exc, (ConfigError, InvalidArgumentError)):
        return EXIT_CONFIG, "config error"
    if isinstance(exc, (DataError, OSError)):
        return EXIT_DATA, "data error"
    if isinstance(exc, OptlabError):
        return EXIT_NUMERICAL, "numerical error"
    return None, None


if __name__ == "__main__":
    sys.exit(main())
