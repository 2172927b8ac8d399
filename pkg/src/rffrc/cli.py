"""Command-line front end: ``rffrc <verb> CONFIG [--seed N] [--out DIR]``.

Exit codes: 0 success, 1 config or input error, 2 numerical failure,
3 suite finished with at least one failed config.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import (
    VARIANTS,
    Scaler,
    fit_experiment,
    load_config,
    load_model,
    prepare,
    read_model_meta,
    run,
    run_suite,
    save_model,
)
from .embedding import build_supervised, delay_from_tail
from .errors import (
    ConfigError,
    CorruptFileError,
    DimensionMismatchError,
    FormatVersionError,
    RFFRCError,
)
from .forecaster import predict_batch, rollout, write_rollout_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PARTIAL = 0, 1, 2, 3
DEFAULT_OUT = "results"

log = logging.getLogger("rffrc")

_INPUT_ERRORS = (ConfigError, CorruptFileError, FormatVersionError, DimensionMismatchError)


def _config(args):
    cfg = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    out = args.out or cfg.out or DEFAULT_OUT
    return cfg.replace(**changes), Path(out)


def _model_dir(out: Path, cfg, variant: str) -> Path:
    return out / cfg.name / variant / "model"


def _load_trained(out: Path, cfg, variant: str):
    path = _model_dir(out, cfg, variant)
    if not (path / "model.json").exists():
        raise ConfigError(f"no trained model at {path}; run 'rffrc train' first")
    meta = read_model_meta(path)
    scaler = None if meta.get("scaler") is None else Scaler.from_dict(meta["scaler"])
    return load_model(path), scaler


def cmd_simulate(args) -> int:
    cfg, out = _config(args)
    data = prepare(cfg)
    dest = out / cfg.name
    dest.mkdir(parents=True, exist_ok=True)
    data.trajectory.to_csv(dest / "trajectory.csv")
    log.info("wrote %d samples to %s", data.trajectory.T, dest / "trajectory.csv")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg, out = _config(args)
    exp = fit_experiment(cfg)
    for v in VARIANTS:
        trained = exp.variants[v]
        path = save_model(
            _model_dir(out, cfg, v), trained.forecaster,
            names=exp.data.trajectory.names, scaler=exp.data.scaler,
        )
        log.info("%s: M=%d lambda=%g -> %s", v, trained.forecaster.feature_map.M, trained.lam, path)
    return EXIT_OK


def _physical(scaler, z):
    return z if scaler is None else scaler.inverse(z)


def _model_space(scaler, x):
    return x if scaler is None else scaler.forward(x)


def cmd_predict(args) -> int:
    cfg, out = _config(args)
    data = prepare(cfg)
    names = data.trajectory.names
    for v in VARIANTS:
        f, scaler = _load_trained(out, cfg, v)
        window = _model_space(scaler, data.trajectory.states[data.n_train - cfg.k:])
        preds = _physical(scaler, predict_batch(f, build_supervised(window, cfg.k).inputs))
        dest = out / cfg.name / v / "predictions.csv"
        write_rollout_csv(dest, names, preds, truth=data.test.states)
        log.info("%s: %d one-step predictions -> %s", v, preds.shape[0], dest)
    return EXIT_OK


def cmd_rollout(args) -> int:
    cfg, out = _config(args)
    if args.horizon is not None:
        cfg = cfg.replace(horizon=args.horizon)
    data = prepare(cfg)
    names = data.trajectory.names
    for v in VARIANTS:
        f, scaler = _load_trained(out, cfg, v)
        init = delay_from_tail(_model_space(scaler, data.train.states), cfg.k)
        with np.errstate(over="ignore", invalid="ignore"):
            ro = rollout(f, init, cfg.horizon)
        preds = _physical(scaler, ro.predictions)
        dest = out / cfg.name / v / "rollout.csv"
        write_rollout_csv(dest, names, preds, truth=data.test.states[: preds.shape[0]])
        if ro.diverged:
            log.warning("%s: rollout diverged at step %d", v, ro.first_bad_step)
        log.info("%s: %d closed-loop steps -> %s", v, preds.shape[0], dest)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg, out = _config(args)
    report = run(cfg, out=out)
    for v in VARIANTS:
        for mode in ("one_step", "closed_loop"):
            scores = report.nrmse(v, mode)
            if scores:
                log.info("%s %s NRMSE %s", v, mode, json.dumps(scores))
    log.info("artifacts in %s (%.1fs)", out / cfg.name, report.wall_time)
    return EXIT_OK


def cmd_suite(args) -> int:
    directory = Path(args.config)
    if not directory.is_dir():
        raise ConfigError(f"{directory} is not a directory of configs")
    out = Path(args.out or DEFAULT_OUT)
    if args.seed is not None:
        log.warning("--seed is ignored by 'suite'; each config pins its own seed")
    result = run_suite(directory, out, workers=args.workers)
    for failure in result.failures:
        log.error("%s failed: %s: %s", failure["config"], failure["error"], failure["message"])
    log.info("%d configs succeeded, %d failed; summary in %s",
             len(result.rows), len(result.failures), out / "summary.csv")
    return EXIT_OK if result.ok else EXIT_PARTIAL


VERBS = {
    "simulate": (cmd_simulate, "simulate the configured system and write trajectory.csv"),
    "train": (cmd_train, "train both variants and save them under <out>/<name>/<variant>/model"),
    "predict": (cmd_predict, "one-step predictions over the test split from saved models"),
    "rollout": (cmd_rollout, "closed-loop forecasts from the end of the training split"),
    "run": (cmd_run, "full single- versus multi-scale comparison with reports"),
    "suite": (cmd_suite, "run every config in a directory and write summary.csv"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rffrc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="only report errors")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, (_, help_text) in VERBS.items():
        p = sub.add_parser(verb, help=help_text)
        p.add_argument("config", help="config directory" if verb == "suite" else "config JSON file")
        p.add_argument("--seed", type=int, default=None, help="override the feature-map seed")
        p.add_argument("--out", default=None, help=f"output directory (default: config 'out' or {DEFAULT_OUT})")
        if verb == "rollout":
            p.add_argument("--horizon", type=int, default=None, help="override the rollout horizon")
        if verb == "suite":
            p.add_argument("--workers", type=int, default=1, help="configs run in parallel")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which here means numerical failure
        return EXIT_CONFIG if exc.code == 2 else int(exc.code or 0)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    handler = VERBS[args.verb][0]
    try:
        return handler(args)
    except _INPUT_ERRORS as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_CONFIG
    except (RFFRCError, FloatingPointError, ArithmeticError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
