"""Declarative single- versus multi-scale forecasting experiments.

An :class:`ExperimentConfig` pins a system, its simulation settings and both
feature maps. :func:`run` trains the two variants on the same chronological
split, scores one-step and closed-loop forecasts and writes::

    <out>/<name>/comparison.json
    <out>/<name>/timing.json
    <out>/<name>/<variant>/{report.json, nrmse.csv, errors.csv, rollout.csv}

``comparison.json`` is a pure function of the config. Wall time lives in
``timing.json`` so reruns can be compared byte for byte.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import shutil
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import readout as _readout
from .dynamics import SystemSpec, Trajectory, simulate
from .embedding import build_supervised, delay_from_tail
from .errors import (
    ConfigError,
    CorruptFileError,
    DegenerateRangeError,
    FormatVersionError,
    InsufficientLengthError,
    RFFRCError,
)
from .forecaster import Forecaster, predict_batch, rollout, write_rollout_csv
from .metrics import EvalReport, evaluate
from .rff import FeatureMapSpec, MultiScaleConfig, apply_batch, sample_multi, sample_single

__all__ = [
    "FORMAT_VERSION",
    "VARIANTS",
    "ExperimentConfig",
    "load_config",
    "Scaler",
    "PreparedData",
    "TrainedVariant",
    "Experiment",
    "VariantResult",
    "ComparisonReport",
    "SuiteResult",
    "prepare",
    "feature_maps",
    "fit_experiment",
    "compare",
    "write_report",
    "run",
    "run_suite",
    "save_model",
    "load_model",
    "read_model_meta",
    "fixture_dir",
    "schema",
]

FORMAT_VERSION = 1
VARIANTS = ("single", "multi")
MODES = ("one_step", "closed_loop")


def schema(name: str) -> dict:
    """Load one of the bundled JSON schemas (``experiment`` or ``report``)."""
    text = (resources.files(__package__) / "schemas" / f"{name}.schema.json").read_text()
    return json.loads(text)


def fixture_dir() -> Path:
    """Directory holding the shipped benchmark configs."""
    return Path(str(resources.files(__package__) / "fixtures"))


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------


def _geometric_mean(values) -> float:
    return float(math.exp(sum(math.log(v) for v in values) / len(values)))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a comparison run depends on.

    ``single_m`` defaults to ``sum(multi.ms)`` so both variants get the same
    feature budget, and ``single_sigma`` to the geometric mean of the
    per-variable bandwidths. Exactly one of ``lam`` and ``lambda_grid`` is
    used: a grid triggers hold-out selection on the training split.
    """

    system: SystemSpec
    multi: MultiScaleConfig
    k: int = 3
    train_fraction: float = 0.7
    single_m: int | None = None
    single_sigma: float | None = None
    lam: float = _readout.DEFAULT_LAMBDA
    lambda_grid: tuple | None = None
    val_fraction: float = 0.2
    horizon: int = 0
    seed: int = 0
    standardize: bool = False
    name: str | None = None
    out: str | None = None

    def __post_init__(self):
        d = len(self.system.names)
        if self.multi.d != d:
            raise ConfigError(
                f"{self.system.system} has {d} variables but {self.multi.d} multi-scale bandwidths"
            )
        if int(self.k) != self.k or self.k < 1:
            raise ConfigError(f"lag order must be a positive integer, got {self.k}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigError("val_fraction must lie in (0, 1)")
        if int(self.horizon) != self.horizon or self.horizon < 0:
            raise ConfigError(f"horizon must be a non-negative integer, got {self.horizon}")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if self.lambda_grid is not None:
            grid = tuple(float(g) for g in self.lambda_grid)
            if not grid or not all(np.isfinite(g) and g > 0 for g in grid):
                raise ConfigError("lambda_grid must be a non-empty list of positive values")
            object.__setattr__(self, "lambda_grid", grid)
        m = sum(self.multi.ms) if self.single_m is None else int(self.single_m)
        if m < 1:
            raise ConfigError("single.m must be positive")
        sigma = _geometric_mean(self.multi.sigmas) if self.single_sigma is None else float(self.single_sigma)
        if not sigma > 0:
            raise ConfigError("single.sigma must be positive")
        object.__setattr__(self, "single_m", m)
        object.__setattr__(self, "single_sigma", sigma)
        object.__setattr__(self, "name", self.name or self.system.system)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def d(self) -> int:
        return len(self.system.names)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if isinstance(data, dict) and "lambda" in data and "lambda_grid" in data:
            raise ConfigError("give either 'lambda' or 'lambda_grid', not both")
        validator = jsonschema.Draft202012Validator(schema("experiment"))
        errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
        if errors:
            err = errors[0]
            where = "/".join(str(p) for p in err.absolute_path) or "<root>"
            raise ConfigError(f"invalid config at {where}: {err.message}")
        sysd = data["system"]
        try:
            spec = SystemSpec(
                sysd["id"],
                params=dict(sysd.get("params", {})),
                init=tuple(sysd["init"]),
                n_steps=sysd["n_steps"],
                n_transient=sysd["n_transient"],
                dt=sysd.get("dt"),
            )
        except TypeError as exc:
            raise ConfigError(f"bad parameters for {sysd['id']}: {exc}") from exc
        except RFFRCError as exc:
            raise ConfigError(str(exc)) from exc
        multi = data["multi"]
        if len(multi["sigmas"]) != len(multi["ms"]):
            raise ConfigError("multi.sigmas and multi.ms must have the same length")
        try:
            cfg = MultiScaleConfig(tuple(multi["sigmas"]), tuple(multi["ms"]))
        except RFFRCError as exc:
            raise ConfigError(str(exc)) from exc
        return cls(
            system=spec,
            multi=cfg,
            k=data["k"],
            train_fraction=data["train_fraction"],
            single_m=data["single"]["m"],
            single_sigma=data["single"].get("sigma"),
            lam=data.get("lambda", _readout.DEFAULT_LAMBDA),
            lambda_grid=data.get("lambda_grid"),
            val_fraction=data.get("val_fraction", 0.2),
            horizon=data["horizon"],
            seed=data["seed"],
            standardize=data.get("standardize", False),
            name=data.get("name"),
            out=data.get("out"),
        )

    def to_dict(self, include_out: bool = False) -> dict:
        """Fully resolved config; every default is written out explicitly."""
        sysd = {
            "id": self.system.system,
            "params": dataclasses.asdict(self.system.params),
            "init": list(self.system.init),
            "n_steps": self.system.n_steps,
            "n_transient": self.system.n_transient,
            "dt": self.system.dt,
        }
        out = {
            "name": self.name,
            "system": sysd,
            "k": self.k,
            "train_fraction": self.train_fraction,
            "single": {"sigma": self.single_sigma, "m": self.single_m},
            "multi": {"sigmas": list(self.multi.sigmas), "ms": list(self.multi.ms)},
            "val_fraction": self.val_fraction,
            "horizon": self.horizon,
            "seed": self.seed,
            "standardize": self.standardize,
        }
        if self.lambda_grid is None:
            out["lambda"] = self.lam
        else:
            out["lambda_grid"] = list(self.lambda_grid)
        if include_out and self.out is not None:
            out["out"] = self.out
        return out

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(data)


# --------------------------------------------------------------------------
# Data and training
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Scaler:
    """Per-variable z-score fitted on the training split."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, states) -> "Scaler":
        states = np.asarray(states, dtype=np.float64)
        std = states.std(axis=0)
        if np.any(std == 0.0):
            raise DegenerateRangeError("cannot standardize a constant training variable")
        return cls(states.mean(axis=0), std)

    def forward(self, x):
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def inverse(self, z):
        return np.asarray(z, dtype=np.float64) * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data) -> "Scaler":
        return cls(np.asarray(data["mean"], dtype=np.float64), np.asarray(data["std"], dtype=np.float64))


@dataclass(frozen=True)
class PreparedData:
    """Raw trajectory, its split, and the model-space version of both."""

    trajectory: Trajectory
    train: Trajectory
    test: Trajectory
    scaler: Scaler | None = None

    @property
    def n_train(self) -> int:
        return self.train.T

    def model_states(self, states) -> np.ndarray:
        return states if self.scaler is None else self.scaler.forward(states)

    def physical(self, z) -> np.ndarray:
        return z if self.scaler is None else self.scaler.inverse(z)


def prepare(config: ExperimentConfig) -> PreparedData:
    traj = simulate(config.system)
    train, test = traj.split(config.train_fraction)
    if train.T <= config.k:
        raise InsufficientLengthError(f"training split has {train.T} samples, k={config.k}")
    if test.T < config.horizon:
        raise ConfigError(f"horizon {config.horizon} exceeds the {test.T}-sample test split")
    scaler = Scaler.fit(train.states) if config.standardize else None
    return PreparedData(traj, train, test, scaler)


def feature_maps(config: ExperimentConfig) -> dict:
    """Both variants' maps, sampled from the config seed."""
    d, k = config.d, config.k
    return {
        "single": sample_single(d * k, config.single_m, config.single_sigma, config.seed, k=k, d=d),
        "multi": sample_multi(k, config.multi, config.seed),
    }


@dataclass(frozen=True)
class TrainedVariant:
    forecaster: Forecaster
    lam: float
    lam_scores: tuple | None = None


@dataclass(frozen=True)
class Experiment:
    config: ExperimentConfig
    data: PreparedData
    variants: dict


def _train_variant(config, data, fm) -> TrainedVariant:
    sup = build_supervised(data.model_states(data.train.states), config.k)
    Z = apply_batch(fm, sup.inputs)
    scores = None
    lam = config.lam
    if config.lambda_grid is not None:
        lam, scores = _readout.select_lambda(Z, sup.targets, config.lambda_grid, config.val_fraction)
        scores = tuple(scores)
    return TrainedVariant(Forecaster(fm, _readout.fit(Z, sup.targets, lam)), lam, scores)


def fit_experiment(config: ExperimentConfig, data: PreparedData | None = None) -> Experiment:
    """Simulate (unless ``data`` is given) and train both variants on one split."""
    data = prepare(config) if data is None else data
    maps = feature_maps(config)
    return Experiment(config, data, {v: _train_variant(config, data, maps[v]) for v in VARIANTS})


# --------------------------------------------------------------------------
# Evaluation and reports
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class VariantResult:
    trained: TrainedVariant
    one_step: EvalReport
    closed_loop: EvalReport | None
    rollout: np.ndarray

    def to_dict(self) -> dict:
        fm = self.trained.forecaster.feature_map
        closed = None
        if self.closed_loop is not None:
            rep = self.closed_loop.to_dict()
            closed = {
                "horizon": rep["horizon"],
                "nrmse": rep["nrmse"],
                "diverged": rep["diverged"],
                "first_bad_step": rep["first_bad_step"],
            }
        scores = self.trained.lam_scores
        return {
            "M": fm.M,
            "lambda": self.trained.lam,
            "lambda_scores": None if scores is None else [_json_score(s) for s in scores],
            "bandwidths": list(fm.bandwidths),
            "one_step": self.one_step.to_dict()["nrmse"],
            "closed_loop": closed,
        }


def _json_score(x):
    x = float(x)
    return x if np.isfinite(x) else str(x)


def _ratio(single, multi):
    if not (np.isfinite(single) and np.isfinite(multi)) or multi == 0.0:
        return None
    return float(single / multi)


@dataclass(frozen=True)
class ComparisonReport:
    """Single- versus multi-scale scores for one config.

    ``wall_time`` is carried along but deliberately left out of
    :meth:`to_dict`, which must be reproducible byte for byte.
    """

    config: ExperimentConfig
    variables: tuple
    results: dict
    wall_time: float = field(default=0.0, compare=False)

    @property
    def name(self) -> str:
        return self.config.name

    def nrmse(self, variant: str, mode: str) -> dict:
        """Per-variable scores as floats; an absent closed loop gives ``{}``."""
        res = self.results[variant]
        rep = res.one_step if mode == "one_step" else res.closed_loop
        return {} if rep is None else dict(rep.nrmse)

    def ratios(self, mode: str) -> dict:
        single, multi = self.nrmse("single", mode), self.nrmse("multi", mode)
        return {v: _ratio(single[v], multi[v]) for v in single}

    def diverged(self, variant: str) -> bool:
        cl = self.results[variant].closed_loop
        return bool(cl is not None and cl.diverged)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "library_version": __version__,
            "name": self.name,
            "system": self.config.system.system,
            "variables": list(self.variables),
            "config": self.config.to_dict(),
            "variants": {v: self.results[v].to_dict() for v in VARIANTS},
            "ratios": {mode: self.ratios(mode) for mode in MODES},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _evaluate_variant(exp: Experiment, variant: str) -> VariantResult:
    config, data = exp.config, exp.data
    trained = exp.variants[variant]
    f = trained.forecaster
    names = data.trajectory.names
    k = config.k
    # lags for the first test target reach back into the training split
    window = data.model_states(data.trajectory.states[data.n_train - k:])
    sup = build_supervised(window, k)
    one_step = evaluate(names, data.test.states, data.physical(predict_batch(f, sup.inputs)))
    closed, preds = None, np.empty((0, data.trajectory.d))
    H = config.horizon
    if H > 0:
        init = delay_from_tail(data.model_states(data.train.states), k)
        with np.errstate(over="ignore", invalid="ignore"):
            ro = rollout(f, init, H)
        preds = data.physical(ro.predictions)
        closed = evaluate(
            names, data.test.states[:H], preds, diverged=ro.diverged, first_bad_step=ro.first_bad_step
        )
    return VariantResult(trained, one_step, closed, preds)


def compare(exp: Experiment) -> ComparisonReport:
    results = {v: _evaluate_variant(exp, v) for v in VARIANTS}
    return ComparisonReport(exp.config, exp.data.trajectory.names, results)


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_variant(dirpath: Path, report: ComparisonReport, variant: str, truth) -> None:
    dirpath.mkdir(parents=True)
    res = report.results[variant]
    names = report.variables
    body = {
        "format_version": FORMAT_VERSION,
        "name": report.name,
        "system": report.config.system.system,
        "variant": variant,
        "variables": list(names),
        **res.to_dict(),
    }
    (dirpath / "report.json").write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    with open(dirpath / "nrmse.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["mode", *names])
        for mode in MODES:
            scores = report.nrmse(variant, mode)
            if scores:
                writer.writerow([mode, *(_fmt(scores[n]) for n in names)])
    if res.closed_loop is not None:
        res.closed_loop.write_errors_csv(dirpath / "errors.csv")
    else:
        (dirpath / "errors.csv").write_text("h," + ",".join(names) + "\n")
    write_rollout_csv(dirpath / "rollout.csv", names, res.rollout, truth=truth[: res.rollout.shape[0]])


def _write_atomically(out: Path, name: str, fill) -> Path:
    """Build the artifacts in a scratch directory, then move them under ``out/name``.

    Only files produced by ``fill`` are replaced; other content of
    ``out/name`` (saved models, trajectories) is left alone.
    """
    out.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=f".{name}.", dir=out))
    final = out / name
    try:
        fill(scratch)
        for src in sorted(p for p in scratch.rglob("*") if p.is_file()):
            dest = final / src.relative_to(scratch)
            dest.parent.mkdir(parents=True, exist_ok=True)
            os.replace(src, dest)
    finally:
        shutil.rmtree(scratch, ignore_errors=True)
    return final


def write_report(report: ComparisonReport, truth, out) -> Path:
    def fill(root: Path):
        (root / "comparison.json").write_text(report.to_json())
        (root / "timing.json").write_text(json.dumps({"wall_time_s": report.wall_time}) + "\n")
        for v in VARIANTS:
            _write_variant(root / v, report, v, truth)

    return _write_atomically(Path(out), report.name, fill)


def run(config: ExperimentConfig, out=None) -> ComparisonReport:
    """Train both variants, score them and (if ``out`` is set) write the artifacts.

    ``out`` falls back to ``config.out``; with neither set nothing is written.
    Nothing is left behind under ``out`` when a step fails.
    """
    t0 = time.perf_counter()
    exp = fit_experiment(config)
    report = compare(exp)
    report = dataclasses.replace(report, wall_time=time.perf_counter() - t0)
    out = config.out if out is None else out
    if out is not None:
        write_report(report, exp.data.test.states, out)
    return report


# --------------------------------------------------------------------------
# Suites
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SuiteResult:
    rows: list
    failures: list
    columns: list

    @property
    def ok(self) -> bool:
        return not self.failures


def _suite_job(path: str, out: str | None):
    try:
        report = run(load_config(path), out)
    except Exception as exc:  # noqa: BLE001 - a suite records every failure and moves on
        return None, {"config": Path(path).name, "error": type(exc).__name__, "message": str(exc)}
    row = {"config": Path(path).name, "name": report.name, "system": report.config.system.system}
    for v in VARIANTS:
        for mode in MODES:
            for var, score in report.nrmse(v, mode).items():
                row[f"{v}_{mode}_{var}"] = score
        row[f"{v}_diverged"] = report.diverged(v)
    return row, None


def run_suite(path, out=None, workers: int = 1) -> SuiteResult:
    """Run every ``*.json`` config in ``path`` (sorted by file name).

    Failing configs are recorded, not raised. With ``out`` set, per-config
    artifacts go under it plus ``summary.csv`` (one row per successful config)
    and ``failures.json``.
    """
    configs = sorted(str(p) for p in Path(path).glob("*.json"))
    out_s = None if out is None else str(out)
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_suite_job, configs, [out_s] * len(configs)))
    else:
        results = [_suite_job(c, out_s) for c in configs]
    rows = [r for r, _ in results if r is not None]
    failures = [f for _, f in results if f is not None]
    columns = ["config", "name", "system"]
    for row in rows:
        columns += [c for c in row if c not in columns]
    result = SuiteResult(rows, failures, columns)
    if out is not None:
        _write_summary(Path(out), result)
    return result


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return _fmt(value)
    return str(value)


def _write_summary(out: Path, result: SuiteResult) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow(["" if c not in row else _cell(row[c]) for c in result.columns])
    (out / "failures.json").write_text(json.dumps(result.failures, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# Model files
# --------------------------------------------------------------------------


def save_model(path, forecaster: Forecaster, *, names=None, scaler: Scaler | None = None) -> Path:
    """Write ``model.json`` (feature map by seed) and raw ``weights.bin``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    forecaster.weights.save(path / "weights.bin")
    meta = {
        "format_version": FORMAT_VERSION,
        "feature_map": forecaster.feature_map.to_dict(),
        "names": None if names is None else list(names),
        "scaler": None if scaler is None else scaler.to_dict(),
    }
    (path / "model.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_model_meta(path) -> dict:
    try:
        meta = json.loads((Path(path) / "model.json").read_text())
    except (OSError, ValueError) as exc:
        raise CorruptFileError(f"unreadable model file in {path}: {exc}") from exc
    if not isinstance(meta, dict) or "format_version" not in meta:
        raise CorruptFileError(f"{path}/model.json has no format_version")
    if meta["format_version"] != FORMAT_VERSION:
        raise FormatVersionError(
            f"model format {meta['format_version']!r}, this library reads {FORMAT_VERSION}"
        )
    return meta


def load_model(path) -> Forecaster:
    """Inverse of :func:`save_model`; predictions are bit-identical."""
    meta = read_model_meta(path)
    try:
        fm = FeatureMapSpec.from_dict(meta["feature_map"])
    except KeyError as exc:
        raise CorruptFileError(f"{path}/model.json lacks {exc}") from exc
    weights = _readout.ReadoutWeights.load(Path(path) / "weights.bin", expected_M=fm.M)
    return Forecaster(fm, weights)
