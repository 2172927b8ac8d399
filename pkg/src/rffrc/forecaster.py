"""One-step prediction and autonomous closed-loop rollout."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import readout as _readout
from .embedding import DelayBuffer, build_supervised, push
from .errors import DimensionMismatchError, InvalidParameterError
from .metrics import nrmse_columns
from .rff import FeatureMapSpec, apply_batch

__all__ = [
    "Forecaster",
    "Rollout",
    "train",
    "predict_one",
    "predict_batch",
    "rollout",
    "evaluate_one_step",
    "write_rollout_csv",
]


@dataclass(frozen=True)
class Forecaster:
    """A feature map paired with the ridge weights trained on it."""

    feature_map: FeatureMapSpec
    weights: _readout.ReadoutWeights

    def __post_init__(self):
        if self.feature_map.M != self.weights.M:
            raise DimensionMismatchError(
                f"feature map has M={self.feature_map.M}, weights have {self.weights.M} rows"
            )
        if self.weights.d != self.feature_map.d:
            raise DimensionMismatchError(
                f"feature map expects d={self.feature_map.d}, weights give {self.weights.d} outputs"
            )

    @property
    def k(self) -> int:
        return self.feature_map.k

    @property
    def d(self) -> int:
        return self.feature_map.d


@dataclass(frozen=True)
class Rollout:
    """Closed-loop output.

    ``predictions`` holds the finite prefix; when ``diverged`` is set,
    ``first_bad_step`` is the 1-based step whose prediction was non-finite.
    """

    predictions: np.ndarray
    buffer: DelayBuffer
    diverged: bool = False
    first_bad_step: int | None = None


def train(traj, k: int, feature_map: FeatureMapSpec, lam: float = _readout.DEFAULT_LAMBDA) -> Forecaster:
    """Embed ``traj``, map the delay vectors and fit the ridge readout."""
    if feature_map.k != k:
        raise DimensionMismatchError(f"feature map built for k={feature_map.k}, not {k}")
    data = build_supervised(traj, k)
    if data.d != feature_map.d:
        raise DimensionMismatchError(f"trajectory has d={data.d}, feature map d={feature_map.d}")
    Z = apply_batch(feature_map, data.inputs)
    return Forecaster(feature_map, _readout.fit(Z, data.targets, lam))


def _check_buffer(f: Forecaster, buf: DelayBuffer):
    if (buf.d, buf.k) != (f.d, f.k):
        raise DimensionMismatchError(
            f"buffer is (d={buf.d}, k={buf.k}), forecaster needs (d={f.d}, k={f.k})"
        )


def predict_batch(f: Forecaster, inputs) -> np.ndarray:
    """One-step predictions for a stack of flattened delay vectors."""
    return _readout.predict(apply_batch(f.feature_map, inputs), f.weights)


def predict_one(f: Forecaster, buf: DelayBuffer) -> np.ndarray:
    _check_buffer(f, buf)
    return predict_batch(f, buf.flatten()[None, :])[0]


def rollout(f: Forecaster, init: DelayBuffer, H: int, teacher=None) -> Rollout:
    """Iterate the model on its own output for ``H`` steps.

    With ``teacher`` (an ``(H, d)`` array of true samples) the buffer is fed
    the true value after each prediction instead, which reproduces batch
    one-step prediction over the same window.
    """
    if int(H) != H or H < 0:
        raise InvalidParameterError(f"horizon must be a non-negative integer, got {H}")
    _check_buffer(f, init)
    if teacher is not None:
        teacher = np.asarray(teacher, dtype=np.float64).reshape(-1, f.d)
        if teacher.shape[0] < H:
            raise DimensionMismatchError(f"teacher has {teacher.shape[0]} rows, horizon is {H}")
    out = np.empty((int(H), f.d))
    buf = init
    for h in range(int(H)):
        pred = predict_one(f, buf)
        if not np.all(np.isfinite(pred)):
            return Rollout(out[:h].copy(), buf, True, h + 1)
        out[h] = pred
        buf = push(buf, pred if teacher is None else teacher[h])
    return Rollout(out, buf)


def evaluate_one_step(f: Forecaster, traj, k: int | None = None) -> np.ndarray:
    """Per-variable NRMSE of one-step predictions over ``traj``.

    Every admissible delay vector in ``traj`` is predicted; the first ``k``
    samples serve only as lags.
    """
    k = f.k if k is None else k
    if k != f.k:
        raise DimensionMismatchError(f"forecaster uses k={f.k}, not {k}")
    data = build_supervised(traj, k)
    return nrmse_columns(data.targets, predict_batch(f, data.inputs))


def write_rollout_csv(path, names, predictions, truth=None) -> None:
    """``h,<pred...>`` rows, plus ``true_<name>`` columns when ``truth`` is given."""
    names = tuple(names)
    predictions = np.asarray(predictions, dtype=np.float64).reshape(-1, len(names))
    header = ["h"] + [f"pred_{n}" for n in names]
    if truth is not None:
        truth = np.asarray(truth, dtype=np.float64).reshape(-1, len(names))
        header += [f"true_{n}" for n in names]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for h, row in enumerate(predictions, start=1):
            cells = [h] + [f"{v:.17g}" for v in row]
            if truth is not None:
                cells += [f"{v:.17g}" for v in truth[h - 1]]
            writer.writerow(cells)
