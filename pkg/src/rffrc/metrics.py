"""Range-normalised RMSE and pointwise error series."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRangeError, LengthMismatchError

__all__ = ["nrmse", "nrmse_columns", "abs_error_series", "EvalReport", "evaluate"]


def _pair(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape:
        raise LengthMismatchError(f"shapes differ: {y_true.shape} vs {y_pred.shape}")
    return y_true, y_pred


def nrmse(y_true, y_pred) -> float:
    """Root-mean-square error divided by the range of ``y_true``.

    The denominator uses the true series only, so the metric is not
    symmetric in its arguments.
    """
    y_true, y_pred = _pair(y_true, y_pred)
    if y_true.ndim != 1:
        raise LengthMismatchError("nrmse expects one-dimensional series")
    span = float(np.max(y_true) - np.min(y_true)) if y_true.size else 0.0
    if not span > 0:
        raise DegenerateRangeError("true series is constant; its range is zero")
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)) / span)


def nrmse_columns(y_true, y_pred) -> np.ndarray:
    """Per-column :func:`nrmse`, each column normalised by its own range."""
    y_true, y_pred = _pair(y_true, y_pred)
    if y_true.ndim == 1:
        return np.array([nrmse(y_true, y_pred)])
    return np.array([nrmse(y_true[:, j], y_pred[:, j]) for j in range(y_true.shape[1])])


def abs_error_series(y_true, y_pred) -> np.ndarray:
    y_true, y_pred = _pair(y_true, y_pred)
    return np.abs(y_true - y_pred)


@dataclass
class EvalReport:
    """Per-variable NRMSE plus the absolute error series behind it.

    ``errors`` has one row per evaluated step. For a diverged rollout the
    NRMSE entries are ``inf`` and the series covers the finite prefix only.
    """

    names: tuple
    nrmse: dict
    errors: np.ndarray
    horizon: int
    diverged: bool = False
    first_bad_step: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "nrmse": {name: _json_float(self.nrmse[name]) for name in self.names},
            "horizon": int(self.horizon),
            "diverged": bool(self.diverged),
            "first_bad_step": self.first_bad_step,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_errors_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("h",) + tuple(self.names))
            for h, row in enumerate(self.errors, start=1):
                writer.writerow([h] + [f"{v:.17g}" for v in row])


def _json_float(x):
    x = float(x)
    # JSON has no inf/nan literal; keep them as strings so the file stays valid
    return x if np.isfinite(x) else str(x)


def evaluate(names, y_true, y_pred, *, diverged=False, first_bad_step=None) -> EvalReport:
    """Build an :class:`EvalReport` for aligned ``(H, d)`` truth/prediction."""
    names = tuple(names)
    y_true = np.asarray(y_true, dtype=np.float64).reshape(-1, len(names))
    y_pred = np.asarray(y_pred, dtype=np.float64).reshape(-1, len(names))
    horizon = y_true.shape[0]
    if diverged:
        n_ok = y_pred.shape[0]
        errors = abs_error_series(y_true[:n_ok], y_pred)
        scores = {name: float("inf") for name in names}
    else:
        errors = abs_error_series(y_true, y_pred)
        scores = dict(zip(names, (float(v) for v in nrmse_columns(y_true, y_pred))))
    return EvalReport(names, scores, errors, horizon, diverged, first_bad_step)
