"""Closed-form multi-output ridge readout."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import (
    CorruptFileError,
    DimensionMismatchError,
    InvalidParameterError,
    NumericalFailureError,
)
from .metrics import nrmse_columns

__all__ = [
    "ReadoutWeights",
    "fit",
    "predict",
    "select_lambda",
    "gram",
    "DEFAULT_LAMBDA",
    "DEFAULT_LAMBDA_GRID",
]

DEFAULT_LAMBDA = 1e-8
DEFAULT_LAMBDA_GRID = tuple(10.0 ** e for e in range(-10, -1))

RESIDUAL_RTOL = 1e-8
_GRAM_ROWS = 4096
_PREDICT_ROWS = 1024
_REFINE_STEPS = 3


@dataclass(frozen=True)
class ReadoutWeights:
    W: np.ndarray  # (M, d)
    lam: float

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64, copy=True)
        if W.ndim != 2:
            raise DimensionMismatchError(f"weights must be (M, d), got {W.shape}")
        if not np.all(np.isfinite(W)):
            raise NumericalFailureError("readout weights contain non-finite entries")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def M(self) -> int:
        return self.W.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]

    def save(self, path) -> None:
        """Write ``<path>`` as little-endian float64 (row-major) and ``<path>.json``."""
        path = Path(path)
        self.W.astype("<f8").tofile(path)
        meta = {"lambda": self.lam, "M": self.M, "d": self.d}
        path.with_name(path.name + ".json").write_text(json.dumps(meta, sort_keys=True))

    @classmethod
    def load(cls, path, expected_M: int | None = None) -> "ReadoutWeights":
        path = Path(path)
        try:
            meta = json.loads(path.with_name(path.name + ".json").read_text())
            M, d, lam = int(meta["M"]), int(meta["d"]), float(meta["lambda"])
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise CorruptFileError(f"unreadable readout sidecar: {exc}") from exc
        if expected_M is not None and M != expected_M:
            raise DimensionMismatchError(f"readout has M={M}, feature map has M={expected_M}")
        raw = np.fromfile(path, dtype="<f8")
        if raw.size != M * d:
            raise CorruptFileError(f"expected {M * d} weights, found {raw.size}")
        return cls(raw.reshape(M, d).astype(np.float64), lam)


def gram(Z: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``Z.T @ Z`` and ``Z.T @ Y`` summed over fixed row blocks.

    Block products run in float64 BLAS; the running sums are held in
    ``np.longdouble`` and combined in a fixed order, so the result does not
    depend on how the rows might be partitioned elsewhere.
    """
    M, d = Z.shape[1], Y.shape[1]
    G = np.zeros((M, M), dtype=np.longdouble)
    B = np.zeros((M, d), dtype=np.longdouble)
    for start in range(0, Z.shape[0], _GRAM_ROWS):
        Zb = Z[start:start + _GRAM_ROWS]
        G += Zb.T @ Zb
        B += Zb.T @ Y[start:start + _GRAM_ROWS]
    G = G.astype(np.float64)
    # BLAS syrk-style products are symmetric only up to rounding
    G = 0.5 * (G + G.T)
    return G, B.astype(np.float64)


def fit(Z, Y, lam: float = DEFAULT_LAMBDA) -> ReadoutWeights:
    """Solve ``(Z.T Z + lam I) W = Z.T Y`` by Cholesky factorisation.

    A few steps of iterative refinement follow the triangular solves; the fit
    is rejected if the normal-equation residual still exceeds
    ``1e-8 * (1 + |Z.T Y|_F)``.

    Raises
    ------
    InvalidParameterError
        If ``lam <= 0``.
    NumericalFailureError
        If the factorisation fails or the residual bound is violated.
    """
    if not (np.isfinite(lam) and lam > 0):
        raise InvalidParameterError(f"ridge parameter must be positive, got {lam}")
    Z = np.asarray(Z, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Z.ndim != 2 or Z.shape[0] != Y.shape[0]:
        raise DimensionMismatchError(f"Z {Z.shape} and Y {Y.shape} have different row counts")
    with np.errstate(over="ignore", invalid="ignore"):
        G, B = gram(Z, Y)
    if not (np.all(np.isfinite(G)) and np.all(np.isfinite(B))):
        raise NumericalFailureError("Gram matrix overflowed; features are badly scaled")
    A = G + lam * np.eye(G.shape[0])
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailureError(f"Cholesky factorisation failed: {exc}") from exc
    W = scipy.linalg.cho_solve(factor, B)
    bound = RESIDUAL_RTOL * (1.0 + np.linalg.norm(B))
    for _ in range(_REFINE_STEPS):
        R = B - A @ W
        if np.linalg.norm(R) <= bound:
            break
        W = W + scipy.linalg.cho_solve(factor, R)
    residual = np.linalg.norm(A @ W - B)
    if not residual <= bound:
        raise NumericalFailureError(
            f"normal-equation residual {residual:.3e} exceeds {bound:.3e}"
        )
    return ReadoutWeights(W, lam)


def predict(Z, weights) -> np.ndarray:
    """Row-wise ``Z @ W``.

    Each output entry is a pairwise sum over the feature axis, so a row gives
    the same bits alone or inside any batch (BLAS kernels do not promise
    that).
    """
    W = weights.W if isinstance(weights, ReadoutWeights) else np.asarray(weights, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != W.shape[0]:
        raise DimensionMismatchError(f"features {Z.shape} do not match weights {W.shape}")
    Wt = np.ascontiguousarray(W.T)
    out = np.empty((Z.shape[0], W.shape[1]))
    for start in range(0, Z.shape[0], _PREDICT_ROWS):
        Zb = Z[start:start + _PREDICT_ROWS]
        out[start:start + _PREDICT_ROWS] = np.sum(Zb[:, None, :] * Wt[None, :, :], axis=-1)
    return out


def select_lambda(
    Z,
    Y,
    grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    val_fraction: float = 0.2,
    tie_tol: float = 1e-6,
) -> tuple[float, list[float]]:
    """Pick the ridge parameter on a chronological hold-out.

    The last ``val_fraction`` of the rows is held out. Candidates are scored by
    the mean validation NRMSE over output columns; every candidate within
    ``tie_tol`` of the best score counts as tied and the largest of those wins.

    Returns
    -------
    lam : float
    scores : list of float
        Validation score of each entry of ``grid``, in the given order.
    """
    grid = [float(g) for g in grid]
    if not grid:
        raise InvalidParameterError("lambda grid is empty")
    if not 0.0 < val_fraction < 1.0:
        raise InvalidParameterError("val_fraction must lie in (0, 1)")
    Z = np.asarray(Z, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    n = Z.shape[0]
    n_val = int(round(val_fraction * n))
    if n_val < 2 or n - n_val < 1:
        raise InvalidParameterError(f"cannot hold out {val_fraction} of {n} rows")
    Z_tr, Z_val = Z[:-n_val], Z[-n_val:]
    Y_tr, Y_val = Y[:-n_val], Y[-n_val:]
    score_of = {}
    for lam in sorted(set(grid)):
        weights = fit(Z_tr, Y_tr, lam)
        score_of[lam] = float(np.mean(nrmse_columns(Y_val, predict(Z_val, weights))))
    best = min(score_of.values())
    chosen = max(lam for lam, s in score_of.items() if s <= best + tie_tol)
    return chosen, [score_of[g] for g in grid]
