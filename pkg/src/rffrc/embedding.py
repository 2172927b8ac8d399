"""Delay embedding: lagged input vectors and next-step targets.

The flattened delay vector is variable-major with the oldest lag first::

    [u_1(t-k), ..., u_1(t-1), u_2(t-k), ..., u_2(t-1), ..., u_d(t-1)]

so the lags of variable ``i`` occupy the contiguous span ``[i*k, (i+1)*k)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dynamics import Trajectory
from .errors import DimensionMismatchError, InsufficientLengthError, InvalidParameterError

__all__ = [
    "DelayBuffer",
    "SupervisedSet",
    "build_supervised",
    "delay_from_tail",
    "push",
    "flatten_lags",
]


def _states(traj) -> np.ndarray:
    states = traj.states if isinstance(traj, Trajectory) else np.asarray(traj, dtype=np.float64)
    if states.ndim == 1:
        states = states[:, None]
    return states


def _check_k(k):
    if int(k) != k or k < 1:
        raise InvalidParameterError(f"lag order must be a positive integer, got {k}")
    return int(k)


def flatten_lags(lags: np.ndarray) -> np.ndarray:
    """Flatten a ``(d, k)`` lag block (or a ``(n, d, k)`` stack) variable-major."""
    return lags.reshape(lags.shape[:-2] + (-1,))


@dataclass(frozen=True)
class DelayBuffer:
    """The ``k`` most recent samples of each of ``d`` variables.

    ``lags[i]`` holds variable ``i`` with the oldest sample first.
    """

    lags: np.ndarray

    def __post_init__(self):
        lags = np.array(self.lags, dtype=np.float64, copy=True)
        if lags.ndim != 2 or lags.shape[1] < 1:
            raise DimensionMismatchError(f"lags must have shape (d, k), got {lags.shape}")
        lags.setflags(write=False)
        object.__setattr__(self, "lags", lags)

    @property
    def d(self) -> int:
        return self.lags.shape[0]

    @property
    def k(self) -> int:
        return self.lags.shape[1]

    def flatten(self) -> np.ndarray:
        return flatten_lags(self.lags)

    def push(self, u_new) -> "DelayBuffer":
        return push(self, u_new)


@dataclass(frozen=True)
class SupervisedSet:
    """Delay vectors paired with the sample that follows them.

    Row ``j`` of ``inputs`` holds the lags ending just before sample
    ``k + j`` of the source series and row ``j`` of ``targets`` is that sample.
    """

    inputs: np.ndarray
    targets: np.ndarray
    k: int
    d: int

    @property
    def n(self) -> int:
        return self.inputs.shape[0]


def build_supervised(traj, k: int) -> SupervisedSet:
    """Stack (delay vector, next state) pairs for every admissible time.

    Parameters
    ----------
    traj : Trajectory or array_like, shape (T,) or (T, d)
    k : int
        Lag order.

    Returns
    -------
    SupervisedSet
        ``n = T - k`` rows; ``inputs`` is ``(n, d*k)`` and ``targets`` ``(n, d)``.
    """
    k = _check_k(k)
    states = _states(traj)
    T, d = states.shape
    if T <= k:
        raise InsufficientLengthError(f"need more than k={k} samples, got T={T}")
    # windows[j, i, :] = states[j:j+k, i]
    windows = sliding_window_view(states[:-1], k, axis=0)
    inputs = np.ascontiguousarray(flatten_lags(windows))
    targets = np.ascontiguousarray(states[k:])
    return SupervisedSet(inputs, targets, k, d)


def delay_from_tail(traj, k: int) -> DelayBuffer:
    """Buffer holding the last ``k`` samples of each variable."""
    k = _check_k(k)
    states = _states(traj)
    if states.shape[0] < k:
        raise InsufficientLengthError(
            f"need at least k={k} samples, got T={states.shape[0]}"
        )
    return DelayBuffer(states[-k:].T)


def push(buf: DelayBuffer, u_new) -> DelayBuffer:
    """Drop the oldest lag of every variable and append ``u_new``."""
    u_new = np.asarray(u_new, dtype=np.float64).reshape(-1)
    if u_new.shape[0] != buf.d:
        raise DimensionMismatchError(f"buffer has d={buf.d}, got {u_new.shape[0]} values")
    lags = np.empty_like(buf.lags)
    lags[:, :-1] = buf.lags[:, 1:]
    lags[:, -1] = u_new
    return DelayBuffer(lags)
