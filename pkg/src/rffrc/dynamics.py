"""Ground-truth trajectories for six fast-slow benchmark systems.

Two discrete maps (Rulkov, Ricker), three smooth ODEs integrated with
fixed-step classical RK4 (Hindmarsh-Rose, Morris-Lecar, predator-prey) and
the Izhikevich hybrid model integrated with forward Euler plus a reset.

Every trajectory keeps the initial state as its first row, so simulating
``n`` steps yields ``n`` samples and ``n - 1`` applications of the update.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import (
    InvalidParameterError,
    NonFiniteStateError,
    SingularityError,
    DimensionMismatchError,
)

RULKOV_POLE_TOL = 1e-12

__all__ = [
    "Trajectory",
    "RulkovParams",
    "HindmarshRoseParams",
    "IzhikevichParams",
    "PredatorPreyParams",
    "MorrisLecarParams",
    "RickerParams",
    "SystemSpec",
    "SYSTEMS",
    "simulate_rulkov",
    "simulate_ricker",
    "simulate_izhikevich",
    "simulate_continuous",
    "simulate",
    "ode_rhs",
    "rk4_step",
    "euler_step",
    "izhikevich_reset",
    "read_trajectory_csv",
]


@dataclass(frozen=True)
class Trajectory:
    """A sampled multivariate time series.

    Attributes
    ----------
    names : tuple of str
        Variable labels, one per column.
    dt : float
        Sampling interval in system time units (1.0 for maps).
    states : ndarray, shape (T, d)
        Read-only state matrix.
    transient_discarded : int
        Number of leading samples dropped before the first row.
    """

    names: tuple
    dt: float
    states: np.ndarray
    transient_discarded: int = 0

    def __post_init__(self):
        states = np.array(self.states, dtype=np.float64, copy=True)
        if states.ndim == 1:
            states = states[:, None]
        if states.ndim != 2 or states.shape[0] < 1:
            raise DimensionMismatchError(
                f"states must be a non-empty (T, d) matrix, got shape {states.shape}"
            )
        names = tuple(str(n) for n in self.names)
        if len(names) != states.shape[1]:
            raise DimensionMismatchError(
                f"{len(names)} names for {states.shape[1]} columns"
            )
        if not np.all(np.isfinite(states)):
            raise NonFiniteStateError("trajectory contains non-finite samples")
        if not self.dt > 0:
            raise InvalidParameterError(f"dt must be positive, got {self.dt}")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "transient_discarded", int(self.transient_discarded))

    @property
    def T(self) -> int:
        return self.states.shape[0]

    @property
    def d(self) -> int:
        return self.states.shape[1]

    def __len__(self):
        return self.T

    @property
    def times(self) -> np.ndarray:
        return (self.transient_discarded + np.arange(self.T)) * self.dt

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.names.index(name)]

    def window(self, start: int, stop: int | None = None) -> "Trajectory":
        """Contiguous sub-trajectory ``states[start:stop]`` with time metadata kept."""
        stop = self.T if stop is None else stop
        if not 0 <= start < stop <= self.T:
            raise InvalidParameterError(
                f"invalid window [{start}, {stop}) for trajectory of length {self.T}"
            )
        return Trajectory(
            self.names, self.dt, self.states[start:stop],
            self.transient_discarded + start,
        )

    def split(self, train_fraction: float) -> tuple["Trajectory", "Trajectory"]:
        """Chronological train/test split; the train part is the leading block."""
        if not 0.0 < train_fraction < 1.0:
            raise InvalidParameterError("train_fraction must lie in (0, 1)")
        n_train = int(round(train_fraction * self.T))
        if n_train < 1 or n_train >= self.T:
            raise InvalidParameterError(
                f"split {train_fraction} leaves an empty part of a length-{self.T} trajectory"
            )
        return self.window(0, n_train), self.window(n_train)

    def to_csv(self, path) -> None:
        """Write ``t,<names...>`` rows at 17 significant digits."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("t",) + self.names)
            for t, row in zip(self.times, self.states):
                writer.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])


def read_trajectory_csv(path, dt: float | None = None) -> Trajectory:
    """Inverse of :meth:`Trajectory.to_csv`.

    ``dt`` is inferred from the first two time stamps when not given.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if not header or header[0] != "t":
        raise InvalidParameterError("trajectory CSV must start with a 't' column")
    data = np.array([[float(v) for v in row] for row in body], dtype=np.float64)
    t = data[:, 0]
    if dt is None:
        dt = float(t[1] - t[0]) if len(t) > 1 else 1.0
    offset = int(round(t[0] / dt)) if len(t) else 0
    return Trajectory(tuple(header[1:]), dt, data[:, 1:], offset)


# --------------------------------------------------------------------------
# Parameter sets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RulkovParams:
    alpha: float = 4.1
    mu: float = 0.001
    sigma: float = -1.6

    def __post_init__(self):
        if not (0.0 < self.mu < 0.1):
            warnings.warn(
                f"Rulkov mu={self.mu} is outside the fast-slow regime 0 < mu << 1",
                stacklevel=3,
            )

    def step(self, x: float, y: float) -> tuple[float, float]:
        if abs(1.0 - x) < RULKOV_POLE_TOL:
            raise SingularityError(f"x = {x!r} is within {RULKOV_POLE_TOL} of the pole at 1")
        return self.alpha / (1.0 - x) + y, y - self.mu * (x + 1.0) + self.mu * self.sigma


@dataclass(frozen=True)
class RickerParams:
    K: float = 10.0
    mu: float = 2.5
    alpha: float = 0.5
    T_period: float = 200.0
    epsilon: float = 0.01

    def __post_init__(self):
        if not self.K > 0:
            raise InvalidParameterError("Ricker K must be positive")
        if not self.T_period > 0:
            raise InvalidParameterError("Ricker T_period must be positive")
        if not self.epsilon >= 0:
            raise InvalidParameterError("Ricker epsilon must be non-negative")

    def step(self, x: float, r: float, n: int) -> tuple[float, float]:
        # growth rate first, then the population update uses the new rate
        r_next = r + self.epsilon * (
            self.mu - r + self.alpha * math.sin(2.0 * math.pi * n / self.T_period)
        )
        return x * math.exp(r_next * (1.0 - x / self.K)), r_next


@dataclass(frozen=True)
class HindmarshRoseParams:
    a: float = 1.0
    b: float = 3.0
    c: float = 1.0
    d: float = 5.0
    r: float = 0.01
    s: float = 4.0
    x_R: float = -1.6
    I: float = 3.0

    def __post_init__(self):
        if not self.r > 0:
            raise InvalidParameterError("Hindmarsh-Rose r must be positive")

    def rhs(self, state, t=0.0):
        x, y, z = state
        return np.array((
            y - self.a * x**3 + self.b * x**2 - z + self.I,
            self.c - self.d * x**2 - y,
            self.r * (self.s * (x - self.x_R) - z),
        ))


@dataclass(frozen=True)
class IzhikevichParams:
    a: float = 0.02
    b: float = 0.2
    c: float = -50.0
    d: float = 2.0
    I: float = 10.0
    v_spike: float = 30.0

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidParameterError("Izhikevich a must be positive")

    def rhs(self, state, t=0.0):
        v, u = state
        return np.array((
            0.04 * v * v + 5.0 * v + 140.0 - u + self.I,
            self.a * (self.b * v - u),
        ))


@dataclass(frozen=True)
class PredatorPreyParams:
    alpha: float = 1.0
    beta: float = 1.0
    delta: float = 1.0
    gamma: float = 1.0
    epsilon: float = 0.1

    def __post_init__(self):
        for name in ("alpha", "beta", "delta", "gamma"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"predator-prey {name} must be positive")
        if not 0.0 < self.epsilon <= 1.0:
            raise InvalidParameterError("predator-prey epsilon must lie in (0, 1]")

    @property
    def equilibrium(self) -> tuple[float, float]:
        return self.gamma / self.delta, self.alpha / self.beta

    def rhs(self, state, t=0.0):
        x, y = state
        return np.array((
            x * (self.alpha - self.beta * y),
            self.epsilon * y * (self.delta * x - self.gamma),
        ))


@dataclass(frozen=True)
class MorrisLecarParams:
    """Morris-Lecar conductances and gating shapes.

    Defaults are the Rinzel-Ermentrout Hopf (type II) set with a
    supra-threshold current that yields sustained spiking.
    """

    C: float = 20.0
    I_ext: float = 90.0
    g_Ca: float = 4.4
    g_K: float = 8.0
    g_L: float = 2.0
    V_Ca: float = 120.0
    V_K: float = -84.0
    V_L: float = -60.0
    V1: float = -1.2
    V2: float = 18.0
    V3: float = 2.0
    V4: float = 30.0
    phi: float = 0.04

    def __post_init__(self):
        if not self.C > 0:
            raise InvalidParameterError("Morris-Lecar C must be positive")
        if self.V2 == 0 or self.V4 == 0:
            raise InvalidParameterError("Morris-Lecar V2 and V4 must be non-zero")
        if not self.phi > 0:
            raise InvalidParameterError("Morris-Lecar phi must be positive")

    def m_inf(self, V):
        return 0.5 * (1.0 + np.tanh((V - self.V1) / self.V2))

    def n_inf(self, V):
        return 0.5 * (1.0 + np.tanh((V - self.V3) / self.V4))

    def tau_n(self, V):
        return 1.0 / np.cosh((V - self.V3) / (2.0 * self.V4))

    def rhs(self, state, t=0.0):
        V, n = state
        i_ca = self.g_Ca * self.m_inf(V) * (V - self.V_Ca)
        i_k = self.g_K * n * (V - self.V_K)
        i_l = self.g_L * (V - self.V_L)
        return np.array((
            (self.I_ext - i_ca - i_k - i_l) / self.C,
            self.phi * (self.n_inf(V) - n) / self.tau_n(V),
        ))


Params = Union[
    RulkovParams, RickerParams, HindmarshRoseParams,
    IzhikevichParams, PredatorPreyParams, MorrisLecarParams,
]

# system id -> (params class, variable names, default dt, is continuous)
SYSTEMS = {
    "rulkov": (RulkovParams, ("x", "y"), 1.0, False),
    "ricker": (RickerParams, ("x", "r"), 1.0, False),
    "hindmarsh_rose": (HindmarshRoseParams, ("x", "y", "z"), 0.05, True),
    "morris_lecar": (MorrisLecarParams, ("V", "n"), 0.05, True),
    "predator_prey": (PredatorPreyParams, ("x", "y"), 0.01, True),
    "izhikevich": (IzhikevichParams, ("v", "u"), 0.1, True),
}


@dataclass(frozen=True)
class SystemSpec:
    """One benchmark system plus its simulation settings.

    ``n_steps`` counts samples including the initial state and the
    ``n_transient`` leading samples that are discarded.
    """

    system: str
    params: Params = None
    init: tuple = ()
    n_steps: int = 11000
    n_transient: int = 1000
    dt: float | None = None

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise InvalidParameterError(
                f"unknown system {self.system!r}; expected one of {sorted(SYSTEMS)}"
            )
        cls, names, default_dt, continuous = SYSTEMS[self.system]
        params = cls() if self.params is None else self.params
        if isinstance(params, dict):
            params = cls(**params)
        if not isinstance(params, cls):
            raise InvalidParameterError(
                f"{self.system} needs {cls.__name__}, got {type(params).__name__}"
            )
        object.__setattr__(self, "params", params)
        init = tuple(float(v) for v in self.init)
        if len(init) != len(names):
            raise DimensionMismatchError(
                f"{self.system} has {len(names)} variables, init has {len(init)}"
            )
        object.__setattr__(self, "init", init)
        if not self.n_steps > self.n_transient >= 0:
            raise InvalidParameterError("need n_steps > n_transient >= 0")
        dt = default_dt if self.dt is None else float(self.dt)
        if not continuous:
            dt = 1.0
        if not dt > 0:
            raise InvalidParameterError("dt must be positive for continuous systems")
        object.__setattr__(self, "dt", dt)

    @property
    def names(self) -> tuple:
        return SYSTEMS[self.system][1]

    @property
    def is_continuous(self) -> bool:
        return SYSTEMS[self.system][3]


# --------------------------------------------------------------------------
# Maps
# --------------------------------------------------------------------------


def _check_init(init, d):
    init = tuple(float(v) for v in init)
    if len(init) != d:
        raise DimensionMismatchError(f"expected a {d}-state initial condition, got {len(init)}")
    return init


def _finite_or_raise(values, step):
    if not all(math.isfinite(v) for v in values):
        raise NonFiniteStateError(f"state became non-finite at step {step}", step=step)


def simulate_rulkov(params: RulkovParams, init: Sequence[float], n: int) -> Trajectory:
    """Iterate the Rulkov map for ``n`` samples starting from ``init = (x, y)``."""
    if n < 1:
        raise InvalidParameterError("n must be at least 1")
    x, y = _check_init(init, 2)
    out = np.empty((n, 2))
    out[0] = x, y
    for i in range(1, n):
        x, y = params.step(x, y)
        _finite_or_raise((x, y), i)
        out[i] = x, y
    return Trajectory(("x", "y"), 1.0, out)


def simulate_ricker(params: RickerParams, init: Sequence[float], n: int) -> Trajectory:
    """Iterate the seasonally forced Ricker map from ``init = (x, r)``.

    The forcing phase of the update that produces sample ``n + 1`` is
    ``2 pi n / T_period`` with ``n`` the index of the current sample.
    """
    if n < 1:
        raise InvalidParameterError("n must be at least 1")
    x, r = _check_init(init, 2)
    out = np.empty((n, 2))
    out[0] = x, r
    with np.errstate(over="raise"):
        for i in range(1, n):
            try:
                x, r = params.step(x, r, i - 1)
            except OverflowError:
                raise NonFiniteStateError(f"exp overflow at step {i}", step=i) from None
            _finite_or_raise((x, r), i)
            out[i] = x, r
    return Trajectory(("x", "r"), 1.0, out)


# --------------------------------------------------------------------------
# Continuous systems
# --------------------------------------------------------------------------


def _rhs_of(system) -> Callable:
    if isinstance(system, SystemSpec):
        system = system.params
    rhs = getattr(system, "rhs", None)
    if rhs is not None:
        return rhs
    if callable(system):
        return system
    raise InvalidParameterError(f"{type(system).__name__} has no vector field")


def ode_rhs(system, state, t: float = 0.0) -> np.ndarray:
    """Time derivative of ``state`` for a continuous system (no Izhikevich reset)."""
    if isinstance(system, SystemSpec):
        if not system.is_continuous:
            raise InvalidParameterError(f"{system.system} is a discrete map")
        if len(state) != len(system.names):
            raise DimensionMismatchError(
                f"{system.system} state has {len(system.names)} entries, got {len(state)}"
            )
    return np.asarray(_rhs_of(system)(np.asarray(state, dtype=np.float64), t), dtype=np.float64)


def rk4_step(system, state, t: float, dt: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step.

    ``system`` is a :class:`SystemSpec`, a parameter object with an ``rhs``
    method, or any callable ``f(state, t)``.
    """
    if not dt > 0:
        raise InvalidParameterError("dt must be positive")
    f = _rhs_of(system)
    y = np.asarray(state, dtype=np.float64)
    half = 0.5 * dt
    k1 = f(y, t)
    k2 = f(y + half * k1, t + half)
    k3 = f(y + half * k2, t + half)
    k4 = f(y + dt * k3, t + dt)
    y_next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y_next)):
        raise NonFiniteStateError(f"RK4 step from t={t} produced a non-finite state")
    return y_next


def euler_step(system, state, t: float, dt: float) -> np.ndarray:
    if not dt > 0:
        raise InvalidParameterError("dt must be positive")
    y = np.asarray(state, dtype=np.float64)
    y_next = y + dt * _rhs_of(system)(y, t)
    if not np.all(np.isfinite(y_next)):
        raise NonFiniteStateError(f"Euler step from t={t} produced a non-finite state")
    return y_next


def izhikevich_reset(params: IzhikevichParams, state) -> np.ndarray:
    """Apply the after-spike reset ``v <- c, u <- u + d``."""
    _, u = state
    return np.array((params.c, u + params.d))


def simulate_izhikevich(
    params: IzhikevichParams,
    init: Sequence[float],
    n: int,
    dt: float = 0.1,
    substeps: int = 1,
) -> Trajectory:
    """Forward-Euler Izhikevich trajectory with threshold reset.

    Each sample interval ``dt`` is split into ``substeps`` Euler steps. When
    ``v`` reaches ``v_spike`` the sample records ``(v_spike, u)``, the state
    is reset and the remainder of that interval is skipped, so spikes have a
    uniform recorded amplitude.
    """
    if n < 1:
        raise InvalidParameterError("n must be at least 1")
    if not dt > 0:
        raise InvalidParameterError("dt must be positive")
    if substeps < 1:
        raise InvalidParameterError("substeps must be at least 1")
    v, u = _check_init(init, 2)
    h = dt / substeps
    out = np.empty((n, 2))
    state = np.array((v, u))
    t = 0.0
    for i in range(n):
        if i > 0:
            for _ in range(substeps):
                state = euler_step(params, state, t, h)
                t += h
                if state[0] >= params.v_spike:
                    break
        if state[0] >= params.v_spike:
            out[i] = params.v_spike, state[1]
            state = izhikevich_reset(params, state)
        else:
            out[i] = state
    return Trajectory(("v", "u"), dt, out)


def _integrate_rk4(system, init, n, dt):
    out = np.empty((n, len(init)))
    y = np.asarray(init, dtype=np.float64)
    out[0] = y
    for i in range(1, n):
        y = rk4_step(system, y, (i - 1) * dt, dt)
        out[i] = y
    return out


def simulate_continuous(system: SystemSpec) -> Trajectory:
    """RK4 trajectory for Hindmarsh-Rose, Morris-Lecar or predator-prey."""
    if system.system not in ("hindmarsh_rose", "morris_lecar", "predator_prey"):
        raise InvalidParameterError(
            f"simulate_continuous does not handle {system.system!r}"
        )
    states = _integrate_rk4(system.params, system.init, system.n_steps, system.dt)
    return Trajectory(
        system.names, system.dt, states[system.n_transient:], system.n_transient
    )


def simulate(system: SystemSpec) -> Trajectory:
    """Simulate any of the six systems and drop the transient."""
    if system.system in ("hindmarsh_rose", "morris_lecar", "predator_prey"):
        return simulate_continuous(system)
    if system.system == "rulkov":
        full = simulate_rulkov(system.params, system.init, system.n_steps)
    elif system.system == "ricker":
        full = simulate_ricker(system.params, system.init, system.n_steps)
    else:
        full = simulate_izhikevich(system.params, system.init, system.n_steps, system.dt)
    return Trajectory(
        full.names, full.dt, full.states[system.n_transient:], system.n_transient
    )
