"""Short-rate models and exact scenario simulation under the pricing measure.

Three model families are supported:

- ``ConstantRate``: flat deterministic short rate, valid in discrete or
  continuous time.
- ``PoissonJump``: continuous-time rate ``r0 + delta * N_u`` driven by a
  Poisson process ``N`` with the given intensity. Paths store their exact
  jump times, so rate integrals carry no discretization error.
- ``MarkovChain``: discrete-time chain over finitely many one-period rates.

Per-path randomness is keyed by ``(seed, stream, path_index)`` through the
counter-based Philox generator. A scenario set is therefore a pure function
of its arguments: re-running with the same seed reproduces it bit for bit,
independent of execution order and thread count.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from .parallel import pmap

__all__ = [
    "Regime",
    "TimeGrid",
    "ConstantRate",
    "PoissonJump",
    "MarkovChain",
    "ModelSpec",
    "JumpPath",
    "LatticePath",
    "ShortRatePath",
    "ScenarioSet",
    "path_rng",
    "simulate_paths",
    "bank_account",
    "integrated_rate",
    "conditioned",
    "initial_state_of",
    "state_at",
    "current_rate",
    "supported_regimes",
    "require_regime",
    "model_label",
    "STREAM_PATHS",
    "STREAM_PRICING",
    "STREAM_CONTINUATION",
]

_MASK64 = (1 << 64) - 1
_ROW_SUM_TOL = 1e-12

# Stream tags keep generators drawn for different purposes out of each
# other's key space even when they share a user seed.
STREAM_PATHS = 0x9E3779B97F4A7C15
STREAM_PRICING = 0xC2B2AE3D27D4EB4F
STREAM_CONTINUATION = 0x165667B19E3779F9


class Regime(Enum):
    """Time regime a model or grid lives in."""

    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


def path_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Counter-based generator for one path: key = (seed ^ stream, index)."""
    _check_seed(seed)
    key = np.array(
        [(int(seed) ^ int(stream)) & _MASK64, int(index) & _MASK64],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def _check_seed(seed: int) -> None:
    if not isinstance(seed, (int, np.integer)):
        raise ValueError("seed must be an integer")
    if not 0 <= int(seed) <= _MASK64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class TimeGrid:
    """Simulation horizon plus, for continuous time, a reporting step.

    The reporting step only affects where paths are sampled for output;
    simulation itself is exact and never touches the grid.
    """

    regime: Regime
    horizon: float
    output_step: float | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.horizon) or self.horizon <= 0:
            raise ValueError("horizon must be a positive finite number")
        if self.regime is Regime.DISCRETE:
            if self.horizon != int(self.horizon):
                raise ValueError("discrete horizon must be an integer")
            if self.output_step is not None:
                raise ValueError("output_step applies to continuous grids only")
        else:
            if self.output_step is None:
                raise ValueError("continuous grids need an output_step")
            if not 0 < self.output_step <= self.horizon:
                raise ValueError("output_step must lie in (0, horizon]")

    def reporting_times(self) -> np.ndarray:
        if self.regime is Regime.DISCRETE:
            return np.arange(int(self.horizon) + 1)
        step = float(self.output_step)
        n = int(math.floor(self.horizon / step + 1e-9))
        times = step * np.arange(n + 1)
        if times[-1] < self.horizon - 1e-12 * max(1.0, self.horizon):
            times = np.append(times, self.horizon)
        return times


@dataclass(frozen=True)
class ConstantRate:
    """Flat short rate; valid in both time regimes."""

    rate: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.rate):
            raise ValueError("constant rate must be finite")


@dataclass(frozen=True)
class PoissonJump:
    """Short rate r0 + delta * N_u, N a Poisson process with rate `intensity`."""

    r0: float
    delta: float
    intensity: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.r0):
            raise ValueError("r0 must be finite")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ValueError("jump size delta must be positive")
        if not (math.isfinite(self.intensity) and self.intensity > 0):
            raise ValueError("intensity must be positive")


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """Finite-state chain of one-period rates with a row-stochastic matrix."""

    state_rates: np.ndarray
    transition: np.ndarray
    initial_state: int

    def __post_init__(self) -> None:
        rates = np.asarray(self.state_rates, dtype=float)
        trans = np.asarray(self.transition, dtype=float)
        object.__setattr__(self, "state_rates", rates)
        object.__setattr__(self, "transition", trans)
        if rates.ndim != 1 or rates.size == 0:
            raise ValueError("state_rates must be a non-empty vector")
        if not np.all(np.isfinite(rates)):
            raise ValueError("state_rates must be finite")
        if np.any(rates <= -1.0):
            # one-period growth factors 1 + R must stay positive
            raise ValueError("state rates must satisfy 1 + R > 0")
        if trans.shape != (rates.size, rates.size):
            raise ValueError("transition must be square and match state_rates")
        if not np.all(np.isfinite(trans)) or np.any(trans < 0):
            raise ValueError("transition entries must be finite and non-negative")
        row_err = float(np.abs(trans.sum(axis=1) - 1.0).max())
        if row_err > _ROW_SUM_TOL:
            raise ValueError(
                f"transition rows must sum to 1 (max deviation {row_err:.3e})"
            )
        if not 0 <= int(self.initial_state) < rates.size:
            raise ValueError("initial_state out of range")
        object.__setattr__(self, "initial_state", int(self.initial_state))

    @property
    def n_states(self) -> int:
        return int(self.state_rates.size)

    def discounted_transition(self) -> np.ndarray:
        """Transition matrix with row i scaled by 1 / (1 + R_i)."""
        return self.transition / (1.0 + self.state_rates)[:, None]


ModelSpec = Union[ConstantRate, PoissonJump, MarkovChain]


def supported_regimes(model: ModelSpec) -> frozenset[Regime]:
    if isinstance(model, ConstantRate):
        return frozenset((Regime.DISCRETE, Regime.CONTINUOUS))
    if isinstance(model, PoissonJump):
        return frozenset((Regime.CONTINUOUS,))
    if isinstance(model, MarkovChain):
        return frozenset((Regime.DISCRETE,))
    raise TypeError(f"unknown model type: {type(model).__name__}")


def require_regime(model: ModelSpec, regime: Regime) -> None:
    if regime not in supported_regimes(model):
        raise ValueError(
            f"{model_label(model)} does not support the {regime.value} regime"
        )
    if (
        regime is Regime.DISCRETE
        and isinstance(model, ConstantRate)
        and model.rate <= -1.0
    ):
        raise ValueError("discrete constant rate must satisfy 1 + R > 0")


def model_label(model: ModelSpec) -> str:
    if isinstance(model, ConstantRate):
        return f"constant(rate={model.rate:g})"
    if isinstance(model, PoissonJump):
        return (
            f"poisson_jump(r0={model.r0:g}, delta={model.delta:g}, "
            f"intensity={model.intensity:g})"
        )
    if isinstance(model, MarkovChain):
        return f"markov_chain({model.n_states} states)"
    raise TypeError(f"unknown model type: {type(model).__name__}")


@dataclass(frozen=True, eq=False)
class JumpPath:
    """Piecewise-constant, non-decreasing continuous-time rate path.

    The rate at time u is ``r0 + delta * N_u`` where ``N_u`` counts jump
    times <= u. Jump times are exact, so integrals over the path are too.
    """

    r0: float
    delta: float
    jump_times: np.ndarray
    horizon: float

    def __post_init__(self) -> None:
        times = np.asarray(self.jump_times, dtype=float)
        object.__setattr__(self, "jump_times", times)
        if times.ndim != 1:
            raise ValueError("jump_times must be a vector")
        if times.size and (times[0] < 0 or times[-1] > self.horizon):
            raise ValueError("jump times must lie in [0, horizon]")
        if times.size > 1 and np.any(np.diff(times) < 0):
            raise ValueError("jump times must be sorted")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")

    def _check_time(self, u) -> None:
        u = np.asarray(u, dtype=float)
        if np.any(u < 0) or np.any(u > self.horizon):
            raise ValueError("time outside [0, horizon]")

    def jump_count(self, u):
        """N_u: number of jumps at or before u (scalar or array)."""
        self._check_time(u)
        return np.searchsorted(self.jump_times, u, side="right")

    def rate_at(self, u):
        return self.r0 + self.delta * self.jump_count(u)

    def integrated(self, s: float, t: float) -> float:
        """Exact rate integral over [s, t]."""
        if not 0 <= s <= t <= self.horizon:
            raise ValueError("need 0 <= s <= t <= horizon")
        n_before = int(np.searchsorted(self.jump_times, s, side="right"))
        inside = self.jump_times[(self.jump_times > s) & (self.jump_times <= t)]
        level = n_before * (t - s) + float(np.sum(t - inside))
        return self.r0 * (t - s) + self.delta * level


@dataclass(frozen=True, eq=False)
class LatticePath:
    """Discrete-time rate path; entry k is the one-period rate R_k."""

    rates: np.ndarray
    states: np.ndarray | None = None

    def __post_init__(self) -> None:
        rates = np.asarray(self.rates, dtype=float)
        object.__setattr__(self, "rates", rates)
        if rates.ndim != 1 or rates.size == 0:
            raise ValueError("rates must be a non-empty vector")
        if np.any(rates <= -1.0):
            raise ValueError("rates must satisfy 1 + R > 0")
        if self.states is not None:
            states = np.asarray(self.states)
            object.__setattr__(self, "states", states)
            if states.shape != rates.shape:
                raise ValueError("states must align with rates")

    @property
    def horizon(self) -> int:
        return int(self.rates.size - 1)

    def rate_at(self, u) -> float:
        return float(self.rates[_as_period(u, self.horizon)])


ShortRatePath = Union[JumpPath, LatticePath]


def _as_period(u, horizon: int) -> int:
    k = float(u)
    if k != int(k):
        raise ValueError("discrete times must be integers")
    k = int(k)
    if not 0 <= k <= horizon:
        raise ValueError("time outside [0, horizon]")
    return k


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """Immutable batch of simulated paths plus the inputs that produced it."""

    model: ModelSpec
    grid: TimeGrid
    paths: tuple[ShortRatePath, ...]
    seed: int

    @property
    def n_paths(self) -> int:
        return len(self.paths)


def simulate_paths(
    model: ModelSpec,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    *,
    stream: int = STREAM_PATHS,
    threads: int = 1,
) -> ScenarioSet:
    """Simulate n_paths exact paths of the model over the grid's horizon."""
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    _check_seed(seed)
    require_regime(model, grid.regime)
    build = _path_builder(model, grid, int(seed), stream)
    paths = pmap(build, range(n_paths), threads=threads)
    return ScenarioSet(model, grid, tuple(paths), int(seed))


def _path_builder(model: ModelSpec, grid: TimeGrid, seed: int, stream: int):
    if isinstance(model, ConstantRate):
        if grid.regime is Regime.CONTINUOUS:
            flat: ShortRatePath = JumpPath(
                model.rate, 0.0, np.empty(0), float(grid.horizon)
            )
        else:
            flat = LatticePath(np.full(int(grid.horizon) + 1, model.rate))
        return lambda index: flat

    if isinstance(model, PoissonJump):
        horizon = float(grid.horizon)

        def build_jump(index: int) -> JumpPath:
            rng = path_rng(seed, stream, index)
            times = _sample_jump_times(rng, model.intensity, horizon)
            return JumpPath(model.r0, model.delta, times, horizon)

        return build_jump

    if isinstance(model, MarkovChain):
        cum = np.cumsum(model.transition, axis=1)
        n_steps = int(grid.horizon)
        top = model.n_states - 1

        def build_lattice(index: int) -> LatticePath:
            rng = path_rng(seed, stream, index)
            u = rng.random(n_steps)
            states = np.empty(n_steps + 1, dtype=np.int64)
            state = model.initial_state
            states[0] = state
            for k in range(n_steps):
                # inverse-CDF draw from row `state`; clamp guards u rounding
                state = min(int(np.searchsorted(cum[state], u[k], side="right")), top)
                states[k + 1] = state
            return LatticePath(model.state_rates[states], states)

        return build_lattice

    raise TypeError(f"unknown model type: {type(model).__name__}")


def _sample_jump_times(
    rng: np.random.Generator, intensity: float, horizon: float
) -> np.ndarray:
    """Exact Poisson jump times on [0, horizon] via exponential gaps."""
    mean_count = intensity * horizon
    block = int(mean_count + 10.0 * math.sqrt(mean_count) + 16.0)
    times = np.cumsum(rng.exponential(1.0 / intensity, size=block))
    while times[-1] <= horizon:
        more = np.cumsum(rng.exponential(1.0 / intensity, size=block))
        times = np.concatenate([times, times[-1] + more])
    return times[times <= horizon].copy()


def bank_account(path: ShortRatePath, t) -> float:
    """Value at t of one unit rolled at the short rate from time 0.

    Discrete paths use the exact product of per-period growth factors over
    periods strictly before t, so the value is determined by rates the
    market has already set. Continuous paths use the exact rate integral.
    """
    if isinstance(path, JumpPath):
        t = float(t)
        return math.exp(path.integrated(0.0, t))
    k = _as_period(t, path.horizon)
    return float(np.prod(1.0 + path.rates[:k]))


def integrated_rate(path: ShortRatePath, s: float, t: float) -> float:
    if not isinstance(path, JumpPath):
        raise ValueError("integrated_rate applies to continuous-regime paths")
    return path.integrated(float(s), float(t))


def conditioned(model: ModelSpec, state) -> ModelSpec:
    """Copy of the model restarted from the given state.

    All supported models are Markov in their state, so conditioning on the
    information available at an observation time reduces to restarting the
    model there. ``state`` is the current rate for jump models and the chain
    index for chains; constant models ignore it.
    """
    if isinstance(model, ConstantRate):
        return model
    if isinstance(model, PoissonJump):
        r_now = model.r0 if state is None else float(state)
        if r_now < model.r0 - 1e-12:
            raise ValueError("jump-model rate cannot fall below r0")
        return dataclasses.replace(model, r0=r_now)
    if isinstance(model, MarkovChain):
        idx = model.initial_state if state is None else int(state)
        return dataclasses.replace(model, initial_state=idx)
    raise TypeError(f"unknown model type: {type(model).__name__}")


def initial_state_of(model: ModelSpec):
    """State the model starts in, in the encoding used by `conditioned`."""
    if isinstance(model, ConstantRate):
        return None
    if isinstance(model, PoissonJump):
        return model.r0
    if isinstance(model, MarkovChain):
        return model.initial_state
    raise TypeError(f"unknown model type: {type(model).__name__}")


def state_at(model: ModelSpec, path: ShortRatePath, u):
    """State of the path at time u, in the encoding used by `conditioned`."""
    if isinstance(model, ConstantRate):
        return None
    if isinstance(model, PoissonJump):
        # exact float: r0 + delta * (jump count), same arithmetic as rate_at
        return float(path.rate_at(float(u)))
    if isinstance(model, MarkovChain):
        if path.states is None:
            raise ValueError("chain path lacks recorded states")
        return int(path.states[_as_period(u, path.horizon)])
    raise TypeError(f"unknown model type: {type(model).__name__}")


def current_rate(model: ModelSpec, state) -> float:
    """Short rate implied by a model state."""
    if isinstance(model, ConstantRate):
        return float(model.rate)
    if isinstance(model, PoissonJump):
        return float(model.r0 if state is None else state)
    if isinstance(model, MarkovChain):
        idx = model.initial_state if state is None else int(state)
        return float(model.state_rates[idx])
    raise TypeError(f"unknown model type: {type(model).__name__}")
