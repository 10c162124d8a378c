"""Fixed-step integration of the mean-field models plus trajectory analytics."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

from .models import (BlockRateParams, BsirState, RateParams, SirState,
                     bsir_rhs, sir_rhs)

State = Union[SirState, BsirState]
Params = Union[RateParams, BlockRateParams]

# Allow this much density drift per step before rescaling the sum back to 1.
_DRIFT_TOL = 1e-12
# A post-clamp component above this signals a blown-up step.
_BLOWUP_TOL = 1.0 + 1e-6


class IntegrationError(RuntimeError):
    """Raised when a step produces densities no renormalization can repair."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size, horizon and the density below which spreaders count as gone."""

    dt: float = 0.01
    t_end: float = 25.0
    extinction_threshold: float = 1e-4

    def __post_init__(self) -> None:
        if not (isinstance(self.dt, (int, float)) and 0.0 < self.dt <= 0.1):
            raise ValueError(f"dt must lie in (0, 0.1], got {self.dt!r}")
        if not (isinstance(self.t_end, (int, float)) and math.isfinite(self.t_end)
                and self.t_end >= 0.0):
            raise ValueError(f"t_end must be a finite non-negative number, got {self.t_end!r}")
        if not (isinstance(self.extinction_threshold, (int, float))
                and 0.0 < self.extinction_threshold < 1.0):
            raise ValueError(
                f"extinction_threshold must lie in (0, 1), got {self.extinction_threshold!r}")


@dataclass(frozen=True)
class Trajectory:
    """Time grid plus the state reached at each grid point."""

    times: tuple[float, ...]
    states: tuple[State, ...]

    def __post_init__(self) -> None:
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if not self.times:
            raise ValueError("trajectory must contain at least one point")
        for a, b in zip(self.times, self.times[1:]):
            if b <= a:
                raise ValueError("times must be strictly increasing")

    def series(self, component: str) -> list[float]:
        """The named component at every time point."""
        return [getattr(s, component) for s in self.states]

    def __len__(self) -> int:
        return len(self.times)


def _rhs_for(state: State) -> Callable:
    if isinstance(state, SirState):
        return sir_rhs
    if isinstance(state, BsirState):
        return bsir_rhs
    raise TypeError(f"unsupported state type {type(state).__name__}")


def rk4_step(state: State, params: Params, dt: float, rhs: Callable) -> State:
    """One classical 4th-order Runge-Kutta step.

    ``rhs(components, params)`` maps raw density tuples to their rates of
    change.  Negative round-off components are clamped to zero and the sum is
    rescaled to one whenever it drifts by more than 1e-12.
    """
    if not (0.0 < dt <= 0.1):
        raise ValueError(f"dt must lie in (0, 0.1], got {dt!r}")
    y = state.as_tuple()
    k1 = rhs(y, params)
    k2 = rhs(tuple(a + 0.5 * dt * b for a, b in zip(y, k1)), params)
    k3 = rhs(tuple(a + 0.5 * dt * b for a, b in zip(y, k2)), params)
    k4 = rhs(tuple(a + dt * b for a, b in zip(y, k3)), params)
    sixth = dt / 6.0
    out = [a + sixth * (p + 2.0 * q + 2.0 * r + s)
           for a, p, q, r, s in zip(y, k1, k2, k3, k4)]
    out = [0.0 if v < 0.0 else v for v in out]
    if any(v > _BLOWUP_TOL for v in out):
        raise IntegrationError(
            f"component exceeded 1 after step (dt={dt} too large?): {out}")
    total = math.fsum(out)
    if abs(total - 1.0) > _DRIFT_TOL:
        out = [v / total for v in out]
    return type(state)(*out)


def integrate(initial_state: State, params: Params, config: IntegratorConfig) -> Trajectory:
    """Integrate from t=0 to t_end inclusive on a uniform dt grid.

    The first trajectory point is ``initial_state`` itself.  A horizon of
    zero yields a single-point trajectory.
    """
    rhs = _rhs_for(initial_state)
    dt = config.dt
    n_steps = round(config.t_end / dt)
    times = [i * dt for i in range(n_steps + 1)]
    states = [initial_state]
    for i in range(n_steps):
        try:
            states.append(rk4_step(states[-1], params, dt, rhs))
        except IntegrationError as exc:
            raise IntegrationError(f"integration failed at t={times[i]:g}: {exc}") from exc
    return Trajectory(times=tuple(times), states=tuple(states))


def peak(trajectory: Trajectory, component: str = "spreader") -> tuple[float, float]:
    """Earliest time at which the component attains its maximum, and the maximum."""
    values = trajectory.series(component)
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return trajectory.times[best], values[best]


def extinction_time(trajectory: Trajectory, threshold: float) -> Optional[float]:
    """Earliest t > 0 from which the spreader density stays below threshold.

    Transient dips do not count: the density must remain below the threshold
    for the rest of the horizon.  Returns None when that never happens.
    """
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must lie in (0, 1), got {threshold!r}")
    values = trajectory.series("spreader")
    last_above = -1
    for i, v in enumerate(values):
        if v >= threshold:
            last_above = i
    idx = max(last_above + 1, 1)
    if idx >= len(values):
        return None
    return trajectory.times[idx]


def terminal_state(trajectory: Trajectory) -> State:
    """The state at the end of the horizon."""
    return trajectory.states[-1]


def sup_distance(a: Trajectory, b: Trajectory, components: Sequence[str] | None = None) -> float:
    """Largest componentwise gap between two trajectories on a's time grid.

    ``b`` may be finer: its grid must contain a's points at an integer
    stride.  Used for step-halving convergence checks.
    """
    if len(b) < len(a):
        return sup_distance(b, a, components)
    if (len(b) - 1) % max(len(a) - 1, 1) != 0 and len(a) > 1:
        raise ValueError("grids are not nested")
    stride = (len(b) - 1) // (len(a) - 1) if len(a) > 1 else 1
    if components is None:
        components = tuple(f.name for f in dataclasses.fields(a.states[0]))
    worst = 0.0
    for i, sa in enumerate(a.states):
        sb = b.states[i * stride]
        for name in components:
            gap = abs(getattr(sa, name) - getattr(sb, name))
            if gap > worst:
                worst = gap
    return worst
