"""Split-step integration of the first-order Zakharov system.

    i u_t + u_xx = (1/2)(n+ + n-) u
    i n+-_t -+ D n+- = +- D |u|^2

Three exactly solvable pieces are composed:

* ``L``: the linear flows exp(-i k^2 t) on u and exp(-+ i|k| t) on n+-;
* ``P``: u <- u exp(-i n h) pointwise, with n = Re((n+ + n-)/2) frozen;
* ``F``: n+- <- n+- -+ i|k| (|u|^2)^ h with |u|^2 frozen and dealiased.

``strang3`` is L(h/2) P(h/2) F(h) P(h/2) L(h/2); ``lie3`` is L(h) P(h) F(h).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional

import numpy as np

from .spectral import GridSpec
from .state import ZakharovState

BLOWUP_THRESHOLD = 1e12


class BlowUpError(RuntimeError):
    """Non-finite or huge coefficients; carries the last finite state."""

    def __init__(self, message: str, last_state: ZakharovState, trajectory: Optional["Trajectory"] = None):
        super().__init__(message)
        self.last_state = last_state
        self.time = last_state.time
        self.trajectory = trajectory


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    scheme: Literal["strang3", "lie3"] = "strang3"
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.scheme not in ("strang3", "lie3"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    def check_grid(self, grid: GridSpec) -> None:
        if self.dt > 0.5 * (2 * np.pi / grid.num_modes) ** 2:
            warnings.warn(
                f"dt={self.dt:g} exceeds 0.5*(2pi/M)^2; the linear step is exact but accuracy may suffer",
                stacklevel=3,
            )


class _Propagator:
    """Array-level stepping kernel for one grid; caches the linear symbols."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.M = grid.num_modes
        k = grid.k.astype(float)
        self.k2 = k * k
        self.absk = np.abs(k)
        self.mask = grid.dealias_mask

    def linear(self, u, p, m, h):
        return (
            u * np.exp(-1j * self.k2 * h),
            p * np.exp(-1j * self.absk * h),
            m * np.exp(1j * self.absk * h),
        )

    def potential(self, u, p, m, h):
        n = np.real(np.fft.ifft(0.5 * (p + m))) * self.M
        phys = np.fft.ifft(u) * self.M * np.exp(-1j * n * h)
        # a unimodular phase: truncating the result would break exact mass conservation
        return np.fft.fft(phys) / self.M, p, m

    def forcing(self, u, p, m, h):
        phys = np.fft.ifft(u) * self.M
        w = np.fft.fft(np.abs(phys) ** 2) / self.M
        kick = 1j * self.absk * np.where(self.mask, w, 0) * h
        return u, p - kick, m + kick

    def strang(self, u, p, m, h):
        u, p, m = self.linear(u, p, m, h / 2)
        u, p, m = self.potential(u, p, m, h / 2)
        u, p, m = self.forcing(u, p, m, h)
        u, p, m = self.potential(u, p, m, h / 2)
        return self.linear(u, p, m, h / 2)

    def lie(self, u, p, m, h):
        u, p, m = self.linear(u, p, m, h)
        u, p, m = self.potential(u, p, m, h)
        return self.forcing(u, p, m, h)

    def advance(self, arrays, h, scheme):
        return self.strang(*arrays, h) if scheme == "strang3" else self.lie(*arrays, h)


_PROPAGATORS: dict[int, _Propagator] = {}


def _propagator(grid: GridSpec) -> _Propagator:
    # benign race: concurrent builders produce identical objects
    prop = _PROPAGATORS.get(grid.num_modes)
    if prop is None:
        prop = _PROPAGATORS[grid.num_modes] = _Propagator(grid)
    return prop


def _finite(arrays) -> bool:
    return all(np.all(np.isfinite(a)) and np.abs(a).max(initial=0.0) <= BLOWUP_THRESHOLD for a in arrays)


def _wrap(state: ZakharovState, arrays, time: float) -> ZakharovState:
    u, p, m = arrays
    # keep wave means pinned to exactly zero
    p = p.copy()
    m = m.copy()
    p[0] = 0
    m[0] = 0
    return ZakharovState.from_arrays(state.grid, u, p, m, time, state.real)


def linear_flow(state: ZakharovState, t: float) -> ZakharovState:
    """Exact free evolution over time t (any sign)."""
    arrays = _propagator(state.grid).linear(*state.arrays(), t)
    return _wrap(state, arrays, state.time + t)


def step(state: ZakharovState, cfg: IntegratorConfig, h: Optional[float] = None) -> ZakharovState:
    """Advance by ``h`` (default cfg.dt; negative values run the scheme backwards)."""
    h = cfg.dt if h is None else h
    arrays = _propagator(state.grid).advance(state.arrays(), h, cfg.scheme)
    if not _finite(arrays):
        raise BlowUpError(f"blow-up during step at t={state.time:g}", state)
    return _wrap(state, arrays, state.time + h)


@dataclass
class Trajectory:
    """Recorded states of one run (initial, every ``record_every`` steps, and final)."""

    states: list[ZakharovState] = field(default_factory=list)
    steps_taken: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    @property
    def final(self) -> ZakharovState:
        return self.states[-1]


def step_schedule(T: float, dt: float) -> tuple[int, float]:
    """Number of full steps and the size of the trailing partial step (0 if none)."""
    if T < 0:
        raise ValueError("T must be non-negative")
    n = int(math.floor(T / dt + 1e-9))
    rem = T - n * dt
    if rem <= 1e-12 * max(1.0, T):
        rem = 0.0
    return n, rem


def evolve(
    state: ZakharovState,
    T: float,
    cfg: IntegratorConfig,
    observer: Optional[Callable[[ZakharovState], None]] = None,
    record: bool = True,
) -> Trajectory:
    """Integrate over [t0, t0 + T], ending exactly at t0 + T.

    ``observer`` sees the initial state, every ``record_every``-th state and the final one.
    With ``record=False`` only the initial and final states are kept in the trajectory.
    """
    cfg.check_grid(state.grid)
    prop = _propagator(state.grid)
    n_full, rem = step_schedule(T, cfg.dt)
    total = n_full + (1 if rem else 0)
    t0 = state.time
    traj = Trajectory(states=[state])
    if observer is not None:
        observer(state)
    arrays, time = state.arrays(), t0
    for i in range(total):
        h = cfg.dt if i < n_full else rem
        new = prop.advance(arrays, h, cfg.scheme)
        if not _finite(new):
            last_good = _wrap(state, arrays, time)
            traj.states.append(last_good)
            raise BlowUpError(f"blow-up after t={time:g}", last_good, traj)
        arrays = new
        time = t0 + (i + 1) * cfg.dt if i < n_full else t0 + T
        traj.steps_taken = i + 1
        last = i == total - 1
        if last or (i + 1) % cfg.record_every == 0:
            current = _wrap(state, arrays, time)
            if record or last:
                traj.states.append(current)
            if observer is not None:
                observer(current)
    return traj
