"""High-low frequency iteration for rough wave data.

The wave data is split at N_HL. The low-frequency system is evolved nonlinearly;
the full system is evolved alongside it, and the difference is decomposed into
the free wave flow of the high data plus a nonlinear remainder (v, m~). On each
interval of length delta the remainder is absorbed into the low solution, and the
smoothed energy of the low solution is tracked interval by interval.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .diagnostics import (
    apply_I,
    build_imultiplier,
    fl_norm,
    hamiltonian,
    i_energy,
    nonlinear_part_norm,
    sobolev_norm,
)
from .dynamics import BlowUpError, IntegratorConfig, Trajectory, evolve
from .spectral import (
    SpectralField,
    apply_symbol,
    check_same_grid,
    is_dyadic,
    project_gt,
    project_leq,
    wave_propagator,
)
from .state import ZakharovState

log = logging.getLogger(__name__)

RECONSTRUCTION_TOL = 1e-11


class ConfigError(ValueError):
    """Parameters outside the admissible region of the iteration."""


class InsufficientSignalError(RuntimeError):
    """Every scanned remainder norm is at roundoff level; no slope can be fitted."""


class DifferenceBlowUp(BlowUpError):
    """Blow-up in either the full or the low trajectory of a difference run."""

    def __init__(self, message, last_state, full: Optional[Trajectory], low: Optional[Trajectory]):
        super().__init__(message, last_state)
        self.full = full
        self.low = low


# ---------------------------------------------------------------------------
# parameter rules


def beta_threshold(s: float) -> float:
    return 1.0 / (2.0 * (2.0 - s))


def alpha_interval(s: float, beta: float) -> tuple[float, float]:
    """Open interval of admissible exponents alpha with N_I = N_HL^alpha."""
    lo = 1.0 - 2.0 * beta
    hi = min((beta + 0.5 - s) / (2.0 * (1.0 - s)), (2.0 * beta - s) / (1.0 - s))
    return lo, hi


def gamma_lower_bound(s: float, beta: float, alpha: float) -> float:
    dens = [
        (2 * s - 1) * alpha,
        beta + 0.5 - s - 2 * alpha * (1 - s),
        alpha + 2 * beta - 1,
        2 * beta - s - alpha * (1 - s),
    ]
    if min(dens) <= 0:
        raise ConfigError(f"alpha={alpha} leaves a non-positive denominator in the gamma rule")
    return max(1.0 / d for d in dens)


def growth_exponent(s: float, beta: float, alpha: float, gamma: float) -> float:
    """Exponent of <T> in the polynomial bound on the nonlinear part."""
    return max(alpha * (1 - s) * gamma, (0.5 - beta) * gamma)


def dyadic_round(x: float) -> int:
    """2^round(log2 x), rounding halves up."""
    return 1 << int(math.floor(math.log2(x) + 0.5))


@dataclass(frozen=True)
class HighLowConfig:
    s: float
    beta: float
    N_HL: int
    alpha: float
    gamma: float
    N_I: int
    delta: float
    K: float
    C1: float
    epsilon0: float = 0.05
    strict: bool = True

    def __post_init__(self):
        if not self.s > 0.5:
            raise ConfigError("s must exceed 1/2")
        if not 0 < self.beta <= 0.5:
            raise ConfigError("beta must lie in (0, 1/2]")
        if not self.delta > 0:
            raise ConfigError("delta must be positive")
        if not (is_dyadic(self.N_HL) and is_dyadic(self.N_I)):
            raise ConfigError("N_HL and N_I must be dyadic")
        if self.strict:
            self._check_admissible()

    def _check_admissible(self):
        if not self.beta > beta_threshold(self.s):
            raise ConfigError(f"beta={self.beta} must exceed 1/(2(2-s)) = {beta_threshold(self.s):.4f}")
        lo, hi = alpha_interval(self.s, self.beta)
        if not lo < self.alpha < hi:
            raise ConfigError(f"alpha={self.alpha} outside ({lo:.4f}, {hi:.4f})")
        g = gamma_lower_bound(self.s, self.beta, self.alpha)
        if not self.gamma > g:
            raise ConfigError(f"gamma={self.gamma} must exceed {g:.4f}")

    @classmethod
    def build(
        cls,
        s: float,
        beta: float,
        N_HL: int,
        K: float,
        C1: float,
        alpha: Optional[float] = None,
        gamma: Optional[float] = None,
        epsilon0: float = 0.05,
        strict: bool = True,
    ) -> "HighLowConfig":
        """Fill in N_I and delta by the parameter rules; alpha defaults to the interval midpoint.

        ``strict=False`` skips the global-iteration constraints on (beta, alpha, gamma),
        which single-step scans outside that region (e.g. small beta) need.
        """
        lo, hi = alpha_interval(s, beta)
        if alpha is None:
            alpha = 0.5 * (lo + hi) if lo < hi else 0.25
        if gamma is None:
            try:
                gamma = 1.01 * gamma_lower_bound(s, beta, alpha)
            except ConfigError:
                if strict:
                    raise
                gamma = 1.0
        N_I = dyadic_round(N_HL ** alpha)
        delta = delta_rule(s, beta, N_HL, N_I, K, C1, epsilon0)
        cfg = cls(s, beta, N_HL, alpha, gamma, N_I, delta, K, C1, epsilon0, strict)
        cfg.check_footnote()
        return cfg

    @property
    def N(self) -> float:
        return max(self.K * self.N_I ** (1 - self.s), self.C1 * self.N_HL ** (0.5 - self.beta))

    def check_footnote(self) -> float:
        """delta^epsilon0 * C1; warns above 1 (the smallness the local theory needs)."""
        val = self.delta ** self.epsilon0 * self.C1
        log.info("delta^eps0 * C1 = %.4g", val)
        if val > 1:
            warnings.warn(f"delta^eps0 * C1 = {val:.3g} > 1: step may be too long for the local theory", stacklevel=2)
        return val

    def with_N_HL(self, N_HL: int) -> "HighLowConfig":
        return HighLowConfig.build(
            self.s, self.beta, N_HL, self.K, self.C1, self.alpha, self.gamma, self.epsilon0, self.strict
        )


def delta_rule(s, beta, N_HL, N_I, K, C1, epsilon0) -> float:
    N = max(K * N_I ** (1 - s), C1 * N_HL ** (0.5 - beta))
    return 0.5 * N ** (-2.0 - epsilon0)


# ---------------------------------------------------------------------------
# difference decomposition


def split_data(n0: SpectralField, N_HL: int) -> tuple[SpectralField, SpectralField]:
    """(P_{<=N_HL} n0, P_{>N_HL} n0)."""
    return project_leq(n0, N_HL), project_gt(n0, N_HL)


@dataclass(frozen=True, eq=False)
class DifferenceDecomposition:
    v: SpectralField
    m_tilde_plus: SpectralField
    m_tilde_minus: SpectralField
    linear_high_plus: SpectralField
    linear_high_minus: SpectralField
    time: float

    def size(self, s: float) -> float:
        """||v||_{H^s} + ||m~+||_{L^2} + ||m~-||_{L^2}."""
        return (
            sobolev_norm(self.v, s)
            + sobolev_norm(self.m_tilde_plus, 0.0)
            + sobolev_norm(self.m_tilde_minus, 0.0)
        )


def linear_high(high_plus: SpectralField, high_minus: SpectralField, t: float):
    return (
        apply_symbol(high_plus, wave_propagator(t, +1)),
        apply_symbol(high_minus, wave_propagator(t, -1)),
    )


def decompose(full: ZakharovState, low: ZakharovState, high_plus, high_minus, t_high: float) -> DifferenceDecomposition:
    """Form (v, m~) from paired full/low states; the high data has evolved freely for ``t_high``."""
    lp, lm = linear_high(high_plus, high_minus, t_high)
    mp = full.n_plus - low.n_plus - lp
    mm = full.n_minus - low.n_minus - lm
    # reconstruction n_full = n_low + W n_H + m~ is the definition; guard the bookkeeping
    err = max(
        np.abs(low.n_plus.coeffs + lp.coeffs + mp.coeffs - full.n_plus.coeffs).max(),
        np.abs(low.n_minus.coeffs + lm.coeffs + mm.coeffs - full.n_minus.coeffs).max(),
    )
    scale = max(1.0, np.abs(full.n_plus.coeffs).max())
    if err > RECONSTRUCTION_TOL * scale:
        raise AssertionError(f"reconstruction defect {err:.3e}")
    return DifferenceDecomposition(full.u - low.u, mp, mm, lp, lm, full.time)


def run_difference(
    u0: SpectralField,
    n0_plus: SpectralField,
    n0_minus: SpectralField,
    cfg: HighLowConfig,
    T: float,
    icfg: IntegratorConfig,
    real: bool = True,
) -> list[DifferenceDecomposition]:
    """Evolve full and low systems side by side and decompose their difference at each record."""
    check_same_grid(u0, n0_plus, n0_minus)
    low_p, high_p = split_data(n0_plus, cfg.N_HL)
    low_m, high_m = split_data(n0_minus, cfg.N_HL)
    full0 = ZakharovState(u0, n0_plus, n0_minus, 0.0, real)
    low0 = ZakharovState(u0, low_p, low_m, 0.0, real)
    full_traj = low_traj = None
    try:
        full_traj = evolve(full0, T, icfg)
        low_traj = evolve(low0, T, icfg)
    except BlowUpError as exc:
        raise DifferenceBlowUp(str(exc), exc.last_state, full_traj or exc.trajectory, low_traj) from exc
    return [
        decompose(f, l, high_p, high_m, f.time)
        for f, l in zip(full_traj.states, low_traj.states)
    ]


# ---------------------------------------------------------------------------
# smoothing exponent scan


@dataclass
class ScanResult:
    N_HL: list[int]
    values: list[float]
    slope: float
    residual: float
    predicted: float
    deltas: list[float] = field(default_factory=list)

    def within(self, tol: float) -> bool:
        return abs(self.slope - self.predicted) <= tol


def fit_loglog(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of log y on log x and the RMS residual of the fit."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - ly) ** 2)))
    return float(coef[0]), resid


def smoothing_scan(
    u0: SpectralField,
    n0_plus: SpectralField,
    n0_minus: SpectralField,
    template: HighLowConfig,
    N_HL_list: Sequence[int],
    icfg: IntegratorConfig,
    T: Optional[float] = None,
    real: bool = True,
) -> ScanResult:
    """Fit the decay of sup_{t<=T} (||v||_{H^s} + ||m~||_{L^2}) in N_HL.

    ``T=None`` uses each cell's own delta. The predicted slope is s - beta - 1/2.
    """
    if len(N_HL_list) < 4:
        raise ValueError("need at least four N_HL values")
    values, deltas = [], []
    for N_HL in N_HL_list:
        cfg = template.with_N_HL(N_HL)
        horizon = cfg.delta if T is None else T
        steps = max(1, math.ceil(horizon / icfg.dt - 1e-9))
        cell_icfg = replace(icfg, dt=horizon / steps)
        decs = run_difference(u0, n0_plus, n0_minus, cfg, horizon, cell_icfg, real)
        values.append(max(d.size(template.s) for d in decs))
        deltas.append(cfg.delta)
    if max(values) < 1e-13:
        raise InsufficientSignalError("remainder norms are all below 1e-13 (no high-frequency data?)")
    slope, resid = fit_loglog(N_HL_list, values)
    return ScanResult(list(N_HL_list), values, slope, resid, template.s - template.beta - 0.5, deltas)


# ---------------------------------------------------------------------------
# iteration driver


@dataclass
class LedgerEntry:
    j: int
    t_start: float
    t_end: float
    energy_start: float      # smoothed energy of the low solution at the interval start
    energy_end: float        # ... at the interval end, before absorption
    energy_absorbed: float   # ... after absorbing (v, m~)
    v_norm: float            # ||v||_{H^s} at the interval end
    m_tilde_norm: float      # ||m~+||_{L^2} + ||m~-||_{L^2}
    nonlinear_part: float    # nonlinear part of the full flow at t_end
    audit_error: float = float("nan")

    @property
    def evolution_increment(self) -> float:
        return self.energy_end - self.energy_start

    @property
    def absorption_increment(self) -> float:
        return self.energy_absorbed - self.energy_end


@dataclass
class GrowthLedger:
    """Per-interval energy bookkeeping of the high-low iteration.

    With the correction multiplier set to 1, the smoothed and modified energies
    coincide, so the two boundary correction terms of the telescoping bound vanish.
    """

    config: HighLowConfig
    entries: list[LedgerEntry] = field(default_factory=list)
    complete: bool = True
    planned_intervals: int = 0

    @property
    def initial_energy(self) -> float:
        return self.entries[0].energy_start

    @property
    def final_energy(self) -> float:
        return self.entries[-1].energy_end

    def total_change(self) -> float:
        return self.final_energy - self.initial_energy

    def telescoped(self) -> tuple[float, float, float, float]:
        """(boundary correction, sum of evolution increments, sum of absorption increments, correction)."""
        evo = sum(e.evolution_increment for e in self.entries)
        absorb = sum(e.absorption_increment for e in self.entries[:-1])
        return 0.0, evo, absorb, 0.0

    def telescoped_change(self) -> float:
        return sum(self.telescoped())

    def growth_bound_terms(self) -> tuple[float, float, float, float]:
        """Absolute-value version of the four-term bound (each sum of |increments|)."""
        evo = sum(abs(e.evolution_increment) for e in self.entries)
        absorb = sum(abs(e.absorption_increment) for e in self.entries[:-1])
        return 0.0, evo, absorb, 0.0

    def max_nonlinear_part(self) -> float:
        return max((e.nonlinear_part for e in self.entries), default=0.0)

    def max_audit_error(self) -> float:
        return max((e.audit_error for e in self.entries), default=0.0)


def interval_schedule(T: float, delta: float) -> list[float]:
    """Interval lengths covering [0, T]: delta repeated, with a shorter final piece."""
    if T <= 0:
        return []
    J = max(1, math.ceil(T / delta - 1e-9))
    lengths = [delta] * (J - 1)
    lengths.append(T - delta * (J - 1))
    return lengths


def interval_config(length: float, icfg: IntegratorConfig) -> IntegratorConfig:
    """Step size dividing ``length`` evenly, no larger than icfg.dt."""
    steps = max(1, math.ceil(length / icfg.dt - 1e-9))
    return replace(icfg, dt=length / steps, record_every=steps)


def iterate_highlow(
    u0: SpectralField,
    n0_plus: SpectralField,
    n0_minus: SpectralField,
    T: float,
    cfg: HighLowConfig,
    icfg: IntegratorConfig,
    real: bool = True,
    max_intervals: int = 100_000,
    audit: bool = True,
) -> GrowthLedger:
    """Run the high-low iteration over [0, T].

    On each interval the low system and the full system are advanced; the difference is
    decomposed into the free flow of the high data plus (v, m~), which is then absorbed
    into the low solution. ``audit`` compares low + free high flow against a separately
    evolved full solution at every interval boundary.
    """
    grid = check_same_grid(u0, n0_plus, n0_minus)
    I = build_imultiplier(cfg.N_I, cfg.s, grid)
    low_p, high_p = split_data(n0_plus, cfg.N_HL)
    low_m, high_m = split_data(n0_minus, cfg.N_HL)
    full = ZakharovState(u0, n0_plus, n0_minus, 0.0, real)
    low = ZakharovState(u0, low_p, low_m, 0.0, real)
    full0 = full
    oracle = full

    lengths = interval_schedule(T, cfg.delta)
    ledger = GrowthLedger(cfg, planned_intervals=len(lengths))
    if len(lengths) > max_intervals:
        ledger.complete = False
        lengths = lengths[:max_intervals]

    for j, length in enumerate(lengths, start=1):
        step_cfg = interval_config(length, icfg)
        e_start = i_energy(low, I)
        try:
            low_end = evolve(low, length, step_cfg, record=False).final
            full_end = evolve(full, length, step_cfg, record=False).final
        except BlowUpError as exc:
            ledger.complete = False
            raise DifferenceBlowUp(f"interval {j}: {exc}", exc.last_state, None, None) from exc
        dec = decompose(full_end, low_end, high_p, high_m, full_end.time)
        absorbed = low_end.with_fields(
            # no re-projection: the integrator keeps u's modes above the dealias cutoff
            u=low_end.u + dec.v,
            n_plus=low_end.n_plus + dec.m_tilde_plus,
            n_minus=low_end.n_minus + dec.m_tilde_minus,
        )
        entry = LedgerEntry(
            j=j,
            t_start=low.time,
            t_end=full_end.time,
            energy_start=e_start,
            energy_end=i_energy(low_end, I),
            energy_absorbed=i_energy(absorbed, I),
            v_norm=sobolev_norm(dec.v, cfg.s),
            m_tilde_norm=sobolev_norm(dec.m_tilde_plus, 0) + sobolev_norm(dec.m_tilde_minus, 0),
            nonlinear_part=nonlinear_part_norm(full_end, full0, cfg.s),
        )
        if audit:
            oracle = evolve(oracle, length, step_cfg, record=False).final
            lp, lm = linear_high(high_p, high_m, full_end.time)
            entry.audit_error = float(max(
                np.abs(absorbed.u.coeffs - oracle.u.coeffs).max(),
                np.abs(absorbed.n_plus.coeffs + lp.coeffs - oracle.n_plus.coeffs).max(),
                np.abs(absorbed.n_minus.coeffs + lm.coeffs - oracle.n_minus.coeffs).max(),
            ))
        ledger.entries.append(entry)
        low, full = absorbed, full_end
    return ledger


def default_config(u0: SpectralField, n0_plus: SpectralField, s: float, beta: float, N_HL: int, **kw) -> HighLowConfig:
    """Config whose K and C1 are read off the data (H^s norm of u0, FL^beta norm of n0+)."""
    K = sobolev_norm(u0, s)
    C1 = fl_norm(n0_plus, beta)
    return HighLowConfig.build(s, beta, N_HL, K=K, C1=C1, **kw)
