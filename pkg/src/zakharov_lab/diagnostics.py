"""Scalar functionals: norms, mass, Hamiltonian, the I-multiplier and smoothed energy.

Every functional is a plain coefficient sum, i.e. L^2 norms are taken with respect
to dx/(2*pi). This rescales all energies uniformly and leaves conservation intact.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .spectral import (
    GridSpec,
    SpectralField,
    apply_symbol,
    check_same_grid,
    is_dyadic,
    schrodinger_propagator,
    wave_propagator,
)
from .state import ZakharovState, japanese

IMAG_TOL = 1e-10

# Weight of (||n+||^2 + ||n-||^2) in the conserved energy. With n+- = n +- i D^{-1} n_t
# the invariant of the first-order system is ||u_x||^2 + (||n+||^2 + ||n-||^2)/4
# + (1/2) int (n+ + n-)|u|^2; a weight of 1/2 on the wave part is not conserved.
WAVE_WEIGHT = 0.25


class NumericalIntegrityError(ArithmeticError):
    """A quantity that must be real came out with a significant imaginary part."""


def sobolev_norm(f: SpectralField, s: float) -> float:
    return float(np.sqrt(np.sum(japanese(f.grid.k) ** (2 * s) * np.abs(f.coeffs) ** 2)))


def fl_norm(f: SpectralField, beta: float) -> float:
    """sup_k <k>^beta |c_k| (the FL^{beta, infinity} norm)."""
    return float(np.max(japanese(f.grid.k) ** beta * np.abs(f.coeffs)))


def mass(u: SpectralField) -> float:
    return float(np.sum(np.abs(u.coeffs) ** 2))


def _padded_samples(c: np.ndarray, P: int) -> np.ndarray:
    """Physical values on a P-point grid of the trigonometric polynomial with FFT-ordered coeffs c."""
    M = len(c)
    out = np.zeros(P, dtype=np.complex128)
    half = M // 2
    out[:half] = c[:half]
    out[P - half:] = c[half:]
    return np.fft.ifft(out) * P


def cubic_term_quadrature(u: SpectralField, n_plus: SpectralField, n_minus: SpectralField) -> complex:
    """(1/2) mean_x (n+ + n-) |u|^2, by quadrature on a 2M grid (exact for degree < 2M)."""
    P = 2 * u.grid.num_modes
    uu = _padded_samples(u.coeffs, P)
    nn = _padded_samples(n_plus.coeffs + n_minus.coeffs, P)
    return complex(0.5 * np.mean(nn * np.abs(uu) ** 2))


def cubic_term_convolution(u: SpectralField, n_plus: SpectralField, n_minus: SpectralField) -> complex:
    """Same quantity as a coefficient sum: (1/2) sum_k (n+ + n-)^(k) w(-k), w = spectrum of |u|^2."""
    M = u.grid.num_modes
    a = np.fft.fftshift(u.coeffs)  # a[i] = u^(i - M/2)
    # w_full[p] = sum_j u^(j) conj(u^(j - k)) with k = p - (M - 1)
    w_full = np.convolve(a, np.conj(a[::-1]))
    ks = np.arange(M) - M // 2
    nsum = np.fft.fftshift(n_plus.coeffs + n_minus.coeffs)
    return complex(0.5 * np.sum(nsum * w_full[M - 1 - ks]))


def _real_or_raise(value: complex, strict: bool, scale: float) -> float:
    if strict and abs(value.imag) > IMAG_TOL * max(1.0, scale):
        raise NumericalIntegrityError(f"imaginary residual {value.imag:.3e} in a real functional")
    return float(value.real)


def hamiltonian_parts(state: ZakharovState, u: Optional[SpectralField] = None) -> tuple[float, float, complex]:
    """(kinetic, wave, cubic) contributions; ``u`` overrides state.u (used for I u)."""
    u = state.u if u is None else u
    kinetic = float(np.sum(state.grid.k.astype(float) ** 2 * np.abs(u.coeffs) ** 2))
    wave = WAVE_WEIGHT * (state.n_plus.l2_sq() + state.n_minus.l2_sq())
    cubic = cubic_term_quadrature(u, state.n_plus, state.n_minus)
    return kinetic, wave, cubic


def hamiltonian(state: ZakharovState, u: Optional[SpectralField] = None) -> float:
    """Conserved energy ||u_x||^2 + (||n+||^2 + ||n-||^2)/4 + (1/2) int (n+ + n-)|u|^2."""
    kinetic, wave, cubic = hamiltonian_parts(state, u)
    c = _real_or_raise(cubic, state.real, abs(cubic.real))
    return kinetic + wave + c


# ---------------------------------------------------------------------------
# I-method multiplier


def _smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def multiplier_symbol(k, N_I: int, s: float) -> np.ndarray:
    """m(k): 1 for |k| <= N_I, (N_I/|k|)^(1-s) for |k| >= 2 N_I, log-smoothstep in between."""
    a = np.abs(np.asarray(k, dtype=float))
    out = np.ones(a.shape)
    hi = a > N_I
    x = np.log2(a[hi] / N_I)
    out[hi] = (N_I / a[hi]) ** (_smoothstep(x) * (1.0 - s))
    return out


@dataclass(frozen=True, eq=False)
class IMultiplier:
    N_I: int
    s: float
    grid: GridSpec
    table: np.ndarray = field(repr=False)

    def __call__(self, k) -> np.ndarray:
        return multiplier_symbol(k, self.N_I, self.s)


def build_imultiplier(N_I: int, s: float, grid: GridSpec) -> IMultiplier:
    if not 0.5 < s < 1:
        raise ValueError(f"s must lie in (1/2, 1), got {s}")
    if not is_dyadic(N_I):
        raise ValueError(f"N_I must be dyadic, got {N_I}")
    table = multiplier_symbol(grid.k, N_I, s)
    table.setflags(write=False)
    return IMultiplier(N_I, s, grid, table)


def apply_I(f: SpectralField, I: IMultiplier) -> SpectralField:
    check_same_grid(f, SpectralField.zeros(I.grid))
    return apply_symbol(f, I.table)


def i_energy(state: ZakharovState, I: IMultiplier) -> float:
    """Smoothed energy E(I u, n+-): the modified energy with its correction multiplier set to 1."""
    return hamiltonian(state, apply_I(state.u, I))


def linear_reference(initial: ZakharovState, t: float) -> tuple[SpectralField, SpectralField, SpectralField]:
    """Exact linear flows of the initial data after elapsed time t."""
    return (
        apply_symbol(initial.u, schrodinger_propagator(t)),
        apply_symbol(initial.n_plus, wave_propagator(t, +1)),
        apply_symbol(initial.n_minus, wave_propagator(t, -1)),
    )


def nonlinear_part_norm(state: ZakharovState, initial: ZakharovState, s: float) -> float:
    """||u - U(t)u0||_{H^s} + ||n+ - W+(t)n0+||_{L^2} + ||n- - W-(t)n0-||_{L^2}."""
    check_same_grid(state.u, initial.u)
    t = state.time - initial.time
    if t < -1e-12:
        raise ValueError("state precedes the initial state")
    ul, pl, ml = linear_reference(initial, t)
    return (
        sobolev_norm(state.u - ul, s)
        + sobolev_norm(state.n_plus - pl, 0.0)
        + sobolev_norm(state.n_minus - ml, 0.0)
    )


# ---------------------------------------------------------------------------
# reports


@dataclass
class EnergyReport:
    time: float
    mass: float
    hamiltonian: float
    i_energy: float
    sobolev_u: float
    l2_wave: float
    fl_wave: float
    nonlinear_part_norm: float = 0.0


def energy_report(
    state: ZakharovState,
    I: IMultiplier,
    s: float,
    beta: float,
    initial: Optional[ZakharovState] = None,
) -> EnergyReport:
    return EnergyReport(
        time=state.time,
        mass=mass(state.u),
        hamiltonian=hamiltonian(state),
        i_energy=i_energy(state, I),
        sobolev_u=sobolev_norm(state.u, s),
        l2_wave=float(np.sqrt(state.n_plus.l2_sq() + state.n_minus.l2_sq())),
        fl_wave=max(fl_norm(state.n_plus, beta), fl_norm(state.n_minus, beta)),
        nonlinear_part_norm=0.0 if initial is None else nonlinear_part_norm(state, initial, s),
    )


REPORT_COLUMNS = [f.name for f in fields(EnergyReport)]


class ReportWriter:
    """Appends EnergyReport rows to a CSV file, optionally tagged with a run id."""

    def __init__(self, path, run_id: Optional[str] = None):
        self.path = path
        self.run_id = run_id
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow((["run_id"] if run_id else []) + REPORT_COLUMNS)

    def write(self, rep: EnergyReport) -> None:
        row = [repr(float(v)) for v in asdict(rep).values()]
        self._w.writerow(([self.run_id] if self.run_id else []) + row)

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
