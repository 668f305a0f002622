"""Periodic spectral grid, transforms, Fourier multipliers and frequency projections.

Coefficient convention: a field on [0, 2*pi) is written f(x) = sum_k c_k exp(ikx),
so ``c = fft(samples) / M``. Coefficients are stored in numpy FFT order, i.e. index
``j`` holds frequency ``grid.k[j]`` with ``k`` running over {-M/2, ..., M/2 - 1}.
All norms elsewhere in the package are plain coefficient sums (no factor 2*pi).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np

Symbol = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]

HERMITIAN_TOL = 1e-12


class GridError(ValueError):
    """Invalid grid parameters or mismatched grids."""


@dataclass(frozen=True)
class GridSpec:
    num_modes: int
    domain_length: float = 2 * np.pi

    def __post_init__(self):
        M = self.num_modes
        if M < 16 or M & (M - 1):
            raise GridError(f"num_modes must be a power of two >= 16, got {M}")
        if self.domain_length != 2 * np.pi:
            raise GridError("only the 2*pi torus is supported")

    @property
    def dealias_cutoff(self) -> int:
        return self.num_modes // 3

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumbers in FFT order."""
        k = np.fft.fftfreq(self.num_modes, d=1.0 / self.num_modes).round().astype(np.int64)
        k.setflags(write=False)
        return k

    @cached_property
    def x(self) -> np.ndarray:
        x = 2 * np.pi * np.arange(self.num_modes) / self.num_modes
        x.setflags(write=False)
        return x

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        mask = np.abs(self.k) <= self.dealias_cutoff
        mask.setflags(write=False)
        return mask

    def index(self, k: int) -> int:
        """Array position of wavenumber ``k``."""
        M = self.num_modes
        if not -M // 2 <= k < M // 2:
            raise GridError(f"wavenumber {k} not representable on M={M}")
        return k % M

    def reflect(self, arr: np.ndarray) -> np.ndarray:
        """Return ``b`` with ``b[k] = arr[-k]`` (the -M/2 mode maps to itself)."""
        return np.roll(arr[::-1], 1)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable Fourier coefficient vector on a :class:`GridSpec`.

    ``hermitian`` marks fields whose physical-space values are real.
    """

    coeffs: np.ndarray
    grid: GridSpec
    hermitian: bool = False

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.num_modes,):
            raise GridError(f"expected {self.grid.num_modes} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: GridSpec, hermitian: bool = True) -> "SpectralField":
        return cls(np.zeros(grid.num_modes, dtype=np.complex128), grid, hermitian)

    def __getitem__(self, k: int) -> complex:
        return complex(self.coeffs[self.grid.index(k)])

    def with_coeffs(self, coeffs: np.ndarray, hermitian: bool | None = None) -> "SpectralField":
        return SpectralField(coeffs, self.grid, self.hermitian if hermitian is None else hermitian)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        check_same_grid(self, other)
        return SpectralField(self.coeffs + other.coeffs, self.grid, self.hermitian and other.hermitian)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        check_same_grid(self, other)
        return SpectralField(self.coeffs - other.coeffs, self.grid, self.hermitian and other.hermitian)

    def __mul__(self, scalar) -> "SpectralField":
        scalar = complex(scalar)
        return SpectralField(self.coeffs * scalar, self.grid, self.hermitian and scalar.imag == 0)

    __rmul__ = __mul__

    def hermitian_defect(self) -> float:
        """max_k |c(-k) - conj(c(k))| over representable pairs (the -M/2 mode excluded)."""
        c = self.coeffs
        d = np.abs(self.grid.reflect(c) - np.conj(c))
        d[self.grid.num_modes // 2] = 0.0
        return float(d.max())

    def l2_sq(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))


def check_same_grid(*fields: SpectralField) -> GridSpec:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridError(f"grid mismatch: M={grid.num_modes} vs M={f.grid.num_modes}")
    return grid


def to_spectral(samples, grid: GridSpec, hermitian: bool | None = None) -> SpectralField:
    """Interpolating coefficients of grid samples taken at x_j = 2*pi*j/M."""
    samples = np.asarray(samples)
    if samples.shape != (grid.num_modes,):
        raise GridError(f"expected {grid.num_modes} samples, got shape {samples.shape}")
    if hermitian is None:
        hermitian = not np.iscomplexobj(samples)
    return SpectralField(np.fft.fft(samples) / grid.num_modes, grid, hermitian)


def from_spectral(f: SpectralField) -> np.ndarray:
    """Evaluate sum_k c_k exp(i k x_j) on the grid."""
    return np.fft.ifft(f.coeffs) * f.grid.num_modes


def _tabulate(symbol: Symbol, grid: GridSpec) -> np.ndarray:
    if callable(symbol):
        table = np.asarray(symbol(grid.k))
    else:
        table = np.asarray(symbol)
    if table.shape == ():
        table = np.full(grid.num_modes, table)
    if table.shape != (grid.num_modes,):
        raise GridError("symbol must be defined on every grid frequency")
    return table


def symbol_is_hermitian(table: np.ndarray, grid: GridSpec) -> bool:
    ref = grid.reflect(table)
    return bool(np.allclose(ref, np.conj(table), rtol=0, atol=1e-15 * max(1.0, np.abs(table).max())))


def apply_symbol(f: SpectralField, symbol: Symbol) -> SpectralField:
    """Multiply coefficients by ``symbol(k)`` (an array in FFT order or a callable of k)."""
    table = _tabulate(symbol, f.grid)
    herm = f.hermitian and symbol_is_hermitian(table, f.grid)
    return SpectralField(f.coeffs * table, f.grid, herm)


# Standard symbols. Each takes the integer wavenumber array.

def D_symbol(k: np.ndarray) -> np.ndarray:
    return np.abs(k).astype(float)


def laplacian_symbol(k: np.ndarray) -> np.ndarray:
    return -(k.astype(float) ** 2)


def D_inverse_symbol(k: np.ndarray) -> np.ndarray:
    """1/|k| off zero, 0 at k=0 (D^{-1} acts on mean-zero fields only)."""
    out = np.zeros(k.shape)
    nz = k != 0
    out[nz] = 1.0 / np.abs(k[nz])
    return out


def schrodinger_propagator(t: float) -> Callable[[np.ndarray], np.ndarray]:
    """Symbol of exp(it*Laplacian): solves i u_t + u_xx = 0."""
    return lambda k: np.exp(-1j * (k.astype(float) ** 2) * t)


def wave_propagator(t: float, sign: int) -> Callable[[np.ndarray], np.ndarray]:
    """Symbol exp(-+ i|k|t) solving i n_t -+ D n = 0 for sign = +1 / -1."""
    return lambda k: np.exp(-1j * sign * np.abs(k) * t)


def dealias(f: SpectralField) -> SpectralField:
    """2/3 rule: zero every |k| > floor(M/3)."""
    return SpectralField(np.where(f.grid.dealias_mask, f.coeffs, 0), f.grid, f.hermitian)


def project_leq(f: SpectralField, N: int) -> SpectralField:
    if N < 0:
        raise ValueError("N must be non-negative")
    return SpectralField(np.where(np.abs(f.grid.k) <= N, f.coeffs, 0), f.grid, f.hermitian)


def project_gt(f: SpectralField, N: int) -> SpectralField:
    """Complement of :func:`project_leq`."""
    if N < 0:
        raise ValueError("N must be non-negative")
    return SpectralField(np.where(np.abs(f.grid.k) > N, f.coeffs, 0), f.grid, f.hermitian)


def is_dyadic(N: int) -> bool:
    return isinstance(N, (int, np.integer)) and N >= 1 and not (N & (N - 1))


def dyadic_shell(k: np.ndarray) -> np.ndarray:
    """Dyadic shell label of each |k|: 1 for |k| <= 1, else the N with N <= |k| < 2N."""
    a = np.abs(np.asarray(k, dtype=np.int64))
    out = np.ones(a.shape, dtype=np.int64)
    big = a >= 2
    # floor(log2) via bit length avoids float rounding at exact powers of two
    out[big] = 1 << (np.frexp(a[big].astype(float))[1] - 1)
    return out


def shell_mask(k: np.ndarray, N: int) -> np.ndarray:
    if not is_dyadic(N):
        raise ValueError(f"N must be dyadic, got {N}")
    return dyadic_shell(k) == N


def dyadic_range(max_abs: int) -> list[int]:
    """All shells meeting {|k| <= max_abs}."""
    out, N = [1], 2
    while N <= max_abs:
        out.append(N)
        N *= 2
    return out


def project_dyadic(f: SpectralField, N: int) -> SpectralField:
    return SpectralField(np.where(shell_mask(f.grid.k, N), f.coeffs, 0), f.grid, f.hermitian)
