"""Zakharov states, initial-data generators and the binary/CSV state formats."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal

import numpy as np

from .spectral import (
    GridSpec,
    SpectralField,
    D_inverse_symbol,
    apply_symbol,
    check_same_grid,
)

MEAN_TOL = 1e-12
REALITY_TOL = 1e-12


class DataError(ValueError):
    """Initial data or state violates a structural requirement."""


def japanese(k) -> np.ndarray:
    """<k> = (1 + k^2)^(1/2)."""
    return np.sqrt(1.0 + np.asarray(k, dtype=float) ** 2)


def reality_defect(n_plus: SpectralField, n_minus: SpectralField) -> float:
    """max_k |n-(k) - conj(n+(-k))|; zero iff n and n_t are real."""
    d = np.abs(n_minus.coeffs - np.conj(n_plus.grid.reflect(n_plus.coeffs)))
    d[n_plus.grid.num_modes // 2] = 0.0
    return float(d.max())


@dataclass(frozen=True, eq=False)
class ZakharovState:
    u: SpectralField
    n_plus: SpectralField
    n_minus: SpectralField
    time: float = 0.0
    real: bool = True

    def __post_init__(self):
        check_same_grid(self.u, self.n_plus, self.n_minus)
        for name in ("n_plus", "n_minus"):
            if abs(getattr(self, name).coeffs[0]) > MEAN_TOL:
                raise DataError(f"{name} must be mean-zero")
        if self.real and reality_defect(self.n_plus, self.n_minus) > REALITY_TOL * max(
            1.0, np.abs(self.n_plus.coeffs).max()
        ):
            raise DataError("reality flag set but n-(k) != conj(n+(-k))")

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    def with_fields(self, u=None, n_plus=None, n_minus=None, time=None) -> "ZakharovState":
        return replace(
            self,
            u=self.u if u is None else u,
            n_plus=self.n_plus if n_plus is None else n_plus,
            n_minus=self.n_minus if n_minus is None else n_minus,
            time=self.time if time is None else time,
        )

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.u.coeffs, self.n_plus.coeffs, self.n_minus.coeffs

    @classmethod
    def from_arrays(cls, grid, u, n_plus, n_minus, time=0.0, real=True) -> "ZakharovState":
        return cls(
            SpectralField(u, grid, False),
            SpectralField(n_plus, grid, False),
            SpectralField(n_minus, grid, False),
            time,
            real,
        )

    @classmethod
    def zeros(cls, grid: GridSpec) -> "ZakharovState":
        z = SpectralField.zeros(grid)
        return cls(SpectralField.zeros(grid, hermitian=False), z, z, 0.0, True)


# ---------------------------------------------------------------------------
# (n, n_t) <-> (n+, n-)


def make_wave_pair(n0: SpectralField, n1: SpectralField) -> tuple[SpectralField, SpectralField]:
    """n+- = n0 +- i D^{-1} n1 for real, mean-zero n0 and n1."""
    check_same_grid(n0, n1)
    for name, f in (("n0", n0), ("n1", n1)):
        if abs(f.coeffs[0]) > MEAN_TOL:
            raise DataError(f"{name} has nonzero mean {abs(f.coeffs[0]):.3e}; de-mean it first")
        if f.hermitian_defect() > REALITY_TOL * max(1.0, np.abs(f.coeffs).max()):
            raise DataError(f"{name} must be real-valued (hermitian coefficients)")
    w = apply_symbol(n1, D_inverse_symbol).coeffs
    grid = n0.grid
    return (
        SpectralField(n0.coeffs + 1j * w, grid, False),
        SpectralField(n0.coeffs - 1j * w, grid, False),
    )


def recover_n(n_plus: SpectralField, n_minus: SpectralField) -> SpectralField:
    """n = (n+ + n-) / 2."""
    grid = check_same_grid(n_plus, n_minus)
    herm = reality_defect(n_plus, n_minus) <= REALITY_TOL * max(1.0, np.abs(n_plus.coeffs).max())
    return SpectralField(0.5 * (n_plus.coeffs + n_minus.coeffs), grid, herm)


def recover_nt(n_plus: SpectralField, n_minus: SpectralField) -> SpectralField:
    """n_t = D (n+ - n-) / (2i)."""
    grid = check_same_grid(n_plus, n_minus)
    return SpectralField(np.abs(grid.k) * (n_plus.coeffs - n_minus.coeffs) / 2j, grid, False)


# ---------------------------------------------------------------------------
# data generators


def _symmetrize(grid: GridSpec, positive: np.ndarray, kmin: int = 1) -> np.ndarray:
    """Place values for k = kmin..kmin+len-1 and mirror them conjugated onto -k."""
    c = np.zeros(grid.num_modes, dtype=np.complex128)
    ks = np.arange(kmin, kmin + len(positive))
    c[ks] = positive
    c[-ks] = np.conj(positive)
    return c


def fl_data(
    beta: float,
    C1: float,
    kmin: int,
    seed: int,
    grid: GridSpec,
    saturate: bool = False,
) -> SpectralField:
    """Real Fourier-Lebesgue data sum h_k <k>^-beta e^{ikx} on kmin <= |k| <= M//3.

    ``h_k`` is uniform on the disk of radius C1 (``saturate`` puts it on the circle).
    Draws are made in order of increasing k, so grids of different size share
    their common modes for a fixed seed.
    """
    if not 0 < beta <= 0.5:
        raise DataError(f"beta must lie in (0, 1/2], got {beta}")
    if C1 < 0:
        raise DataError("C1 must be non-negative")
    if kmin < 1:
        raise DataError("kmin must be >= 1")
    kmax = grid.dealias_cutoff
    count = max(kmax - kmin + 1, 0)
    rng = np.random.default_rng(seed)
    draws = rng.random((count, 2))
    radius = C1 * (np.ones(count) if saturate else np.sqrt(draws[:, 0]))
    h = radius * np.exp(2j * np.pi * draws[:, 1])
    ks = np.arange(kmin, kmin + count)
    return SpectralField(_symmetrize(grid, h / japanese(ks) ** beta, kmin), grid, True)


def gibbs_sample(r: float, epsilon: float, seed: int, grid: GridSpec) -> SpectralField:
    """Real Gaussian data sum g_k <k>^{-(r + 1/2 + epsilon)} e^{ikx}, g_k standard complex normal."""
    if epsilon <= 0:
        raise DataError("epsilon must be positive")
    kmax = grid.dealias_cutoff
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((kmax, 2)) @ np.array([1.0, 1j]) / np.sqrt(2.0)
    ks = np.arange(1, kmax + 1)
    return SpectralField(_symmetrize(grid, g / japanese(ks) ** (r + 0.5 + epsilon)), grid, True)


def plane_wave(amplitude: complex, k: int, grid: GridSpec) -> SpectralField:
    if abs(k) > grid.dealias_cutoff:
        raise DataError(f"|k|={abs(k)} exceeds dealias cutoff {grid.dealias_cutoff}")
    c = np.zeros(grid.num_modes, dtype=np.complex128)
    c[grid.index(k)] = amplitude
    return SpectralField(c, grid, amplitude == 0)


def sobolev_data(s: float, amplitude: float, seed: int, grid: GridSpec, kmax: int | None = None) -> SpectralField:
    """Complex Schroedinger data with random phases and |c_k| = amplitude <k>^-(s + 1/2).

    Norm in H^{s-} is finite uniformly in M; H^s grows like sqrt(log M).
    Pass a small ``kmax`` for smooth (band-limited) data.
    """
    kmax = grid.dealias_cutoff if kmax is None else min(kmax, grid.dealias_cutoff)
    rng = np.random.default_rng(seed)
    ks = np.arange(-kmax, kmax + 1)
    phases = np.exp(2j * np.pi * rng.random(len(ks)))
    c = np.zeros(grid.num_modes, dtype=np.complex128)
    c[ks % grid.num_modes] = amplitude * phases / japanese(ks) ** (s + 0.5)
    return SpectralField(c, grid, False)


def smooth_data(seed: int, grid: GridSpec, kmax: int = 8, amplitude: float = 0.5, real: bool = False) -> SpectralField:
    """Band-limited data with Gaussian-decaying spectrum, for conservation and order tests."""
    kmax = min(kmax, grid.dealias_cutoff)
    rng = np.random.default_rng(seed)
    if real:
        ks = np.arange(1, kmax + 1)
        g = rng.standard_normal((kmax, 2)) @ np.array([1.0, 1j])
        vals = amplitude * g * np.exp(-0.5 * (ks / (kmax / 2)) ** 2)
        return SpectralField(_symmetrize(grid, vals), grid, True)
    ks = np.arange(-kmax, kmax + 1)
    g = rng.standard_normal((len(ks), 2)) @ np.array([1.0, 1j])
    c = np.zeros(grid.num_modes, dtype=np.complex128)
    c[ks % grid.num_modes] = amplitude * g * np.exp(-0.5 * (ks / (kmax / 2)) ** 2)
    return SpectralField(c, grid, False)


# ---------------------------------------------------------------------------
# recipes


DataKind = Literal["fl_deterministic", "gibbs_gaussian", "plane_wave", "smooth", "zero"]


@dataclass(frozen=True)
class DataRecipe:
    """Parameter record for a full initial state.

    ``coupled`` makes n- the conjugate reflection of n+ (real n, n_t); otherwise
    n+ and n- come from independent draws and the state is not physically real.
    """

    kind: DataKind = "smooth"
    s: float = 0.6
    beta: float = 0.45
    C1: float = 1.0
    r: float = -0.1
    epsilon: float = 0.05
    seed: int = 0
    kmin: int = 1
    u_amplitude: float = 0.5
    u_kmax: int = 8
    plane_k: int = 1
    coupled: bool = True

    def __post_init__(self):
        if self.kind not in ("fl_deterministic", "gibbs_gaussian", "plane_wave", "smooth", "zero"):
            raise DataError(f"unknown data kind {self.kind!r}")
        if self.kind == "fl_deterministic":
            if not 0.5 < self.s < 1:
                raise DataError("s must lie in (1/2, 1)")
            if not 0 < self.beta <= 0.5:
                raise DataError("beta must lie in (0, 1/2]")
            if self.C1 <= 0:
                raise DataError("C1 must be positive")
        if self.kind == "gibbs_gaussian" and self.epsilon <= 0:
            raise DataError("epsilon must be positive")

    def build(self, grid: GridSpec) -> ZakharovState:
        if self.kind == "zero":
            return ZakharovState.zeros(grid)
        if self.kind == "plane_wave":
            z = SpectralField.zeros(grid)
            return ZakharovState(plane_wave(self.u_amplitude, self.plane_k, grid), z, z)
        if self.kind == "smooth":
            u = smooth_data(self.seed, grid, self.u_kmax, self.u_amplitude)
            a = smooth_data(self.seed + 1, grid, self.u_kmax, self.u_amplitude, real=True)
            b = smooth_data(self.seed + 2, grid, self.u_kmax, self.u_amplitude, real=True)
            return self._from_wave_parts(u, a, b)
        u = sobolev_data(self.s, self.u_amplitude, self.seed, grid)
        if self.kind == "fl_deterministic":
            a = fl_data(self.beta, self.C1, self.kmin, self.seed + 1, grid)
            b = fl_data(self.beta, self.C1, self.kmin, self.seed + 2, grid)
        else:
            a = gibbs_sample(self.r, self.epsilon, self.seed + 1, grid)
            b = gibbs_sample(self.r, self.epsilon, self.seed + 2, grid)
        return self._from_wave_parts(u, a, b)

    def _from_wave_parts(self, u, a, b) -> ZakharovState:
        # a, b real: coupled -> n+- = a +- i b; independent -> n+ = a, n- = b
        if self.coupled:
            return ZakharovState(u, a + b * 1j, a - b * 1j, 0.0, True)
        return ZakharovState(u, a.with_coeffs(a.coeffs, False), b.with_coeffs(b.coeffs, False), 0.0, False)


# ---------------------------------------------------------------------------
# file formats
#
# Binary layout (little-endian):
#   magic  b"ZKST"            4 bytes
#   version uint32 (=1)
#   M      uint32
#   flags  uint32             bit 0: reality flag
#   time   float64
#   u, n+, n- : M complex coefficients each, k = -M/2 .. M/2-1, as (re, im) float64 pairs

MAGIC = b"ZKST"
VERSION = 1
_HEADER = struct.Struct("<4sIIId")


def _centered(c: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(c)


def state_to_bytes(state: ZakharovState) -> bytes:
    M = state.grid.num_modes
    head = _HEADER.pack(MAGIC, VERSION, M, int(state.real), float(state.time))
    body = np.concatenate([_centered(c) for c in state.arrays()]).astype("<c16")
    return head + body.view("<f8").tobytes()


def state_from_bytes(data: bytes) -> ZakharovState:
    if len(data) < _HEADER.size:
        raise DataError("truncated state header")
    magic, version, M, flags, time = _HEADER.unpack_from(data)
    if magic != MAGIC or version != VERSION:
        raise DataError("not a state file (bad magic or version)")
    expected = _HEADER.size + 3 * M * 16
    if len(data) != expected:
        raise DataError(f"state file size {len(data)} != expected {expected}")
    vals = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).view("<c16").astype(np.complex128)
    grid = GridSpec(M)
    u, p, m = (np.fft.ifftshift(vals[i * M:(i + 1) * M]) for i in range(3))
    return ZakharovState.from_arrays(grid, u, p, m, time, bool(flags & 1))


def save_state(state: ZakharovState, path) -> None:
    Path(path).write_bytes(state_to_bytes(state))


def load_state(path) -> ZakharovState:
    return state_from_bytes(Path(path).read_bytes())


def export_csv(state: ZakharovState, path) -> None:
    """Human-readable (field, k, re, im) rows, k ascending."""
    ks = np.fft.fftshift(state.grid.k)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["field", "k", "re", "im"])
        for name, c in zip(("u", "n_plus", "n_minus"), state.arrays()):
            for k, v in zip(ks, _centered(c)):
                w.writerow([name, int(k), repr(float(v.real)), repr(float(v.imag))])


def import_csv(path, time: float = 0.0, real: bool = True) -> ZakharovState:
    rows: dict[str, dict[int, complex]] = {"u": {}, "n_plus": {}, "n_minus": {}}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows[row["field"]][int(row["k"])] = complex(float(row["re"]), float(row["im"]))
    M = len(rows["u"])
    grid = GridSpec(M)
    arrays = []
    for name in ("u", "n_plus", "n_minus"):
        c = np.zeros(M, dtype=np.complex128)
        for k, v in rows[name].items():
            c[grid.index(k)] = v
        arrays.append(c)
    return ZakharovState.from_arrays(grid, *arrays, time=time, real=real)
