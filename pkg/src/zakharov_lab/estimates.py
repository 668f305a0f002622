"""Brute-force checks of the harmonic-analysis ingredients.

* resonance algebra for the Schroedinger-wave interaction (exact integer arithmetic);
* the space-time counting bound |B(k, tau)| <~ L N on the integer (k, tau) lattice;
* random and adversarial probes of the bilinear L^2 estimate for wave blocks;
* Besov-type restriction norms of sampled space-time arrays.

Time frequencies live on the integer lattice. Shell conventions follow
:func:`zakharov_lab.spectral.dyadic_shell` for both |k| and the modulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Literal, Optional, Sequence

import numpy as np
import scipy.fft as sfft

from .spectral import GridSpec, dyadic_shell, is_dyadic

BlockKind = Literal["schrodinger", "wave_plus", "wave_minus"]
ShellFn = Callable[[np.ndarray, int], np.ndarray]

COUNT_ENVELOPE = 16


def dyadic_shell_fn(x: np.ndarray, N: int) -> np.ndarray:
    """|x| in shell N: |x| <= 1 for N = 1, N <= |x| < 2N otherwise."""
    return dyadic_shell(x) == N


def overlapping_shell_fn(x: np.ndarray, N: int) -> np.ndarray:
    """Deliberately wrong convention |x| <= 2N (shells overlap); negative control only."""
    return np.abs(x) <= 2 * N


SHELLS: dict[str, ShellFn] = {"dyadic": dyadic_shell_fn, "overlapping": overlapping_shell_fn}


def _sgn(x):
    return np.sign(x).astype(np.int64)


# ---------------------------------------------------------------------------
# resonance algebra


def resonant_frequencies(k1: int, sign: int) -> tuple[int, int]:
    """(k0, k2) = (2 k1 + sign*lam(k1), -sign*lam(k1) - k1), lam = sign function."""
    if k1 == 0:
        raise ValueError("k1 must be nonzero")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    lam = 1 if k1 > 0 else -1
    return 2 * k1 + sign * lam, -sign * lam - k1


def resonance_function(k0, k2, sign):
    """|k0| * |k0 + 2 k2 + sign*lam(k0)| (vectorised over integer arrays)."""
    k0 = np.asarray(k0, dtype=np.int64)
    k2 = np.asarray(k2, dtype=np.int64)
    return np.abs(k0) * np.abs(k0 + 2 * k2 + sign * _sgn(k0))


def resonance_identity_check(k0, k2, tau0, tau2, sign):
    """Difference of the two sides of the modulation identity; identically zero.

    Left side is expanded from raw modulations,
    |tau0 + tau2 - (k0+k2)^2 - tau2 + k2^2 - tau0 - sign*|k0||.
    """
    k0 = np.asarray(k0, dtype=np.int64)
    if np.any(k0 == 0):
        raise ValueError("k0 must be nonzero")
    k2 = np.asarray(k2, dtype=np.int64)
    tau0 = np.asarray(tau0, dtype=np.int64)
    tau2 = np.asarray(tau2, dtype=np.int64)
    lhs = np.abs(tau0 + tau2 - (k0 + k2) ** 2 - tau2 + k2 ** 2 - tau0 - sign * np.abs(k0))
    return lhs - resonance_function(k0, k2, sign)


def resonance_sweep(kmax: int = 1000) -> int:
    """Max resonance function over resonant outputs for 0 < |k1| <= kmax, both signs."""
    k1 = np.concatenate([np.arange(-kmax, 0), np.arange(1, kmax + 1)]).astype(np.int64)
    worst = 0
    for sign in (1, -1):
        lam = _sgn(k1)
        k0 = 2 * k1 + sign * lam
        k2 = -sign * lam - k1
        worst = max(worst, int(resonance_function(k0, k2, sign).max()))
    return worst


def resonance_fuzz(n: int = 1_000_000, seed: int = 0, kbound: int = 10**6, tbound: int = 10**9) -> int:
    """Max |residual| of the identity over ``n`` random integer tuples and random signs."""
    rng = np.random.default_rng(seed)
    k0 = rng.integers(1, kbound, n) * rng.choice([-1, 1], n)
    k2 = rng.integers(-kbound, kbound, n)
    t0 = rng.integers(-tbound, tbound, n)
    t2 = rng.integers(-tbound, tbound, n)
    worst = 0
    for sign in (1, -1):
        worst = max(worst, int(np.abs(resonance_identity_check(k0, k2, t0, t2, sign)).max()))
    return worst


# ---------------------------------------------------------------------------
# counting bound


def _admissible_k1(k: int, N: int, shell: ShellFn) -> np.ndarray:
    cand = np.arange(k - 4 * N - 2, k + 4 * N + 3, dtype=np.int64)
    cand = cand[np.abs(cand) <= 4 * N + 2]
    return cand[shell(cand, N) & shell(k - cand, N)]


def count_B(
    k: int,
    tau: int,
    N: int,
    L: int,
    signs: tuple[int, int] = (1, 1),
    shell: ShellFn = dyadic_shell_fn,
) -> int:
    """#{(k1, tau1): |k1|, |k-k1| ~ N; |tau1 + s1|k1||, |tau - tau1 + s2|k-k1|| ~ L}, by enumeration."""
    s1, s2 = signs
    count = 0
    for k1 in _admissible_k1(k, N, shell):
        a1 = s1 * abs(int(k1))
        a2 = s2 * abs(int(k - k1))
        tau1 = np.arange(-a1 - 4 * L - 2, -a1 + 4 * L + 3, dtype=np.int64)
        ok = shell(tau1 + a1, L) & shell(tau - tau1 + a2, L)
        count += int(ok.sum())
    return count


@dataclass
class CountCell:
    N: int
    L: int
    signs: tuple[int, int]
    max_count: int
    argmax: tuple[int, int]

    @property
    def ratio(self) -> float:
        return self.max_count / (self.L * self.N)


def _shell_autoconvolution(L: int, shell: ShellFn) -> tuple[np.ndarray, int]:
    """C(x) = #{a in S: x - a in S}, S = {x : shell(x) == L}; returns (values, offset of x=0)."""
    R = 4 * L + 2
    xs = np.arange(-R, R + 1)
    ind = shell(xs, L).astype(np.int64)
    C = np.convolve(ind, ind)
    return C, 2 * R


def count_B_table(
    N: int,
    L: int,
    signs: tuple[int, int] = (1, 1),
    shell: ShellFn = dyadic_shell_fn,
    kmax: Optional[int] = None,
    taumax: Optional[int] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """|B(k, tau)| for all |k| <= kmax, |tau| <= taumax (defaults 8N, 8(L+N)).

    Uses count(k, tau) = sum over admissible k1 of C(tau + s1|k1| + s2|k-k1|),
    with C the autoconvolution of the modulation shell indicator.
    Returns (ks, taus, counts[len(ks), len(taus)]).
    """
    kmax = 8 * N if kmax is None else kmax
    taumax = 8 * (L + N) if taumax is None else taumax
    s1, s2 = signs
    C, c0 = _shell_autoconvolution(L, shell)
    ks = np.arange(-kmax, kmax + 1)
    taus = np.arange(-taumax, taumax + 1)
    out = np.zeros((len(ks), len(taus)), dtype=np.int64)
    for i, k in enumerate(ks):
        k1 = _admissible_k1(int(k), N, shell)
        if k1.size == 0:
            continue
        shifts = s1 * np.abs(k1) + s2 * np.abs(k - k1)
        # count(tau) = sum_j C(tau + shift_j); index of C for value x is x + c0
        idx = taus[None, :] + shifts[:, None] + c0
        valid = (idx >= 0) & (idx < len(C))
        vals = np.where(valid, C[np.clip(idx, 0, len(C) - 1)], 0)
        out[i] = vals.sum(axis=0)
    return ks, taus, out


def count_sweep(
    N_list: Sequence[int],
    L_list: Sequence[int],
    sign_pairs: Iterable[tuple[int, int]] = ((1, 1), (1, -1), (-1, 1), (-1, -1)),
    shell: ShellFn = dyadic_shell_fn,
) -> list[CountCell]:
    cells = []
    for N in N_list:
        for L in L_list:
            for signs in sign_pairs:
                ks, taus, tab = count_B_table(N, L, tuple(signs), shell)
                i, j = np.unravel_index(np.argmax(tab), tab.shape)
                cells.append(CountCell(N, L, tuple(signs), int(tab[i, j]), (int(ks[i]), int(taus[j]))))
    return cells


# ---------------------------------------------------------------------------
# bilinear estimate


def wave_block(N: int, L: int, sign: int = 1, shell: ShellFn = dyadic_shell_fn):
    """Lattice points of {|k| ~ N} x {|tau + sign|k|| ~ L} as (k, tau) integer arrays."""
    if not (is_dyadic(N) and is_dyadic(L)):
        raise ValueError("N and L must be dyadic")
    kr = 2 * N
    ks = np.arange(-kr, kr + 1)
    ks = ks[shell(ks, N)]
    pts_k, pts_t = [], []
    for k in ks:
        x = np.arange(-2 * L, 2 * L + 1)
        x = x[shell(x, L)]
        pts_k.append(np.full(len(x), k))
        pts_t.append(x - sign * abs(int(k)))
    return np.concatenate(pts_k), np.concatenate(pts_t)


def _convolution_norms(kn, tn, km, tm, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """||a * b||_{l^2(Z^2)} for batches a[B, Pn] on points (kn, tn) and b[B, Pm] on (km, tm)."""
    k0, t0 = min(kn.min(), km.min()), min(tn.min(), tm.min())
    nk = max(kn.max(), km.max()) - k0 + 1
    nt = max(tn.max(), tm.max()) - t0 + 1
    shape = (sfft.next_fast_len(2 * nk - 1), sfft.next_fast_len(2 * nt - 1))
    B = a.shape[0]
    A = np.zeros((B,) + shape, dtype=np.complex128)
    Bm = np.zeros((B,) + shape, dtype=np.complex128)
    A[:, kn - k0, tn - t0] = a
    Bm[:, km - k0, tm - t0] = b
    conv = sfft.ifft2(sfft.fft2(A, axes=(1, 2)) * sfft.fft2(Bm, axes=(1, 2)), axes=(1, 2))
    return np.sqrt(np.sum(np.abs(conv) ** 2, axis=(1, 2)))


def bilinear_ratios(
    N: int,
    L: int,
    trials: int,
    seed: int,
    signs: tuple[int, int] = (1, 1),
    batch: int = 32,
) -> np.ndarray:
    """||n m||_{L^2} / (sqrt(L N) ||n|| ||m||) for ``trials`` random block-supported pairs.

    Each trial draws unit complex Gaussians on every lattice point of the two blocks.
    Trial ``i`` uses the RNG stream seeded by (seed, i), so results do not depend on ``batch``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    kn, tn = wave_block(N, L, signs[0])
    km, tm = wave_block(N, L, signs[1])
    out = np.empty(trials)
    for start in range(0, trials, batch):
        stop = min(trials, start + batch)
        a = np.empty((stop - start, len(kn)), dtype=np.complex128)
        b = np.empty((stop - start, len(km)), dtype=np.complex128)
        for r, i in enumerate(range(start, stop)):
            rng = np.random.default_rng([seed, i])
            a[r] = rng.standard_normal((len(kn), 2)) @ np.array([1.0, 1j])
            b[r] = rng.standard_normal((len(km), 2)) @ np.array([1.0, 1j])
        a /= np.linalg.norm(a, axis=1, keepdims=True)
        b /= np.linalg.norm(b, axis=1, keepdims=True)
        out[start:stop] = _convolution_norms(kn, tn, km, tm, a, b) / np.sqrt(L * N)
    return out


def bilinear_l4_probe(N: int, L: int, trials: int, seed: int, signs: tuple[int, int] = (1, 1)) -> float:
    """Largest ratio over the random trials (deterministic per seed)."""
    return float(bilinear_ratios(N, L, trials, seed, signs).max())


def _convolution_matrix(kn, tn, km, tm, m: np.ndarray):
    """Matrix of n -> n * m (n on block (kn, tn)) into the l^2 space of output lattice points."""
    outk = kn[:, None] + km[None, :]
    outt = tn[:, None] + tm[None, :]
    keys = outk * 100003 + outt
    uniq, inv = np.unique(keys, return_inverse=True)
    inv = inv.reshape(outk.shape)
    A = np.zeros((len(uniq), len(kn)), dtype=np.complex128)
    for j in range(len(kn)):
        np.add.at(A[:, j], inv[j], m)
    return A


def bilinear_extremize(
    N: int,
    L: int,
    signs: tuple[int, int] = (1, 1),
    restarts: int = 20,
    iters: int = 50,
    seed: int = 0,
) -> float:
    """Adversarial lower bound on sup ||n m|| / (sqrt(LN) ||n|| ||m||) by alternating SVD steps."""
    kn, tn = wave_block(N, L, signs[0])
    km, tm = wave_block(N, L, signs[1])
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(restarts):
        m = rng.standard_normal(len(km)) + 1j * rng.standard_normal(len(km))
        m /= np.linalg.norm(m)
        val = 0.0
        for _ in range(iters):
            A = _convolution_matrix(kn, tn, km, tm, m)
            _, sv, vh = np.linalg.svd(A, full_matrices=False)
            n = np.conj(vh[0])
            B = _convolution_matrix(km, tm, kn, tn, n)
            _, sv, vh = np.linalg.svd(B, full_matrices=False)
            m = np.conj(vh[0])
            if sv[0] - val < 1e-13:
                val = sv[0]
                break
            val = sv[0]
        best = max(best, float(val))
    return best / np.sqrt(L * N)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


# ---------------------------------------------------------------------------
# restriction norms


def hann_taper(Mt: int) -> np.ndarray:
    """Periodic Hann window on [0, 2*pi) scaled to unit mean square."""
    t = 2 * np.pi * np.arange(Mt) / Mt
    w = 1.0 - np.cos(t)
    return w / np.sqrt(1.5)


@dataclass(frozen=True, eq=False)
class SpaceTimeArray:
    """Samples f(x_j, t_l) on [0, 2*pi) x [0, T_w) with T_w = 2*pi (integer time frequencies)."""

    samples: np.ndarray
    grid: GridSpec
    T_w: float = 2 * np.pi
    window: str = "hann"

    def __post_init__(self):
        a = np.asarray(self.samples, dtype=np.complex128)
        M, Mt = a.shape
        if M != self.grid.num_modes:
            raise ValueError("spatial size must match the grid")
        if Mt < 2 or Mt & (Mt - 1):
            raise ValueError("number of time samples must be a power of two")
        if self.T_w != 2 * np.pi:
            raise ValueError("only T_w = 2*pi is supported (integer tau lattice)")
        object.__setattr__(self, "samples", a)

    @property
    def Mt(self) -> int:
        return self.samples.shape[1]

    def tapered(self) -> np.ndarray:
        if self.window == "none":
            return self.samples
        return self.samples * hann_taper(self.Mt)[None, :]

    def spectrum(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(k, tau, c) with samples = sum c(k, tau) exp(i(kx + tau t)) after tapering."""
        M, Mt = self.samples.shape
        c = np.fft.fft2(self.tapered()) / (M * Mt)
        ks = np.fft.fftfreq(M, 1.0 / M).round().astype(np.int64)
        taus = np.fft.fftfreq(Mt, 1.0 / Mt).round().astype(np.int64)
        return ks, taus, c

    def l2_norm(self) -> float:
        """sqrt(mean |f|^2) of the tapered samples."""
        return float(np.sqrt(np.mean(np.abs(self.tapered()) ** 2)))

    @classmethod
    def from_states(cls, states, component: str = "u", window: str = "hann") -> "SpaceTimeArray":
        """Stack physical samples of ``component`` from states at uniform times covering [0, 2*pi)."""
        from .spectral import from_spectral

        cols = [from_spectral(getattr(st, component)) for st in states]
        return cls(np.stack(cols, axis=1), states[0].grid, window=window)


def modulation(kind: BlockKind, k: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Distance to the free dispersion relation: tau + k^2, tau + |k|, tau - |k|."""
    if kind == "schrodinger":
        return tau + k * k
    if kind == "wave_plus":
        return tau + np.abs(k)
    if kind == "wave_minus":
        return tau - np.abs(k)
    raise ValueError(f"unknown block kind {kind!r}")


def block_masses(arr: SpaceTimeArray, s: float, kind: BlockKind) -> dict[tuple[int, int], float]:
    """{(N, L): ||<k>^s P_{N,L} f||_{L^2}} over nonempty dyadic blocks."""
    ks, taus, c = arr.spectrum()
    K, Tau = np.meshgrid(ks, taus, indexing="ij")
    Nlab = dyadic_shell(K)
    Llab = dyadic_shell(modulation(kind, K, Tau))
    w = (1.0 + K.astype(float) ** 2) ** s * np.abs(c) ** 2
    out: dict[tuple[int, int], float] = {}
    keys = Nlab * (1 << 40) + Llab
    uniq, inv = np.unique(keys.ravel(), return_inverse=True)
    sums = np.bincount(inv, weights=w.ravel())
    for key, val in zip(uniq, sums):
        out[(int(key >> 40), int(key & ((1 << 40) - 1)))] = float(np.sqrt(val))
    return out


def restriction_norm(arr: SpaceTimeArray, s: float, b: float, kind: BlockKind) -> float:
    """Besov-type restriction norm: l^2 over N of the l^1 sum over L of L^b ||<k>^s P_{N,L} f||."""
    inner: dict[int, float] = {}
    for (N, L), mass_NL in block_masses(arr, s, kind).items():
        inner[N] = inner.get(N, 0.0) + L ** b * mass_NL
    return float(np.sqrt(sum(v * v for v in inner.values())))
