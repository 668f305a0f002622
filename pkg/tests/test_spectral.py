import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import mode, random_field
from zakharov_lab.spectral import (
    D_inverse_symbol,
    D_symbol,
    GridError,
    GridSpec,
    SpectralField,
    apply_symbol,
    dealias,
    dyadic_range,
    dyadic_shell,
    from_spectral,
    laplacian_symbol,
    project_dyadic,
    project_gt,
    project_leq,
    schrodinger_propagator,
    to_spectral,
    wave_propagator,
)


class TestGridSpec:
    @pytest.mark.parametrize("M", [16, 32, 256, 1024])
    def test_valid(self, M):
        g = GridSpec(M)
        assert g.dealias_cutoff == M // 3
        assert g.dealias_cutoff < M / 2

    @pytest.mark.parametrize("M", [0, 8, 24, 100])
    def test_invalid(self, M):
        with pytest.raises(GridError):
            GridSpec(M)

    def test_wavenumbers(self, grid32):
        assert grid32.k[1] == 1 and grid32.k[-1] == -1 and grid32.k[16] == -16
        assert grid32.index(-3) == 29
        with pytest.raises(GridError):
            grid32.index(16)

    def test_reflect(self, grid32):
        a = np.arange(32)
        b = grid32.reflect(a)
        for k in range(-15, 16):
            assert b[k % 32] == a[(-k) % 32]


class TestTransforms:
    def test_constant(self, grid32):
        f = to_spectral(np.ones(32), grid32)
        assert f[0] == pytest.approx(1.0)
        assert np.abs(np.delete(f.coeffs, 0)).max() < 1e-15

    def test_pure_mode(self, grid32):
        f = to_spectral(np.exp(1j * grid32.x), grid32)
        assert f[1] == pytest.approx(1.0)
        assert np.abs(np.delete(f.coeffs, 1)).max() < 1e-14

    def test_from_spectral_modes(self, grid32):
        assert np.allclose(from_spectral(mode(grid32, 0)), 1.0, atol=1e-15)
        assert np.allclose(from_spectral(mode(grid32, 1)), np.exp(1j * grid32.x), atol=1e-14)

    @pytest.mark.parametrize("seed", range(100))
    def test_roundtrip_real(self, grid64, seed):
        samples = np.random.default_rng(seed).standard_normal(64)
        back = from_spectral(to_spectral(samples, grid64))
        assert np.abs(back - samples).max() < 1e-12

    @pytest.mark.parametrize("seed", range(20))
    def test_hermitian_is_real(self, grid64, seed):
        f = random_field(grid64, seed, hermitian=True)
        assert f.hermitian_defect() < 1e-12
        assert np.abs(from_spectral(f).imag).max() < 1e-12

    def test_length_mismatch(self, grid32):
        with pytest.raises(GridError):
            to_spectral(np.ones(31), grid32)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_plancherel(self, seed):
        g = GridSpec(32)
        f = random_field(g, seed)
        samples = from_spectral(f)
        lhs = np.sum(np.abs(samples) ** 2) * (2 * np.pi / 32)
        rhs = 2 * np.pi * f.l2_sq()
        assert lhs == pytest.approx(rhs, rel=1e-10)


class TestSymbols:
    def test_D_eigen(self, grid32):
        out = apply_symbol(mode(grid32, 3), D_symbol)
        assert out[3] == pytest.approx(3.0)

    def test_laplacian_eigen(self, grid32):
        out = apply_symbol(mode(grid32, 2), laplacian_symbol)
        assert out[2] == pytest.approx(-4.0)

    def test_schrodinger_flow(self, grid32):
        out = apply_symbol(mode(grid32, 1), schrodinger_propagator(0.5))
        assert out[1] == pytest.approx(np.exp(-0.5j))

    def test_schrodinger_flow_solves_equation(self, grid32):
        # i u_t + u_xx = 0 checked by a centred difference in t
        f, h = random_field(grid32, 3), 1e-5
        up = apply_symbol(f, schrodinger_propagator(h))
        um = apply_symbol(f, schrodinger_propagator(-h))
        ut = (up.coeffs - um.coeffs) / (2 * h)
        uxx = apply_symbol(f, laplacian_symbol).coeffs
        assert np.abs(1j * ut + uxx).max() < 1e-6 * np.abs(uxx).max()

    def test_wave_flow_sign(self, grid32):
        assert apply_symbol(mode(grid32, -2), wave_propagator(1.0, +1))[-2] == pytest.approx(np.exp(-2j))
        assert apply_symbol(mode(grid32, -2), wave_propagator(1.0, -1))[-2] == pytest.approx(np.exp(2j))

    def test_D_inverse_zero_mode(self, grid32):
        assert D_inverse_symbol(np.array([0, 2]))[0] == 0
        assert D_inverse_symbol(np.array([0, 2]))[1] == 0.5

    def test_hermitian_flag(self, grid32):
        f = random_field(grid32, 1, hermitian=True)
        assert apply_symbol(f, D_symbol).hermitian
        assert not apply_symbol(f, schrodinger_propagator(0.3)).hermitian

    @pytest.mark.parametrize("seed", range(5))
    def test_composition(self, grid32, seed):
        f = random_field(grid32, seed)
        a, b = schrodinger_propagator(0.7), D_symbol
        lhs = apply_symbol(apply_symbol(f, a), b)
        rhs = apply_symbol(f, a(grid32.k) * b(grid32.k))
        # equal up to reassociation of one complex product
        np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, rtol=1e-15, atol=0)

    def test_composition_dyadic_symbols_exact(self, grid32):
        f = random_field(grid32, 0)
        a = lambda k: 2.0 ** (np.abs(k) % 4)
        b = lambda k: np.where(k > 0, 0.5, 4.0)
        lhs = apply_symbol(apply_symbol(f, a), b)
        rhs = apply_symbol(f, a(grid32.k) * b(grid32.k))
        assert np.array_equal(lhs.coeffs, rhs.coeffs)

    def test_unitary_flow_preserves_mass(self, grid64):
        f = random_field(grid64, 9)
        g = apply_symbol(f, schrodinger_propagator(1.3))
        assert g.l2_sq() == pytest.approx(f.l2_sq(), rel=1e-14)


class TestProjections:
    def test_leq(self, grid32):
        assert project_leq(mode(grid32, 5), 4).l2_sq() == 0
        assert project_leq(mode(grid32, 5), 5)[5] == 1

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("N", [0, 1, 3, 8, 15])
    def test_parseval_split(self, grid32, seed, N):
        f = random_field(grid32, seed)
        lo, hi = project_leq(f, N), project_gt(f, N)
        assert lo.l2_sq() + hi.l2_sq() == pytest.approx(f.l2_sq(), rel=1e-12)
        assert np.array_equal((lo + hi).coeffs, f.coeffs)
        assert np.array_equal(project_leq(lo, N).coeffs, lo.coeffs)

    def test_shell_examples(self):
        assert dyadic_shell(np.array([3]))[0] == 2
        assert list(dyadic_shell(np.array([0, 1, -1]))) == [1, 1, 1]
        assert list(dyadic_shell(np.array([2, 4, 7, 8, -8]))) == [2, 4, 4, 8, 8]

    @pytest.mark.parametrize("seed", range(10))
    def test_shells_partition(self, grid64, seed):
        f = random_field(grid64, seed)
        shells = dyadic_range(32)
        total = sum(project_dyadic(f, N).l2_sq() for N in shells)
        assert total == pytest.approx(f.l2_sq(), rel=1e-12)
        hits = sum((dyadic_shell(grid64.k) == N).astype(int) for N in shells)
        assert np.all(hits == 1)

    def test_dealias(self, grid64):
        f = dealias(random_field(grid64, 0))
        assert np.all(f.coeffs[np.abs(grid64.k) > 21] == 0)
        assert np.all(f.coeffs[np.abs(grid64.k) <= 21] != 0)


class TestSpectralField:
    def test_immutable(self, grid32):
        f = mode(grid32, 1)
        with pytest.raises(ValueError):
            f.coeffs[0] = 1

    def test_grid_mismatch(self, grid32, grid64):
        with pytest.raises(GridError):
            mode(grid32, 1) + mode(grid64, 1)

    def test_bad_shape(self, grid32):
        with pytest.raises(GridError):
            SpectralField(np.zeros(5), grid32)
