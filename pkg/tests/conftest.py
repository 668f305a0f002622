import sys

import numpy as np
import pytest

from zakharov_lab.spectral import GridSpec, SpectralField


@pytest.fixture
def grid64():
    return GridSpec(64)


@pytest.fixture
def grid32():
    return GridSpec(32)


def random_field(grid, seed, hermitian=False, band=None):
    """Random field, optionally real-valued and limited to |k| <= band."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(grid.num_modes) + 1j * rng.standard_normal(grid.num_modes)
    if band is not None:
        c[np.abs(grid.k) > band] = 0
    if hermitian:
        c = 0.5 * (c + np.conj(grid.reflect(c)))
        c[grid.num_modes // 2] = c[grid.num_modes // 2].real
    return SpectralField(c, grid, hermitian)


def mode(grid, k, amp=1.0):
    c = np.zeros(grid.num_modes, dtype=complex)
    c[grid.index(k)] = amp
    return SpectralField(c, grid, False)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria (slow)")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.format_line(num))
