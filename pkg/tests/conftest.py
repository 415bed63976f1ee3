import numpy as np
import pytest

from quasinls.analysis import nls_coefficients
from quasinls.symbols import builtin


@pytest.fixture(scope="session")
def beam():
    return builtin("beam")


@pytest.fixture(scope="session")
def beam_coeffs(beam):
    return nls_coefficients(beam, beam, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_real_field(grid, rng, mask=None):
    from quasinls.spectral import SpectralField

    c = rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)
    if mask is not None:
        c = c * mask
    c = 0.5 * (c + np.conj(np.roll(c[::-1], 1)))
    c[grid.n_points // 2] = 0.0
    return SpectralField(grid, c, True)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
