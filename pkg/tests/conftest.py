import numpy as np
import pytest

from expintlab.problems import make_linear_commuting, make_nls, make_wave
from expintlab.spectral import ModeGrid, SpectralState


@pytest.fixture
def grid16():
    return ModeGrid(16)


@pytest.fixture
def wave64():
    return make_wave(64)


@pytest.fixture
def nls32():
    return make_nls(32)


@pytest.fixture
def linear32():
    return make_linear_commuting(32, -0.5)


def random_state(grid, n_comp=1, seed=0, decay=0.0):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((n_comp, grid.n_phys)) + 1j * rng.standard_normal((n_comp, grid.n_phys))
    if decay:
        c = c / (1.0 + np.abs(grid.modes)) ** decay
    return SpectralState(grid, c)


def real_wave_state(problem, seed=0, amplitude=0.3):
    """State whose physical fields u, v are real."""
    rng = np.random.default_rng(seed)
    x = problem.grid.x
    u = sum(rng.standard_normal() * np.cos(k * x + rng.uniform(0, 6)) / k ** 2 for k in range(1, 6))
    v = sum(rng.standard_normal() * np.sin(k * x + rng.uniform(0, 6)) / k ** 2 for k in range(1, 6))
    return problem.state_from_fields(amplitude * np.stack([u, v]))
