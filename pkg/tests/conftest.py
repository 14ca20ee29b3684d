import numpy as np
import pytest
from hypothesis import settings

from qlvp.phase_space import make_grid, perturbed_maxwellian
from qlvp.stochastic_field import CorrelationSpec, ModeEntry

settings.register_profile("qlvp", max_examples=25, deadline=None)
settings.load_profile("qlvp")


@pytest.fixture
def small_grid():
    return make_grid(16, 65, 6.0)


@pytest.fixture
def landau_f0(small_grid):
    return perturbed_maxwellian(small_grid, 0.05)


@pytest.fixture
def two_mode_spec():
    return CorrelationSpec.symmetric([
        ModeEntry(1, 0.5, "triangular", 0.1, 1.0),
        ModeEntry(2, 1.0, "bohman", 0.025, 1.0),
    ])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
