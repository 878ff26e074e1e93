import numpy as np
import pytest

from gaborphase import GaborFrame, Lattice, sample_window_uniform_sphere


def random_unit_signal(M, rng):
    x = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    return x / np.linalg.norm(x)


def make_frame(M, n_shifts, rng):
    lattice = Lattice.evenly_spaced(M, n_shifts)
    return GaborFrame(sample_window_uniform_sphere(M, rng), lattice)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
