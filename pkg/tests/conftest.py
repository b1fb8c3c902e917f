import numpy as np
import pytest

from precoding.closed_form import ScenarioParams
from precoding.model import ArrayGeometry, OfdmGrid
from workers.sweeps import default_scenario

FC = 300e9


@pytest.fixture
def fig_grid():
    """f_c = 300 GHz, B = 30 GHz, K = 129."""
    return OfdmGrid(fc=FC, bandwidth=30e9, num_subcarriers=129)


@pytest.fixture
def fig_scenario():
    return default_scenario()


@pytest.fixture
def make_scenario():
    def build(nt=16, m=4, psi=0.5, tmax_ps=100.0, k=17, ratio=0.1, n_rf=None):
        psi = list(np.atleast_1d(psi))
        grid = OfdmGrid(fc=FC, bandwidth=ratio * FC, num_subcarriers=k)
        geom = ArrayGeometry.half_wavelength(nt, m, FC, num_rf=n_rf or len(psi))
        return ScenarioParams(grid=grid, geom=geom, psi_c=psi, t_max=tmax_ps * 1e-12)

    return build


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
