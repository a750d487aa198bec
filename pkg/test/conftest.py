import math

import numpy as np
import pytest

from qrframe.state import MassConfig, product_state, superposition, two_branch_state


@pytest.fixture
def two_masses():
    return MassConfig((1.0, 2.0))


@pytest.fixture
def three_masses():
    return MassConfig((1.0, 2.0, 3.0))


@pytest.fixture
def product_pair(two_masses):
    return product_state(two_masses, [0.3, -0.4], [1.0, 0.7])


@pytest.fixture
def branch_pair(two_masses):
    return two_branch_state(two_masses, [0.0, 0.0], [1.0, 1.0], [1.5, 1.5], math.pi / 3.0)


@pytest.fixture
def three_particle_state(three_masses):
    return superposition(three_masses, [[0.0, -1.0, 1.0], [0.0, 1.0, 1.0]], [0.8, 0.8, 0.6],
                         coefficients=[1.0, 1j])


@pytest.fixture
def state_battery(two_masses, three_masses):
    '''gaussian states small enough to be rasterized on modest grids.
    '''
    return {
        'product': product_state(two_masses, [0.3, -0.4], [1.0, 0.7]),
        'product_equal': product_state(MassConfig((1.0, 1.0)), [0.0, 0.5], [0.8, 0.8]),
        'two_branch': two_branch_state(two_masses, [0.0, 0.0], [1.0, 1.0], [1.5, 1.5], math.pi / 3.0),
        'two_branch_moving': superposition(two_masses, [[0.0, 0.0], [1.0, -0.5]], [0.9, 1.1],
                                           coefficients=[1.0, -1.0], momenta=[0.5, -0.2]),
        'three_product': product_state(three_masses, [0.0, 0.5, -0.5], [0.9, 0.8, 1.0]),
        'three_branch': superposition(three_masses, [[0.0, -1.0, 0.5], [0.0, 1.0, 0.5]], [0.9, 0.9, 0.9],
                                      coefficients=[1.0, 1j]),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(7)
