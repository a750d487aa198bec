import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrframe.state import (GaussianSuperposition, GridAxis, GridState, MassConfig, CoordinateFrame, inner_product,
                           product_state, rasterize, reorder, superposition, two_branch_state, default_axes)
from qrframe.uncertainty import phase_space_moments
from qrframe.utils import ConfigError, ExtentError, FrameMismatchError, NumericBudgetError


def test_mass_config_rejects_non_positive_masses():
    with pytest.raises(ConfigError):
        MassConfig((1.0, 0.0))
    with pytest.raises(ConfigError):
        MassConfig((1.0, 2.0), hbar=-1.0)


def test_malformed_fields_raise_config_errors(branch_pair):
    with pytest.raises(ConfigError, match='mass'):
        MassConfig(('abc', 1.0))
    with pytest.raises(ConfigError):
        MassConfig.from_dict({'masses': 2.0})
    with pytest.raises(ConfigError):
        GridAxis.from_dict({'min': 'left', 'max': 1.0, 'n': 8})
    with pytest.raises(ConfigError):
        GridAxis(-1.0, 1.0, 8.5)
    data = branch_pair.to_dict()
    with pytest.raises(ConfigError, match='name'):
        GaussianSuperposition.from_dict(dict(data, frame={'positions': ['x0', 'x1'], 'momenta': ['p0', 'p1']}))
    with pytest.raises(ConfigError):
        GaussianSuperposition.from_dict(dict(data, branches=['not a branch']))
    with pytest.raises(ConfigError):
        GaussianSuperposition.from_dict(dict(data, frame=3))


def test_reduced_mass_and_gamma(three_masses):
    assert three_masses.reduced(1) == pytest.approx(2.0 / 3.0)
    assert three_masses.reduced(2) == pytest.approx(0.75)
    # m0 m1 m2 / (M mu01 mu02) = 6 / (6 * 2/3 * 3/4)
    assert three_masses.gamma == pytest.approx(2.0)
    with pytest.raises(ConfigError):
        three_masses.reduced(3)


@settings(max_examples=50, deadline=None)
@given(delta=st.floats(min_value=-4.0, max_value=4.0), width=st.floats(min_value=0.2, max_value=3.0))
def test_shifted_gaussian_overlap(delta, width):
    masses = MassConfig((1.0,))
    a = product_state(masses, [0.0], [width])
    b = product_state(masses, [delta], [width])
    assert inner_product(a, b).real == pytest.approx(math.exp(-delta ** 2 / (8.0 * width ** 2)), rel=1e-10, abs=1e-14)


def test_superposition_is_normalized_with_overlaps(two_masses):
    state = superposition(two_masses, [[0.0, 0.0], [0.4, 0.2]], [1.0, 1.0], coefficients=[1.0, 0.5j])
    assert state.norm() == pytest.approx(1.0, abs=1e-12)


def test_translation_keeps_normalization(branch_pair):
    moved = branch_pair.translated([100.0, -50.0])
    assert moved.norm() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(moved.branches[0].centers, branch_pair.branches[0].centers + [100.0, -50.0])


def test_grid_overlap_matches_closed_form():
    masses = MassConfig((1.0,))
    axis = (GridAxis(-10.0, 12.0, 256),)
    a = rasterize(product_state(masses, [0.0], [1.0]), axis)
    b = rasterize(product_state(masses, [2.0], [1.0]), axis)
    assert inner_product(a, b).real == pytest.approx(math.exp(-0.5), abs=1e-6)


def test_rasterize_requires_clearance():
    masses = MassConfig((1.0,))
    with pytest.raises(ExtentError) as info:
        rasterize(product_state(masses, [3.0], [1.0]), (GridAxis(-8.0, 8.0, 64),))
    assert info.value.axis == 'x0'


def test_grid_axis_excludes_endpoint_and_needs_power_of_two():
    axis = GridAxis(-1.0, 1.0, 8)
    assert axis.points[0] == -1.0
    assert axis.points[-1] == pytest.approx(0.75)
    with pytest.raises(ConfigError):
        GridAxis(-1.0, 1.0, 12)
    with pytest.raises(ConfigError):
        GridAxis(1.0, -1.0, 8)


def test_grid_state_rejects_unnormalized_amplitudes(two_masses):
    axes = (GridAxis(-4.0, 4.0, 8), GridAxis(-4.0, 4.0, 8))
    with pytest.raises(NumericBudgetError):
        GridState(CoordinateFrame.absolute(2), axes, np.ones((8, 8)), two_masses)


def test_spectral_translation_moves_the_mean():
    masses = MassConfig((1.0,))
    axis = (GridAxis(-16.0, 16.0, 128),)
    grid = rasterize(product_state(masses, [0.0], [1.0]), axis)
    moved = grid.translated([1.5])
    x = axis[0].points
    assert np.sum(moved.probability() * x) == pytest.approx(1.5, abs=1e-8)
    assert inner_product(moved, rasterize(product_state(masses, [1.5], [1.0]), axis)).real == pytest.approx(1.0,
                                                                                                           abs=1e-8)


def test_rasterized_momentum_offset_sets_the_mean_momentum():
    state = product_state(MassConfig((1.0, 2.0)), [0.0, 1.0], [1.0, 0.5], momenta=[1.5, -0.75])
    grid = rasterize(state, (GridAxis(-12.8, 12.8, 128),) * 2)
    mean, _ = phase_space_moments(grid)
    np.testing.assert_allclose(mean[:2], [0.0, 1.0], atol=1e-8)
    np.testing.assert_allclose(mean[2:], [1.5, -0.75], atol=1e-8)


def test_reorder_promotes_another_particle(three_particle_state):
    moved = reorder(three_particle_state, [2, 0, 1])
    assert moved.masses.masses == (3.0, 1.0, 2.0)
    np.testing.assert_allclose(moved.branches[1].centers, [1.0, 0.0, 1.0])
    with pytest.raises(ConfigError):
        reorder(three_particle_state, [0, 0, 1])


def test_inner_product_rejects_other_frames(two_masses):
    a = product_state(two_masses, [0.0, 0.0], [1.0, 1.0])
    b = product_state(two_masses, [0.0, 0.0], [1.0, 1.0], frame='cm_relative')
    with pytest.raises(FrameMismatchError):
        inner_product(a, b)


def test_state_dict_keeps_branches(branch_pair):
    restored = GaussianSuperposition.from_dict(branch_pair.to_dict())
    assert inner_product(branch_pair, restored).real == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ConfigError):
        GaussianSuperposition.from_dict({'schema': 'other/1', 'masses': [1.0], 'branches': []})


def test_default_axes_cover_every_branch(two_masses):
    state = two_branch_state(two_masses, [0.0, 0.0], [0.5, 0.5], [3.0, -3.0])
    axes = default_axes(state)
    assert axes[0].min < -4.0 + 1e-12 and axes[0].max > 7.0 - 1e-12
    assert axes[1].min < -7.0 + 1e-12
