import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from qrframe import constants
from qrframe.state import GridAxis, MassConfig, inner_product, product_state, rasterize
from qrframe.transforms import (TRANSFORMS, build_transform, commutator_table, cm_relative, qpr, qpr3,
                                qpr_momentum_rows, relative_commutator_table, relative_momentum_shift, to_frame,
                                transform_between)
from qrframe.utils import ConfigError, FrameMismatchError, SupportClippedError

masses_strategy = st.lists(st.floats(min_value=0.1, max_value=50.0), min_size=3, max_size=3)


@settings(max_examples=30, deadline=None)
@given(values=masses_strategy)
def test_catalog_is_symplectic(values):
    masses = MassConfig(tuple(values))
    for name in TRANSFORMS:
        assert build_transform(name, masses).symplectic_residual() < constants.SYMPLECTIC_TOL


def test_unknown_transform_is_a_config_error(three_masses):
    with pytest.raises(ConfigError):
        build_transform('galilean', three_masses)


def test_cm_relative_rows(two_masses):
    t = cm_relative(two_masses)
    np.testing.assert_allclose(t.position_block, [[1.0 / 3.0, 2.0 / 3.0], [-1.0, 1.0]], atol=1e-15)
    state = product_state(MassConfig((1.0, 1.0)), [0.0, 2.0], [0.1, 0.1])
    moved = build_transform('cm_relative', state.masses).apply(state)
    np.testing.assert_allclose(moved.branches[0].centers, [1.0, 2.0], atol=1e-12)
    assert moved.frame.positions == ('x_cm', 'x_r1')


def test_qpr3_momentum_rows(three_masses):
    B = qpr3(three_masses).momentum_block
    m0, m1, m2 = three_masses.masses
    mu1, mu2 = three_masses.reduced(1), three_masses.reduced(2)
    np.testing.assert_allclose(B[0], [1.0, 1.0, 1.0], atol=1e-14)
    np.testing.assert_allclose(B[1], [-mu1 / m0, mu1 / m1, 0.0], atol=1e-14)
    np.testing.assert_allclose(B[2], [-mu2 / m0, 0.0, mu2 / m2], atol=1e-14)


def test_qpr_general_n_matches_three_particle_case(three_masses):
    np.testing.assert_allclose(qpr(three_masses).position_block, qpr3(three_masses).position_block)
    four = MassConfig((1.0, 2.0, 3.0, 4.0))
    assert qpr(four).symplectic_residual() < constants.SYMPLECTIC_TOL


def test_qpr_rows_take_symbolic_masses(three_masses):
    exact = qpr_momentum_rows([sympy.Integer(1), sympy.Integer(2), sympy.Integer(3)])
    np.testing.assert_allclose(np.array(exact.tolist(), dtype=float), qpr(three_masses).momentum_block, atol=1e-15)
    heavy = sympy.Symbol('m_heavy', positive=True)
    rows = qpr_momentum_rows([sympy.Integer(1), sympy.Integer(1), heavy])
    # p_r2 tends to -p_0 as the third particle gets infinitely heavy
    assert sympy.limit(rows[2, 0], heavy, sympy.oo) == -1
    assert sympy.limit(rows[2, 2], heavy, sympy.oo) == 0


def test_inverse_and_compose(three_masses):
    t = cm_relative(three_masses)
    round_trip = t.inverse().compose(t)
    np.testing.assert_allclose(round_trip.position_block, np.eye(3), atol=1e-14)
    with pytest.raises(FrameMismatchError):
        t.compose(t)


def test_transform_between_frames(three_particle_state):
    moved = to_frame(three_particle_state, 'qpr')
    back = to_frame(moved, 'absolute')
    for a, b in zip(back.branches, three_particle_state.branches):
        np.testing.assert_allclose(a.centers, b.centers, atol=1e-12)
        np.testing.assert_allclose(a.covariance, b.covariance, atol=1e-12)
    t = transform_between('cm_relative', 'ak', three_particle_state.masses)
    assert t.output_frame.name == 'ak'


@settings(max_examples=30, deadline=None)
@given(values=masses_strategy)
def test_relative_cross_commutator(values):
    masses = MassConfig(tuple(values))
    table = relative_commutator_table(masses)
    m = masses.masses
    for j in (1, 2):
        assert table.loc[f'x_r{j}', f'p_r{j}'] == pytest.approx(1.0, abs=1e-12)
    assert table.loc['x_r1', 'p_r2'] == pytest.approx(m[2] / (m[0] + m[2]), abs=1e-12)
    assert table.loc['x_r2', 'p_r1'] == pytest.approx(m[1] / (m[0] + m[1]), abs=1e-12)


def test_commutators_within_one_transform_are_canonical(three_masses):
    t = qpr(three_masses)
    table = commutator_table(t, t)
    np.testing.assert_allclose(table.values, 1j * np.eye(3), atol=1e-13)


def test_relative_momentum_shift_is_nonlocal():
    masses = MassConfig((1.0, 1.0, 1.0))
    state = product_state(masses, [0.0, 1.0, 2.0], [0.2, 0.2, 0.2], frame='cm_relative')
    moved = relative_momentum_shift(state, 1, 1.0)
    shift = moved.branches[0].centers - state.branches[0].centers
    np.testing.assert_allclose(shift, [0.0, 1.0, 0.5], atol=1e-12)


@pytest.mark.parametrize('values, fraction', [((1.0, 1.0, 1.0), 0.5), ((2.0, 1.0, 3.0), 1.0 / 3.0),
                                              ((1e6, 1.0, 1.0), 1.0 / (1e6 + 1.0))])
def test_relative_momentum_shift_drags_the_other_relative_coordinates(values, fraction):
    masses = MassConfig(values)
    state = product_state(masses, [0.0, 1.0, 2.0], [0.2, 0.2, 0.2], frame='cm_relative')
    shift = relative_momentum_shift(state, 1, 1.0).branches[0].centers - state.branches[0].centers
    # x_r2 follows by mu_01 / m_0 = m_1 / (m_0 + m_1)
    np.testing.assert_allclose(shift, [0.0, 1.0, fraction], atol=1e-6)
    if values[0] == 1e6:
        assert abs(shift[2]) < 1e-5


def test_grid_transform_matches_gaussian_transform():
    masses = MassConfig((1.0, 2.0))
    state = product_state(masses, [0.2, -0.3], [1.0, 0.8])
    axes = (GridAxis(-8.0, 8.0, 128), GridAxis(-8.0, 8.0, 128))
    grid = rasterize(state, axes)
    target = (GridAxis(-8.0, 8.0, 128), GridAxis(-12.0, 12.0, 128))
    moved = to_frame(grid, 'cm_relative', target)
    expected = rasterize(to_frame(state, 'cm_relative'), target)
    assert abs(inner_product(moved, expected)) == pytest.approx(1.0, abs=1e-4)


def test_grid_transform_reports_clipped_support():
    masses = MassConfig((1.0, 1.0))
    grid = rasterize(product_state(masses, [3.0, -3.0], [0.5, 0.5]), (GridAxis(-8.0, 8.0, 64),) * 2)
    with pytest.raises(SupportClippedError):
        to_frame(grid, 'cm_relative', (GridAxis(-8.0, 8.0, 64), GridAxis(-2.0, 2.0, 64)))
