import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrframe import analytics
from qrframe.reduction import gaussian_purity, reduce_external, relative_purity
from qrframe.state import GridAxis, MassConfig, default_axes, product_state, rasterize
from qrframe.transforms import to_frame
from qrframe.utils import ConfigError


def test_two_branch_purity_at_unit_alpha():
    assert analytics.two_branch_purity(1.0) == pytest.approx(1.0 - 0.5 * math.tanh(1.0) ** 2, abs=1e-15)
    # delta = 2 sqrt(2), width 1 gives alpha = 1
    state = analytics.branch_pair_state(2.0 * math.sqrt(2.0), 1.0)
    assert gaussian_purity(state, [1]) == pytest.approx(analytics.two_branch_purity(1.0), abs=1e-10)


@pytest.mark.parametrize('alpha', [0.1, 0.5, 1.0, 5.0])
def test_two_branch_purity_matches_the_grid(alpha):
    delta = math.sqrt(8.0 * alpha)
    state = analytics.branch_pair_state(delta, 1.0)
    grid = rasterize(state, (GridAxis(-10.0, delta + 10.0, 128),) * 2)
    assert reduce_external(grid, 1).purity() == pytest.approx(analytics.two_branch_purity(alpha), abs=1e-6)


def test_diagnostics_bundle():
    d = analytics.BranchPairDiagnostics.from_separation(2.0, 1.0)
    assert d.alpha == pytest.approx(0.5)
    assert d.overlap == pytest.approx(math.exp(-0.5))
    assert d.purity + d.entanglement == pytest.approx(1.0)
    assert analytics.alpha_from_entanglement(d.entanglement) == pytest.approx(0.5, rel=1e-10)
    with pytest.raises(ConfigError):
        analytics.two_branch_purity(-0.1)


def test_internal_purity_closed_form_and_backend():
    assert analytics.internal_purity(1.0, 2.0, 1.0, 1.0) == pytest.approx(3.0 / math.sqrt(10.0), abs=1e-15)
    assert analytics.product_internal_purity([1.0, 2.0], [1.0, 1.0]) == pytest.approx(3.0 / math.sqrt(10.0),
                                                                                     abs=1e-10)
    assert analytics.is_separable(1.0, 4.0, 1.0, 0.5)
    assert not analytics.is_separable(1.0, 2.0, 1.0, 1.0)
    with pytest.raises(ConfigError):
        analytics.internal_purity(0.0, 1.0, 1.0, 1.0)


@pytest.mark.parametrize('m1', [0.5, 2.0, 8.0])
@pytest.mark.parametrize('w1', [0.5, 1.0, 2.0])
def test_internal_purity_matches_the_grid_backend(m1, w1):
    moved = to_frame(product_state(MassConfig((1.0, m1)), [0.0, 0.0], [1.0, w1]), 'cm_relative')
    grid = rasterize(moved, default_axes(moved, n_points=128))
    assert relative_purity(grid) == pytest.approx(analytics.internal_purity(1.0, m1, 1.0, w1), abs=1e-4)


@settings(max_examples=25, deadline=None)
@given(m1=st.floats(min_value=0.05, max_value=20.0), w1=st.floats(min_value=0.2, max_value=3.0))
def test_internal_purity_matches_exact_backend(m1, w1):
    expected = analytics.internal_purity(1.0, m1, 1.0, w1)
    assert analytics.product_internal_purity([1.0, m1], [1.0, w1]) == pytest.approx(expected, abs=1e-9)


def test_dispersion_ratio_near_maximal_entanglement():
    assert analytics.dispersion_ratio(0.0) == pytest.approx(math.sqrt(0.5))
    assert analytics.dispersion_ratio(0.49) == pytest.approx(1.77, abs=5e-3)
    # E = 1/2 is clamped instead of diverging
    assert math.isfinite(analytics.dispersion_ratio(0.5))
    with pytest.raises(ConfigError):
        analytics.dispersion_ratio(0.6)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(min_value=0.0, max_value=0.49), b=st.floats(min_value=0.0, max_value=0.49))
def test_dispersion_ratio_is_monotonic(a, b):
    lo, hi = sorted((a, b))
    assert analytics.dispersion_ratio(lo) <= analytics.dispersion_ratio(hi) + 1e-12


@settings(max_examples=20, deadline=None)
@given(delta=st.floats(min_value=0.1, max_value=4.0))
def test_dispersion_ratio_matches_state_variances(delta):
    alpha = analytics.alpha_from_separation(delta, 1.0)
    dx_r, dx_1 = analytics.variance_pair(analytics.branch_pair_state(delta, 1.0))
    assert dx_1 / dx_r == pytest.approx(analytics.dispersion_ratio_alpha(alpha), rel=1e-9)
    assert analytics.dispersion_ratio(float(analytics.linear_entropy(alpha))) == pytest.approx(
        analytics.dispersion_ratio_alpha(alpha), rel=1e-6)


def test_variance_pair_on_a_grid():
    state = analytics.branch_pair_state(2.0, 1.0)
    grid = rasterize(state, (GridAxis(-10.0, 12.0, 128),) * 2)
    np.testing.assert_allclose(analytics.variance_pair(grid), analytics.variance_pair(state), rtol=1e-8)


def test_dispersion_curve_columns():
    curve = analytics.dispersion_curve(samples=10)
    assert list(curve.columns) == ['entanglement', 'alpha', 'ratio']
    assert curve['entanglement'].iloc[-1] < 0.5
    assert np.all(np.diff(curve['ratio']) > 0)
