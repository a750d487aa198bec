import math

import numpy as np
import pytest

from qrframe.evaluator import EhrenfestEvaluator, driven_free_means, ehrenfest_check
from qrframe.modeling_qrf import AbsoluteHamiltonian, ClassicalFrameHamiltonian, RelativeHamiltonian
from qrframe.potentials import FrameTrajectory, PotentialSpec, gaussian_well, harmonic
from qrframe.reduction import convolved_population
from qrframe.state import GridAxis, MassConfig, inner_product, product_state, rasterize
from qrframe.trainer import (Evolver, RunConfig, edge_mass, evolve_absolute, evolve_classical_frame,
                             evolve_relative, pi_observable, run)
from qrframe.utils import ConfigError, EdgeError, FrameMismatchError, StabilityError


def _relative_start(masses, axes, centers, widths, momenta=None):
    return rasterize(product_state(masses, centers, widths, momenta, frame='relative'), axes)


@pytest.mark.parametrize('m0, check', [(1.0, lambda e: e > 1e-3), (1e6, lambda e: e < 1e-6)])
def test_frame_mass_controls_relative_entanglement(m0, check):
    masses = MassConfig((m0, 1.0, 1.0))
    axes = (GridAxis(-25.6, 25.6, 128),) * 2
    potential = PotentialSpec((harmonic((0, 1), 1.0), harmonic((0, 2), 1.0)))
    ham = RelativeHamiltonian(masses, potential, axes)
    state = _relative_start(masses, axes, [0.0, 0.0], [1.0, 1.0])
    traj = evolve_relative(ham, state, 2.5e-3, 1800, entanglement_partition=[0], record_every=100)
    entropy = traj.column('linear_entropy')
    assert entropy[0] < 1e-10
    assert check(entropy[-1])
    assert traj.norm_drift() < 1e-9


def test_split_step_is_second_order():
    masses = MassConfig((2.0, 1.0))
    axes = (GridAxis(-12.8, 12.8, 64),)
    ham = RelativeHamiltonian(masses, PotentialSpec((gaussian_well((0, 1), 1.0, 1.0),)), axes)
    state = _relative_start(masses, axes, [0.5], [1.0], [0.3])
    finals, residuals = [], []
    for dt in (0.01, 0.005, 0.0025):
        traj = evolve_relative(ham, state, dt, int(round(1.0 / dt)))
        finals.append(traj.final_state.amplitudes)
        residuals.append(ehrenfest_check(traj, ham))
    # Richardson ratios of the Heisenberg residuals when dt is halved
    for key in ('velocity', 'acceleration'):
        assert 3.5 < residuals[0][key] / residuals[1][key] < 4.5, key
        assert 3.5 < residuals[1][key] / residuals[2][key] < 4.5, key
    coarse = np.linalg.norm(finals[0] - finals[1])
    fine = np.linalg.norm(finals[1] - finals[2])
    assert 3.5 < coarse / fine < 4.5


def test_classical_frame_positions_do_not_depend_on_epsilon():
    masses = MassConfig((1.0, 1.0))
    axes = (GridAxis(-12.8, 12.8, 128),)
    trajectory = FrameTrajectory.uniform_acceleration(1.0)
    dt, steps = 1e-3, 1000
    positions = []
    for epsilon in (-1.0, 0.0, 1.0):
        ham = ClassicalFrameHamiltonian(masses, PotentialSpec(), axes, trajectory, epsilon)
        state = rasterize(product_state(masses, [0.0], [1.0], frame='primed'), axes)
        traj = evolve_classical_frame(ham, state, dt, steps, record_every=100)
        positions.append(traj.column('mean_xp_1'))
        expected = driven_free_means(ham, [0.0], [0.0], traj.times)['xp_1'].values
        np.testing.assert_allclose(traj.column('mean_xp_1'), expected, atol=1e-6)
    np.testing.assert_allclose(positions[0], positions[2], atol=1e-6)
    np.testing.assert_allclose(positions[1], positions[2], atol=1e-6)
    # x'(t) = -x0(t) for a particle starting at rest
    assert positions[2][-1] == pytest.approx(-0.5, abs=1e-6)


def test_relative_evolution_matches_absolute_marginal():
    masses = MassConfig((1.0, 1.0))
    potential = PotentialSpec((harmonic((0, 1), 1.0),))
    abs_axes = (GridAxis(-12.8, 12.8, 128),) * 2
    rel_axes = (GridAxis(-12.8, 12.8, 128),)
    # m0 w0^2 = m1 w1^2, so the start factorizes into cm and relative parts
    absolute = rasterize(product_state(masses, [0.0, 0.0], [1.0, 1.0]), abs_axes)
    relative = _relative_start(masses, rel_axes, [0.0], [math.sqrt(2.0)])
    dt, steps = 1e-3, 1000
    a = evolve_absolute(AbsoluteHamiltonian(masses, potential, abs_axes), absolute, dt, steps, record_every=steps)
    r = evolve_relative(RelativeHamiltonian(masses, potential, rel_axes), relative, dt, steps, record_every=steps)
    chi, population = convolved_population(a.final_state)
    start = int(np.argmin(np.abs(chi - rel_axes[0].min)))
    np.testing.assert_allclose(chi[start:start + 128], rel_axes[0].points, atol=1e-12)
    expected = np.abs(r.final_state.amplitudes) ** 2
    np.testing.assert_allclose(population[start:start + 128], expected, atol=1e-6)


def test_ehrenfest_relations_on_relative_runs():
    masses = MassConfig((2.0, 1.0, 1.5))
    axes = (GridAxis(-12.8, 12.8, 64),) * 2
    potential = PotentialSpec((gaussian_well((0, 1), 1.0, 1.0), harmonic((1, 2), 0.5)))
    ham = RelativeHamiltonian(masses, potential, axes)
    state = _relative_start(masses, axes, [0.5, -0.5], [1.0, 1.0], [0.2, 0.0])
    traj = evolve_relative(ham, state, 1e-3, 200)
    residuals = ehrenfest_check(traj, ham)
    for key in ('velocity', 'acceleration', 'fictitious', 'pi'):
        assert residuals[key] < 1e-4, key
    assert residuals['samples'] == 201


def test_total_relative_momentum_is_conserved_without_frame_forces():
    masses = MassConfig((1.0, 1.0, 1.0))
    axes = (GridAxis(-12.8, 12.8, 64),) * 2
    ham = RelativeHamiltonian(masses, PotentialSpec((harmonic((1, 2), 1.0),)), axes)
    state = _relative_start(masses, axes, [0.5, -0.5], [1.0, 1.0], [0.4, 0.1])
    traj = evolve_relative(ham, state, 2e-3, 300, record_every=10)
    assert EhrenfestEvaluator(ham).evaluate(traj)['pi_drift'] < 1e-8
    assert pi_observable(traj.final_state)['mean'] == pytest.approx(0.5, abs=1e-6)
    assert traj.energy_drift() < 1e-6


def test_ehrenfest_relations_on_absolute_runs():
    masses = MassConfig((1.0, 2.0))
    axes = (GridAxis(-12.8, 12.8, 64),) * 2
    ham = AbsoluteHamiltonian(masses, PotentialSpec((harmonic((0, 1), 1.0, 0.5),)), axes)
    state = rasterize(product_state(masses, [0.0, 1.0], [1.0, 1.0]), axes)
    traj = evolve_absolute(ham, state, 1e-3, 100)
    residuals = ehrenfest_check(traj, ham)
    assert residuals['velocity'] < 1e-4
    assert residuals['acceleration'] < 1e-4


def test_evaluator_needs_enough_samples():
    masses = MassConfig((1.0,))
    axes = (GridAxis(-12.8, 12.8, 64),)
    ham = AbsoluteHamiltonian(masses, PotentialSpec(), axes)
    traj = evolve_absolute(ham, rasterize(product_state(masses, [0.0], [1.0]), axes), 1e-3, 3)
    with pytest.raises(ConfigError):
        ehrenfest_check(traj, ham)


def test_edge_and_stability_guards():
    masses = MassConfig((1.0,))
    axes = (GridAxis(-8.0, 8.0, 64),)
    ham = AbsoluteHamiltonian(masses, PotentialSpec(), axes)
    near_edge = rasterize(product_state(masses, [5.0], [0.4]), axes)
    assert edge_mass(near_edge) > 1e-8
    with pytest.raises(EdgeError):
        evolve_absolute(ham, near_edge, 1e-3, 10)
    centered = rasterize(product_state(masses, [0.0], [1.0]), axes)
    with pytest.raises(StabilityError):
        evolve_absolute(ham, centered, 1.0, 10)
    with pytest.raises(FrameMismatchError):
        evolve_absolute(ham, rasterize(product_state(masses, [0.0], [1.0]), (GridAxis(-10.0, 10.0, 64),)), 1e-3, 10)
    with pytest.raises(ConfigError):
        evolve_relative(ham, centered, 1e-3, 10)


def test_snapshots_follow_the_stride():
    masses = MassConfig((1.0,))
    axes = (GridAxis(-12.8, 12.8, 64),)
    ham = AbsoluteHamiltonian(masses, PotentialSpec(), axes)
    state = rasterize(product_state(masses, [0.0], [1.0]), axes)
    traj = Evolver(ham, snapshot_stride=5).evolve(state, 1e-3, 20)
    assert [t for t, _ in traj.snapshots] == pytest.approx([0.0, 0.005, 0.01, 0.015, 0.02])
    assert abs(inner_product(traj.snapshots[-1][1], traj.final_state)) == pytest.approx(1.0, abs=1e-12)


@pytest.fixture
def run_config_dict():
    return {
        'mode': 'relative',
        'masses': [1.0, 1.0, 1.0],
        'axes': [{'min': -12.8, 'max': 12.8, 'n': 32}] * 2,
        'dt': 2e-3,
        'steps': 10,
        'initial': {'centers': [0.0, 0.0], 'widths': [1.0, 1.0]},
        'potential': [{'kind': 'harmonic', 'pair': [0, 1], 'params': {'k': 1.0}}],
        'entanglement_partition': [0],
    }


def test_run_config_round_trip_and_run(run_config_dict):
    cfg = RunConfig.from_dict(run_config_dict)
    again = RunConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()
    traj = run(cfg)
    assert len(traj.observables) == 11
    assert 'linear_entropy' in traj.observables
    assert traj.hamiltonian == 'RelativeHamiltonian'


def test_run_config_validation(run_config_dict):
    assert RunConfig.from_dict(run_config_dict, hbar=0.5).masses.hbar == 0.5
    with pytest.raises(ConfigError):
        RunConfig.from_dict({**run_config_dict, 'mode': 'lab'})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({k: v for k, v in run_config_dict.items() if k != 'initial'})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({**run_config_dict, 'schema': 'qrf-run/0'})
