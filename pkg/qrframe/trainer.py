'''time stepping of grid states under a GridHamiltonian.
'''
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
import pandas as pd
import torch
from tqdm.autonotebook import trange

from . import constants
from .modeling_qrf import AbsoluteHamiltonian, ClassicalFrameHamiltonian, RelativeHamiltonian
from .potentials import FrameTrajectory, PotentialSpec
from .reduction import bipartite_linear_entropy
from .state import GridAxis, GridState, MassConfig, mesh, momentum_mesh, product_state, rasterize
from .utils import ConfigError, EdgeError, NumericBudgetError, malformed_input

logger = logging.getLogger(__name__)


@dataclass
class Trajectory:
    '''uniformly sampled observables of one run plus optional state snapshots.
    '''
    dt: float
    observables: pd.DataFrame
    final_state: GridState
    hamiltonian: str
    labels: Tuple[str, ...]
    snapshots: List[Tuple[float, GridState]] = field(default_factory=list)
    record_every: int = 1

    @property
    def times(self):
        return self.observables['t'].values

    @property
    def sample_dt(self):
        return self.dt * self.record_every

    def column(self, name):
        return self.observables[name].values

    def norm_drift(self):
        norm = self.column('norm')
        return float(np.max(np.abs(norm - norm[0])))

    def energy_drift(self):
        '''max relative change of <H> against its initial value.
        '''
        energy = self.column('energy')
        scale = max(abs(energy[0]), 1e-300)
        return float(np.max(np.abs(energy - energy[0])) / scale)


def edge_mass(state, fraction=constants.EDGE_BAND_FRACTION):
    '''largest probability found in the outer band of any axis.
    '''
    prob = state.probability()
    worst = 0.0
    for i, axis in enumerate(state.axes):
        band = max(1, int(np.ceil(fraction * axis.n)))
        moved = np.moveaxis(prob, i, 0)
        worst = max(worst, float(moved[:band].sum() + moved[-band:].sum()))
    return worst


def check_edges(state, step=0):
    mass = edge_mass(state)
    if mass > constants.EDGE_MASS_TOL:
        raise EdgeError(f'{mass:.3e} of the probability reached the outer {constants.EDGE_BAND_FRACTION:.0%} '
                        f'of the grid at step {step}; enlarge the axes')


def pi_observable(state):
    '''<Pi> and its spread for Pi = sum_j pi_j on a relative-frame grid state.
    '''
    if state.frame.name != 'relative':
        raise ConfigError(f'Pi is measured on relative-frame states, got {state.frame.name}')
    total = momentum_mesh(state.axes, state.hbar).sum(axis=-1)
    weights = np.abs(np.fft.fftn(state.amplitudes)) ** 2
    weights = weights / weights.sum()
    mean = float(np.sum(weights * total))
    var = float(np.sum(weights * total ** 2)) - mean ** 2
    return {'mean': mean, 'std': float(np.sqrt(max(var, 0.0)))}


class Evolver:
    '''drives a split-step propagator and logs observables every `record_every` steps.

    args:
        hamiltonian: a GridHamiltonian fixing frame, axes and the propagator.
        snapshot_stride: keep a copy of the state every that many steps (0 keeps none).
        entanglement_partition: axis positions whose linear entropy against the rest is logged.
        edge_check: raise EdgeError when probability reaches the grid border band.
    '''
    def __init__(self, hamiltonian, snapshot_stride=0, entanglement_partition=None, edge_check=True, record_every=1):
        if record_every < 1:
            raise ConfigError(f'record_every should be positive, got {record_every}')
        self.hamiltonian = hamiltonian
        self.snapshot_stride = int(snapshot_stride)
        self.entanglement_partition = None if entanglement_partition is None else list(entanglement_partition)
        self.edge_check = edge_check
        self.record_every = int(record_every)
        h = hamiltonian
        self._x = np.moveaxis(mesh(h.axes), -1, 0)
        self._k = np.moveaxis(momentum_mesh(h.axes, h.hbar), -1, 0)
        self._force = np.moveaxis(h.force_from_positions(np.moveaxis(self._x, 0, -1)), -1, 0)

    def observe(self, state, t):
        '''one row of the observables table.
        '''
        h = self.hamiltonian
        labels = state.frame.positions
        prob = state.probability()
        weights = np.abs(np.fft.fftn(state.amplitudes)) ** 2
        weights = weights / weights.sum()
        row = {'t': t, 'norm': state.norm(), 'energy': h.energy(state, t)}
        for i, label in enumerate(labels):
            mean_x = float(np.sum(prob * self._x[i]))
            row[f'mean_{label}'] = mean_x
            row[f'var_{label}'] = float(np.sum(prob * self._x[i] ** 2)) - mean_x ** 2
            row[f'mean_{state.frame.momenta[i]}'] = float(np.sum(weights * self._k[i]))
            row[f'force_{label}'] = float(np.sum(prob * self._force[i]))
        if isinstance(h, RelativeHamiltonian):
            total = self._k.sum(axis=0)
            mean_pi = float(np.sum(weights * total))
            row['mean_Pi'] = mean_pi
            row['var_Pi'] = float(np.sum(weights * total ** 2)) - mean_pi ** 2
        if self.entanglement_partition is not None:
            row['linear_entropy'] = bipartite_linear_entropy(state, self.entanglement_partition)
        return row

    def evolve(self, state, dt, steps, show_progress_bar=False):
        h = self.hamiltonian
        h.check_state(state)
        if steps < 1 or not dt > 0:
            raise ConfigError(f'need dt > 0 and at least one step, got dt={dt}, steps={steps}')
        h.check_stability(dt, dt * steps)
        if self.edge_check:
            check_edges(state)
        propagator = h.build_propagator(dt)
        psi = torch.as_tensor(state.amplitudes, dtype=torch.complex128)
        initial_norm = state.norm()

        score_logs = defaultdict(list)
        snapshots = []
        current = state
        for key, value in self.observe(current, 0.0).items():
            score_logs[key].append(value)
        if self.snapshot_stride:
            snapshots.append((0.0, current))

        with torch.no_grad():
            for step in trange(1, steps + 1, desc='Step', disable=not show_progress_bar):
                t_mid = (step - 0.5) * dt
                velocity_term, acceleration_term = h.drive_terms(t_mid)
                psi = propagator(psi, velocity_term, acceleration_term)['psi']
                recording = step % self.record_every == 0
                snapshot = self.snapshot_stride and step % self.snapshot_stride == 0
                if not (recording or snapshot):
                    continue
                amplitudes = psi.numpy()
                norm = float(np.sum(np.abs(amplitudes) ** 2) * state.cell_volume)
                allowed = constants.STEP_NORM_TOL * max(1.0, step / 1000.0)
                if abs(norm - initial_norm) > allowed:
                    raise NumericBudgetError(f'norm drifted by {abs(norm - initial_norm):.3e} after {step} steps')
                current = state.with_amplitudes(amplitudes, renormalize=True)
                if self.edge_check:
                    check_edges(current, step)
                if recording:
                    row = self.observe(current, step * dt)
                    row['norm'] = norm
                    for key, value in row.items():
                        score_logs[key].append(value)
                if snapshot:
                    snapshots.append((step * dt, current))

        final = state.with_amplitudes(psi.numpy(), renormalize=True)
        observables = pd.DataFrame(score_logs)
        logger.info('evolved %d steps of dt=%g under %s: norm drift %.3e', steps, dt, type(h).__name__,
                    float(np.max(np.abs(observables['norm'].values - initial_norm))))
        return Trajectory(dt, observables, final, type(h).__name__, state.frame.positions, snapshots,
                          self.record_every)


def evolve_relative(hamiltonian, state, dt, steps, **kwargs):
    if not isinstance(hamiltonian, RelativeHamiltonian):
        raise ConfigError('evolve_relative needs a RelativeHamiltonian')
    show = kwargs.pop('show_progress_bar', False)
    return Evolver(hamiltonian, **kwargs).evolve(state, dt, steps, show_progress_bar=show)


def evolve_classical_frame(hamiltonian, state, dt, steps, **kwargs):
    if not isinstance(hamiltonian, ClassicalFrameHamiltonian):
        raise ConfigError('evolve_classical_frame needs a ClassicalFrameHamiltonian')
    show = kwargs.pop('show_progress_bar', False)
    return Evolver(hamiltonian, **kwargs).evolve(state, dt, steps, show_progress_bar=show)


def evolve_absolute(hamiltonian, state, dt, steps, **kwargs):
    if not isinstance(hamiltonian, AbsoluteHamiltonian):
        raise ConfigError('evolve_absolute needs an AbsoluteHamiltonian')
    show = kwargs.pop('show_progress_bar', False)
    return Evolver(hamiltonian, **kwargs).evolve(state, dt, steps, show_progress_bar=show)


RUN_MODES = {
    'relative': 'relative',
    'classical_frame': 'primed',
    'absolute': 'absolute',
}


@dataclass(frozen=True, eq=False)
class RunConfig:
    '''everything `qrf evolve` needs: masses, potential, grid, steps and the initial gaussian.

    `initial` holds `centers`, `widths` and optional `momenta` in the frame of
    the mode; classical-frame runs also read `epsilon` and `trajectory`.
    '''
    mode: str
    masses: MassConfig
    axes: Tuple[GridAxis, ...]
    dt: float
    steps: int
    initial: dict
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    snapshot_stride: int = 0
    record_every: int = 1
    epsilon: float = 1.0
    trajectory: FrameTrajectory = field(default_factory=FrameTrajectory.at_rest)
    entanglement_partition: Tuple[int, ...] = None
    edge_check: bool = True

    def __post_init__(self):
        if self.mode not in RUN_MODES:
            raise ConfigError(f'mode should be one of {list(RUN_MODES)}, got {self.mode}')
        if not self.dt > 0 or int(self.steps) < 1:
            raise ConfigError(f'need dt > 0 and at least one step, got dt={self.dt}, steps={self.steps}')
        object.__setattr__(self, 'axes', tuple(self.axes))
        object.__setattr__(self, 'steps', int(self.steps))
        for key in ('centers', 'widths'):
            if key not in self.initial:
                raise ConfigError(f'initial state requires "{key}"')

    @property
    def frame_name(self):
        return RUN_MODES[self.mode]

    def build_hamiltonian(self):
        if self.mode == 'classical_frame':
            return ClassicalFrameHamiltonian(self.masses, self.potential, self.axes, self.trajectory, self.epsilon)
        if self.mode == 'relative':
            return RelativeHamiltonian(self.masses, self.potential, self.axes)
        return AbsoluteHamiltonian(self.masses, self.potential, self.axes)

    def build_state(self):
        with malformed_input('initial state'):
            gaussian = product_state(self.masses, self.initial['centers'], self.initial['widths'],
                                     self.initial.get('momenta'), frame=self.frame_name)
        return rasterize(gaussian, self.axes)

    def to_dict(self):
        return {
            'schema': constants.RUN_SCHEMA,
            'mode': self.mode,
            'masses': list(self.masses.masses),
            'hbar': self.masses.hbar,
            'axes': [a.to_dict() for a in self.axes],
            'dt': self.dt,
            'steps': self.steps,
            'initial': self.initial,
            'potential': self.potential.to_dict(),
            'snapshot_stride': self.snapshot_stride,
            'record_every': self.record_every,
            'epsilon': self.epsilon,
            'trajectory': self.trajectory.to_dict(),
            'entanglement_partition': None if self.entanglement_partition is None
            else list(self.entanglement_partition),
            'edge_check': self.edge_check,
        }

    @classmethod
    def from_dict(cls, data, hbar=None):
        if not isinstance(data, dict):
            raise ConfigError(f'run config should be a json object, got {type(data).__name__}')
        schema = data.get('schema', constants.RUN_SCHEMA)
        if schema != constants.RUN_SCHEMA:
            raise ConfigError(f'run config schema should be {constants.RUN_SCHEMA}, got {schema}')
        for key in ['mode', 'masses', 'axes', 'dt', 'steps', 'initial']:
            if key not in data:
                raise ConfigError(f'run config requires "{key}"')
        masses = MassConfig.from_dict(data if hbar is None else dict(data, hbar=hbar))
        partition = data.get('entanglement_partition')
        with malformed_input('run config'):
            return cls(
                mode=data['mode'],
                masses=masses,
                axes=tuple(GridAxis.from_dict(a) for a in data['axes']),
                dt=float(data['dt']),
                steps=data['steps'],
                initial=dict(data['initial']),
                potential=PotentialSpec.from_dict(data.get('potential', [])),
                snapshot_stride=int(data.get('snapshot_stride', 0)),
                record_every=int(data.get('record_every', 1)),
                epsilon=float(data.get('epsilon', 1.0)),
                trajectory=FrameTrajectory.from_dict(data.get('trajectory', {'kind': 'polynomial'})),
                entanglement_partition=None if partition is None else tuple(partition),
                edge_check=bool(data.get('edge_check', True)),
            )


def run(cfg, show_progress_bar=False):
    '''build the hamiltonian and initial grid state of a RunConfig and evolve it.
    '''
    hamiltonian = cfg.build_hamiltonian()
    evolver = Evolver(hamiltonian, snapshot_stride=cfg.snapshot_stride,
                      entanglement_partition=cfg.entanglement_partition, edge_check=cfg.edge_check,
                      record_every=cfg.record_every)
    return evolver.evolve(cfg.build_state(), cfg.dt, cfg.steps, show_progress_bar=show_progress_bar)
