'''hamiltonians on periodic grids and the torch split-step propagators built from them.
'''
import logging

import numpy as np
import torch
from torch import nn

from . import constants
from .state import CoordinateFrame, mesh, momentum_mesh
from .utils import ConfigError, FrameMismatchError, StabilityError

logger = logging.getLogger(__name__)


class SplitStepPropagator(nn.Module):
    '''one Strang step: half kick by the position-space part, full drift in momentum space, half kick.

    Optional drive grids add time-dependent terms: `momentum_drive` (scaled by
    the velocity coefficient) joins the drift, `position_drive` (scaled by the
    acceleration coefficient) joins the kicks.
    '''
    def __init__(self, kinetic, potential, dt, hbar=constants.HBAR, momentum_drive=None, position_drive=None):
        super().__init__()
        self.dt = float(dt)
        self.hbar = float(hbar)
        self.register_buffer('kinetic', torch.as_tensor(np.asarray(kinetic, dtype=float)))
        self.register_buffer('potential', torch.as_tensor(np.asarray(potential, dtype=float)))
        self.register_buffer('half_kick', torch.exp(-0.5j * self.dt / self.hbar * self.potential.to(torch.complex128)))
        self.register_buffer('drift', torch.exp(-1j * self.dt / self.hbar * self.kinetic.to(torch.complex128)))
        self.momentum_drive = None if momentum_drive is None else torch.as_tensor(np.asarray(momentum_drive, dtype=float))
        self.position_drive = None if position_drive is None else torch.as_tensor(np.asarray(position_drive, dtype=float))
        self.dims = tuple(range(self.kinetic.dim()))

    def _phases(self, velocity_term, acceleration_term):
        half_kick, drift = self.half_kick, self.drift
        if self.position_drive is not None and acceleration_term != 0:
            half_kick = half_kick * torch.exp(-0.5j * self.dt / self.hbar * acceleration_term * self.position_drive)
        if self.momentum_drive is not None and velocity_term != 0:
            drift = drift * torch.exp(-1j * self.dt / self.hbar * velocity_term * self.momentum_drive)
        return half_kick, drift

    def forward(self, psi, velocity_term=0.0, acceleration_term=0.0):
        half_kick, drift = self._phases(float(velocity_term), float(acceleration_term))
        psi = half_kick * psi
        psi = torch.fft.ifftn(drift * torch.fft.fftn(psi, dim=self.dims), dim=self.dims)
        psi = half_kick * psi
        return {'psi': psi}


class GridHamiltonian:
    '''kinetic part diagonal in momentum space plus a position-space potential on fixed axes.
    '''
    frame_name = None

    def __init__(self, masses, potential, axes):
        self.masses = masses
        self.potential = potential
        self.axes = tuple(axes)
        self.hbar = masses.hbar
        expected = CoordinateFrame.named(self.frame_name, masses.n_particles).expected_dim(masses.n_particles)
        if len(self.axes) != expected:
            raise ConfigError(f'{self.frame_name} hamiltonian for {masses.n_particles} masses needs {expected} axes, '
                              f'got {len(self.axes)}')
        potential.check_particles(masses.n_particles)
        self._kinetic = self.kinetic_from_momenta(momentum_mesh(self.axes, self.hbar))
        self._potential = self.potential_from_positions(mesh(self.axes))

    @property
    def frame(self):
        return CoordinateFrame.named(self.frame_name, self.masses.n_particles)

    def kinetic_from_momenta(self, k):
        raise NotImplementedError

    def potential_from_positions(self, x):
        raise NotImplementedError

    def force_from_positions(self, x):
        '''-dV with respect to each grid coordinate.
        '''
        raise NotImplementedError

    def check_state(self, state):
        if state.frame.name != self.frame_name:
            raise FrameMismatchError(f'{type(self).__name__} evolves {self.frame_name}-frame states, '
                                     f'got {state.frame.name}')
        if tuple(state.axes) != self.axes:
            raise FrameMismatchError('state axes differ from the hamiltonian axes')

    def energy(self, state, t=0.0):
        weights = np.abs(np.fft.fftn(state.amplitudes)) ** 2
        weights = weights / weights.sum()
        return float(np.sum(weights * self._kinetic) + np.sum(state.probability() * self._potential))

    def max_kinetic(self, t_end=0.0):
        return float(np.max(np.abs(self._kinetic)))

    def stability_number(self, dt, t_end=0.0):
        '''dt max|T(k)| / hbar; the split step is accepted below the budget.
        '''
        return dt * self.max_kinetic(t_end) / self.hbar

    def check_stability(self, dt, t_end=0.0):
        number = self.stability_number(dt, t_end)
        if number >= constants.STABILITY_BUDGET:
            raise StabilityError(f'dt max|T(k)|/hbar = {number:.3f} exceeds the budget {constants.STABILITY_BUDGET}; '
                                 'reduce dt or coarsen the grid')
        logger.debug('split-step stability number %.3e', number)
        return number

    def build_propagator(self, dt):
        return SplitStepPropagator(self._kinetic, self._potential, dt, self.hbar)

    def drive_terms(self, t):
        return 0.0, 0.0


class RelativeHamiltonian(GridHamiltonian):
    '''H_rel = sum_j pi_j^2 / 2 m_j + Pi^2 / 2 m_0 + V(0, x_r), Pi = sum_j pi_j.
    '''
    frame_name = 'relative'

    def kinetic_from_momenta(self, k):
        m = self.masses.as_array()
        total = k.sum(axis=-1)
        return np.sum(k ** 2 / (2.0 * m[1:]), axis=-1) + total ** 2 / (2.0 * m[0])

    def potential_from_positions(self, x):
        return self.potential.evaluate_relative(x)

    def force_from_positions(self, x):
        return -self.potential.gradient_relative(x)


class AbsoluteHamiltonian(GridHamiltonian):
    '''H = sum_i p_i^2 / 2 m_i + V(x).
    '''
    frame_name = 'absolute'

    def kinetic_from_momenta(self, k):
        return np.sum(k ** 2 / (2.0 * self.masses.as_array()), axis=-1)

    def potential_from_positions(self, x):
        return self.potential.evaluate(x)

    def force_from_positions(self, x):
        return -self.potential.gradient(x)


class ClassicalFrameHamiltonian(GridHamiltonian):
    '''H'_eps = sum_k p'_k^2 / 2 m_k + V(x') - (1 + eps)/2 x0'(t) P' + (1 - eps)/2 x0''(t) sum_k m_k x'_k.

    masses[0] belongs to the classical frame and only fixes the particle count;
    eps = +1 keeps the velocity coupling only, eps = -1 the uniform field only.
    '''
    frame_name = 'primed'

    def __init__(self, masses, potential, axes, trajectory, epsilon=1.0):
        self.trajectory = trajectory
        self.epsilon = float(epsilon)
        super().__init__(masses, potential, axes)
        particle_masses = self.masses.as_array()[1:]
        self._total_momentum = momentum_mesh(self.axes, self.hbar).sum(axis=-1)
        self._weighted_position = np.sum(mesh(self.axes) * particle_masses, axis=-1)

    @property
    def velocity_coefficient(self):
        return -0.5 * (1.0 + self.epsilon)

    @property
    def acceleration_coefficient(self):
        return 0.5 * (1.0 - self.epsilon)

    def kinetic_from_momenta(self, k):
        return np.sum(k ** 2 / (2.0 * self.masses.as_array()[1:]), axis=-1)

    def potential_from_positions(self, x):
        return self.potential.evaluate_relative(x)

    def force_from_positions(self, x):
        return -self.potential.gradient_relative(x)

    def drive_terms(self, t):
        return (self.velocity_coefficient * float(self.trajectory.velocity(t)),
                self.acceleration_coefficient * float(self.trajectory.acceleration(t)))

    def energy(self, state, t=0.0):
        velocity_term, acceleration_term = self.drive_terms(t)
        weights = np.abs(np.fft.fftn(state.amplitudes)) ** 2
        weights = weights / weights.sum()
        prob = state.probability()
        return float(np.sum(weights * (self._kinetic + velocity_term * self._total_momentum))
                     + np.sum(prob * (self._potential + acceleration_term * self._weighted_position)))

    def max_kinetic(self, t_end=0.0):
        times = np.linspace(0.0, t_end, 64) if t_end > 0 else np.zeros(1)
        velocity = np.max(np.abs(self.trajectory.velocity(times)))
        drift = abs(self.velocity_coefficient) * velocity * np.max(np.abs(self._total_momentum))
        return float(np.max(np.abs(self._kinetic)) + drift)

    def build_propagator(self, dt):
        return SplitStepPropagator(self._kinetic, self._potential, dt, self.hbar,
                                   momentum_drive=self._total_momentum, position_drive=self._weighted_position)


HAMILTONIANS = {
    'relative': RelativeHamiltonian,
    'absolute': AbsoluteHamiltonian,
    'classical_frame': ClassicalFrameHamiltonian,
}
