'''masses, coordinate frames and the two state representations.

`GaussianSuperposition` is the exact backend: a list of gaussian branches with
full covariance matrices. `GridState` is the oracle backend: complex
amplitudes on a periodic grid. Both are immutable values.
'''
import logging
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from . import constants
from . import gaussian_algebra as ga
from .utils import (ConfigError, FrameMismatchError, ExtentError, NumericBudgetError, as_float, is_power_of_two,
                    malformed_input)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MassConfig:
    '''particle masses m_0..m_N (particle 0 is the reference frame) and hbar.
    '''
    masses: Tuple[float, ...]
    hbar: float = constants.HBAR

    def __post_init__(self):
        with malformed_input('mass config'):
            masses = tuple(as_float(m, 'mass') for m in self.masses)
        hbar = as_float(self.hbar, 'hbar')
        if len(masses) == 0:
            raise ConfigError('at least one mass is required')
        if any(not np.isfinite(m) or m <= 0 for m in masses):
            raise ConfigError(f'masses should be positive, got {list(masses)}')
        if not hbar > 0:
            raise ConfigError(f'hbar should be positive, got {hbar}')
        object.__setattr__(self, 'masses', masses)
        object.__setattr__(self, 'hbar', hbar)

    @property
    def n_particles(self):
        return len(self.masses)

    @property
    def total(self):
        return float(sum(self.masses))

    def reduced(self, j):
        '''mu_0j = m_0 m_j / (m_0 + m_j).
        '''
        if not 1 <= j < self.n_particles:
            raise ConfigError(f'particle index {j} should be in [1, {self.n_particles - 1}]')
        m0, mj = self.masses[0], self.masses[j]
        return m0 * mj / (m0 + mj)

    @property
    def gamma(self):
        if self.n_particles != 3:
            raise ConfigError('gamma is defined for three particles only')
        m0, m1, m2 = self.masses
        return m0 * m1 * m2 / (self.total * self.reduced(1) * self.reduced(2))

    def as_array(self):
        return np.asarray(self.masses)

    def reorder(self, perm):
        return MassConfig(tuple(self.masses[i] for i in perm), self.hbar)

    def to_dict(self):
        return {'masses': list(self.masses), 'hbar': self.hbar}

    @classmethod
    def from_dict(cls, data):
        if 'masses' not in data:
            raise ConfigError('mass config requires a "masses" list')
        with malformed_input('mass config'):
            return cls(tuple(data['masses']), data.get('hbar', constants.HBAR))


def _absolute_labels(n):
    return tuple(f'x{i}' for i in range(n)), tuple(f'p{i}' for i in range(n))


FRAME_LABELS = {
    'absolute': _absolute_labels,
    'cm_relative': lambda n: (('x_cm',) + tuple(f'x_r{j}' for j in range(1, n)),
                              ('pi_cm',) + tuple(f'pi_{j}' for j in range(1, n))),
    'qpr': lambda n: (('q_cm',) + tuple(f'q_{j}' for j in range(1, n)),
                      ('p_cm',) + tuple(f'p_r{j}' for j in range(1, n))),
    'ak': lambda n: (tuple(f'q{j}_ak' for j in range(n)), tuple(f'pi{j}_ak' for j in range(n))),
    # frames with the reference particle removed: n counts the particles including the frame
    'relative': lambda n: (tuple(f'x_r{j}' for j in range(1, n)), tuple(f'pi_{j}' for j in range(1, n))),
    'primed': lambda n: (tuple(f'xp_{j}' for j in range(1, n)), tuple(f'pp_{j}' for j in range(1, n))),
}

REDUCED_FRAMES = ('relative', 'primed')


@dataclass(frozen=True)
class CoordinateFrame:
    name: str
    positions: Tuple[str, ...]
    momenta: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, 'positions', tuple(self.positions))
        object.__setattr__(self, 'momenta', tuple(self.momenta))
        if len(self.positions) != len(self.momenta):
            raise ConfigError('every position label needs exactly one conjugate momentum label')
        labels = self.positions + self.momenta
        if len(set(labels)) != len(labels):
            raise ConfigError(f'frame labels should be unique, got {list(labels)}')

    @property
    def dim(self):
        return len(self.positions)

    @classmethod
    def named(cls, name, n_particles):
        if name not in FRAME_LABELS:
            raise ConfigError(f'frame should be one of {sorted(FRAME_LABELS)}, got {name}')
        positions, momenta = FRAME_LABELS[name](n_particles)
        return cls(name, positions, momenta)

    @classmethod
    def absolute(cls, n_particles):
        return cls.named('absolute', n_particles)

    def expected_dim(self, n_particles):
        return n_particles - 1 if self.name in REDUCED_FRAMES else n_particles

    def index(self, label):
        if label in self.positions:
            return self.positions.index(label)
        if label in self.momenta:
            return self.momenta.index(label)
        raise ConfigError(f'unknown coordinate {label} in frame {self.name}')

    def same_as(self, other):
        return self.positions == other.positions and self.momenta == other.momenta

    def to_dict(self):
        return {'name': self.name, 'positions': list(self.positions), 'momenta': list(self.momenta)}

    @classmethod
    def from_dict(cls, data):
        with malformed_input('coordinate frame'):
            return cls(data['name'], tuple(data['positions']), tuple(data['momenta']))


@dataclass(frozen=True, eq=False)
class GaussianBranch:
    '''one weighted gaussian product branch, generalized to a full covariance.
    '''
    coefficient: complex
    centers: np.ndarray
    covariance: np.ndarray
    momentum_offsets: np.ndarray

    def __post_init__(self):
        centers = np.atleast_1d(np.asarray(self.centers, dtype=float))
        n = centers.shape[0]
        covariance = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if self.momentum_offsets is None:
            momenta = np.zeros(n)
        else:
            momenta = np.atleast_1d(np.asarray(self.momentum_offsets, dtype=float))
        if covariance.shape != (n, n) or momenta.shape != (n,):
            raise ConfigError(f'branch arrays disagree: {n} centers, covariance {covariance.shape}, '
                              f'{momenta.shape[0]} momentum offsets')
        covariance = 0.5 * (covariance + covariance.T)
        if np.any(np.linalg.eigvalsh(covariance) <= 0):
            raise ConfigError('branch covariance should be positive definite (widths > 0)')
        object.__setattr__(self, 'centers', centers)
        object.__setattr__(self, 'covariance', covariance)
        object.__setattr__(self, 'momentum_offsets', momenta)
        object.__setattr__(self, 'coefficient', complex(self.coefficient))

    @classmethod
    def from_widths(cls, coefficient, centers, widths, momentum_offsets=None):
        widths = np.atleast_1d(np.asarray(widths, dtype=float))
        if np.any(widths <= 0):
            raise ConfigError(f'widths should be positive, got {widths.tolist()}')
        return cls(coefficient, centers, np.diag(widths ** 2), momentum_offsets)

    @property
    def dim(self):
        return self.centers.shape[0]

    @property
    def widths(self):
        return np.sqrt(np.diag(self.covariance))

    def evaluate(self, points, hbar=constants.HBAR):
        '''amplitude at points with shape (..., dim).
        '''
        diff = np.asarray(points, dtype=float) - self.centers
        P = np.linalg.inv(self.covariance)
        quad = np.einsum('...i,ij,...j->...', diff, P, diff)
        phase = diff @ self.momentum_offsets / hbar
        return self.coefficient * np.exp(ga.branch_log_norm(self.covariance) - 0.25 * quad + 1j * phase)

    def translated(self, shift):
        return replace(self, centers=self.centers + np.asarray(shift, dtype=float))

    def scaled(self, factor):
        return replace(self, coefficient=self.coefficient * factor)

    def to_dict(self):
        out = {
            'coefficient': [self.coefficient.real, self.coefficient.imag],
            'centers': self.centers.tolist(),
            'momentum_offsets': self.momentum_offsets.tolist(),
        }
        if np.count_nonzero(self.covariance - np.diag(np.diag(self.covariance))) == 0:
            out['widths'] = self.widths.tolist()
        else:
            out['covariance'] = self.covariance.tolist()
        return out

    @classmethod
    def from_dict(cls, data):
        coefficient = data.get('coefficient', [1.0, 0.0])
        if isinstance(coefficient, (list, tuple)):
            if len(coefficient) != 2:
                raise ConfigError('branch coefficient should be [re, im]')
            coefficient = complex(as_float(coefficient[0], 'coefficient'), as_float(coefficient[1], 'coefficient'))
        if 'centers' not in data:
            raise ConfigError('branch requires "centers"')
        momenta = data.get('momentum_offsets')
        if 'covariance' not in data and 'widths' not in data:
            raise ConfigError('branch requires "widths" or "covariance"')
        with malformed_input('gaussian branch'):
            if 'covariance' in data:
                return cls(coefficient, data['centers'], data['covariance'], momenta)
            return cls.from_widths(coefficient, data['centers'], data['widths'], momenta)


def _check_frame(frame, masses, dim):
    if frame.dim != dim:
        raise ConfigError(f'frame {frame.name} has {frame.dim} coordinates, state has {dim}')
    if frame.name in FRAME_LABELS and frame.expected_dim(masses.n_particles) != dim:
        raise ConfigError(f'frame {frame.name} with {masses.n_particles} masses expects '
                          f'{frame.expected_dim(masses.n_particles)} coordinates, got {dim}')


@dataclass(frozen=True, eq=False)
class GaussianSuperposition:
    '''normalized weighted sum of gaussian branches; normalization uses every pairwise overlap.
    '''
    frame: CoordinateFrame
    branches: Tuple[GaussianBranch, ...]
    masses: MassConfig

    def __post_init__(self):
        branches = tuple(self.branches)
        if len(branches) == 0:
            raise ConfigError('a gaussian state needs at least one branch')
        dims = {b.dim for b in branches}
        if len(dims) != 1:
            raise ConfigError(f'branches have inconsistent dimensions {sorted(dims)}')
        _check_frame(self.frame, self.masses, branches[0].dim)
        origin = ga.common_origin(branches)
        shifted = [b.translated(-origin) for b in branches]
        norm = ga.overlap(shifted, shifted, self.masses.hbar).real
        if not norm > 0:
            raise ConfigError('gaussian state has zero norm')
        scale = 1.0 / np.sqrt(norm)
        object.__setattr__(self, 'branches', tuple(b.scaled(scale) for b in branches))

    @property
    def dim(self):
        return self.branches[0].dim

    @property
    def hbar(self):
        return self.masses.hbar

    def evaluate(self, points):
        return sum(b.evaluate(points, self.hbar) for b in self.branches)

    def norm(self):
        return float(inner_product(self, self).real)

    def translated(self, shift):
        return replace(self, branches=tuple(b.translated(shift) for b in self.branches))

    def centered(self):
        '''the state translated so the mean branch center is the origin, and that origin.
        '''
        origin = ga.common_origin(self.branches)
        return self.translated(-origin), origin

    def with_frame(self, frame):
        return replace(self, frame=frame)

    def to_dict(self):
        return {
            'schema': constants.STATE_SCHEMA,
            'hbar': self.hbar,
            'masses': list(self.masses.masses),
            'frame': self.frame.to_dict(),
            'branches': [b.to_dict() for b in self.branches],
        }

    @classmethod
    def from_dict(cls, data):
        schema = data.get('schema')
        if schema != constants.STATE_SCHEMA:
            raise ConfigError(f'state schema should be {constants.STATE_SCHEMA}, got {schema}')
        for key in ['masses', 'branches']:
            if key not in data:
                raise ConfigError(f'state file requires "{key}"')
        masses = MassConfig.from_dict(data)
        frame = data.get('frame', 'absolute')
        if isinstance(frame, str):
            frame = CoordinateFrame.named(frame, masses.n_particles)
        elif isinstance(frame, dict):
            frame = CoordinateFrame.from_dict(frame)
        else:
            raise ConfigError(f'state frame should be a name or an object, got {frame!r}')
        with malformed_input('state branches'):
            branches = tuple(GaussianBranch.from_dict(b) for b in data['branches'])
        return cls(frame, branches, masses)


@dataclass(frozen=True)
class GridAxis:
    '''periodic axis with n points on [min, max): x_i = min + i (max - min) / n.
    '''
    min: float
    max: float
    n: int

    def __post_init__(self):
        lo, hi = as_float(self.min, 'axis min'), as_float(self.max, 'axis max')
        if not hi > lo:
            raise ConfigError(f'grid axis needs max > min, got [{lo}, {hi}]')
        if not as_float(self.n, 'axis size').is_integer():
            raise ConfigError(f'grid axis size should be an integer, got {self.n!r}')
        if not is_power_of_two(int(self.n)):
            raise ConfigError(f'grid axis size should be a power of two, got {self.n}')
        object.__setattr__(self, 'n', int(self.n))
        object.__setattr__(self, 'min', lo)
        object.__setattr__(self, 'max', hi)

    @property
    def spacing(self):
        return (self.max - self.min) / self.n

    @property
    def points(self):
        return self.min + self.spacing * np.arange(self.n)

    def momenta(self, hbar=constants.HBAR):
        return 2.0 * np.pi * hbar * np.fft.fftfreq(self.n, d=self.spacing)

    def to_dict(self):
        return {'min': self.min, 'max': self.max, 'n': self.n}

    @classmethod
    def from_dict(cls, data):
        with malformed_input('grid axis'):
            return cls(data['min'], data['max'], data['n'])


def cell_volume(axes):
    return float(np.prod([a.spacing for a in axes]))


def mesh(axes):
    '''stacked grid points with shape (n_0, ..., n_d-1, d).
    '''
    grids = np.meshgrid(*[a.points for a in axes], indexing='ij')
    return np.stack(grids, axis=-1)


def momentum_mesh(axes, hbar=constants.HBAR):
    grids = np.meshgrid(*[a.momenta(hbar) for a in axes], indexing='ij')
    return np.stack(grids, axis=-1)


@dataclass(frozen=True, eq=False)
class GridState:
    frame: CoordinateFrame
    axes: Tuple[GridAxis, ...]
    amplitudes: np.ndarray
    masses: MassConfig

    def __post_init__(self):
        axes = tuple(self.axes)
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if amplitudes.shape != tuple(a.n for a in axes):
            raise ConfigError(f'amplitudes shape {amplitudes.shape} does not match axes '
                              f'{tuple(a.n for a in axes)}')
        _check_frame(self.frame, self.masses, len(axes))
        object.__setattr__(self, 'axes', axes)
        object.__setattr__(self, 'amplitudes', amplitudes)
        drift = abs(self.norm() - 1.0)
        if drift > constants.GRID_NORM_TOL:
            raise NumericBudgetError(f'grid state norm deviates from 1 by {drift:.3e}')

    @property
    def dim(self):
        return len(self.axes)

    @property
    def hbar(self):
        return self.masses.hbar

    @property
    def cell_volume(self):
        return cell_volume(self.axes)

    def mesh(self):
        return mesh(self.axes)

    def probability(self):
        return np.abs(self.amplitudes) ** 2 * self.cell_volume

    def norm(self):
        return float(np.sum(np.abs(self.amplitudes) ** 2) * cell_volume(self.axes))

    def with_amplitudes(self, amplitudes, renormalize=False):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if renormalize:
            amplitudes = amplitudes / np.sqrt(np.sum(np.abs(amplitudes) ** 2) * self.cell_volume)
        return replace(self, amplitudes=amplitudes)

    def with_frame(self, frame):
        return replace(self, frame=frame)

    def translated(self, shift):
        '''psi(x - shift), applied spectrally (exact for band-limited states).
        '''
        shift = np.asarray(shift, dtype=float)
        if np.all(shift == 0):
            return self
        k = momentum_mesh(self.axes, 1.0)
        phase = np.exp(-1j * (k @ shift))
        return self.with_amplitudes(np.fft.ifftn(phase * np.fft.fftn(self.amplitudes)))


def check_clearance(state, axes, widths=constants.CLEARANCE_WIDTHS):
    for b in state.branches:
        sigma = b.widths
        for i, axis in enumerate(axes):
            lo, hi = b.centers[i] - widths * sigma[i], b.centers[i] + widths * sigma[i]
            if lo < axis.min or hi > axis.max:
                label = state.frame.positions[i]
                raise ExtentError(f'axis {label} [{axis.min}, {axis.max}) does not clear branch center '
                                  f'{b.centers[i]:.6g} by {widths:g} widths ({sigma[i]:.3g})', axis=label)


def rasterize(state, axes):
    '''evaluate a gaussian superposition on a grid and renormalize there.
    '''
    axes = tuple(axes)
    if len(axes) != state.dim:
        raise ConfigError(f'{len(axes)} grid axes given for a {state.dim}-dimensional state')
    check_clearance(state, axes)
    amplitudes = state.evaluate(mesh(axes))
    norm = np.sum(np.abs(amplitudes) ** 2) * cell_volume(axes)
    correction = abs(1.0 - norm)
    if correction > constants.RENORM_TOL:
        logger.warning('rasterization renormalized by %.3e; the grid may under-resolve the state', correction)
    else:
        logger.debug('rasterization renormalization %.3e', correction)
    return GridState(state.frame, axes, amplitudes / np.sqrt(norm), state.masses)


def default_axes(state, n_points=constants.DEFAULT_AXIS_POINTS, widths=constants.DEFAULT_AXIS_WIDTHS, indices=None):
    '''axes covering every branch by `widths` standard deviations.
    '''
    indices = range(state.dim) if indices is None else indices
    axes = []
    for i in indices:
        lo = min(b.centers[i] - widths * b.widths[i] for b in state.branches)
        hi = max(b.centers[i] + widths * b.widths[i] for b in state.branches)
        axes.append(GridAxis(lo, hi, n_points))
    return tuple(axes)


def check_compatible(a, b):
    if not a.frame.same_as(b.frame):
        raise FrameMismatchError(f'frames differ: {a.frame.name} {list(a.frame.positions)} vs '
                                 f'{b.frame.name} {list(b.frame.positions)}')
    if not np.allclose(a.masses.masses, b.masses.masses, rtol=1e-14, atol=0) or a.hbar != b.hbar:
        raise FrameMismatchError('states carry different masses or hbar')


def inner_product(a, b):
    '''<a|b>: closed form for gaussian pairs, quadrature for grids.
    '''
    check_compatible(a, b)
    if isinstance(a, GaussianSuperposition) and isinstance(b, GaussianSuperposition):
        origin = ga.common_origin(a.branches + b.branches)
        return complex(ga.overlap(a.translated(-origin).branches, b.translated(-origin).branches, a.hbar))
    if isinstance(a, GaussianSuperposition):
        a = rasterize(a, b.axes)
    if isinstance(b, GaussianSuperposition):
        b = rasterize(b, a.axes)
    if a.axes != b.axes:
        raise FrameMismatchError('grid states live on different axes')
    return complex(np.sum(np.conj(a.amplitudes) * b.amplitudes) * a.cell_volume)


def reorder(state, perm):
    '''relabel particles of an absolute-frame state: new particle i is old particle perm[i].
    '''
    perm = list(perm)
    if sorted(perm) != list(range(state.masses.n_particles)):
        raise ConfigError(f'{perm} is not a permutation of the particles')
    if state.frame.name != 'absolute':
        raise FrameMismatchError('particles can only be reordered in the absolute frame')
    masses = state.masses.reorder(perm)
    frame = CoordinateFrame.absolute(masses.n_particles)
    if isinstance(state, GaussianSuperposition):
        branches = tuple(GaussianBranch(b.coefficient, b.centers[perm], b.covariance[np.ix_(perm, perm)],
                                        b.momentum_offsets[perm]) for b in state.branches)
        return GaussianSuperposition(frame, branches, masses)
    return GridState(frame, tuple(state.axes[i] for i in perm), np.transpose(state.amplitudes, perm), masses)


def product_state(masses, centers, widths, momenta=None, frame='absolute'):
    '''single gaussian product branch.
    '''
    if isinstance(frame, str):
        frame = CoordinateFrame.named(frame, masses.n_particles)
    return GaussianSuperposition(frame, (GaussianBranch.from_widths(1.0, centers, widths, momenta),), masses)


def superposition(masses, branch_centers, widths, coefficients=None, momenta=None, frame='absolute'):
    '''sum of gaussian product branches sharing the same widths.
    '''
    if isinstance(frame, str):
        frame = CoordinateFrame.named(frame, masses.n_particles)
    if coefficients is None:
        coefficients = [1.0] * len(branch_centers)
    branches = tuple(GaussianBranch.from_widths(c, centers, widths, momenta)
                     for c, centers in zip(coefficients, branch_centers))
    return GaussianSuperposition(frame, branches, masses)


def two_branch_state(masses, centers, widths, deltas, phi=0.0):
    '''(|x_0>|x_1> + e^{i phi}|x_0 + delta_0>|x_1 + delta_1>) up to normalization.
    '''
    centers = np.asarray(centers, dtype=float)
    return superposition(masses, [centers, centers + np.asarray(deltas, dtype=float)], widths,
                         coefficients=[1.0, np.exp(1j * phi)])
