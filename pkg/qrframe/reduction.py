'''the state seen from the reference particle: partial traces, the active map and twirling.
'''
import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import pandas as pd
from scipy import ndimage
from scipy.sparse.linalg import eigsh
from tqdm.autonotebook import tqdm

from . import constants
from . import gaussian_algebra as ga
from .state import (CoordinateFrame, GaussianSuperposition, GridAxis, GridState, MassConfig, cell_volume,
                    default_axes, mesh)
from .transforms import ak, apply_to_grid, cm_relative, to_frame
from .uncertainty import phase_space_moments
from .utils import ConfigError, FrameMismatchError, NotPureError, NumericBudgetError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    '''rho on the grid of the retained coordinates.

    `matrix` holds kernel values times the retained cell volume, so that
    trace and purity are plain matrix sums. Multi-axis indices are
    flattened in C order.
    '''
    labels: Tuple[str, ...]
    axes: Tuple[GridAxis, ...]
    matrix: np.ndarray
    masses: MassConfig = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'labels', tuple(self.labels))
        object.__setattr__(self, 'axes', tuple(self.axes))
        matrix = np.asarray(self.matrix, dtype=complex)
        n = int(np.prod([a.n for a in self.axes]))
        if matrix.shape != (n, n):
            raise ConfigError(f'density matrix shape {matrix.shape} does not match axes ({n} points)')
        object.__setattr__(self, 'matrix', matrix)

    @property
    def size(self):
        return self.matrix.shape[0]

    @property
    def cell_volume(self):
        return cell_volume(self.axes)

    def kernel(self):
        return self.matrix / self.cell_volume

    def populations(self):
        '''diagonal probability density rho(chi, chi) on the retained grid.
        '''
        return np.real(np.diag(self.matrix)).reshape([a.n for a in self.axes]) / self.cell_volume

    def trace(self):
        return float(np.real(np.trace(self.matrix)))

    def purity(self):
        return float(np.real(np.sum(self.matrix * self.matrix.T)))

    def linear_entropy(self):
        return 1.0 - self.purity()

    def hermiticity_residual(self):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self, downsample=constants.EIGENVALUE_DOWNSAMPLE):
        '''smallest eigenvalue of an evenly strided principal submatrix.
        '''
        if self.size <= downsample:
            sub = self.matrix
        else:
            idx = np.unique(np.linspace(0, self.size - 1, downsample).round().astype(int))
            sub = self.matrix[np.ix_(idx, idx)]
        return float(np.linalg.eigvalsh(0.5 * (sub + sub.conj().T))[0])

    def validate(self):
        herm = self.hermiticity_residual()
        if herm > constants.HERMITIAN_TOL:
            raise NumericBudgetError(f'density matrix is not hermitian: residual {herm:.3e}')
        drift = abs(self.trace() - 1.0)
        if drift > constants.TRACE_TOL:
            raise NumericBudgetError(f'density matrix trace deviates from 1 by {drift:.3e}; '
                                     'the retained grid may be too small or too coarse')
        lowest = self.min_eigenvalue()
        if lowest < -constants.EIGENVALUE_TOL:
            raise NumericBudgetError(f'density matrix has eigenvalue {lowest:.3e}')
        return self

    def element(self, i, j):
        '''kernel value rho(chi_i, chi_j) at flat grid indices.
        '''
        return self.matrix[i, j] / self.cell_volume

    def translated(self, offsets):
        '''the same kernel on axes moved by `offsets`, one offset per retained axis.
        '''
        offsets = np.broadcast_to(np.asarray(offsets, dtype=float), (len(self.axes),))
        axes = tuple(GridAxis(a.min + o, a.max + o, a.n) for a, o in zip(self.axes, offsets))
        return DensityMatrix(self.labels, axes, self.matrix, self.masses, dict(self.meta))

    def trace_distance(self, other):
        self._check_same_grid(other)
        return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(self.matrix - other.matrix))))

    def fidelity_with_pure(self, state):
        '''<phi|rho|phi> for a grid state on the same axes.
        '''
        if tuple(state.axes) != self.axes:
            raise FrameMismatchError('pure state lives on different axes')
        v = state.amplitudes.reshape(-1) * np.sqrt(self.cell_volume)
        return float(np.real(np.conj(v) @ self.matrix @ v))

    def partial_trace(self, keep):
        '''trace out retained axes not listed in keep (axis positions).
        '''
        keep = list(keep)
        shape = [a.n for a in self.axes]
        d = len(shape)
        rho = self.matrix.reshape(shape + shape)
        traced = [i for i in range(d) if i not in keep]
        letters = 'abcdefghijklmnopqrstuvwxyz'
        row = [letters[i] for i in range(d)]
        col = [letters[d + i] for i in range(d)]
        for i in traced:
            col[i] = row[i]
        out = ''.join(row[i] for i in keep) + ''.join(col[i] for i in keep)
        reduced = np.einsum(''.join(row) + ''.join(col) + '->' + out, rho)
        n = int(np.prod([shape[i] for i in keep]))
        return DensityMatrix(tuple(self.labels[i] for i in keep), tuple(self.axes[i] for i in keep),
                             reduced.reshape(n, n), self.masses, dict(self.meta))

    def dominant_state(self, frame):
        '''leading eigenvector as a grid state; rejects mixed inputs.
        '''
        if self.size > 2:
            values, vectors = eigsh(self.matrix, k=1, which='LA')
        else:
            values, vectors = np.linalg.eigh(self.matrix)
            values, vectors = values[-1:], vectors[:, -1:]
        if values[0] < 1.0 - constants.PURE_STATE_TOL:
            raise NotPureError(f'input density matrix is mixed (largest eigenvalue {values[0]:.6f})')
        amplitudes = vectors[:, 0].reshape([a.n for a in self.axes]) / np.sqrt(self.cell_volume)
        return GridState(frame, self.axes, amplitudes, self.masses)

    @classmethod
    def from_pure(cls, state):
        v = state.amplitudes.reshape(-1) * np.sqrt(state.cell_volume)
        return cls(state.frame.positions, state.axes, np.outer(v, np.conj(v)), state.masses)

    def to_frame(self):
        '''real and imaginary parts interleaved column-wise.
        '''
        columns = {}
        for j in range(self.size):
            columns[f're_{j}'] = self.matrix[:, j].real
            columns[f'im_{j}'] = self.matrix[:, j].imag
        return pd.DataFrame(columns)

    def header(self):
        return {
            'labels': list(self.labels),
            'axes': [a.to_dict() for a in self.axes],
            'trace': self.trace(),
            'purity': self.purity(),
            'storage': 'kernel times retained cell volume, C-order flattening',
            'meta': self.meta,
        }

    def _check_same_grid(self, other):
        if self.axes != other.axes:
            raise FrameMismatchError('density matrices live on different grids')


@dataclass(frozen=True)
class DisplacementSpec:
    '''relative displacements delta_j (j = 1..N) and the derived argument shifts.
    '''
    deltas: Tuple[float, ...]
    masses: MassConfig

    def __post_init__(self):
        deltas = tuple(float(d) for d in np.atleast_1d(self.deltas))
        if len(deltas) != self.masses.n_particles - 1:
            raise ConfigError(f'{len(deltas)} displacements for {self.masses.n_particles - 1} relative coordinates')
        object.__setattr__(self, 'deltas', deltas)

    @property
    def cm_shift(self):
        '''Delta = sum_j m_j delta_j / M.
        '''
        m = self.masses.as_array()
        return float(np.dot(m[1:], self.deltas) / self.masses.total)

    @property
    def d0(self):
        self._two_particles()
        return self.masses.masses[1] * self.deltas[0] / self.masses.total

    @property
    def d1(self):
        self._two_particles()
        return self.masses.masses[0] * self.deltas[0] / self.masses.total

    def _two_particles(self):
        if self.masses.n_particles != 2:
            raise ConfigError('d0 and d1 are defined for two particles')


def _check_retained(axes):
    for a in axes:
        if a.n > constants.MAX_RETAINED_AXIS_POINTS:
            raise ConfigError(f'retained axes are limited to {constants.MAX_RETAINED_AXIS_POINTS} points, got {a.n}')


def _check_normalized(state):
    drift = abs(state.norm() - 1.0)
    if drift > constants.RENORM_TOL:
        raise NumericBudgetError(f'input state is not normalized (drift {drift:.3e})')


def gaussian_partial_trace(state, keep, axes):
    '''rho over the coordinates `keep` of a gaussian superposition, evaluated on `axes`.
    '''
    keep = list(keep)
    axes = tuple(axes)
    if len(axes) != len(keep):
        raise ConfigError(f'{len(axes)} axes for {len(keep)} retained coordinates')
    _check_retained(axes)
    shifted, origin = state.centered()
    terms = ga.partial_trace_exponents(shifted.branches, keep, state.hbar)
    points = mesh(axes).reshape(-1, len(keep)) - origin[keep]
    n = points.shape[0]
    pair_points = np.concatenate([np.repeat(points, n, axis=0), np.tile(points, (n, 1))], axis=1)
    kernel = sum(term(pair_points) for term in terms).reshape(n, n)
    labels = tuple(state.frame.positions[i] for i in keep)
    return DensityMatrix(labels, axes, kernel * cell_volume(axes), state.masses, {'backend': 'gaussian'})


def grid_partial_trace(state, keep):
    keep = list(keep)
    _check_retained([state.axes[i] for i in keep])
    traced = [i for i in range(state.dim) if i not in keep]
    psi = np.transpose(state.amplitudes, keep + traced)
    n_keep = int(np.prod([state.axes[i].n for i in keep]))
    psi = psi.reshape(n_keep, -1)
    keep_axes = tuple(state.axes[i] for i in keep)
    rest_volume = cell_volume([state.axes[i] for i in traced]) if traced else 1.0
    matrix = (psi @ psi.conj().T) * rest_volume * cell_volume(keep_axes)
    labels = tuple(state.frame.positions[i] for i in keep)
    return DensityMatrix(labels, keep_axes, matrix, state.masses, {'backend': 'grid'})


def reduce(state, keep, axes=None):
    '''generic partial trace keeping the coordinates at positions `keep` of the state's frame.
    '''
    if isinstance(state, GaussianSuperposition):
        if axes is None:
            axes = default_axes(state, indices=keep)
        return gaussian_partial_trace(state, keep, axes)
    _check_normalized(state)
    return grid_partial_trace(state, keep)


def reduce_relative(state, axes=None, target_axes=None):
    '''rho_r: trace the center of mass out of the state expressed in cm+relative coordinates.

    Gaussian inputs are transformed exactly; grid inputs in another frame are
    resampled onto `target_axes` (cm axis first) before the cm axis is summed.
    '''
    if state.masses.n_particles < 2:
        raise ConfigError('relative reduction needs at least two particles')
    if isinstance(state, GridState) and state.frame.name != 'cm_relative' and target_axes is None:
        raise ConfigError('target axes are required to resample a grid state into cm+relative coordinates')
    _check_normalized(state)
    state = to_frame(state, 'cm_relative', target_axes)
    keep = list(range(1, state.dim))
    rho = reduce(state, keep, axes)
    rho.meta['reduction'] = 'relative'
    return rho.validate()


def reduce_external(state, keep=1, axes=None):
    '''rho of one (or several) particles in the external frame, rho(chi, chi + delta) = int du psi(u, chi) psi*(u, chi + delta).
    '''
    if state.frame.name != 'absolute':
        raise FrameMismatchError(f'external reduction needs the absolute frame, state is in {state.frame.name}')
    keep = [keep] if np.isscalar(keep) else list(keep)
    if any(not 0 <= k < state.dim for k in keep):
        raise ConfigError(f'particles to keep {keep} out of range for {state.dim} particles')
    rho = reduce(state, keep, axes)
    rho.meta['reduction'] = 'external'
    return rho.validate()


def active_transform(state, target_axes=None):
    '''T: same numbers as the passive cm+relative map, coordinate labels unchanged.
    '''
    if state.frame.name != 'absolute':
        raise FrameMismatchError(f'the active map acts on absolute-frame states, got {state.frame.name}')
    t = cm_relative(state.masses)
    if isinstance(state, GaussianSuperposition):
        moved = t.apply(state)
    else:
        moved = apply_to_grid(t, state, state.axes if target_axes is None else target_axes)
    return moved.with_frame(state.frame)


def ak_reduce(state, axes=None, target_axes=None):
    '''mass-independent reduction with q_1 = x_1 - x_0: coherences int du psi(u, chi + u) psi*(u, chi + u + delta).
    '''
    if state.masses.n_particles != 2:
        raise ConfigError(f'the AK reduction is defined for two particles, got {state.masses.n_particles}')
    if state.frame.name != 'absolute':
        raise FrameMismatchError(f'AK reduction needs the absolute frame, state is in {state.frame.name}')
    t = ak(state.masses)
    if isinstance(state, GaussianSuperposition):
        moved = t.apply(state)
    else:
        moved = apply_to_grid(t, state, state.axes if target_axes is None else target_axes)
    rho = reduce(moved, [1], axes)
    rho.meta['reduction'] = 'ak'
    return rho.validate()


def twirl(source, cm_axis, relative_axes, show_progress_bar=False):
    '''rho_r = int du T(u) <u|rho|u> T(u)^dagger, summed over u on the cm axis.

    f_u(chi) = psi(u - sum_j m_j chi_j / M, u - sum_j m_j chi_j / M + chi_j)
    and rho_r accumulates f_u f_u^dagger du. Accepts a gaussian state, an
    absolute grid state, or a pure DensityMatrix over the absolute grid.
    '''
    if isinstance(source, DensityMatrix):
        n = source.masses.n_particles
        source = source.dominant_state(CoordinateFrame.absolute(n))
    if source.frame.name != 'absolute':
        raise FrameMismatchError(f'twirling acts on absolute-frame states, got {source.frame.name}')
    relative_axes = tuple(relative_axes)
    masses = source.masses
    if len(relative_axes) != masses.n_particles - 1:
        raise ConfigError(f'{len(relative_axes)} relative axes for {masses.n_particles} particles')
    _check_retained(relative_axes)
    m = masses.as_array()
    chi = mesh(relative_axes).reshape(-1, len(relative_axes))
    x0_offset = chi @ m[1:] / masses.total
    if isinstance(source, GridState):
        _check_normalized(source)
        kwargs = dict(order=constants.INTERPOLATION_ORDER, mode='grid-wrap')
        # spline coefficients once; map_coordinates then skips the prefilter
        coeff_re = ndimage.spline_filter(source.amplitudes.real, order=constants.INTERPOLATION_ORDER, mode='grid-wrap')
        coeff_im = ndimage.spline_filter(source.amplitudes.imag, order=constants.INTERPOLATION_ORDER, mode='grid-wrap')

    def amplitude(points):
        if isinstance(source, GaussianSuperposition):
            return source.evaluate(points)
        coords = np.stack([(points[:, i] - a.min) / a.spacing for i, a in enumerate(source.axes)], axis=0)
        inside = np.ones(points.shape[0], dtype=bool)
        for i, a in enumerate(source.axes):
            inside &= (points[:, i] >= a.min) & (points[:, i] < a.max)
        values = (ndimage.map_coordinates(coeff_re, coords, prefilter=False, **kwargs)
                  + 1j * ndimage.map_coordinates(coeff_im, coords, prefilter=False, **kwargs))
        return np.where(inside, values, 0.0)

    size = chi.shape[0]
    rho = np.zeros((size, size), dtype=complex)
    for u in tqdm(cm_axis.points, desc='Twirl', disable=not show_progress_bar):
        x0 = u - x0_offset
        points = np.column_stack([x0] + [x0 + chi[:, j] for j in range(chi.shape[1])])
        f = amplitude(points)
        rho += np.outer(f, np.conj(f))
    rho *= cm_axis.spacing * cell_volume(relative_axes)
    labels = CoordinateFrame.named('relative', masses.n_particles).positions
    out = DensityMatrix(labels, relative_axes, rho, masses, {'backend': 'twirl', 'reduction': 'relative'})
    return out.validate()


def relative_coherence(state, chi, deltas):
    '''<chi|rho_r|chi + delta> from int du psi(u, chi_j + u) psi*(u - Delta, chi_j + u - Delta + delta_j).
    '''
    if not isinstance(state, GaussianSuperposition) or state.frame.name != 'absolute':
        raise FrameMismatchError('the displaced-argument formula needs an absolute-frame gaussian state')
    spec = DisplacementSpec(tuple(np.atleast_1d(deltas)), state.masses)
    chi = np.atleast_1d(np.asarray(chi, dtype=float))
    delta = np.asarray(spec.deltas)
    shift = spec.cm_shift
    n = state.dim
    shifted, origin = state.centered()
    E = np.ones((n, 1))
    f_ket = np.concatenate([[0.0], chi]) - origin
    f_bra = np.concatenate([[-shift], chi - shift + delta]) - origin
    total = 0.0 + 0.0j
    for a in ga.active(shifted.branches):
        ket = ga.branch_exponent(a, state.hbar).embed(E, f_ket)
        for b in ga.active(shifted.branches):
            bra = ga.branch_exponent(b, state.hbar, conjugate=True).embed(E, f_bra)
            total += (ket + bra).integral()
    return complex(total)


def convolved_population(state):
    '''P(chi) = int du |psi(u, chi + u)|^2 summed directly on an absolute two-particle grid.

    Returns the chi axis values and the density; chi = x_1 - x_0 runs over
    every index difference of the two axes, which must share their spacing.
    '''
    if not isinstance(state, GridState) or state.frame.name != 'absolute' or state.dim != 2:
        raise ConfigError('the direct population sum needs an absolute two-particle grid state')
    a0, a1 = state.axes
    if not np.isclose(a0.spacing, a1.spacing, rtol=1e-12, atol=0):
        raise ConfigError('both axes need the same spacing')
    density = np.abs(state.amplitudes) ** 2
    n0, n1 = density.shape
    offsets = np.arange(-(n0 - 1), n1)
    values = np.array([np.trace(density, offset=c) for c in offsets]) * a0.spacing
    chi = (a1.min - a0.min) + offsets * a0.spacing
    return chi, values


def gaussian_purity(state, keep):
    '''Tr rho^2 of the partial trace onto `keep`, in closed form.
    '''
    if not isinstance(state, GaussianSuperposition):
        raise ConfigError('closed-form purity needs a gaussian state')
    keep = list(keep)
    if len(keep) == state.dim:
        return 1.0
    shifted, _ = state.centered()
    return ga.partial_trace_purity(shifted.branches, keep, state.hbar)


def relative_purity(state):
    '''purity of rho_r, computed exactly for gaussian states and by partial trace for cm+relative grids.
    '''
    if isinstance(state, GaussianSuperposition):
        moved = to_frame(state, 'cm_relative')
        return gaussian_purity(moved, range(1, moved.dim))
    if state.frame.name != 'cm_relative':
        raise FrameMismatchError(f'grid purity needs a cm+relative state, got {state.frame.name}')
    return grid_partial_trace(state, range(1, state.dim)).purity()


def inertial_limit_distance(state, axes=None):
    '''trace distance between rho_r and the external rho_1 moved by the mean frame position.

    Small only for a frame that is much heavier than particle 1, sharply
    localized and not in a superposition of positions.
    '''
    if not isinstance(state, GaussianSuperposition):
        raise ConfigError('the inertial-limit distance is evaluated on gaussian states')
    if state.masses.n_particles != 2:
        raise ConfigError(f'the inertial-limit distance compares two particles, got {state.masses.n_particles}')
    if state.frame.name != 'absolute':
        raise FrameMismatchError(f'the inertial-limit distance needs the absolute frame, got {state.frame.name}')
    rho_r = reduce_relative(state, axes)
    frame_mean = float(phase_space_moments(state)[0][0])
    moved = rho_r.translated([frame_mean])
    rho_1 = reduce_external(state, 1, moved.axes)
    return moved.trace_distance(rho_1)


def bipartite_linear_entropy(state, keep):
    '''1 - Tr rho_K^2 between the axes `keep` and the rest of a pure grid or gaussian state.
    '''
    if isinstance(state, GaussianSuperposition):
        return 1.0 - gaussian_purity(state, keep)
    _check_normalized(state)
    keep = list(keep)
    traced = [i for i in range(state.dim) if i not in keep]
    psi = np.transpose(state.amplitudes, keep + traced).reshape(int(np.prod([state.axes[i].n for i in keep])), -1)
    # Tr rho^2 = ||psi^dagger psi||_F^2 on the smaller side
    gram = psi.conj().T @ psi if psi.shape[0] >= psi.shape[1] else psi @ psi.conj().T
    purity = float(np.sum(np.abs(gram) ** 2)) * state.cell_volume ** 2
    return 1.0 - purity
