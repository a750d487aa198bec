'''linear canonical transformations between absolute and relative coordinates.

Every transform is a pair of blocks (A, B) acting as x' = A x, p' = B p with
B = A^-T. Matrices are built exactly in rational arithmetic with sympy from
the masses and converted to floating point once.
'''
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import pandas as pd
import sympy
from scipy import ndimage

from . import constants
from .state import (CoordinateFrame, GaussianBranch, GaussianSuperposition, GridState,
                    cell_volume, mesh)
from .utils import ConfigError, FrameMismatchError, NumericBudgetError, SupportClippedError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LinearCanonicalTransform:
    name: str
    position_block: np.ndarray
    momentum_block: np.ndarray
    input_frame: CoordinateFrame
    output_frame: CoordinateFrame
    exact_position_block: Optional[sympy.Matrix] = field(default=None, repr=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.position_block, dtype=float))
        B = np.atleast_2d(np.asarray(self.momentum_block, dtype=float))
        n = self.input_frame.dim
        if A.shape != (n, n) or B.shape != (n, n) or self.output_frame.dim != n:
            raise ConfigError(f'transform {self.name}: blocks {A.shape}, {B.shape} do not match {n} coordinates')
        object.__setattr__(self, 'position_block', A)
        object.__setattr__(self, 'momentum_block', B)
        residual = self.symplectic_residual()
        if residual >= constants.SYMPLECTIC_TOL:
            raise ConfigError(f'transform {self.name} is not canonical: |S J S^T - J| = {residual:.3e}')

    @property
    def dim(self):
        return self.input_frame.dim

    def symplectic_matrix(self):
        n = self.dim
        S = np.zeros((2 * n, 2 * n))
        S[:n, :n] = self.position_block
        S[n:, n:] = self.momentum_block
        return S

    def symplectic_residual(self):
        n = self.dim
        J = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
        S = self.symplectic_matrix()
        return float(np.max(np.abs(S @ J @ S.T - J)))

    def inverse(self):
        exact = self.exact_position_block.inv() if self.exact_position_block is not None else None
        A_inv = _to_float(exact) if exact is not None else np.linalg.inv(self.position_block)
        return LinearCanonicalTransform(f'{self.name}_inverse', A_inv, self.position_block.T,
                                        self.output_frame, self.input_frame, exact)

    def compose(self, first):
        '''self after first.
        '''
        if not first.output_frame.same_as(self.input_frame):
            raise FrameMismatchError(f'cannot compose {self.name} after {first.name}: frames differ')
        exact = None
        if self.exact_position_block is not None and first.exact_position_block is not None:
            exact = self.exact_position_block * first.exact_position_block
        A = _to_float(exact) if exact is not None else self.position_block @ first.position_block
        return LinearCanonicalTransform(f'{self.name}*{first.name}', A,
                                        self.momentum_block @ first.momentum_block,
                                        first.input_frame, self.output_frame, exact)

    def apply(self, state, target_axes=None):
        if isinstance(state, GaussianSuperposition):
            return apply_to_gaussian(self, state)
        return apply_to_grid(self, state, target_axes)

    def blocks_frame(self):
        '''both blocks as a labelled DataFrame, for csv dumps.
        '''
        A = pd.DataFrame(self.position_block, index=self.output_frame.positions, columns=self.input_frame.positions)
        B = pd.DataFrame(self.momentum_block, index=self.output_frame.momenta, columns=self.input_frame.momenta)
        return pd.concat({'position': A, 'momentum': B})


def _rational(value):
    return sympy.nsimplify(value, rational=True)


def _to_float(matrix):
    return np.array(matrix.evalf(30).tolist(), dtype=float)


def _from_exact(name, A, masses, out_frame_name, in_frame_name='absolute'):
    B = A.inv().T
    n = masses.n_particles
    return LinearCanonicalTransform(name, _to_float(A), _to_float(B),
                                    CoordinateFrame.named(in_frame_name, n),
                                    CoordinateFrame.named(out_frame_name, n), A)


def _from_exact_momenta(name, B, masses, out_frame_name):
    A = B.inv().T
    return _from_exact(name, A, masses, out_frame_name)


def identity(masses):
    n = masses.n_particles
    return _from_exact('identity', sympy.eye(n), masses, 'absolute')


def cm_relative(masses):
    '''x_cm = sum m_i x_i / M, x_rj = x_j - x_0; conjugates pi_cm = sum p_i, pi_j = p_j - m_j p_cm / M.
    '''
    m = [_rational(v) for v in masses.masses]
    n = len(m)
    M = sum(m)
    A = sympy.zeros(n, n)
    for i in range(n):
        A[0, i] = m[i] / M
    for j in range(1, n):
        A[j, j] = 1
        A[j, 0] = -1
    return _from_exact('cm_relative', A, masses, 'cm_relative')


def cm_relative_inverse(masses):
    t = cm_relative(masses).inverse()
    return replace(t, name='cm_relative_inverse')


def xrpi3(masses):
    if masses.n_particles != 3:
        raise ConfigError('xrpi3 is defined for three particles')
    return replace(cm_relative(masses), name='xrpi3')


def qpr_momentum_rows(m):
    '''exact momentum block of qpr for masses given as sympy numbers or symbols.
    '''
    n = len(m)
    B = sympy.zeros(n, n)
    for i in range(n):
        B[0, i] = 1
    for j in range(1, n):
        mu = m[0] * m[j] / (m[0] + m[j])
        B[j, j] = mu / m[j]
        B[j, 0] = -mu / m[0]
    return B


def qpr(masses):
    '''p_cm = sum p_i and p_rj = mu_0j (p_j / m_j - p_0 / m_0); positions by symplectic completion.
    '''
    B = qpr_momentum_rows([_rational(v) for v in masses.masses])
    return _from_exact_momenta('qpr', B, masses, 'qpr')


def qpr3(masses):
    if masses.n_particles != 3:
        raise ConfigError('qpr3 is defined for three particles')
    return replace(qpr(masses), name='qpr3')


def ak(masses):
    '''q_0 = x_0, q_j = x_j - x_0; conjugates pi_0 = sum p_i, pi_j = p_j. Mass independent.
    '''
    n = masses.n_particles
    A = sympy.eye(n)
    for j in range(1, n):
        A[j, 0] = -1
    return _from_exact('ak', A, masses, 'ak')


TRANSFORMS = {
    'identity': identity,
    'cm_relative': cm_relative,
    'cm_relative_inverse': cm_relative_inverse,
    'xrpi3': xrpi3,
    'qpr': qpr,
    'qpr3': qpr3,
    'ak': ak,
}

# frame name -> transform from the absolute frame
FRAME_TRANSFORMS = {
    'absolute': identity,
    'cm_relative': cm_relative,
    'qpr': qpr,
    'ak': ak,
}


def build_transform(name, masses):
    if name not in TRANSFORMS:
        raise ConfigError(f'transform should be one of {sorted(TRANSFORMS)}, got {name}')
    return TRANSFORMS[name](masses)


def frame_transform(frame_name, masses):
    if frame_name not in FRAME_TRANSFORMS:
        raise FrameMismatchError(f'no transform from the absolute frame to {frame_name}')
    return FRAME_TRANSFORMS[frame_name](masses)


def transform_between(source_frame, target_frame, masses):
    '''transform taking coordinates of source_frame to those of target_frame.
    '''
    to_source = frame_transform(source_frame, masses)
    to_target = frame_transform(target_frame, masses)
    if source_frame == 'absolute':
        return to_target
    return to_target.compose(to_source.inverse())


def to_frame(state, frame_name, target_axes=None):
    if state.frame.name == frame_name:
        return state
    t = transform_between(state.frame.name, frame_name, state.masses)
    return t.apply(state, target_axes)


def _check_input(t, state):
    if not t.input_frame.same_as(state.frame):
        raise FrameMismatchError(f'transform {t.name} expects frame {t.input_frame.name}, '
                                 f'state is in {state.frame.name}')


def apply_to_gaussian(t, state):
    '''centers and momenta map linearly, covariances map to A S A^T.
    '''
    _check_input(t, state)
    A, B = t.position_block, t.momentum_block
    branches = tuple(GaussianBranch(b.coefficient, A @ b.centers, A @ b.covariance @ A.T, B @ b.momentum_offsets)
                     for b in state.branches)
    return GaussianSuperposition(t.output_frame, branches, state.masses)


def _fractional_index(points, axes):
    return np.stack([(points[..., i] - a.min) / a.spacing for i, a in enumerate(axes)], axis=0)


def _inside(points, axes):
    ok = np.ones(points.shape[:-1], dtype=bool)
    for i, a in enumerate(axes):
        ok &= (points[..., i] >= a.min) & (points[..., i] < a.max)
    return ok


def apply_to_grid(t, state, target_axes=None):
    '''resample psi'(y) = psi(A^-1 y) / sqrt|det A| by separable cubic interpolation.
    '''
    _check_input(t, state)
    target_axes = tuple(state.axes if target_axes is None else target_axes)
    if len(target_axes) != state.dim:
        raise ConfigError(f'{len(target_axes)} target axes for a {state.dim}-dimensional state')
    A = t.position_block
    A_inv = np.linalg.inv(A)

    # mass leaving the target box under the forward map
    source_points = mesh(state.axes)
    image = source_points @ A.T
    clipped = float(np.sum(state.probability()[~_inside(image, target_axes)]))
    if clipped >= constants.SUPPORT_CLIP_TOL:
        raise SupportClippedError(f'{clipped:.3e} of the probability maps outside the target axes of {t.name}')

    target_points = mesh(target_axes)
    preimage = target_points @ A_inv.T
    coords = _fractional_index(preimage, state.axes)
    kwargs = dict(order=constants.INTERPOLATION_ORDER, mode='grid-wrap')
    real = ndimage.map_coordinates(state.amplitudes.real, coords, **kwargs)
    imag = ndimage.map_coordinates(state.amplitudes.imag, coords, **kwargs)
    amplitudes = (real + 1j * imag) / np.sqrt(abs(np.linalg.det(A)))
    amplitudes[~_inside(preimage, state.axes)] = 0.0

    norm = float(np.sum(np.abs(amplitudes) ** 2) * cell_volume(target_axes))
    drift = abs(norm - 1.0)
    if drift > constants.RESAMPLE_DRIFT_TOL:
        raise NumericBudgetError(f'resampling under {t.name} changed the norm by {drift:.3e}')
    logger.debug('grid resampling under %s: norm drift %.3e', t.name, drift)
    return GridState(t.output_frame, target_axes, amplitudes / np.sqrt(norm), state.masses)


def absolute_shift_generator(j, masses):
    '''absolute momentum coefficients w of p_rj = w . p.
    '''
    mu = masses.reduced(j)
    w = np.zeros(masses.n_particles)
    w[0] = -mu / masses.masses[0]
    w[j] = mu / masses.masses[j]
    return w


def relative_momentum_shift(state, j, delta):
    '''apply exp(-i delta p_rj / hbar).

    In the cm+relative frame x_rj moves by delta, every other x_rk by
    (mu_0j / m_0) delta and x_cm stays put. Works in any registered frame.
    '''
    if delta == 0:
        return state
    n = state.masses.n_particles
    if not 1 <= j < n:
        raise ConfigError(f'particle index {j} should be in [1, {n - 1}]')
    w = absolute_shift_generator(j, state.masses)
    if state.frame.name == 'relative':
        shift = (cm_relative(state.masses).position_block @ w)[1:]
    else:
        shift = frame_transform(state.frame.name, state.masses).position_block @ w
    shift = delta * shift
    return state.translated(shift)


def commutator_table(position_transform, momentum_transform, hbar=constants.HBAR):
    '''[X_i, P_j] = i hbar (A_1 B_2^T)_ij for positions of one transform and momenta of another.
    '''
    values = 1j * hbar * position_transform.position_block @ momentum_transform.momentum_block.T
    return pd.DataFrame(values, index=list(position_transform.output_frame.positions),
                        columns=list(momentum_transform.output_frame.momenta))


def relative_commutator_table(masses):
    '''[x_rj, p_rk] / (i hbar) for j, k >= 1.
    '''
    table = commutator_table(cm_relative(masses), qpr(masses), hbar=1.0)
    return pd.DataFrame(np.real(table.values[1:, 1:] / 1j), index=table.index[1:], columns=table.columns[1:])
