'''the shift operator S = sum_i delta_i p_i, its decompositions and <exp(iS/hbar)>.
'''
import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np
import sympy

from . import constants
from .state import GaussianSuperposition, MassConfig, inner_product
from .transforms import FRAME_TRANSFORMS, frame_transform, qpr_momentum_rows, to_frame
from .utils import ConfigError, FrameMismatchError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ShiftDecomposition:
    '''S written on the momenta of one frame: S = delta^T p = (A delta)^T p'.
    '''
    deltas: np.ndarray
    masses: MassConfig
    transform: str
    coefficients: np.ndarray
    labels: tuple

    @property
    def delta_cm(self):
        return float(self.masses.as_array() @ self.deltas / self.masses.total)

    @property
    def cm_fraction(self):
        norm = float(np.linalg.norm(self.deltas))
        return 0.0 if norm == 0 else abs(self.delta_cm) / norm

    @property
    def accessible(self):
        return self.cm_fraction < constants.ACCESSIBILITY_RTOL

    @property
    def operationally_accessible(self):
        return self.cm_fraction <= constants.OPERATIONAL_ACCESSIBILITY_RTOL

    def reconstruct(self):
        '''absolute coefficients back from the frame coefficients, delta = A^-1 c.
        '''
        A = frame_transform(self.transform, self.masses).position_block
        return np.linalg.solve(A, self.coefficients)

    def residual(self):
        return float(np.max(np.abs(self.reconstruct() - self.deltas)))

    def relative_only(self):
        '''absolute coefficients of S with its center-of-mass term dropped.
        '''
        if self.transform not in ('cm_relative', 'qpr'):
            raise ConfigError(f'no center-of-mass momentum in the {self.transform} frame')
        coefficients = self.coefficients.copy()
        coefficients[0] = 0.0
        A = frame_transform(self.transform, self.masses).position_block
        return np.linalg.solve(A, coefficients)

    def to_dict(self):
        return {
            'deltas': self.deltas.tolist(),
            'transform': self.transform,
            'coefficients': dict(zip(self.labels, self.coefficients.tolist())),
            'delta_cm': self.delta_cm,
            'cm_fraction': self.cm_fraction,
            'accessible': self.accessible,
            'operationally_accessible': self.operationally_accessible,
            'reconstruction_residual': self.residual(),
        }


def decompose_shift(deltas, masses, transform='cm_relative'):
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    if deltas.shape[0] != masses.n_particles:
        raise ConfigError(f'{deltas.shape[0]} shift coefficients for {masses.n_particles} particles')
    if transform not in FRAME_TRANSFORMS:
        raise ConfigError(f'transform should be one of {sorted(FRAME_TRANSFORMS)}, got {transform}')
    t = frame_transform(transform, masses)
    return ShiftDecomposition(deltas, masses, transform, t.position_block @ deltas, t.output_frame.momenta)


def shift_expectation(state, deltas, basis=None, relative_only=False):
    '''<psi|exp(+iS/hbar)|psi>, i.e. the overlap of psi with psi translated by -delta.

    `basis` evaluates the same operator on the state transformed to another
    frame; `relative_only` drops the center-of-mass term of S first.
    '''
    if state.frame.name not in FRAME_TRANSFORMS:
        raise FrameMismatchError(f'shift operators are defined on registered frames, state is in {state.frame.name}')
    masses = state.masses
    decomposition = decompose_shift(deltas, masses)
    absolute = decomposition.relative_only() if relative_only else decomposition.deltas
    if basis is not None:
        if isinstance(state, GaussianSuperposition):
            state = to_frame(state, basis)
        elif state.frame.name != basis:
            raise ConfigError('grid states are probed in their own frame; transform them first')
    shift = frame_transform(state.frame.name, masses).position_block @ absolute
    return complex(inner_product(state, state.translated(-shift)))


@dataclass(frozen=True)
class HeavyLimitForm:
    labels: tuple
    exact: Dict[str, float]
    truncated: Dict[str, float]
    error_bound: float

    def to_dict(self):
        return {'labels': list(self.labels), 'exact': self.exact, 'truncated': self.truncated,
                'error_bound': self.error_bound}


def heavy_limit_pi_form(deltas, masses):
    '''S on (pi_cm, pi_j): exact coefficients, the form with pi_cm dropped, and |delta_cm| / ||delta||.
    '''
    decomposition = decompose_shift(deltas, masses, 'cm_relative')
    labels = decomposition.labels
    exact = dict(zip(labels, decomposition.coefficients.tolist()))
    truncated = dict(exact)
    truncated[labels[0]] = 0.0
    return HeavyLimitForm(labels, exact, truncated, decomposition.cm_fraction)


def heavy_limit_relative_form(deltas, masses, heavy=-1):
    '''S on (p_cm, p_rj) exactly and in the limit where particle `heavy` becomes infinitely massive.
    '''
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    decomposition = decompose_shift(deltas, masses, 'qpr')
    n = masses.n_particles
    heavy = heavy % n
    if heavy == 0:
        raise ConfigError('the reference particle cannot be taken to the heavy limit here')
    m = [sympy.nsimplify(v, rational=True) for v in masses.masses]
    big = sympy.Symbol('m_heavy', positive=True)
    m[heavy] = big
    A = qpr_momentum_rows(m).inv().T
    d = sympy.Matrix([sympy.nsimplify(v, rational=True) for v in deltas])
    coefficients = A * d
    limit = [float(sympy.limit(sympy.simplify(c), big, sympy.oo)) for c in coefficients]
    labels = decomposition.labels
    exact = dict(zip(labels, decomposition.coefficients.tolist()))
    truncated = dict(zip(labels, limit))
    error = max(abs(exact[k] - truncated[k]) for k in labels) / max(float(np.linalg.norm(deltas)), 1e-300)
    return HeavyLimitForm(labels, exact, truncated, error)
