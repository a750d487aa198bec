'''closed-form results for gaussian branches: overlaps, purities, dispersion ratio.

Each formula has a backend counterpart (`variance_pair`, `product_internal_purity`)
computed from an actual state so that tests can compare the two.
'''
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from . import constants
from . import gaussian_algebra as ga
from .reduction import relative_purity
from .state import GaussianSuperposition, MassConfig, product_state, two_branch_state
from .utils import ConfigError

logger = logging.getLogger(__name__)


def _check_alpha(alpha):
    if not np.all(np.asarray(alpha) >= 0):
        raise ConfigError(f'alpha should be non-negative, got {alpha}')


def alpha_from_separation(delta, width):
    '''alpha = delta^2 / 8 width^2, so that <x|x + delta> = exp(-alpha).
    '''
    if not width > 0:
        raise ConfigError(f'width should be positive, got {width}')
    return delta ** 2 / (8.0 * width ** 2)


def two_branch_purity(alpha):
    _check_alpha(alpha)
    return 1.0 - 0.5 * np.tanh(alpha) ** 2


def linear_entropy(alpha):
    _check_alpha(alpha)
    return 0.5 * np.tanh(alpha) ** 2


def alpha_from_entanglement(entanglement):
    entanglement = _clamp_entanglement(entanglement)
    return float(np.arctanh(np.sqrt(2.0 * entanglement)))


@dataclass(frozen=True)
class BranchPairDiagnostics:
    alpha: float
    overlap: float
    purity: float
    entanglement: float

    @classmethod
    def from_alpha(cls, alpha):
        _check_alpha(alpha)
        entanglement = float(linear_entropy(alpha))
        return cls(float(alpha), float(np.exp(-alpha)), 1.0 - entanglement, entanglement)

    @classmethod
    def from_separation(cls, delta, width):
        return cls.from_alpha(alpha_from_separation(delta, width))

    def to_dict(self):
        return {'alpha': self.alpha, 'overlap': self.overlap, 'purity': self.purity,
                'entanglement': self.entanglement}


def internal_purity(m0, m1, width0, width1):
    '''purity of the relative state of two product gaussians:
    (m0 + m1) w0 w1 / sqrt((m0^2 w0^2 + m1^2 w1^2)(w0^2 + w1^2)).
    '''
    values = np.array([m0, m1, width0, width1], dtype=float)
    if np.any(values <= 0):
        raise ConfigError(f'masses and widths should be positive, got {values.tolist()}')
    return float((m0 + m1) * width0 * width1
                 / np.sqrt((m0 ** 2 * width0 ** 2 + m1 ** 2 * width1 ** 2) * (width0 ** 2 + width1 ** 2)))


def is_separable(m0, m1, width0, width1, rtol=constants.SEPARABILITY_RTOL):
    '''product gaussians stay a product in cm+relative coordinates iff m0 w0^2 = m1 w1^2.
    '''
    a, b = m0 * width0 ** 2, m1 * width1 ** 2
    return bool(abs(a - b) <= rtol * max(a, b))


def product_internal_purity(masses, widths, centers=None):
    '''relative-state purity of an N-particle gaussian product, from the exact backend.
    '''
    if not isinstance(masses, MassConfig):
        masses = MassConfig(tuple(masses))
    widths = np.asarray(widths, dtype=float)
    if centers is None:
        centers = np.zeros(masses.n_particles)
    return relative_purity(product_state(masses, centers, widths))


def _clamp_entanglement(entanglement):
    if not 0.0 <= entanglement <= 0.5:
        raise ConfigError(f'entanglement should be in [0, 1/2), got {entanglement}')
    return min(float(entanglement), constants.ENTANGLEMENT_CLAMP)


def dispersion_ratio(entanglement):
    '''dx_1 / dx_r1 = sqrt(1/2 + (1 + sqrt(2E)) arctanh(sqrt(2E)) / 2).
    '''
    s = np.sqrt(2.0 * _clamp_entanglement(entanglement))
    return float(np.sqrt(0.5 + 0.5 * (1.0 + s) * np.arctanh(s)))


def dispersion_ratio_alpha(alpha):
    _check_alpha(alpha)
    return float(np.sqrt(0.5 + 0.5 * alpha * (1.0 + np.tanh(alpha))))


def dispersion_curve(samples=100):
    '''ratio on an even grid of E in [0, 1/2), one row per sample.
    '''
    if samples < 2:
        raise ConfigError(f'samples should be at least 2, got {samples}')
    grid = np.linspace(0.0, 0.5, samples, endpoint=False)
    return pd.DataFrame({
        'entanglement': grid,
        'alpha': [alpha_from_entanglement(e) for e in grid],
        'ratio': [dispersion_ratio(e) for e in grid],
    })


def branch_pair_state(delta, width, phi=0.0, mass=1.0):
    '''equal-mass two-particle state with both particles displaced together by delta.
    '''
    masses = MassConfig((mass, mass))
    return two_branch_state(masses, [0.0, 0.0], [width, width], [delta, delta], phi)


def position_covariance(state):
    '''covariance of the absolute positions of a gaussian or grid state.
    '''
    if isinstance(state, GaussianSuperposition):
        shifted, _ = state.centered()
        _, cov = ga.phase_space_moments(shifted.branches, state.hbar)
        return cov[:state.dim, :state.dim]
    prob = state.probability()
    points = state.mesh().reshape(-1, state.dim)
    weights = prob.reshape(-1)
    mean = weights @ points
    diff = points - mean
    return (diff * weights[:, None]).T @ diff


def variance_pair(state):
    '''(dx_r1, dx_1) of a two-particle absolute-frame state.
    '''
    if state.dim != 2 or state.frame.name != 'absolute':
        raise ConfigError('variance_pair needs a two-particle absolute-frame state')
    cov = position_covariance(state)
    relative = cov[0, 0] + cov[1, 1] - 2.0 * cov[0, 1]
    return float(np.sqrt(relative)), float(np.sqrt(cov[1, 1]))
