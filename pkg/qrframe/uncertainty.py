'''moments of linear phase-space observables and the relative uncertainty bounds.

An observable is a x + b p in absolute coordinates. The catalog holds every
row of the registered transforms plus the vector potential Pi = sum_j pi_j;
commutators follow from the coefficient vectors alone.
'''
import logging
from dataclasses import dataclass
from typing import List

import numpy as np
import pandas as pd

from . import constants
from . import gaussian_algebra as ga
from .state import GaussianSuperposition, momentum_mesh
from .transforms import FRAME_TRANSFORMS, frame_transform, to_frame
from .utils import ConfigError, FrameMismatchError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Observable:
    label: str
    position_coefficients: np.ndarray
    momentum_coefficients: np.ndarray

    def commutator(self, other, hbar=constants.HBAR):
        '''[A, B] = i hbar (a . d - b . c), returned as the real factor of i hbar.
        '''
        return float(self.position_coefficients @ other.momentum_coefficients
                     - self.momentum_coefficients @ other.position_coefficients)

    def in_frame(self, frame_name, masses):
        '''coefficients with respect to the coordinates of another frame.
        '''
        t = frame_transform(frame_name, masses)
        return t.momentum_block @ self.position_coefficients, t.position_block @ self.momentum_coefficients


def observable_catalog(masses):
    '''label -> Observable for the rows of every registered frame, plus Pi.
    '''
    n = masses.n_particles
    zeros = np.zeros(n)
    catalog = {}
    for name in FRAME_TRANSFORMS:
        t = frame_transform(name, masses)
        for i, label in enumerate(t.output_frame.positions):
            catalog[label] = Observable(label, t.position_block[i], zeros)
        for i, label in enumerate(t.output_frame.momenta):
            catalog[label] = Observable(label, zeros, t.momentum_block[i])
    if n > 1:
        pi_rows = frame_transform('cm_relative', masses).momentum_block[1:]
        catalog['Pi'] = Observable('Pi', zeros, pi_rows.sum(axis=0))
    return catalog


def resolve_observables(masses, labels=None):
    catalog = observable_catalog(masses)
    if labels is None or labels == 'all':
        return list(catalog.values())
    unknown = [label for label in labels if label not in catalog]
    if unknown:
        raise ConfigError(f'unknown observables {unknown}; available: {sorted(catalog)}')
    return [catalog[label] for label in labels]


def phase_space_moments(state):
    '''mean and symmetrized covariance of (x, p) in the state's own coordinates.
    '''
    n = state.dim
    if isinstance(state, GaussianSuperposition):
        shifted, origin = state.centered()
        mean, cov = ga.phase_space_moments(shifted.branches, state.hbar)
        mean[:n] += origin
        return mean, cov

    hbar = state.hbar
    psi = state.amplitudes
    dv = state.cell_volume
    density = np.abs(psi) ** 2 * dv
    x = state.mesh()
    k = momentum_mesh(state.axes, hbar)
    phi = np.fft.fftn(psi)
    weights_p = np.abs(phi) ** 2
    weights_p = weights_p / weights_p.sum()

    # p_j psi = -i hbar d/dx_j psi, spectrally
    p_psi = [np.fft.ifftn(k[..., j] * phi) for j in range(n)]
    mean_x = np.array([np.sum(density * x[..., i]) for i in range(n)])
    mean_p = np.array([np.sum(weights_p * k[..., j]) for j in range(n)])
    second = np.zeros((2 * n, 2 * n))
    for i in range(n):
        for j in range(n):
            second[i, j] = np.sum(density * x[..., i] * x[..., j])
            second[n + i, n + j] = np.sum(weights_p * k[..., i] * k[..., j])
            second[i, n + j] = np.real(np.sum(np.conj(psi) * x[..., i] * p_psi[j]) * dv)
            second[n + j, i] = second[i, n + j]
    mean = np.concatenate([mean_x, mean_p])
    return mean, second - np.outer(mean, mean)


@dataclass
class MomentReport:
    labels: List[str]
    means: pd.Series
    covariance: pd.DataFrame
    bounds: pd.DataFrame

    @property
    def variances(self):
        return pd.Series(np.diag(self.covariance.values), index=self.labels)

    @property
    def deviations(self):
        return np.sqrt(self.variances.clip(lower=0.0))

    def robertson_margins(self):
        '''dA dB - hbar/2 |<[A, B]>| for every observable pair.
        '''
        products = np.outer(self.deviations.values, self.deviations.values)
        return pd.DataFrame(products - self.bounds.values, index=self.labels, columns=self.labels)

    def to_dict(self):
        return {
            'observables': self.labels,
            'means': self.means.to_dict(),
            'covariance': self.covariance.values.tolist(),
            'bounds': self.bounds.values.tolist(),
        }


def moments(state, observables=None):
    '''means, covariances C(A, B) and Robertson bounds of catalog observables on a state.
    '''
    if state.frame.name not in FRAME_TRANSFORMS:
        raise FrameMismatchError(f'observables are defined on registered frames, state is in {state.frame.name}')
    if observables is None or isinstance(observables, str) or isinstance(observables[0], str):
        observables = resolve_observables(state.masses, observables)
    mean, cov = phase_space_moments(state)
    coefficients = np.array([np.concatenate(o.in_frame(state.frame.name, state.masses)) for o in observables])
    labels = [o.label for o in observables]
    obs_mean = coefficients @ mean
    obs_cov = coefficients @ cov @ coefficients.T
    bounds = np.array([[0.5 * state.hbar * abs(a.commutator(b)) for b in observables] for a in observables])
    return MomentReport(labels, pd.Series(obs_mean, index=labels),
                        pd.DataFrame(obs_cov, index=labels, columns=labels),
                        pd.DataFrame(bounds, index=labels, columns=labels))


def relative_bound(j, k, masses):
    '''lower bound of dx_rj dp_rk: hbar/2 for j = k, hbar/2 m_k/(m_0 + m_k) otherwise.
    '''
    n = masses.n_particles
    for index in (j, k):
        if not 1 <= index < n:
            raise ConfigError(f'relative index {index} should be in [1, {n - 1}]')
    if j == k:
        return 0.5 * masses.hbar
    m0, mk = masses.masses[0], masses.masses[k]
    return 0.5 * masses.hbar * mk / (m0 + mk)


def verify_bounds(state, masses=None):
    '''dx_rj dp_rk against relative_bound for every pair; violations are reported, not raised.
    '''
    masses = state.masses if masses is None else masses
    n = masses.n_particles
    if n < 2:
        raise ConfigError('relative bounds need at least two particles')
    labels = [f'x_r{j}' for j in range(1, n)] + [f'p_r{j}' for j in range(1, n)]
    report = moments(state, labels)
    deviations = report.deviations
    rows = []
    for j in range(1, n):
        for k in range(1, n):
            product = float(deviations[f'x_r{j}'] * deviations[f'p_r{k}'])
            bound = relative_bound(j, k, masses)
            rows.append({'j': j, 'k': k, 'product': product, 'bound': bound, 'margin': product - bound,
                         'satisfied': product >= bound - constants.BOUND_MARGIN})
    table = pd.DataFrame(rows)
    if not table['satisfied'].all():
        logger.warning('relative uncertainty bound violated for %d pairs', int((~table['satisfied']).sum()))
    return table


def _grid_relative_variances(state, j):
    '''direct quadrature of var(x_j - x_0) and var(p_rj) on an absolute grid.
    '''
    masses = state.masses
    x = state.mesh()
    density = state.probability()
    r = x[..., j] - x[..., 0]
    var_x = np.sum(density * r ** 2) - np.sum(density * r) ** 2
    k = momentum_mesh(state.axes, state.hbar)
    weights = np.abs(np.fft.fftn(state.amplitudes)) ** 2
    weights = weights / weights.sum()
    mu = masses.reduced(j)
    pr = mu * (k[..., j] / masses.masses[j] - k[..., 0] / masses.masses[0])
    var_p = np.sum(weights * pr ** 2) - np.sum(weights * pr) ** 2
    return float(var_x), float(var_p)


def variance_identities(state):
    '''(dx_rj)^2 = dx_0^2 + dx_j^2 - 2C(x_j, x_0) and its momentum counterpart, as residuals per j.
    '''
    if state.frame.name != 'absolute':
        raise FrameMismatchError('variance identities are stated for absolute-frame states')
    masses = state.masses
    n = masses.n_particles
    _, cov = phase_space_moments(state)
    m = masses.as_array()
    rows = []
    for j in range(1, n):
        mu = masses.reduced(j)
        rhs_x = cov[0, 0] + cov[j, j] - 2.0 * cov[j, 0]
        rhs_p = mu ** 2 * (cov[n + j, n + j] / m[j] ** 2 + cov[n, n] / m[0] ** 2
                           - 2.0 * cov[n + j, n] / (m[j] * m[0]))
        if isinstance(state, GaussianSuperposition):
            lhs = moments(to_frame(state, 'qpr'), [f'x_r{j}', f'p_r{j}']).variances
            lhs_x, lhs_p = float(lhs[f'x_r{j}']), float(lhs[f'p_r{j}'])
        else:
            lhs_x, lhs_p = _grid_relative_variances(state, j)
        rows.append({'j': j, 'var_x_r': lhs_x, 'decomposed_x': rhs_x, 'residual_x': abs(lhs_x - rhs_x),
                     'var_p_r': lhs_p, 'decomposed_p': rhs_p, 'residual_p': abs(lhs_p - rhs_p),
                     'covariance_x': cov[j, 0]})
    return pd.DataFrame(rows)
