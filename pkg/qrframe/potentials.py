'''pairwise interaction potentials and prescribed classical frame trajectories.
'''
import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline

from .utils import ConfigError, as_float, malformed_input

logger = logging.getLogger(__name__)

POTENTIAL_KINDS = ('harmonic', 'gaussian_well', 'tabulated')


@dataclass(frozen=True, eq=False)
class PotentialTerm:
    '''V(x_j - x_i) for the particle pair (i, j).

    harmonic: k (r - r0)^2 / 2; gaussian_well: -depth exp(-r^2 / 2 width^2);
    tabulated: cubic spline through (r, value), held flat outside the table.
    '''
    kind: str
    pair: Tuple[int, int]
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ConfigError(f'potential kind should be one of {list(POTENTIAL_KINDS)}, got {self.kind}')
        pair = tuple(int(i) for i in self.pair)
        if len(pair) != 2 or pair[0] == pair[1] or min(pair) < 0:
            raise ConfigError(f'potential pair should be two distinct particle indices, got {self.pair}')
        object.__setattr__(self, 'pair', pair)
        params = dict(self.params)
        if self.kind == 'harmonic':
            params.setdefault('r0', 0.0)
            self._require(params, ['k'])
            params = self._numeric(params)
        elif self.kind == 'gaussian_well':
            self._require(params, ['depth', 'width'])
            params = self._numeric(params)
            if not params['width'] > 0:
                raise ConfigError(f'gaussian well width should be positive, got {params["width"]}')
        else:
            self._require(params, ['r', 'values'])
            r = np.asarray(params['r'], dtype=float)
            if r.ndim != 1 or r.shape[0] < 4 or np.any(np.diff(r) <= 0):
                raise ConfigError('tabulated potential needs at least 4 strictly increasing r values')
            object.__setattr__(self, '_spline', CubicSpline(r, np.asarray(params['values'], dtype=float)))
        object.__setattr__(self, 'params', params)

    def _require(self, params, keys):
        missing = [k for k in keys if k not in params]
        if missing:
            raise ConfigError(f'{self.kind} potential requires parameters {missing}')

    def _numeric(self, params):
        return {key: as_float(v, f'{self.kind} parameter {key}') for key, v in params.items()}

    def value(self, r):
        p = self.params
        if self.kind == 'harmonic':
            return 0.5 * p['k'] * (r - p['r0']) ** 2
        if self.kind == 'gaussian_well':
            return -p['depth'] * np.exp(-r ** 2 / (2.0 * p['width'] ** 2))
        r_table = self._spline.x
        return self._spline(np.clip(r, r_table[0], r_table[-1]))

    def derivative(self, r):
        '''dV/dr.
        '''
        p = self.params
        if self.kind == 'harmonic':
            return p['k'] * (r - p['r0'])
        if self.kind == 'gaussian_well':
            return p['depth'] * r / p['width'] ** 2 * np.exp(-r ** 2 / (2.0 * p['width'] ** 2))
        r_table = self._spline.x
        inside = (r >= r_table[0]) & (r <= r_table[-1])
        return np.where(inside, self._spline(np.clip(r, r_table[0], r_table[-1]), 1), 0.0)

    def to_dict(self):
        params = {k: (np.asarray(v).tolist() if isinstance(v, (list, np.ndarray)) else v)
                  for k, v in self.params.items()}
        return {'kind': self.kind, 'pair': list(self.pair), 'params': params}

    @classmethod
    def from_dict(cls, data):
        with malformed_input('potential term'):
            return cls(data['kind'], tuple(data['pair']), data.get('params', {}))


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    '''sum of pair terms; depends on coordinate differences only.
    '''
    terms: Tuple[PotentialTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'terms', tuple(self.terms))

    @property
    def is_free(self):
        return len(self.terms) == 0

    def check_particles(self, n_particles):
        for term in self.terms:
            if max(term.pair) >= n_particles:
                raise ConfigError(f'potential pair {term.pair} refers to a particle beyond {n_particles - 1}')

    def evaluate(self, x):
        '''V at absolute positions x with shape (..., N).
        '''
        x = np.asarray(x, dtype=float)
        total = np.zeros(x.shape[:-1])
        for term in self.terms:
            i, j = term.pair
            total = total + term.value(x[..., j] - x[..., i])
        return total

    def gradient(self, x):
        '''dV/dx_k with shape (..., N).
        '''
        x = np.asarray(x, dtype=float)
        grad = np.zeros(x.shape)
        for term in self.terms:
            i, j = term.pair
            d = term.derivative(x[..., j] - x[..., i])
            grad[..., j] += d
            grad[..., i] -= d
        return grad

    def _with_frame_origin(self, x_rel):
        x_rel = np.asarray(x_rel, dtype=float)
        zeros = np.zeros(x_rel.shape[:-1] + (1,))
        return np.concatenate([zeros, x_rel], axis=-1)

    def evaluate_relative(self, x_rel):
        '''V(0, x_r) on relative (or frame-primed) coordinates with shape (..., N - 1).
        '''
        return self.evaluate(self._with_frame_origin(x_rel))

    def gradient_relative(self, x_rel):
        '''dV/dx_rj = dV/dx_j at x_0 = 0.
        '''
        return self.gradient(self._with_frame_origin(x_rel))[..., 1:]

    def to_dict(self):
        return {'terms': [t.to_dict() for t in self.terms]}

    @classmethod
    def from_dict(cls, data):
        if isinstance(data, list):
            data = {'terms': data}
        with malformed_input('potential'):
            return cls(tuple(PotentialTerm.from_dict(t) for t in data.get('terms', [])))


def harmonic(pair, k, r0=0.0):
    return PotentialTerm('harmonic', pair, {'k': k, 'r0': r0})


def gaussian_well(pair, depth, width):
    return PotentialTerm('gaussian_well', pair, {'depth': depth, 'width': width})


@dataclass(frozen=True, eq=False)
class FrameTrajectory:
    '''x_0(t) of a classical frame: a polynomial in t or a splined table of samples.
    '''
    kind: str
    coefficients: Tuple[float, ...] = ()
    times: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == 'polynomial':
            coefficients = tuple(float(c) for c in self.coefficients) or (0.0,)
            object.__setattr__(self, 'coefficients', coefficients)
            curve = Polynomial(coefficients)
            derivatives = (curve, curve.deriv(1), curve.deriv(2))
        elif self.kind == 'sampled':
            times = np.asarray(self.times, dtype=float)
            values = np.asarray(self.values, dtype=float)
            if times.ndim != 1 or times.shape != values.shape or times.shape[0] < 4:
                raise ConfigError('sampled trajectory needs matching times and values with at least 4 samples')
            if np.any(np.diff(times) <= 0):
                raise ConfigError('trajectory times should be strictly increasing')
            spline = CubicSpline(times, values)
            derivatives = (spline, spline.derivative(1), spline.derivative(2))
        else:
            raise ConfigError(f"trajectory kind should be 'polynomial' or 'sampled', got {self.kind}")
        object.__setattr__(self, '_curves', derivatives)

    @classmethod
    def uniform_acceleration(cls, acceleration, x0=0.0, v0=0.0):
        return cls('polynomial', (x0, v0, 0.5 * acceleration))

    @classmethod
    def at_rest(cls):
        return cls('polynomial', (0.0,))

    @property
    def is_static(self):
        return self.kind == 'polynomial' and all(c == 0 for c in self.coefficients[1:])

    def position(self, t):
        return self._curves[0](t)

    def velocity(self, t):
        return self._curves[1](t)

    def acceleration(self, t):
        return self._curves[2](t)

    def to_dict(self):
        if self.kind == 'polynomial':
            return {'kind': 'polynomial', 'coefficients': list(self.coefficients)}
        return {'kind': 'sampled', 'times': list(self.times), 'values': list(self.values)}

    @classmethod
    def from_dict(cls, data):
        with malformed_input('frame trajectory'):
            kind = data.get('kind', 'polynomial')
            if kind == 'polynomial':
                return cls(kind, tuple(data.get('coefficients', (0.0,))))
            return cls(kind, times=tuple(data.get('times', ())), values=tuple(data.get('values', ())))
