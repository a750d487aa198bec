'''end-to-end interferometer set-ups: board, board with a measuring device, third particle.

Every scenario is built from branch-center bookkeeping on gaussian states:
momentum exchange between a particle and a rigid group keeps their center of
mass fixed. Detector probabilities come from the interference of the two
branches after their particle coordinates are aligned, with a beam splitter
that transmits with 1/sqrt(2) and reflects with i/sqrt(2).
'''
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List

import numpy as np
import pandas as pd

from . import constants
from . import gaussian_algebra as ga
from .phase_probe import decompose_shift, heavy_limit_pi_form, heavy_limit_relative_form, shift_expectation
from .reduction import gaussian_purity, relative_purity
from .state import GaussianBranch, GaussianSuperposition, MassConfig, reorder, superposition
from .transforms import to_frame
from .utils import ConfigError, as_float, to_builtin

logger = logging.getLogger(__name__)

SCENARIOS = ('board', 'board-md', 'third-particle')
ATTACHMENTS = ('external', 'board')
REQUIRED_MASSES = {
    'board': ('p', 'b'),
    'board-md': ('p', 'b'),
    'third-particle': ('md', 'p', 'third'),
}


@dataclass(frozen=True)
class ScenarioConfig:
    '''geometry and masses of one scenario; width defaults to L/20.
    '''
    scenario: str
    masses: Dict[str, float] = field(default_factory=dict)
    L: float = 1.0
    x: float = 0.0
    phi: float = constants.DEFAULT_BRANCH_PHASE
    width: float = None
    attachment: str = 'board'
    exchange: float = 1.0
    backend: str = 'gaussian'
    hbar: float = constants.HBAR

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f'scenario should be one of {list(SCENARIOS)}, got {self.scenario}')
        for key in ('L', 'x', 'phi', 'hbar', 'exchange'):
            object.__setattr__(self, key, as_float(getattr(self, key), key))
        if not self.L > 0:
            raise ConfigError(f'L should be positive, got {self.L}')
        if not self.hbar > 0:
            raise ConfigError(f'hbar should be positive, got {self.hbar}')
        if not 0.0 <= self.exchange <= 1.0:
            raise ConfigError(f'exchange should be a fraction in [0, 1], got {self.exchange}')
        if not isinstance(self.masses, dict):
            raise ConfigError(f'scenario masses should be an object of name: mass, got {self.masses!r}')
        masses = {k: as_float(v, f'mass {k}') for k, v in self.masses.items()}
        masses.setdefault('p', 1.0)
        masses.setdefault('b', 1.0)
        if self.scenario == 'third-particle':
            masses.setdefault('md', 1.0)
            masses.setdefault('third', 1.0)
        missing = [k for k in REQUIRED_MASSES[self.scenario] if k not in masses]
        if missing:
            raise ConfigError(f'scenario {self.scenario} requires masses {missing}')
        if any(not m > 0 for m in masses.values()):
            raise ConfigError(f'scenario masses should be positive, got {masses}')
        object.__setattr__(self, 'masses', masses)
        width = self.L * constants.MAX_WIDTH_TO_SEPARATION if self.width is None else as_float(self.width, 'width')
        if not width > 0:
            raise ConfigError(f'width should be positive, got {width}')
        if width > self.L * constants.MAX_WIDTH_TO_SEPARATION * (1.0 + 1e-12):
            raise ConfigError(f'width {width} should not exceed L/20 = {self.L * constants.MAX_WIDTH_TO_SEPARATION}')
        object.__setattr__(self, 'width', width)
        if self.attachment not in ATTACHMENTS:
            raise ConfigError(f'attachment should be one of {list(ATTACHMENTS)}, got {self.attachment}')
        if self.backend != 'gaussian':
            raise ConfigError(f"scenarios run on the 'gaussian' backend, got {self.backend}")

    def to_dict(self):
        return {'scenario': self.scenario, 'masses': dict(sorted(self.masses.items())), 'L': self.L, 'x': self.x,
                'phi': self.phi, 'width': self.width, 'attachment': self.attachment, 'exchange': self.exchange,
                'backend': self.backend, 'hbar': self.hbar}

    @classmethod
    def from_dict(cls, data, scenario=None):
        if not isinstance(data, dict):
            raise ConfigError(f'scenario config should be a json object, got {type(data).__name__}')
        data = dict(data)
        scenario = data.pop('scenario', scenario)
        if scenario is None:
            raise ConfigError('scenario config requires a "scenario" id')
        known = {'masses', 'L', 'x', 'phi', 'width', 'attachment', 'exchange', 'backend', 'hbar'}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f'unknown scenario config keys {unknown}')
        return cls(scenario, **data)


@dataclass
class ScenarioReport:
    scenario: str
    config: dict
    values: dict
    verdicts: dict
    branches: List[dict]

    def to_dict(self):
        return to_builtin({
            'schema': constants.REPORT_SCHEMA,
            'scenario': self.scenario,
            'config': self.config,
            'values': self.values,
            'verdicts': self.verdicts,
            'branches': self.branches,
        })


def recoil_displacement(L, m_particle, m_group):
    '''displacement of a rigid group after exchanging a relative displacement 2L with the particle.
    '''
    return 2.0 * L * m_particle / (m_particle + m_group)


def recombine_centers(centers, masses, particle, group, displacement):
    '''move `particle` relative to the rigid `group` by -displacement, keeping the center of mass fixed.
    '''
    centers = np.asarray(centers, dtype=float).copy()
    m = masses.as_array()
    group = list(group)
    m_group = float(m[group].sum())
    total = m_group + m[particle]
    centers[particle] -= m_group * displacement / total
    centers[group] += m[particle] * displacement / total
    return centers


def relative_to_group(centers, masses, particle, group):
    '''position of `particle` measured from the center of mass of `group`.
    '''
    m = masses.as_array()
    group = list(group)
    centers = np.asarray(centers, dtype=float)
    return float(centers[particle] - m[group] @ centers[group] / m[group].sum())


def recombine(state, branch, particle, group, displacement):
    '''state with one branch's centers recombined, see `recombine_centers`.
    '''
    branches = list(state.branches)
    b = branches[branch]
    branches[branch] = GaussianBranch(b.coefficient, recombine_centers(b.centers, state.masses, particle, group,
                                                                      displacement),
                                      b.covariance, b.momentum_offsets)
    return GaussianSuperposition(state.frame, tuple(branches), state.masses)


def record_overlap(state, coordinate):
    '''<R_1|R_2>: overlap of the two unit branches after aligning `coordinate` of the first onto the second.
    '''
    if len(state.branches) != 2:
        raise ConfigError('record overlaps are defined for two-branch states')
    b1, b2 = state.branches
    shift = np.zeros(state.dim)
    shift[coordinate] = b2.centers[coordinate] - b1.centers[coordinate]
    g1 = GaussianBranch(1.0, b1.centers + shift, b1.covariance, b1.momentum_offsets)
    g2 = GaussianBranch(1.0, b2.centers, b2.covariance, b2.momentum_offsets)
    origin = ga.common_origin([g1, g2])
    return complex(ga.overlap([g1.translated(-origin)], [g2.translated(-origin)], state.hbar))


def detector_probabilities(state, coordinate):
    '''(P_1, P_2, V) at the two output ports; port 2 is dark for phase pi/2 and full visibility.
    '''
    c = np.array([b.coefficient for b in state.branches])
    c = c / np.sqrt(np.sum(np.abs(c) ** 2))
    overlap = record_overlap(state, coordinate)
    w = 2.0 * np.conj(c[0]) * c[1] * overlap
    p1 = 0.5 * (1.0 + float(np.real(-1j * w)))
    return p1, 1.0 - p1, abs(overlap)


def branch_table(states):
    '''one row per (frame, branch) with the branch centers by coordinate label.
    '''
    rows = []
    for state in states:
        for k, b in enumerate(state.branches):
            row = {'frame': state.frame.name, 'branch': k + 1}
            row.update(dict(zip(state.frame.positions, b.centers.tolist())))
            rows.append(row)
    return rows


def _two_branch(masses, centers, widths, phi):
    return superposition(masses, centers, widths, coefficients=[1.0, np.exp(1j * phi)])


def run_board(cfg):
    '''particle (index 1) and board (index 0) after the particle's two paths separate by 2L.
    '''
    if cfg.scenario != 'board':
        raise ConfigError(f'run_board expects the board scenario, got {cfg.scenario}')
    m_p, m_b = cfg.masses['p'], cfg.masses['b']
    L, width = cfg.L, cfg.width
    masses = MassConfig((m_b, m_p), cfg.hbar)
    total = masses.total
    # relative positions -L and +L with the center of mass at the origin in both branches
    centers = [[-m_p * r / total, m_b * r / total] for r in (-L, L)]
    board_width = width * math.sqrt(m_p / m_b)
    state = _two_branch(masses, centers, [board_width, width], cfg.phi)
    relative = to_frame(state, 'cm_relative')

    d = recoil_displacement(L, m_p, m_b)
    p1, p2, visibility = detector_probabilities(state, 1)
    p1_rel, p2_rel, visibility_rel = detector_probabilities(relative, 1)
    particle_purity = gaussian_purity(state, [1])
    values = {
        'd': d,
        'd_measured': abs(state.branches[1].centers[0] - state.branches[0].centers[0]),
        'board_width': board_width,
        'visibility_external': visibility,
        'visibility_relative': visibility_rel,
        'visibility_from_purity': math.sqrt(max(2.0 * particle_purity - 1.0, 0.0)),
        'particle_purity_external': particle_purity,
        'relative_purity': relative_purity(state),
        'P1': p1, 'P2': p2,
        'P1_relative': p1_rel, 'P2_relative': p2_rel,
    }
    verdicts = {
        'which_way_external': bool(visibility < 0.5),
        'single_dark_port': bool(min(p1, p2) < 1e-3),
        'board_entangled': bool(1.0 - particle_purity > 1e-3),
    }
    return ScenarioReport('board', cfg.to_dict(), values, verdicts, branch_table([state, relative]))


def _board_md_external(cfg):
    m_p, m_b = cfg.masses['p'], cfg.masses['b']
    m_md = constants.HEAVY_MASS_FACTOR * max(m_p, m_b)
    L, width = cfg.L, cfg.width
    # (board, MD, particle); the MD does not take part in the momentum exchange
    masses = MassConfig((m_b, m_md, m_p), cfg.hbar)
    pair = m_b + m_p
    md_center = 2.0 * L
    centers = [[-m_p * r / pair, md_center, m_b * r / pair] for r in (-L, L)]
    board_width = width * math.sqrt(m_p / m_b)
    widths = [board_width, constants.SHARP_WIDTH_RATIO * width, width]
    state = _two_branch(masses, centers, widths, cfg.phi)
    seen_by_board = to_frame(state, 'cm_relative')

    p1, p2, visibility = detector_probabilities(state, 2)
    rho_purity = gaussian_purity(seen_by_board, [1, 2])
    md_purity = gaussian_purity(seen_by_board, [1])
    particle_purity = gaussian_purity(seen_by_board, [2])
    values = {
        'd': recoil_displacement(L, m_p, m_b),
        'm_md': m_md,
        'visibility_external': visibility,
        'P1': p1, 'P2': p2,
        'relative_purity': rho_purity,
        'md_relative_purity': md_purity,
        'particle_relative_purity': particle_purity,
    }
    verdicts = {
        'both_detectors_click': bool(min(p1, p2) > 1e-3),
        'md_particle_entangled': bool(1.0 - md_purity > 1e-3),
    }
    return state, values, verdicts, [state, seen_by_board]


def _board_md_attached(cfg):
    m_p, m_b = cfg.masses['p'], cfg.masses['b']
    m_md = cfg.masses.get('md', m_b)
    L, width = cfg.L, cfg.width
    masses = MassConfig((m_b, m_md, m_p), cfg.hbar)
    group = [0, 1]
    displacement = 2.0 * L
    start = np.array([0.0, 0.0, L])
    moved = recombine_centers(start, masses, 2, group, displacement)
    # one branch has exchanged the displacement, the other not yet
    state = _two_branch(masses, [moved, start], [width] * 3, cfg.phi)
    gap = relative_to_group(start, masses, 2, group) - relative_to_group(moved, masses, 2, group)
    final = recombine(state, 1, 2, group, cfg.exchange * gap)
    md_frame = to_frame(reorder(state, [1, 0, 2]), 'cm_relative')

    b1, b2 = final.branches
    unit = [GaussianBranch(1.0, b.centers, b.covariance, b.momentum_offsets) for b in (b1, b2)]
    origin = ga.common_origin(unit)
    final_overlap = abs(ga.overlap([unit[0].translated(-origin)], [unit[1].translated(-origin)], cfg.hbar))

    p1, p2, visibility = detector_probabilities(md_frame, 2)
    _, _, visibility_external = detector_probabilities(state, 2)
    d_prime = recoil_displacement(L, m_p, m_b + m_md)
    values = {
        'd_prime': d_prime,
        'd_prime_measured': abs(state.branches[0].centers[0] - state.branches[1].centers[0]),
        'final_centers': final.branches[0].centers.tolist(),
        'final_overlap': final_overlap,
        'visibility_external_before_recombination': visibility_external,
        'visibility_md_frame': visibility,
        'cm_centers_md_frame': [b.centers[0] for b in md_frame.branches],
        'P1': p1, 'P2': p2,
    }
    verdicts = {
        'which_way_erased': bool(final_overlap > 1.0 - 1e-6),
        'single_dark_port': bool(min(p1, p2) < 1e-3),
    }
    return state, values, verdicts, [state, md_frame, final]


def run_board_with_md(cfg, attachment=None):
    '''board interferometer with a measuring device attached externally or to the board.
    '''
    if cfg.scenario != 'board-md':
        raise ConfigError(f'run_board_with_md expects the board-md scenario, got {cfg.scenario}')
    attachment = cfg.attachment if attachment is None else attachment
    if attachment == 'external':
        state, values, verdicts, states = _board_md_external(cfg)
    elif attachment == 'board':
        state, values, verdicts, states = _board_md_attached(cfg)
    else:
        raise ConfigError(f'attachment should be one of {list(ATTACHMENTS)}, got {attachment}')
    values['attachment'] = attachment
    return ScenarioReport('board-md', cfg.to_dict(), values, verdicts, branch_table(states))


def run_third_particle(cfg):
    '''MD (index 0), particle (index 1) on paths L apart from the origin, third particle (index 2) at x.
    '''
    if cfg.scenario != 'third-particle':
        raise ConfigError(f'run_third_particle expects the third-particle scenario, got {cfg.scenario}')
    m_md, m_p, m_3 = cfg.masses['md'], cfg.masses['p'], cfg.masses['third']
    L, width = cfg.L, cfg.width
    masses = MassConfig((m_md, m_p, m_3), cfg.hbar)
    centers = [[0.0, -L, cfg.x], [0.0, L, cfg.x]]
    widths = [width, width, constants.THIRD_PARTICLE_WIDTH_RATIO * width]
    state = _two_branch(masses, centers, widths, cfg.phi)
    relative = to_frame(state, 'cm_relative')

    deltas = np.array([0.0, 2.0 * L, 0.0])
    pi_form = decompose_shift(deltas, masses, 'cm_relative')
    relative_form = decompose_shift(deltas, masses, 'qpr')
    heavy_pi = heavy_limit_pi_form(deltas, masses)
    heavy_relative = heavy_limit_relative_form(deltas, masses, heavy=2)
    probe = shift_expectation(state, deltas)
    probe_relative = shift_expectation(state, deltas, relative_only=True)
    purity = relative_purity(state)
    p1, p2, visibility = detector_probabilities(relative, 1)
    values = {
        'relative_purity': purity,
        'visibility_md_frame': visibility,
        'P1': p1, 'P2': p2,
        'cm_shift': pi_form.delta_cm,
        'cm_fraction': pi_form.cm_fraction,
        'mass_ratio': m_p / masses.total,
        'pi_coefficients': pi_form.to_dict()['coefficients'],
        'qpr_coefficients': relative_form.to_dict()['coefficients'],
        'heavy_pi_form': heavy_pi.to_dict(),
        'heavy_relative_form': heavy_relative.to_dict(),
        'probe': probe,
        'probe_relative_only': probe_relative,
        'probe_phase': float(np.angle(probe)),
    }
    verdicts = {
        'accessible': pi_form.accessible,
        'operationally_accessible': pi_form.operationally_accessible,
        'cm_entangled': bool(1.0 - purity > 1e-4),
    }
    return ScenarioReport('third-particle', cfg.to_dict(), values, verdicts, branch_table([state, relative]))


RUNNERS = {
    'board': run_board,
    'board-md': run_board_with_md,
    'third-particle': run_third_particle,
}


def run_scenario(scenario, cfg=None):
    if scenario not in RUNNERS:
        raise ConfigError(f'scenario should be one of {list(SCENARIOS)}, got {scenario}')
    if cfg is None:
        cfg = ScenarioConfig(scenario)
    elif isinstance(cfg, dict):
        cfg = ScenarioConfig.from_dict(cfg, scenario)
    if cfg.scenario != scenario:
        raise ConfigError(f'config is for scenario {cfg.scenario}, not {scenario}')
    report = RUNNERS[scenario](cfg)
    logger.info('scenario %s: verdicts %s', scenario, report.verdicts)
    return report


def phase_scan(cfg, samples=64):
    '''detector probabilities as the branch phase runs over [0, 2 pi).
    '''
    if samples < 2:
        raise ConfigError(f'samples should be at least 2, got {samples}')
    rows = []
    for phi in np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False):
        values = RUNNERS[cfg.scenario](replace(cfg, phi=float(phi))).values
        rows.append({'phi': float(phi), 'P1': values.get('P1', np.nan), 'P2': values.get('P2', np.nan)})
    return pd.DataFrame(rows)
