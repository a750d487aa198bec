import json
import math

import numpy as np
import pytest

from qrframe import scenarios
from qrframe.scenarios import (ScenarioConfig, detector_probabilities, phase_scan, recombine_centers,
                               recoil_displacement, run_board, run_board_with_md, run_scenario, run_third_particle)
from qrframe.state import MassConfig, two_branch_state
from qrframe.utils import ConfigError


def _cm_by_branch(report, frame='cm_relative'):
    return [row['x_cm'] for row in report.branches if row['frame'] == frame]


def test_board_recoil():
    report = run_board(ScenarioConfig('board', masses={'p': 1.0, 'b': 3.0}, L=1.0))
    assert report.values['d'] == pytest.approx(0.5, abs=1e-12)
    assert report.values['d_measured'] == pytest.approx(0.5, abs=1e-12)
    assert recoil_displacement(1.0, 1.0, 3.0) == pytest.approx(0.5)


def test_heavy_board_keeps_the_dark_port():
    report = run_board(ScenarioConfig('board', masses={'p': 1.0, 'b': 1e6}, L=1.0))
    v = report.values
    assert v['visibility_external'] == pytest.approx(math.exp(-2e-4), rel=1e-6)
    assert v['P2'] == pytest.approx(0.5 * (1.0 - math.exp(-2e-4)), rel=1e-4)
    assert report.verdicts == {'which_way_external': False, 'single_dark_port': True, 'board_entangled': False}


def test_comparable_board_records_which_way():
    report = run_board(ScenarioConfig('board', masses={'p': 1.0, 'b': 1.0}, L=1.0))
    v = report.values
    assert v['visibility_external'] < 1e-20
    assert v['P1'] == pytest.approx(0.5, abs=1e-12)
    assert v['particle_purity_external'] == pytest.approx(0.5, abs=1e-12)
    assert report.verdicts['which_way_external']
    assert report.verdicts['board_entangled']
    assert not report.verdicts['single_dark_port']


@pytest.mark.parametrize('m_b', [1.0, 3.0, 1e6])
def test_relative_description_always_interferes(m_b):
    report = run_board(ScenarioConfig('board', masses={'p': 1.0, 'b': m_b}, L=1.0))
    v = report.values
    assert v['visibility_relative'] == pytest.approx(1.0, abs=1e-12)
    assert v['P2_relative'] < 1e-12
    assert v['relative_purity'] == pytest.approx(1.0, abs=1e-9)
    assert v['visibility_from_purity'] == pytest.approx(v['visibility_external'], abs=1e-9)
    assert v['P1'] + v['P2'] == pytest.approx(1.0, abs=1e-15)
    cm = _cm_by_branch(report)
    assert cm[0] == pytest.approx(cm[1], abs=1e-12)


def test_measuring_device_on_the_board_erases_which_way():
    cfg = ScenarioConfig('board-md', masses={'p': 1.0, 'b': 2.0, 'md': 1.0}, L=1.0, attachment='board')
    report = run_board_with_md(cfg)
    v = report.values
    assert v['attachment'] == 'board'
    assert v['d_prime'] == pytest.approx(0.5, abs=1e-12)
    assert v['d_prime_measured'] == pytest.approx(0.5, abs=1e-12)
    assert v['final_overlap'] > 1.0 - 1e-6
    assert min(v['P1'], v['P2']) < 1e-3
    assert v['cm_centers_md_frame'][0] == pytest.approx(v['cm_centers_md_frame'][1], abs=1e-12)
    assert report.verdicts == {'which_way_erased': True, 'single_dark_port': True}


@pytest.mark.parametrize('exchange, expected', [(0.98, math.exp(-0.055)), (0.5, 0.0)])
def test_incomplete_exchange_leaves_a_record(exchange, expected):
    # (b, md, p) = (2, 1, 1), width 0.05: the unexchanged 2L (1 - exchange) splits 1/4 to each group
    # member and 3/4 to the particle, alpha = (1 + 1 + 9) (2L (1 - exchange) / 4)^2 / (8 * 0.05^2)
    cfg = ScenarioConfig('board-md', masses={'p': 1.0, 'b': 2.0, 'md': 1.0}, L=1.0, attachment='board',
                         exchange=exchange)
    report = run_board_with_md(cfg)
    assert report.values['final_overlap'] == pytest.approx(expected, rel=1e-9, abs=1e-12)
    assert not report.verdicts['which_way_erased']
    with pytest.raises(ConfigError):
        ScenarioConfig('board-md', exchange=1.5)


def test_external_measuring_device_records_which_way():
    cfg = ScenarioConfig('board-md', masses={'p': 1.0, 'b': 1.0}, L=1.0, attachment='external')
    report = run_board_with_md(cfg)
    v = report.values
    assert min(v['P1'], v['P2']) > 1e-3
    assert v['md_relative_purity'] == pytest.approx(0.5, abs=1e-9)
    assert report.verdicts == {'both_detectors_click': True, 'md_particle_entangled': True}
    # the attachment argument overrides the config
    assert run_board_with_md(cfg, attachment='board').values['attachment'] == 'board'


def test_third_particle_with_comparable_masses():
    report = run_third_particle(ScenarioConfig('third-particle', L=1.0))
    v = report.values
    assert v['cm_shift'] == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert v['cm_fraction'] == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert abs(complex(*json.loads(json.dumps(report.to_dict()))['values']['probe'])) == pytest.approx(0.5,
                                                                                                    abs=1e-12)
    assert v['probe_phase'] == pytest.approx(math.pi / 2.0, abs=1e-12)
    assert report.verdicts == {'accessible': False, 'operationally_accessible': False, 'cm_entangled': True}


def test_third_particle_with_a_heavy_device():
    report = run_third_particle(ScenarioConfig('third-particle', masses={'md': 1e6}, L=1.0))
    v = report.values
    assert v['cm_fraction'] == pytest.approx(1.0 / (1e6 + 2.0), rel=1e-9)
    assert v['P2'] < 1e-6
    assert v['heavy_pi_form']['error_bound'] == pytest.approx(v['cm_fraction'])
    assert report.verdicts == {'accessible': False, 'operationally_accessible': True, 'cm_entangled': False}


@pytest.mark.parametrize('md', [1.0, 1e6])
def test_third_particle_position_is_irrelevant(md):
    near = run_third_particle(ScenarioConfig('third-particle', masses={'md': md}, x=0.0))
    far = run_third_particle(ScenarioConfig('third-particle', masses={'md': md}, x=1000.0))
    assert near.verdicts == far.verdicts
    assert far.values['relative_purity'] == pytest.approx(near.values['relative_purity'], abs=1e-9)


def test_recombination_keeps_the_center_of_mass():
    masses = MassConfig((2.0, 1.0, 1.0))
    start = np.array([0.0, 0.0, 1.0])
    moved = recombine_centers(start, masses, 2, [0, 1], 2.0)
    assert masses.as_array() @ moved == pytest.approx(masses.as_array() @ start, abs=1e-12)
    assert moved[2] - moved[0] == pytest.approx(start[2] - start[0] - 2.0, abs=1e-12)
    assert moved[0] == moved[1]


def test_dark_port_sits_at_a_quarter_turn():
    masses = MassConfig((1.0,))
    state = two_branch_state(masses, [0.0], [0.01], [1.0], math.pi / 2.0)
    p1, p2, visibility = detector_probabilities(state, 0)
    assert visibility == pytest.approx(1.0, abs=1e-12)
    assert p2 == pytest.approx(0.0, abs=1e-12)


def test_phase_scan_rows():
    table = phase_scan(ScenarioConfig('board', masses={'p': 1.0, 'b': 1e6}), samples=8)
    assert list(table.columns) == ['phi', 'P1', 'P2']
    assert len(table) == 8
    np.testing.assert_allclose(table['P1'] + table['P2'], 1.0, atol=1e-15)
    assert table['P2'].max() > 0.99
    with pytest.raises(ConfigError):
        phase_scan(ScenarioConfig('board'), samples=1)


def test_runs_are_deterministic():
    for scenario in scenarios.SCENARIOS:
        first = run_scenario(scenario).to_dict()
        second = run_scenario(scenario).to_dict()
        assert json.dumps(first, sort_keys=True) == json.dumps(second, sort_keys=True)
        assert first['schema'] == 'qrf-report/1'


def test_config_validation():
    with pytest.raises(ConfigError):
        ScenarioConfig('board', L=1.0, width=0.1)
    with pytest.raises(ConfigError):
        ScenarioConfig('board', backend='grid')
    with pytest.raises(ConfigError):
        ScenarioConfig('board', masses={'p': -1.0})
    with pytest.raises(ConfigError):
        ScenarioConfig('laser')
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({'L': 1.0, 'mirror': True}, 'board')
    with pytest.raises(ConfigError):
        run_scenario('board', ScenarioConfig('third-particle'))
    cfg = ScenarioConfig.from_dict({'L': 2.0, 'masses': {'b': 3.0}}, 'board')
    assert cfg.width == pytest.approx(0.1)
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg
    assert run_scenario('board', {'masses': {'p': 1.0, 'b': 3.0}}).values['d'] == pytest.approx(0.5)
