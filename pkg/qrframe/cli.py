'''`qrf` command line: one subcommand per library module, a manifest in every output directory.
'''
import os
import sys
import logging
import argparse

import numpy as np
import pandas as pd

from . import constants
from . import io_utils
from .analytics import dispersion_curve, linear_entropy, two_branch_purity
from .evaluator import ehrenfest_check, run_selftest
from .phase_probe import decompose_shift, heavy_limit_pi_form, heavy_limit_relative_form, shift_expectation
from .reduction import ak_reduce, reduce_external, reduce_relative
from .scenarios import SCENARIOS, ScenarioConfig, phase_scan, run_scenario
from .state import default_axes
from .trainer import RunConfig, run
from .transforms import FRAME_TRANSFORMS, TRANSFORMS, build_transform, frame_transform, to_frame
from .uncertainty import moments, variance_identities, verify_bounds
from .utils import ConfigError, QRFError, configure_threads, parse_float_list, setup_logging

logger = logging.getLogger(__name__)


class SelftestFailed(QRFError):
    exit_code = 3


def _out_dir(path):
    return os.path.dirname(os.path.abspath(path))


def cmd_transform(args, manifest):
    state = io_utils.load_state(args.state, args.hbar)
    if args.transform in FRAME_TRANSFORMS:
        moved = to_frame(state, args.transform)
        t = frame_transform(args.transform, state.masses)
    else:
        t = build_transform(args.transform, state.masses)
        moved = t.apply(state)
    manifest.add(io_utils.save_state(moved, args.out))
    if args.matrix_csv:
        manifest.add(io_utils.save_transform_csv(t, args.matrix_csv))
    logger.info('symplectic residual of %s: %.3e', t.name, t.symplectic_residual())
    return _out_dir(args.out)


def cmd_reduce(args, manifest):
    state = io_utils.load_state(args.state, args.hbar)
    if args.keep == 'relative':
        moved = to_frame(state, 'cm_relative')
        axes = default_axes(moved, n_points=args.points, indices=range(1, moved.dim))
        rho = reduce_relative(state, axes)
    elif args.keep == 'external':
        axes = default_axes(state, n_points=args.points, indices=[args.particle])
        rho = reduce_external(state, args.particle, axes)
    else:
        moved = build_transform('ak', state.masses).apply(state)
        rho = ak_reduce(state, default_axes(moved, n_points=args.points, indices=[1]))
    manifest.add(io_utils.save_density_matrix(rho, args.out))
    return _out_dir(args.out)


def cmd_analytics(args, manifest):
    if args.curve == 'dispersion-ratio':
        curve = dispersion_curve(args.samples)
        x, columns = 'entanglement', ['ratio']
    else:
        alpha = np.linspace(0.0, args.alpha_max, args.samples)
        curve = pd.DataFrame({'alpha': alpha, 'purity': two_branch_purity(alpha),
                              'linear_entropy': linear_entropy(alpha)})
        x, columns = 'alpha', ['purity', 'linear_entropy']
    manifest.add(io_utils.save_dataframe_csv(curve, args.out))
    if args.svg:
        manifest.add(io_utils.save_line_plot_svg(curve, x, columns, args.svg, title=args.curve))
    return _out_dir(args.out)


def cmd_uncertainty(args, manifest):
    state = io_utils.load_state(args.state, args.hbar)
    report = {'schema': constants.REPORT_SCHEMA, 'frame': state.frame.name}
    if args.pairs == 'all':
        m = moments(state)
        report['moments'] = m.to_dict()
        report['robertson_margins'] = m.robertson_margins().values.tolist()
    if state.masses.n_particles > 1:
        absolute = to_frame(state, 'absolute')
        bounds = verify_bounds(absolute)
        report['relative_bounds'] = bounds.to_dict(orient='records')
        report['all_satisfied'] = bool(bounds['satisfied'].all())
        report['variance_identities'] = variance_identities(absolute).to_dict(orient='records')
    manifest.add(io_utils.save_report(report, args.out))
    return _out_dir(args.out)


def cmd_phase_probe(args, manifest):
    state = io_utils.load_state(args.state, args.hbar)
    deltas = parse_float_list(args.delta, 'delta')
    decomposition = decompose_shift(deltas, state.masses, args.transform)
    value = shift_expectation(state, deltas)
    report = {
        'schema': constants.REPORT_SCHEMA,
        'decomposition': decomposition.to_dict(),
        'expectation': value,
        'modulus': abs(value),
        'phase': float(np.angle(value)),
        'heavy_pi_form': heavy_limit_pi_form(deltas, state.masses).to_dict(),
    }
    if state.masses.n_particles > 1:
        report['expectation_relative_only'] = shift_expectation(state, deltas, relative_only=True)
    if args.heavy is not None:
        report['heavy_relative_form'] = heavy_limit_relative_form(deltas, state.masses, args.heavy).to_dict()
    manifest.add(io_utils.save_report(report, args.out))
    return _out_dir(args.out)


def cmd_evolve(args, manifest):
    cfg = RunConfig.from_dict(io_utils.load_json(args.config), args.hbar)
    manifest.config = cfg.to_dict()
    manifest.hbar = cfg.masses.hbar
    trajectory = run(cfg, show_progress_bar=args.progress)
    out = args.out
    manifest.add(io_utils.save_dataframe_csv(trajectory.observables, os.path.join(out, 'observables.csv')))
    for k, (t, snapshot) in enumerate(trajectory.snapshots):
        manifest.add(io_utils.save_grid_snapshot(snapshot, os.path.join(out, 'snapshots', f'snapshot_{k:05d}.csv')))
    summary = {'schema': constants.REPORT_SCHEMA, 'hamiltonian': trajectory.hamiltonian,
               'norm_drift': trajectory.norm_drift(), 'energy_drift': trajectory.energy_drift(),
               'snapshot_times': [t for t, _ in trajectory.snapshots]}
    if len(trajectory.observables) >= constants.MIN_TRAJECTORY_SAMPLES:
        summary['ehrenfest'] = ehrenfest_check(trajectory, cfg.build_hamiltonian())
    manifest.add(io_utils.save_report(summary, os.path.join(out, 'summary.json')))
    if args.svg:
        means = [c for c in trajectory.observables.columns if c.startswith('mean_x')]
        manifest.add(io_utils.save_line_plot_svg(trajectory.observables, 't', means, args.svg, title='means'))
    return out


def cmd_scenario(args, manifest):
    data = io_utils.load_json(args.config) if args.config else {}
    if not isinstance(data, dict):
        raise ConfigError(f'{args.config}: a scenario config holds a json object')
    if args.hbar is not None:
        data['hbar'] = args.hbar
    if args.attachment is not None:
        data['attachment'] = args.attachment
    cfg = ScenarioConfig.from_dict(data, args.scenario)
    manifest.config = cfg.to_dict()
    manifest.hbar = cfg.hbar
    report = run_scenario(args.scenario, cfg)
    manifest.add(io_utils.save_report(report, args.out, decimals=constants.REPORT_DECIMALS))
    if args.svg:
        manifest.add(io_utils.save_line_plot_svg(phase_scan(cfg), 'phi', ['P1', 'P2'], args.svg,
                                                 title=args.scenario))
    return _out_dir(args.out)


def cmd_selftest(args, manifest):
    table = run_selftest(show_progress_bar=args.progress)
    for row in table.itertuples():
        print(f"{'PASS' if row.passed else 'FAIL'} {row.check}: {row.value:.12g} (expected {row.expected:.12g})")
    if args.out:
        manifest.add(io_utils.save_dataframe_csv(table, args.out))
    if not table['passed'].all():
        raise SelftestFailed(f"{int((~table['passed']).sum())} selftest checks failed")
    return _out_dir(args.out) if args.out else None


COMMANDS = {
    'transform': cmd_transform,
    'reduce': cmd_reduce,
    'analytics': cmd_analytics,
    'uncertainty': cmd_uncertainty,
    'phase-probe': cmd_phase_probe,
    'evolve': cmd_evolve,
    'scenario': cmd_scenario,
    'selftest': cmd_selftest,
}


def build_parser():
    parser = argparse.ArgumentParser(prog='qrf', description='quantum reference frame numerical lab')
    parser.add_argument('--hbar', type=float, default=None, help='override hbar of every input')
    parser.add_argument('--log-level', default='WARNING')
    parser.add_argument('--progress', action='store_true', help='show progress bars')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    p = sub.add_parser('transform', help='apply a canonical transform to a gaussian state')
    p.add_argument('--state', required=True)
    p.add_argument('--transform', required=True, choices=sorted(TRANSFORMS))
    p.add_argument('--out', required=True)
    p.add_argument('--matrix-csv', default=None)

    p = sub.add_parser('reduce', help='density matrix seen from particle 0 or externally')
    p.add_argument('--state', required=True)
    p.add_argument('--keep', default='relative', choices=['relative', 'external', 'ak'])
    p.add_argument('--particle', type=int, default=1)
    p.add_argument('--points', type=int, default=constants.DEFAULT_AXIS_POINTS)
    p.add_argument('--out', required=True)

    p = sub.add_parser('analytics', help='closed-form entanglement curves')
    p.add_argument('--curve', default='dispersion-ratio', choices=['dispersion-ratio', 'two-branch-purity'])
    p.add_argument('--samples', type=int, default=100)
    p.add_argument('--alpha-max', type=float, default=5.0)
    p.add_argument('--out', required=True)
    p.add_argument('--svg', default=None)

    p = sub.add_parser('uncertainty', help='moments and relative uncertainty bounds')
    p.add_argument('--state', required=True)
    p.add_argument('--pairs', default='all', choices=['all', 'relative'])
    p.add_argument('--out', required=True)

    p = sub.add_parser('phase-probe', help='decompose S = sum delta_i p_i and evaluate <exp(iS/hbar)>')
    p.add_argument('--state', required=True)
    p.add_argument('--delta', required=True)
    p.add_argument('--transform', default='cm_relative', choices=sorted(FRAME_TRANSFORMS))
    p.add_argument('--heavy', type=int, default=None)
    p.add_argument('--out', required=True)

    p = sub.add_parser('evolve', help='split-step evolution of a run config')
    p.add_argument('--config', required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--svg', default=None)

    p = sub.add_parser('scenario', help='board, board-md and third-particle set-ups')
    p.add_argument('scenario', choices=list(SCENARIOS))
    p.add_argument('--config', default=None)
    p.add_argument('--attachment', default=None, choices=['external', 'board'])
    p.add_argument('--out', default='report.json')
    p.add_argument('--svg', default=None)

    p = sub.add_parser('selftest', help='run the invariant suite')
    p.add_argument('--out', default=None)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2
    try:
        setup_logging(args.log_level)
        configure_threads()
        config = {k: v for k, v in vars(args).items() if k not in ('log_level', 'progress')}
        manifest = io_utils.RunManifest(args.command, config,
                                        constants.HBAR if args.hbar is None else args.hbar)
        out_dir = COMMANDS[args.command](args, manifest)
        if out_dir is not None:
            manifest.write(out_dir)
    except QRFError as e:
        logger.error('%s', e)
        print(f'qrf {args.command}: {e}', file=sys.stderr)
        return e.exit_code
    return 0


if __name__ == '__main__':
    sys.exit(main())
