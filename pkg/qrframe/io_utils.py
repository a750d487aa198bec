'''reading configs and states, writing csv/json artifacts, the run manifest and optional svg plots.
'''
import os
import json
import logging
import datetime
from dataclasses import dataclass, field
from typing import List

import pandas as pd

from . import constants
from .state import GaussianSuperposition
from .utils import ConfigError, config_hash, round_floats, to_builtin

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = '%.17g'


def load_json(path):
    '''parse a json file; malformed input raises ConfigError with line/column.
    '''
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f'cannot read {path}: {e.strerror}')
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f'{path}: line {e.lineno} column {e.colno}: {e.msg}')


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def save_json(obj, path):
    _ensure_parent(path)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(to_builtin(obj), f, sort_keys=True, indent=2)
        f.write('\n')
    logger.info('wrote %s', path)
    return path


def load_state(path, hbar=None):
    data = load_json(path)
    if not isinstance(data, dict):
        raise ConfigError(f'{path}: a state file holds a json object')
    if hbar is not None:
        data = dict(data, hbar=hbar)
    return GaussianSuperposition.from_dict(data)


def save_state(state, path):
    return save_json(state.to_dict(), path)


def save_report(report, path, decimals=None):
    data = report.to_dict() if hasattr(report, 'to_dict') else report
    if decimals is not None:
        data = round_floats(to_builtin(data), decimals)
    return save_json(data, path)


def save_dataframe_csv(df, path, index=False):
    _ensure_parent(path)
    df.to_csv(path, index=index, float_format=CSV_FLOAT_FORMAT)
    logger.info('wrote %s', path)
    return path


def save_density_matrix(rho, path):
    '''csv with interleaved re/im columns plus a json header next to it.
    '''
    save_dataframe_csv(rho.to_frame(), path)
    header = os.path.splitext(path)[0] + '.json'
    save_json(rho.header(), header)
    return [path, header]


def save_transform_csv(transform, path):
    return save_dataframe_csv(transform.blocks_frame(), path, index=True)


def save_line_plot_svg(df, x, columns, path, title=None):
    '''line plot of `columns` against `x`; skipped with a warning when matplotlib is missing.
    '''
    try:
        import matplotlib
        matplotlib.use('Agg')
        import matplotlib.pyplot as plt
    except ImportError:
        logger.warning('matplotlib is not installed, skipping %s', path)
        return None
    _ensure_parent(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for column in columns:
        ax.plot(df[x].values, df[column].values, label=column)
    ax.set_xlabel(x)
    if title:
        ax.set_title(title)
    if len(columns) > 1:
        ax.legend()
    fig.savefig(path, format='svg')
    plt.close(fig)
    logger.info('wrote %s', path)
    return path


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec='seconds')


@dataclass
class RunManifest:
    '''what a command wrote, with the hash of the config that produced it.
    '''
    command: str
    config: dict
    hbar: float = constants.HBAR
    version: str = constants.VERSION
    started: str = field(default_factory=_now)
    finished: str = None
    outputs: List[str] = field(default_factory=list)

    @property
    def config_hash(self):
        return config_hash(self.config)

    def add(self, *paths):
        for path in paths:
            if path is None:
                continue
            if isinstance(path, (list, tuple)):
                self.add(*path)
            else:
                self.outputs.append(os.path.abspath(path))

    def to_dict(self):
        return {
            'schema': constants.MANIFEST_SCHEMA,
            'command': self.command,
            'config_hash': self.config_hash,
            'version': self.version,
            'hbar': self.hbar,
            'started': self.started,
            'finished': self.finished,
            'outputs': sorted(set(self.outputs)),
        }

    def write(self, directory):
        '''one manifest per output directory; a rerun replaces it.
        '''
        self.finished = _now()
        os.makedirs(directory, exist_ok=True)
        return save_json(self.to_dict(), os.path.join(directory, constants.MANIFEST_NAME))


def save_grid_snapshot(state, path):
    '''one row per grid point: coordinates, then re and im of the amplitude.
    '''
    points = state.mesh().reshape(-1, state.dim)
    columns = {label: points[:, i] for i, label in enumerate(state.frame.positions)}
    amplitudes = state.amplitudes.reshape(-1)
    columns['re'] = amplitudes.real
    columns['im'] = amplitudes.imag
    return save_dataframe_csv(pd.DataFrame(columns), path)
