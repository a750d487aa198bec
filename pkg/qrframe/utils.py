import os
import json
import hashlib
import logging
from contextlib import contextmanager

import numpy as np
import torch

from . import constants

logger = logging.getLogger(__name__)


class QRFError(Exception):
    '''base class of every error raised by qrframe.
    '''
    exit_code = 1


class ConfigError(QRFError, ValueError):
    '''malformed input: bad json, unknown names, out-of-range parameters.
    '''
    exit_code = 2


class FrameMismatchError(ConfigError):
    '''operands live in different coordinate frames or carry different masses.
    '''


class NotPureError(ConfigError):
    pass


class NumericBudgetError(QRFError, RuntimeError):
    '''a numerical tolerance or budget was exceeded.
    '''
    exit_code = 3


class ExtentError(NumericBudgetError):
    def __init__(self, message, axis=None):
        super().__init__(message)
        self.axis = axis


class SupportClippedError(NumericBudgetError):
    pass


class StabilityError(NumericBudgetError):
    pass


class EdgeError(NumericBudgetError):
    pass


def configure_threads(n_threads=None):
    '''cap torch intra-op parallelism, by default from the QRF_THREADS env var.
    '''
    if n_threads is None:
        value = os.environ.get(constants.THREADS_ENV)
        if not value:
            return None
        try:
            n_threads = int(value)
        except ValueError:
            raise ConfigError(f'{constants.THREADS_ENV} should be a positive integer, got {value!r}')
    if n_threads < 1:
        raise ConfigError(f'thread count should be positive, got {n_threads}')
    torch.set_num_threads(n_threads)
    logger.info('torch intra-op threads capped at %d', n_threads)
    return n_threads


def setup_logging(level='WARNING'):
    if isinstance(level, str):
        numeric = logging.getLevelName(level.upper())
        if not isinstance(numeric, int):
            raise ConfigError(f'unknown log level {level}')
        level = numeric
    logging.basicConfig(level=level, format=constants.LOG_FORMAT)


def to_builtin(obj):
    '''recursively convert numpy scalars/arrays and complex numbers into json-friendly objects.
    '''
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(np.real(obj)), float(np.imag(obj))]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def round_floats(obj, decimals):
    '''floats of a json-ready structure rounded to `decimals` places; -0.0 becomes 0.0.
    '''
    if isinstance(obj, dict):
        return {k: round_floats(v, decimals) for k, v in obj.items()}
    if isinstance(obj, list):
        return [round_floats(v, decimals) for v in obj]
    if isinstance(obj, float) and np.isfinite(obj):
        return round(obj, decimals) + 0.0
    return obj


def config_hash(config):
    payload = json.dumps(to_builtin(config), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


def parse_float_list(text, name='value'):
    '''parse "0.5,-0.5" style command-line lists.
    '''
    try:
        return [float(v) for v in text.split(',') if v.strip() != '']
    except ValueError:
        raise ConfigError(f'{name} should be a comma separated list of numbers, got {text!r}')


def is_power_of_two(n):
    return n > 0 and (n & (n - 1)) == 0


def as_float(value, name):
    '''float(value), with malformed input reported as a ConfigError naming the field.
    '''
    if isinstance(value, bool):
        raise ConfigError(f'{name} should be a number, got {value!r}')
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f'{name} should be a number, got {value!r}') from None


@contextmanager
def malformed_input(what):
    '''turn lookup, type and value errors raised while reading `what` into a ConfigError.
    '''
    try:
        yield
    except QRFError:
        raise
    except KeyError as e:
        raise ConfigError(f'{what} requires {e}') from e
    except (AttributeError, TypeError, ValueError) as e:
        raise ConfigError(f'malformed {what}: {e}') from e
