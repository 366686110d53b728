"""
Shared plumbing of the command handlers.

Every experiment command accepts ``--config FILE`` (a flat JSON object whose
keys are the command's option names), ``--bits`` and ``--out``. Flags given on
the command line override keys of the file.
"""
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import click
import numpy as np
from click.core import ParameterSource

from fblsc.errors import ConfigError
from fblsc.models import CondPmf, CurveRow, DistortionMatrix, JointPmf, Pmf

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)


@dataclass
class AppState:
    """Object attached to the click context by the application factory"""
    config: type

    def workers(self, requested=None):
        cap = max(1, int(self.config.THREADS))
        if requested is None:
            return cap
        return max(1, min(int(requested), cap))

    def rd_options(self):
        """Slope cap, iteration cap and gap tolerance of the rate-distortion solvers"""
        return {'lambda_cap': self.config.LAMBDA_CAP, 'max_iter': self.config.BA_MAX_ITER,
                'tol': self.config.BA_TOL}


class GridType(click.ParamType):
    """A single value, a comma list, or an inclusive ``start:stop:step`` range"""
    name = 'grid'

    def __init__(self, integer=False):
        self.integer = integer

    def convert(self, value, param, ctx):
        if isinstance(value, tuple) and all(isinstance(v, (int, float)) for v in value):
            values = [float(v) for v in value]
        elif isinstance(value, (list, np.ndarray)):
            values = [float(v) for v in value]
        elif isinstance(value, (int, float)):
            values = [float(value)]
        else:
            text = str(value).strip()
            try:
                if ':' in text:
                    parts = [float(v) for v in text.split(':')]
                    if len(parts) != 3:
                        self.fail(f"range {text!r} must read start:stop:step", param, ctx)
                    start, stop, step = parts
                    if step <= 0:
                        self.fail(f"step of {text!r} must be positive", param, ctx)
                    count = int(math.floor((stop - start) / step + 1e-9)) + 1
                    values = list(np.round(start + step * np.arange(max(count, 0)), 12))
                else:
                    values = [float(v) for v in text.split(',') if v.strip()]
            except ValueError:
                self.fail(f"{text!r} is not a grid", param, ctx)
        if not values:
            self.fail("grid is empty", param, ctx)
        if any(b <= a for a, b in zip(values, values[1:])):
            self.fail("grid must be strictly increasing", param, ctx)
        if self.integer:
            if any(abs(v - round(v)) > 1e-9 for v in values):
                self.fail("grid must hold integers", param, ctx)
            return tuple(int(round(v)) for v in values)
        return tuple(float(v) for v in values)


class JsonType(click.ParamType):
    """Inline arrays such as ``[0.5, 0.25, 0.25]``"""
    name = 'json'

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple, dict)):
            return value
        try:
            return json.loads(value)
        except (TypeError, ValueError):
            self.fail(f"{value!r} is not valid JSON", param, ctx)


GRID = GridType()
INT_GRID = GridType(integer=True)
JSON = JsonType()


def experiment_options(func):
    """--config, --bits and --out shared by the experiment commands"""
    func = click.option('--out', default=None, help='Output file; stdout when omitted or "-".')(func)
    func = click.option('--bits', is_flag=True, help='Report rates in bits instead of nats.')(func)
    func = click.option('--config', 'config_path', type=click.Path(dir_okay=False), default=None,
                        help='JSON file of parameters; flags override its keys.')(func)
    return func


def load_config(path):
    try:
        with open(path, encoding='utf-8') as handle:
            values = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}", key='config') from exc
    except ValueError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}", key='config') from exc
    if not isinstance(values, dict):
        raise ConfigError(f"{path} must hold a JSON object", key='config')
    return values


def resolve(ctx, kwargs):
    """Merge command-line values over the configuration file"""
    kwargs = dict(kwargs)
    path = kwargs.pop('config_path', None)
    file_values = load_config(path) if path else {}
    by_name = {p.name: p for p in ctx.command.params}
    for key in file_values:
        name = key.replace('-', '_')
        if name not in kwargs:
            raise ConfigError(f"unknown configuration key for {ctx.command.name}", key=key)
    params = {}
    for name, value in kwargs.items():
        source = ctx.get_parameter_source(name)
        given = source in (ParameterSource.COMMANDLINE, ParameterSource.ENVIRONMENT)
        for key in (name, name.replace('_', '-')):
            if not given and key in file_values:
                raw = file_values[key]
                try:
                    value = by_name[name].type_cast_value(ctx, raw) if raw is not None else None
                except click.BadParameter as exc:
                    raise ConfigError(exc.format_message(), key=key) from exc
        params[name] = value
    logger.debug(f"{ctx.command.name} parameters: {params}")
    return params


def require(params, *names):
    for name in names:
        if params.get(name) is None:
            raise ConfigError("missing required parameter", key=name)


def sweep(fn, grid, workers=1):
    """Evaluate fn over the grid; results keep the grid order"""
    grid = list(grid)
    if workers > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, grid))
    return [fn(x) for x in grid]


def in_units(columns, kinds, bits):
    """Convert rate columns by 1/log 2 and dispersion columns by 1/log^2 2"""
    if not bits:
        return columns
    out = {}
    for name, value in columns.items():
        kind = kinds.get(name)
        if kind == 'rate':
            value = value / LOG2
        elif kind == 'dispersion':
            value = value / LOG2 ** 2
        out[name] = value
    return out


def curve(x, columns, kinds, bits):
    return CurveRow(x, in_units(columns, kinds, bits))


# ---------------------------------------------------------------- source specs


def source_pmf(params, pmf_key='pmf', p_key='p'):
    if params.get(pmf_key) is not None:
        return Pmf(params[pmf_key])
    if params.get(p_key) is not None:
        return Pmf.bernoulli(params[p_key])
    raise ConfigError(f"give --{p_key} or --{pmf_key}", key=p_key)


def distortion(params, size, key='distortion'):
    if params.get(key) is not None:
        return DistortionMatrix(params[key])
    return DistortionMatrix.hamming(size)


def channel(params):
    if params.get('channel') is not None:
        return CondPmf(params['channel'])
    if params.get('bsc') is not None:
        return CondPmf.bsc(params['bsc'])
    if params.get('bec') is not None:
        return CondPmf.bec(params['bec'])
    raise ConfigError("give --channel, --bsc or --bec", key='channel')


def joint_source(params):
    """--joint matrix, --dsbs crossover, or --erased p (uniform X seen through an erasure channel)"""
    if params.get('joint') is not None:
        return JointPmf(params['joint'])
    if params.get('dsbs') is not None:
        return JointPmf.dsbs(params['dsbs'])
    if params.get('erased') is not None:
        return CondPmf.bec(params['erased']).joint(Pmf.uniform(2))
    raise ConfigError("give --joint, --dsbs or --erased", key='joint')
