"""Closed-form oracle and figure presets"""
import logging

import click

from fblsc.commands import experiment_options, resolve
from fblsc.commands.coding import jscc
from fblsc.commands.multiterminal import sr
from fblsc.commands.source import lossless, variable
from fblsc.errors import ConfigError
from fblsc.models import ExampleId
from fblsc.output import emit_json
from fblsc.services import OracleService

logger = logging.getLogger(__name__)

ORACLE_PARAMS = ('p', 'D', 'D1', 'D2', 'delta', 'Delta')

PRESETS = {
    'fig-lossless-tightness': (lossless, {'p': 0.2, 'eps': 0.01, 'n': '100:2000:100'}),
    'fig-sscc-cost': (jscc, {'bsc': 0.1, 'bern_sweep': '0.06:0.45:0.01', 'D': 0.05, 'eps': 0.05}),
    'fig-vl-gain': (variable, {'p': 0.2, 'D': 0.02, 'eps': 0.05, 'n': '100:2000:100'}),
    'fig-sr-region': (sr, {'p': 0.3, 'D1': 0.2, 'D2': 0.1, 'eps': 0.1, 'case': 'iii'}),
}


@click.command('oracle')
@click.option('--example', type=click.Choice([e.value for e in ExampleId]), default=None)
@click.option('--p', type=float, default=None)
@click.option('--D', 'D', type=float, default=None)
@click.option('--D1', 'D1', type=float, default=None)
@click.option('--D2', 'D2', type=float, default=None)
@click.option('--delta', type=float, default=None, help='Erasure probability of the noisy example.')
@click.option('--Delta', 'Delta', type=float, default=None, help='Gray-Wyner joint distortion level.')
@experiment_options
@click.pass_context
def oracle(ctx, **kwargs):
    """All closed-form quantities of a worked example (JSON, nats)."""
    params = resolve(ctx, kwargs)
    if params['example'] is None:
        raise ConfigError("missing required parameter", key='example')
    values = {k: params[k] for k in ORACLE_PARAMS if params[k] is not None}
    result = OracleService.closed_form_oracle(params['example'], values)
    emit_json({'example': result.example, 'params': result.params, 'values': result.values}, params['out'])


@click.command('preset')
@click.argument('name', type=click.Choice(sorted(PRESETS)))
@click.option('--out', default=None, help='Output file; stdout when omitted.')
@click.option('--bits', is_flag=True)
@click.pass_context
def preset(ctx, name, out, bits):
    """Run a figure reproduction with its bundled defaults."""
    command, defaults = PRESETS[name]
    by_name = {p.name: p for p in command.params}
    values = {key: by_name[key].type_cast_value(ctx, value) for key, value in defaults.items()}
    logger.info(f"Running preset {name} through {command.name}")
    ctx.invoke(command, **values, out=out, bits=bits)


oracle_commands = (oracle, preset)
