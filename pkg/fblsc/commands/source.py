"""Point-to-point source coding commands"""
import logging

import click

from fblsc.commands import (
    GRID, INT_GRID, JSON, curve, distortion, experiment_options, resolve, require,
    source_pmf, sweep, channel,
)
from fblsc.errors import ConfigError
from fblsc.output import emit_curve
from fblsc.services import BoundsService, ExpansionService, RdService

logger = logging.getLogger(__name__)

RATE, DISPERSION = 'rate', 'dispersion'


def _source_options(func):
    func = click.option('--pmf', type=JSON, default=None, help='Source pmf as a JSON array.')(func)
    func = click.option('--p', type=float, default=None, help='Bernoulli source parameter P(1).')(func)
    return func


@click.command('lossless')
@_source_options
@click.option('--eps', type=float, default=0.01, show_default=True)
@click.option('--n', 'n', type=INT_GRID, default='100:1000:100', show_default=True, help='Blocklength grid.')
@click.option('--gamma', type=float, default=None, help='Converse slack; log(n)/n when omitted.')
@experiment_options
@click.pass_context
def lossless(ctx, **kwargs):
    """Exact lossless bounds and the normal approximation.

    CSV columns: n, rate_ach, rate_conv, rate_so (rates per symbol).
    """
    params = resolve(ctx, kwargs)
    p = source_pmf(params)
    eps = params['eps']
    kinds = {'rate_ach': RATE, 'rate_conv': RATE, 'rate_so': RATE}

    def point(n):
        conv, ach = BoundsService.lossless_crossings(p, n, eps, params['gamma'],
                                                      budget=ctx.obj.config.TYPE_BUDGET)
        so = ExpansionService.lossless_expansion(p, n, eps).value
        return curve(n, {'rate_ach': ach / n, 'rate_conv': conv / n, 'rate_so': so / n}, kinds, params['bits'])

    rows = sweep(point, params['n'], ctx.obj.workers())
    emit_curve(rows, params['out'], 'n')


@click.command('exponent')
@_source_options
@click.option('--R', 'rates', type=GRID, required=False, default=None, help='Rate grid in nats.')
@experiment_options
@click.pass_context
def exponent(ctx, **kwargs):
    """Lossless error exponents in both dual forms.

    CSV columns: R, gallager, csiszar_longo, rho, moderate.
    """
    params = resolve(ctx, kwargs)
    require(params, 'rates')
    p = source_pmf(params)
    kinds = {'gallager': RATE, 'csiszar_longo': RATE}

    def point(rate):
        res = ExpansionService.lossless_exponents(p, rate)
        return curve(rate, {'gallager': res.error_exponent, 'csiszar_longo': res.csiszar_longo,
                            'rho': res.rho, 'moderate': res.moderate_constant}, kinds, params['bits'])

    rows = sweep(point, params['rates'], ctx.obj.workers())
    emit_curve(rows, params['out'], 'R')


@click.command('rd')
@_source_options
@click.option('--distortion', type=JSON, default=None, help='Distortion matrix; Hamming when omitted.')
@click.option('--D', 'D', type=float, default=None, help='Distortion level.')
@click.option('--eps', type=float, default=0.1, show_default=True)
@click.option('--n', 'n', type=INT_GRID, default='100:1000:100', show_default=True)
@click.option('--bounds/--no-bounds', default=False,
              help='Add the exact binary Hamming bounds (binary sources with Hamming distortion only).')
@experiment_options
@click.pass_context
def rd(ctx, **kwargs):
    """Rate-distortion function, dispersion and second-order rate.

    CSV columns: n, rate, dispersion, rate_so, and rate_conv, rate_ach with --bounds.
    """
    params = resolve(ctx, kwargs)
    require(params, 'D')
    p = source_pmf(params)
    d = distortion(params, p.size)
    D, eps = params['D'], params['eps']
    sol = RdService.rate_distortion(p, d, D, **ctx.obj.rd_options())
    tilted = RdService.tilted_density(sol, p, d, D)
    if params['bounds'] and (p.size != 2 or params['distortion'] is not None):
        raise ConfigError("exact bounds need a binary source with Hamming distortion", key='bounds')
    kinds = {'rate': RATE, 'dispersion': DISPERSION, 'rate_so': RATE, 'rate_conv': RATE, 'rate_ach': RATE}

    def point(n):
        columns = {
            'rate': sol.rate,
            'dispersion': tilted.variance,
            'rate_so': ExpansionService.rd_expansion(sol, tilted, n, eps).value / n,
        }
        if params['bounds']:
            conv, ach = BoundsService.rd_crossings_bms(tilted, p, D, n, eps,
                                                       budget=ctx.obj.config.TYPE_BUDGET)
            columns.update(rate_conv=conv / n, rate_ach=ach / n)
        return curve(n, columns, kinds, params['bits'])

    rows = sweep(point, params['n'], ctx.obj.workers())
    emit_curve(rows, params['out'], 'n')


@click.command('noisy')
@_source_options
@click.option('--channel', type=JSON, default=None, help='Observation channel as a JSON matrix.')
@click.option('--bsc', type=float, default=None, help='Binary symmetric observation channel.')
@click.option('--bec', type=float, default=None, help='Binary erasure observation channel.')
@click.option('--distortion', type=JSON, default=None)
@click.option('--D', 'D', type=float, default=None)
@click.option('--eps', type=float, default=0.1, show_default=True)
@click.option('--n', 'n', type=INT_GRID, default='100:1000:100', show_default=True)
@experiment_options
@click.pass_context
def noisy(ctx, **kwargs):
    """Noisy lossy compression: rate, dispersion and second-order rate.

    CSV columns: n, rate, dispersion, surrogate_dispersion, rate_so.
    """
    params = resolve(ctx, kwargs)
    require(params, 'D')
    px = source_pmf(params)
    ch = channel(params)
    d = distortion(params, px.size)
    ns = RdService.noisy_rate_distortion(px, ch, d, params['D'], **ctx.obj.rd_options())
    kinds = {'rate': RATE, 'dispersion': DISPERSION, 'surrogate_dispersion': DISPERSION, 'rate_so': RATE}

    def point(n):
        so = ExpansionService.noisy_expansion(ns, n, params['eps']).value
        return curve(n, {'rate': ns.rate, 'dispersion': ns.dispersion_tilde,
                         'surrogate_dispersion': ns.surrogate_dispersion, 'rate_so': so / n},
                     kinds, params['bits'])

    rows = sweep(point, params['n'], ctx.obj.workers())
    emit_curve(rows, params['out'], 'n')


@click.command('variable')
@click.option('--p', type=float, default=None, help='Bernoulli source parameter.')
@click.option('--D', 'D', type=float, default=None)
@click.option('--eps', type=float, default=0.05, show_default=True)
@click.option('--n', 'n', type=INT_GRID, default='100:2000:100', show_default=True)
@experiment_options
@click.pass_context
def variable(ctx, **kwargs):
    """Variable-length coding of a binary Hamming source against fixed length.

    CSV columns: n, rate_vl_so, rate_fixed_so, rate_vl_ach.
    """
    params = resolve(ctx, kwargs)
    require(params, 'p', 'D')
    p = source_pmf(params)
    d = distortion({}, 2)
    D, eps = params['D'], params['eps']
    sol = RdService.rate_distortion(p, d, D, **ctx.obj.rd_options())
    tilted = RdService.tilted_density(sol, p, d, D)
    kinds = {'rate_vl_so': RATE, 'rate_fixed_so': RATE, 'rate_vl_ach': RATE}

    def point(n):
        vl = ExpansionService.vl_expansion(sol, tilted, n, eps)
        fixed = ExpansionService.rd_expansion(sol, tilted, n, eps).value
        ach = BoundsService.vl_achievability_bms(params['p'], D, n, eps)
        return curve(n, {'rate_vl_so': vl / n, 'rate_fixed_so': fixed / n, 'rate_vl_ach': ach / n},
                     kinds, params['bits'])

    rows = sweep(point, params['n'], ctx.obj.workers())
    emit_curve(rows, params['out'], 'n')


source_commands = (lossless, exponent, rd, noisy, variable)
