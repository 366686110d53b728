"""Joint source-channel, mismatched codebook and Gauss-Markov commands"""
import logging

import click

from fblsc.commands import GRID, INT_GRID, JSON, channel, curve, experiment_options, require, resolve, sweep
from fblsc.models import CodebookKind, DistortionMatrix, Pmf
from fblsc.output import emit_curve
from fblsc.services import ExpansionService, GaussMarkovService, RdService

logger = logging.getLogger(__name__)


@click.command('jscc')
@click.option('--channel', type=JSON, default=None, help='Channel as a JSON matrix.')
@click.option('--bsc', type=float, default=None, help='Binary symmetric channel crossover.')
@click.option('--bec', type=float, default=None, help='Binary erasure channel erasure probability.')
@click.option('--bern-sweep', 'bern_sweep', type=GRID, default='0.06:0.45:0.01', show_default=True,
              help='Grid of Bernoulli source parameters.')
@click.option('--D', 'D', type=float, default=0.05, show_default=True)
@click.option('--eps', type=float, default=0.05, show_default=True)
@click.option('--k', type=int, default=1000, show_default=True, help='Channel uses.')
@experiment_options
@click.pass_context
def jscc(ctx, **kwargs):
    """Second-order cost of separating source and channel coding.

    CSV columns: p, L_jscc, L_sscc, eps1_star, n_star.
    """
    params = resolve(ctx, kwargs)
    ch = RdService.channel_capacity(channel(params))
    d = DistortionMatrix.hamming(2)
    logger.debug(f"Channel capacity {ch.capacity:.10g}, dispersion {ch.dispersion_vc:.10g}")

    def point(p):
        res = ExpansionService.jscc_tradeoff(Pmf.bernoulli(p), d, params['D'], ch, params['k'], params['eps'],
                                             grid=ctx.obj.config.SSCC_GRID)
        # second-order costs are ratios and carry no unit
        return curve(p, {'L_jscc': res.l_jscc, 'L_sscc': res.l_sscc, 'eps1_star': res.eps1_star,
                         'n_star': res.n_star_approx}, {}, params['bits'])

    rows = sweep(point, params['bern_sweep'], ctx.obj.workers())
    emit_curve(rows, params['out'], 'p')


@click.command('mismatch')
@click.option('--sigma2', type=float, default=1.0, show_default=True)
@click.option('--zeta', type=float, default=None, help='Fourth moment; Gaussian value 3 sigma2^2 when omitted.')
@click.option('--D', 'D', type=float, default=None)
@click.option('--eps', type=float, default=0.1, show_default=True)
@click.option('--n', 'n', type=INT_GRID, default='100:1000:100', show_default=True)
@click.option('--codebook', type=click.Choice([k.value for k in CodebookKind]), default='spherical',
              show_default=True)
@experiment_options
@click.pass_context
def mismatch(ctx, **kwargs):
    """Gaussian codebooks under quadratic distortion on any source with given moments.

    CSV columns: n, rate, dispersion, rate_so.
    """
    params = resolve(ctx, kwargs)
    require(params, 'D')
    sigma2 = params['sigma2']
    zeta = params['zeta'] if params['zeta'] is not None else 3.0 * sigma2 ** 2
    kinds = {'rate': 'rate', 'dispersion': 'dispersion', 'rate_so': 'rate'}

    def point(n):
        exp = ExpansionService.mismatch_expansion(sigma2, zeta, params['D'], n, params['eps'],
                                                  CodebookKind(params['codebook']))
        return curve(n, {'rate': exp.first_order, 'dispersion': exp.dispersion, 'rate_so': exp.value / n},
                     kinds, params['bits'])

    rows = sweep(point, params['n'], ctx.obj.workers())
    emit_curve(rows, params['out'], 'n')


@click.command('gauss-markov')
@click.option('--a', type=float, default=0.5, show_default=True, help='Autoregression coefficient in [0,1).')
@click.option('--sigma2', type=float, default=1.0, show_default=True, help='Innovation variance.')
@click.option('--D', 'D', type=GRID, default=None, help='Distortion grid inside (0, sigma2/(1-a^2)).')
@click.option('--n', 'n', type=int, default=1000, show_default=True)
@click.option('--eps', type=float, default=0.1, show_default=True)
@experiment_options
@click.pass_context
def gauss_markov(ctx, **kwargs):
    """Reverse waterfilling, rate and dispersion of a Gauss-Markov source.

    CSV columns: D, theta, rate, dispersion, d_c, rate_so.
    """
    params = resolve(ctx, kwargs)
    require(params, 'D')
    n = params['n']
    kinds = {'rate': 'rate', 'dispersion': 'dispersion', 'rate_so': 'rate'}

    def point(D):
        gm = GaussMarkovService.gauss_markov(params['a'], params['sigma2'], D)
        so = GaussMarkovService.gm_expansion(gm, n, params['eps']).value
        return curve(D, {'theta': gm.theta_d, 'rate': gm.rate_gm, 'dispersion': gm.v_gm, 'd_c': gm.d_c,
                         'rate_so': so / n}, kinds, params['bits'])

    rows = sweep(point, params['D'], ctx.obj.workers())
    emit_curve(rows, params['out'], 'D')


coding_commands = (jscc, mismatch, gauss_markov)
