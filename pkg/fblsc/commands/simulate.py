"""Monte Carlo simulation command"""
import logging

import click

from fblsc.commands import JSON, LOG2, channel, distortion, experiment_options, require, resolve, source_pmf
from fblsc.errors import ConfigError
from fblsc.models import CodebookKind, Pmf, SimConfig, SourceSampler
from fblsc.output import emit_json
from fblsc.services import BoundsService, ExpansionService, RdService, SimulationService

logger = logging.getLogger(__name__)

KINDS = ('rd', 'mismatch', 'noisy')


def _log_m(params, expansion):
    """Explicit --log-m, or the second-order value at --eps"""
    if params['log_m'] is not None:
        return params['log_m']
    if params['eps'] is None:
        raise ConfigError("give --log-m or --eps", key='log_m')
    return expansion().value


@click.command('simulate')
@click.option('--kind', type=click.Choice(KINDS), default='rd', show_default=True)
@click.option('--p', type=float, default=None, help='Bernoulli source parameter.')
@click.option('--pmf', type=JSON, default=None, help='Source pmf as a JSON array.')
@click.option('--distortion', type=JSON, default=None)
@click.option('--codebook-pmf', 'codebook_pmf', type=JSON, default=None,
              help='Codeword letter law; the optimal reproduction law when omitted.')
@click.option('--channel', type=JSON, default=None, help='Observation channel of the noisy kind.')
@click.option('--bsc', type=float, default=None)
@click.option('--bec', type=float, default=None)
@click.option('--sigma2', type=float, default=1.0, show_default=True)
@click.option('--zeta', type=float, default=None, help='Fourth moment of the custom sampler.')
@click.option('--sampler', type=click.Choice([s.value for s in SourceSampler]), default='gaussian',
              show_default=True)
@click.option('--codebook', type=click.Choice([k.value for k in CodebookKind]), default='spherical',
              show_default=True)
@click.option('--D', 'D', type=float, default=None)
@click.option('--n', 'n', type=int, default=None)
@click.option('--log-m', 'log_m', type=float, default=None, help='Natural log of the codebook size.')
@click.option('--eps', type=float, default=None, help='Pick log M from the second-order expansion at eps.')
@click.option('--trials', type=int, default=10_000, show_default=True)
@click.option('--seed', type=int, default=None, help='Seed; FBLSC_SEED when omitted.')
@click.option('--threads', type=int, default=None, help='Worker threads, capped by FBLSC_THREADS.')
@experiment_options
@click.pass_context
def simulate(ctx, **kwargs):
    """Excess-distortion frequency of random codebooks (JSON).

    Output keys: kind, n, log_m, p_hat, ci_half_width, trials, failures, low_count,
    and converse, achievability for binary Hamming sources of the rd kind.
    """
    params = resolve(ctx, kwargs)
    require(params, 'D', 'n')
    kind, n, D = params['kind'], params['n'], params['D']
    seed = params['seed'] if params['seed'] is not None else ctx.obj.config.SEED
    workers = ctx.obj.workers(params['threads'])
    document = {'kind': kind, 'n': n, 'seed': seed}

    if kind == 'mismatch':
        sigma2 = params['sigma2']
        zeta = params['zeta'] if params['zeta'] is not None else 3.0 * sigma2 ** 2
        log_m = _log_m(params, lambda: ExpansionService.mismatch_expansion(sigma2, zeta, D, n, params['eps']))
        cfg = SimConfig(n, log_m, params['trials'], seed, workers)
        result = SimulationService.simulate_mismatch(params['sampler'], sigma2, D, params['codebook'], cfg,
                                                     zeta=params['zeta'])
    else:
        p = source_pmf(params)
        d = distortion(params, p.size)
        if kind == 'rd':
            sol = RdService.rate_distortion(p, d, D, **ctx.obj.rd_options())
            tilted = RdService.tilted_density(sol, p, d, D)
            log_m = _log_m(params, lambda: ExpansionService.rd_expansion(sol, tilted, n, params['eps']))
            codebook = Pmf(params['codebook_pmf']) if params['codebook_pmf'] is not None else sol.repro_marginal
            cfg = SimConfig(n, log_m, params['trials'], seed, workers)
            result = SimulationService.simulate_rd(p, d, D, codebook, cfg,
                                                   budget=ctx.obj.config.LATTICE_BUDGET,
                                                   direct_limit=ctx.obj.config.DIRECT_CODEBOOK_LIMIT)
            if p.size == 2 and params['distortion'] is None:
                document['converse'] = BoundsService.rd_converse(tilted, p, n, log_m,
                                                                 budget=ctx.obj.config.TYPE_BUDGET)
                document['achievability'] = BoundsService.rd_achievability_bms(p.probs[1], D, n, log_m)
        else:
            ch = channel(params)
            ns = RdService.noisy_rate_distortion(p, ch, d, D, **ctx.obj.rd_options())
            log_m = _log_m(params, lambda: ExpansionService.noisy_expansion(ns, n, params['eps']))
            codebook = (Pmf(params['codebook_pmf']) if params['codebook_pmf'] is not None
                        else ns.surrogate.repro_marginal)
            cfg = SimConfig(n, log_m, params['trials'], seed, workers)
            result = SimulationService.simulate_noisy(p, ch, d, D, codebook, cfg,
                                                      budget=ctx.obj.config.LATTICE_BUDGET,
                                                      direct_limit=ctx.obj.config.DIRECT_CODEBOOK_LIMIT)

    document.update(
        log_m=cfg.log_m / LOG2 if params['bits'] else cfg.log_m,
        p_hat=result.p_hat,
        ci_half_width=result.ci_half_width,
        trials=result.trials_used,
        failures=result.failures,
        low_count=result.low_count,
    )
    emit_json(document, params['out'])


simulate_commands = (simulate,)
