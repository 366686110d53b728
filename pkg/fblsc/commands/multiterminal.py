"""Kaspi, successive refinement, Fu-Yeung and Gray-Wyner commands"""
import logging
import math

import click
import numpy as np

from fblsc.commands import (
    GRID, INT_GRID, JSON, LOG2, curve, distortion, experiment_options, joint_source, require, resolve,
    source_pmf, sweep,
)
from fblsc.errors import ConfigError
from fblsc.models import CurveRow, FyCase, RegionKind, SrCase
from fblsc.output import emit_curve, emit_json
from fblsc.services import ExpansionService, GwService, KaspiService, RdService, RegionService, SrService

logger = logging.getLogger(__name__)

BOUNDARY_POINTS = 21


def _joint_options(func):
    func = click.option('--erased', type=float, default=None,
                        help='Uniform binary X observed through an erasure channel with this probability.')(func)
    func = click.option('--dsbs', type=float, default=None, help='Doubly symmetric binary source crossover.')(func)
    func = click.option('--joint', type=JSON, default=None, help='Joint pmf of (X, Y) as a JSON matrix.')(func)
    return func


def _distortion_options(func):
    func = click.option('--D2', 'D2', type=float, default=None)(func)
    func = click.option('--D1', 'D1', type=float, default=None)(func)
    return func


def _min_l2(boundary, l1):
    """Smallest L2 inside the region at L1; inf when none, -inf when every L2 qualifies"""
    if boundary.kind is RegionKind.BIVARIATE_TRACED:
        raise ValueError("traced boundaries carry their own points")
    lowest = -math.inf
    for row in boundary.coeffs:
        a, b, rhs = row[0], row[1], row[-1]
        if b > 0:
            lowest = max(lowest, (rhs - a * l1) / b)
        elif a * l1 < rhs:
            return math.inf
    return lowest


def _default_grid(centre, scale):
    scale = max(scale, 1e-3)
    return tuple(centre + np.linspace(-3.0, 3.0, BOUNDARY_POINTS) * scale)


def _boundary_rows(boundary, grid, bits):
    unit = 1.0 / LOG2 if bits else 1.0
    if boundary.kind is RegionKind.BIVARIATE_TRACED:
        pairs = [(float(l1), float(l2)) for l1, l2 in boundary.points]
    else:
        pairs = [(float(l1), _min_l2(boundary, l1)) for l1 in grid]
    if not pairs:
        raise ConfigError("no point of the grid lies inside the region", key='l1')
    return [CurveRow(l1 * unit, {'L2_min': l2 * unit}) for l1, l2 in pairs]


@click.command('kaspi')
@_joint_options
@_distortion_options
@click.option('--eps', type=float, default=0.1, show_default=True)
@click.option('--n', 'n', type=INT_GRID, default='100:1000:100', show_default=True)
@experiment_options
@click.pass_context
def kaspi(ctx, **kwargs):
    """Rate-distortion with side information possibly absent, Hamming distortions.

    CSV columns: n, rate, lambda1, lambda2, dispersion, rate_so.
    """
    params = resolve(ctx, kwargs)
    require(params, 'D1', 'D2')
    j = joint_source(params)
    nx = j.shape[0]
    ks = KaspiService.kaspi_rate(j, distortion({}, nx), distortion({}, nx), params['D1'], params['D2'],
                               max_iter=ctx.obj.config.BA_MAX_ITER)
    kinds = {'rate': 'rate', 'dispersion': 'dispersion', 'rate_so': 'rate'}

    def point(n):
        so = ExpansionService.kaspi_expansion(ks, n, params['eps']).value
        return curve(n, {'rate': ks.rate, 'lambda1': ks.lambda1_star, 'lambda2': ks.lambda2_star,
                         'dispersion': ks.tilted.variance, 'rate_so': so / n}, kinds, params['bits'])

    rows = sweep(point, params['n'], ctx.obj.workers())
    emit_curve(rows, params['out'], 'n')


@click.command('sr')
@click.option('--p', type=float, default=None)
@click.option('--pmf', type=JSON, default=None)
@click.option('--distortion', type=JSON, default=None, help='Distortion matrix shared by both decoders.')
@_distortion_options
@click.option('--R1', 'R1', type=float, default=None, help='First-stage rate; R(P_X, D1) when omitted.')
@click.option('--R-sum', 'R_sum', type=float, default=None, help='Sum rate used to detect the case.')
@click.option('--case', type=click.Choice([c.value for c in SrCase]), default=None)
@click.option('--eps', type=float, default=0.1, show_default=True)
@click.option('--l1', type=GRID, default=None, help='Grid of first-stage second-order rates.')
@experiment_options
@click.pass_context
def sr(ctx, **kwargs):
    """Second-order region of successive refinement in (L1, L1+L2) coordinates.

    CSV columns: L1, L2_min.
    """
    params = resolve(ctx, kwargs)
    require(params, 'D1', 'D2')
    p = source_pmf(params)
    d = distortion(params, p.size)
    r1 = params['R1']
    if r1 is None:
        r1 = RdService.rate_distortion(p, d, params['D1'], **ctx.obj.rd_options()).rate
    sol = SrService.sr_min_sum_rate(p, d, d, params['D1'], params['D2'], r1,
                                    max_iter=ctx.obj.config.BA_MAX_ITER)
    if params['case'] is not None:
        case = SrCase(params['case'])
    elif params['R_sum'] is not None:
        case = SrService.sr_case(sol, params['R_sum'])
    else:
        case = SrCase.III if abs(sol.r1 - sol.rate_d1) <= 1e-6 else SrCase.I
    logger.info(f"SR sum rate {sol.sum_rate:.10g}, case {case.value}, rank {sol.rank}")

    boundary = RegionService.sr_region(sol, case, params['eps'], l1_grid=params['l1'], r_sum=params['R_sum'],
                                       workers=ctx.obj.workers())
    grid = params['l1'] or _default_grid(boundary.threshold or 0.0, math.sqrt(sol.cov.v11))
    emit_curve(_boundary_rows(boundary, grid, params['bits']), params['out'], 'L1')


@click.command('fy')
@click.option('--pmf', type=JSON, default=None, help='Source pmf of X.')
@click.option('--p', type=float, default=None)
@click.option('--g', type=JSON, default=None, help='Deterministic map from X to the side symbol Y.')
@_distortion_options
@click.option('--R1', 'R1', type=float, default=None)
@click.option('--R2', 'R2', type=float, default=None, help='Second rate used to detect the case.')
@click.option('--case', type=click.Choice([c.value for c in FyCase]), default=None)
@click.option('--eps', type=float, default=0.1, show_default=True)
@click.option('--l1', type=GRID, default=None)
@experiment_options
@click.pass_context
def fy(ctx, **kwargs):
    """Second-order region of the Fu-Yeung problem with Hamming distortions.

    CSV columns: L1, L2_min.
    """
    params = resolve(ctx, kwargs)
    require(params, 'g', 'D1', 'D2')
    p = source_pmf(params)
    d = distortion({}, p.size)
    bounds = SrService.fy_boundary_rates(p, params['g'], d, d, params['D1'], params['D2'],
                                         max_iter=ctx.obj.config.BA_MAX_ITER)
    r1 = params['R1'] if params['R1'] is not None else bounds.rate_d1
    sol = SrService.fy_solution(p, params['g'], d, d, params['D1'], params['D2'], r1,
                                max_iter=ctx.obj.config.BA_MAX_ITER)
    if params['case'] is not None:
        case = FyCase(params['case'])
    elif params['R2'] is not None:
        case = SrService.fy_case(sol, bounds, params['R2'])
    else:
        raise ConfigError("give --case or --R2", key='case')

    boundary = RegionService.fy_region(sol, case, params['eps'], grid=params['l1'], bounds=bounds,
                                       r2=params['R2'], workers=ctx.obj.workers())
    grid = params['l1'] or _default_grid(boundary.threshold or 0.0, math.sqrt(sol.cov1.v11))
    emit_curve(_boundary_rows(boundary, grid, params['bits']), params['out'], 'L1')


@click.command('gw')
@_joint_options
@_distortion_options
@click.option('--R1', 'R1', type=float, default=None, help='Private rate of the first decoder.')
@click.option('--R2', 'R2', type=float, default=None, help='Private rate of the second decoder.')
@click.option('--eps', type=float, default=0.1, show_default=True)
@click.option('--budget', type=int, default=None, help='Candidate evaluations of the search.')
@experiment_options
@click.pass_context
def gw(ctx, **kwargs):
    """Gray-Wyner common rate, multipliers and second-order halfspace (JSON)."""
    params = resolve(ctx, kwargs)
    require(params, 'D1', 'D2', 'R1', 'R2')
    j = joint_source(params)
    dx, dy = distortion({}, j.shape[0]), distortion({}, j.shape[1])
    budget = params['budget'] or ctx.obj.config.GW_EVAL_BUDGET
    sol = GwService.gw_common_rate(j, dx, dy, params['D1'], params['D2'], params['R1'], params['R2'],
                                   budget=budget, workers=ctx.obj.workers())
    boundary = RegionService.gw_region(sol, params['eps'])
    unit = 1.0 / LOG2 if params['bits'] else 1.0
    document = {
        'common_rate': sol.common_rate * unit,
        'xi1': sol.xi1_star,
        'xi2': sol.xi2_star,
        'lambda1': sol.lambda1_star,
        'lambda2': sol.lambda2_star,
        'dispersion': sol.tilted.variance * unit ** 2,
        'certified': sol.certified,
        'evaluations': sol.evaluations,
        'halfspace': [list(row[:-1]) + [row[-1] * unit] for row in boundary.coeffs],
        'pangloss': None,
    }
    if sol.pangloss is not None:
        document['pangloss'] = {
            'joint_rate': sol.pangloss.joint_rd_rate * unit,
            'nu1': sol.pangloss.nu1,
            'nu2': sol.pangloss.nu2,
            'dispersion': sol.pangloss.tilted_ixy.variance * unit ** 2,
            'residual': sol.pangloss.residual,
        }
    emit_json(document, params['out'])


multiterminal_commands = (kaspi, sr, fy, gw)
