"""
Second-order coding regions of the multiterminal problems.

Halfspace boundaries store one row per constraint in ``coeffs``: the
coefficients of (L1, L2) (or (L0, L1, L2)) followed by the right-hand side.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.optimize import brentq

from fblsc.errors import CaseMismatch, ConvergenceFailure
from fblsc.models import FyCase, RegionBoundary, RegionKind, SrCase
from fblsc.services.prob_service import ProbService
from fblsc.services.sr_service import SrService

logger = logging.getLogger(__name__)

PSI_TOL = 1e-7
FEASIBLE_MARGIN = 1e-9


def _halfspace(rows, label):
    rows = tuple(tuple(float(c) for c in row) for row in rows)
    return RegionBoundary(RegionKind.HALFSPACE, coeffs=rows, threshold=rows[0][-1], label=label)


def _univariate(index, threshold, label):
    row = [0.0, 0.0, threshold]
    row[index] = 1.0
    return RegionBoundary(RegionKind.UNIVARIATE, coeffs=(tuple(row),), threshold=float(threshold),
                          label=label)


def _trace(grid, target, psi, lower, workers=1):
    """For every L1, the smallest L2 with psi(L1, L2) >= target"""

    def solve(l1):
        lo = lower(l1)
        if psi(l1, math.inf) <= target + FEASIBLE_MARGIN:
            return None
        if psi(l1, lo) >= target:
            return l1, lo
        step = 1.0
        hi = lo + step
        while psi(l1, hi) < target:
            step *= 2.0
            hi = lo + step
            if step > 1e6:
                raise ConvergenceFailure(f"no boundary point above L2={lo} at L1={l1}")
        l2 = brentq(lambda t: psi(l1, t) - target, lo, hi, xtol=1e-12, rtol=1e-13, maxiter=200)
        if abs(psi(l1, l2) - target) > PSI_TOL:
            logger.warning(f"Boundary residual {abs(psi(l1, l2) - target):.2e} at L1={l1}")
        return l1, l2

    grid = sorted(float(g) for g in grid)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve, grid))
    else:
        results = [solve(l1) for l1 in grid]
    points = [r for r in results if r is not None]
    dropped = len(grid) - len(points)
    if dropped:
        logger.debug(f"{dropped} grid points lie outside the region for every L2")
    return np.array(points).reshape(-1, 2)


class RegionService:
    @staticmethod
    def sr_region(sr, case, eps, l1_grid=None, r_sum=None, workers=1):
        """Second-order region of successive refinement in (L1, L1+L2) coordinates"""
        case = SrCase(case)
        if r_sum is not None:
            detected = SrService.sr_case(sr, r_sum)
            if detected is not case:
                raise CaseMismatch(f"requested case {case.value}, rates place the point in case "
                                   f"{detected.value}", key='case')
        z = ProbService.q_inverse(eps)
        v11, v22 = sr.cov.v11, sr.cov.v22
        xi = sr.xi_star
        if case is SrCase.I:
            return _halfspace([(xi, 1.0, math.sqrt(v22) * z)], 'sr-i')
        if case is SrCase.II:
            return _univariate(0, math.sqrt(v11) * z, 'sr-ii')

        if l1_grid is None:
            l1_grid = math.sqrt(v11) * z + np.linspace(0.05, 3.0, 20) * max(math.sqrt(v11), 1e-3)

        def psi(l1, l2):
            return ProbService.bivariate_normal_cdf(l1, xi * l1 + l2, sr.cov)

        points = _trace(l1_grid, 1.0 - eps, psi, lambda l1: math.sqrt(v22) * z - xi * l1, workers)
        return RegionBoundary(RegionKind.BIVARIATE_TRACED, points=points, label='sr-iii')

    @staticmethod
    def sr_sep_bounds(sr, eps1, eps2):
        """Inner and outer bounds under separate excess-distortion probabilities"""
        s1, s2 = math.sqrt(sr.cov.v11), math.sqrt(sr.cov.v22)
        xi = sr.xi_star
        z_min = ProbService.q_inverse(min(eps1, eps2))
        inner = _halfspace([(1.0, 0.0, s1 * z_min), (xi, 1.0, s2 * z_min)], 'sep-inner')
        outer = _halfspace([(1.0, 0.0, s1 * ProbService.q_inverse(eps1)),
                            (xi, 1.0, s2 * ProbService.q_inverse(eps2))], 'sep-outer')
        return {'inner': inner, 'outer': outer}

    @staticmethod
    def fy_region(fy, case, eps, grid=None, bounds=None, r2=None, workers=1):
        """Second-order region of the Fu-Yeung problem"""
        case = FyCase(case)
        if bounds is not None and r2 is not None:
            detected = SrService.fy_case(fy, bounds, r2)
            if detected is not case:
                raise CaseMismatch(f"requested case {case.value}, rates place the point in case "
                                   f"{detected.value}", key='case')
        z = ProbService.q_inverse(eps)
        xi = fy.xi_star
        if case is FyCase.I:
            return _univariate(0, math.sqrt(fy.cov1.v11) * z, 'fy-i')
        if case is FyCase.V:
            return _univariate(1, math.sqrt(fy.var_y) * z, 'fy-v')
        if case is FyCase.III:
            return _halfspace([(1.0 + xi, 1.0, math.sqrt(fy.cov2.v11) * z)], 'fy-iii')

        if case is FyCase.II:
            cov = fy.cov1
            if grid is None:
                grid = math.sqrt(cov.v11) * z + np.linspace(0.05, 3.0, 20) * max(math.sqrt(cov.v11), 1e-3)
            psi = lambda l1, l2: ProbService.bivariate_normal_cdf(l1, (1.0 + xi) * l1 + l2, cov)
            lower = lambda l1: math.sqrt(cov.v22) * z - (1.0 + xi) * l1
        else:
            cov = fy.cov2
            if grid is None:
                grid = np.linspace(-3.0, 3.0, 20) * max(math.sqrt(cov.v11), 1e-3)
            psi = lambda l1, l2: ProbService.bivariate_normal_cdf(l1 + l2, l2, cov)
            lower = lambda l1: max(math.sqrt(cov.v22) * z, math.sqrt(cov.v11) * z - l1)
        points = _trace(grid, 1.0 - eps, psi, lower, workers)
        return RegionBoundary(RegionKind.BIVARIATE_TRACED, points=points, label=f'fy-{case.value}')

    @staticmethod
    def gw_region(gw, eps):
        """Halfspace L0 + xi1 L1 + xi2 L2 >= sqrt(V) Q^-1(eps)"""
        z = ProbService.q_inverse(eps)
        if gw.pangloss is not None:
            threshold = math.sqrt(gw.pangloss.tilted_ixy.variance) * z
            return _halfspace([(1.0, 1.0, 1.0, threshold)], 'gw-pangloss')
        threshold = math.sqrt(gw.tilted.variance) * z
        return _halfspace([(1.0, gw.xi1_star, gw.xi2_star, threshold)], 'gw')
