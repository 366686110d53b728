import logging

import numpy as np

from fblsc.errors import CaseMismatch, DomainError, InfeasibleRate
from fblsc.models import (
    Covariance2, FyBoundaryRates, FyCase, FySolution, SrCase, SrSolution, TiltedTable,
)
from fblsc.services.prob_service import ProbService
from fblsc.services.rd_service import RdService, DEGENERATE_TOL
from fblsc.services.two_stage import MAX_ITER, TwoStageProblem

logger = logging.getLogger(__name__)

RATE_TOL = 1e-9
CASE_TOL = 1e-6


def _covariance(a, b, probs):
    data = np.vstack([a, b])
    mean = data @ probs
    centered = data - mean[:, None]
    return Covariance2.from_matrix((centered * probs) @ centered.T)


def _index_map(g, nx):
    g = np.asarray(g, dtype=int).ravel()
    if g.size != nx or np.any(g < 0):
        raise DomainError("g must map every source symbol to a nonnegative index", key='g')
    return g


class SrService:
    @staticmethod
    def fy_solution(p, g, d1, d2, D1, D2, R1, max_iter=MAX_ITER):
        """Fu-Yeung minimal sum rate with its multipliers and tilted densities"""
        nx = p.size
        g = _index_map(g, nx)
        ny = int(g.max()) + 1
        pxy = np.zeros((nx, ny))
        pxy[np.arange(nx), g] = p.probs
        py = pxy.sum(axis=0)

        rd1 = RdService.rate_distortion(p, d1, D1, max_iter=max_iter)
        if R1 < rd1.rate - RATE_TOL:
            raise InfeasibleRate(f"R1={R1} is below R(P_X, D1)={rd1.rate}", key='R1')
        tilted_d1 = RdService.tilted_density(rd1, p, d1, D1)

        neg_log_py = ProbService.information_density(py)[g]
        entropy_y = ProbService.entropy(py)
        var_y = ProbService.varentropy(py)

        d_max1 = float((p.probs @ d1.d).min())
        d_max2 = float(sum(py[y] * ((pxy[:, y] / py[y]) @ d2.d).min() for y in range(ny) if py[y] > 0))
        if D1 >= d_max1 - DEGENERATE_TOL and D2 >= d_max2 - DEGENERATE_TOL:
            multipliers = (0.0, 0.0, 0.0)
            values = np.zeros(nx)
            beta = np.ones(nx)
            beta2 = np.ones((nx, d1.shape[1]))
            residuals = (0.0, 0.0)
        else:
            problem = TwoStageProblem(pxy, d1.d, d2.d, D1, D2, R1=R1, max_iter=max_iter)
            multipliers, _, point = problem.solve()
            values = problem.tilted(multipliers, point)[np.arange(nx), g]
            beta = np.exp(-point.lb[np.arange(nx), g])
            beta2 = np.exp(-point.lb2[np.arange(nx), g, :])
            residuals = point.residuals

        xi, lam1, lam2 = (float(m) for m in multipliers)
        tilted = TiltedTable.from_values(values, p.probs, p.labels)
        shifted = tilted.values + neg_log_py
        cov1 = _covariance(tilted_d1.values, shifted, p.probs)
        cov2 = _covariance(shifted, neg_log_py, p.probs)
        logger.debug(f"Fu-Yeung sum rate {tilted.mean:.10g}, xi={xi:.3g}")
        return FySolution(
            sum_rate_excess=max(tilted.mean, 0.0),
            xi_star=xi,
            lambda1_star=lam1,
            lambda2_star=lam2,
            beta=beta,
            beta2=beta2,
            tilted=tilted,
            tilted_d1=tilted_d1,
            neg_log_py=neg_log_py,
            entropy_y=entropy_y,
            var_y=var_y,
            cov1=cov1,
            cov2=cov2,
            r1=R1,
            rate_d1=rd1.rate,
            residuals=residuals,
        )

    @staticmethod
    def sr_min_sum_rate(p, d1, d2, D1, D2, R1, max_iter=MAX_ITER):
        """Successive refinement: the Fu-Yeung problem with a constant Y"""
        fy = SrService.fy_solution(p, np.zeros(p.size, dtype=int), d1, d2, D1, D2, R1, max_iter)
        rate_d2 = RdService.rate_distortion(p, d2, D2, max_iter=max_iter).rate
        cov = _covariance(fy.tilted_d1.values, fy.tilted.values, p.probs)
        logger.info(f"SR sum rate {fy.sum_rate_excess:.10g} at R1={R1}, rank {cov.rank()}")
        return SrSolution(
            sum_rate=fy.sum_rate_excess,
            xi_star=fy.xi_star,
            nu1_star=fy.lambda1_star,
            nu2_star=fy.lambda2_star,
            tilted=fy.tilted,
            tilted_d1=fy.tilted_d1,
            cov=cov,
            r1=R1,
            rate_d1=fy.rate_d1,
            rate_d2=rate_d2,
        )

    @staticmethod
    def fy_boundary_rates(p, g, d1, d2, D1, D2, max_iter=MAX_ITER):
        """R(P_X,D1), the slack-constraint sum rate and the second corner rate"""
        nx = p.size
        g = _index_map(g, nx)
        rd1 = RdService.rate_distortion(p, d1, D1, max_iter=max_iter)
        corner = SrService.fy_solution(p, g, d1, d2, D1, D2, rd1.rate, max_iter)
        # a first-stage rate of H(X) never binds
        relaxed = SrService.fy_solution(p, g, d1, d2, D1, D2, ProbService.entropy(p) + 1.0, max_iter)
        r2_star = corner.entropy_y + corner.sum_rate_excess - rd1.rate
        return FyBoundaryRates(rd1.rate, relaxed.sum_rate_excess, r2_star, corner.entropy_y)

    @staticmethod
    def sr_case(sr, R_sum, tol=CASE_TOL):
        """Case of the successive refinement region for the rate pair (R1, R1 + R2)"""
        on_corner = abs(sr.r1 - sr.rate_d1) <= tol
        on_curve = abs(R_sum - sr.sum_rate) <= tol
        if on_corner and on_curve:
            return SrCase.III
        if on_corner and R_sum > sr.sum_rate + tol:
            return SrCase.II
        if sr.r1 > sr.rate_d1 + tol and on_curve:
            return SrCase.I
        raise CaseMismatch(f"rate pair ({sr.r1}, {R_sum}) is not on the region boundary", key='case')

    @staticmethod
    def fy_case(fy, bounds, R2, tol=CASE_TOL):
        """Case of the Fu-Yeung region for the rate pair (R1, R2)"""
        R1 = fy.r1
        if abs(R1 - bounds.rate_d1) <= tol:
            if abs(R2 - bounds.r2_star) <= tol:
                return FyCase.II
            if R2 > bounds.r2_star + tol:
                return FyCase.I
        elif abs(R2 - bounds.entropy_y) <= tol and abs(R1 - bounds.r1_star) <= tol:
            return FyCase.IV
        elif abs(R2 - bounds.entropy_y) <= tol and R1 > bounds.r1_star + tol:
            return FyCase.V
        elif bounds.rate_d1 < R1 < bounds.r1_star:
            if abs(R2 - (fy.sum_rate_excess + fy.entropy_y - R1)) <= tol:
                return FyCase.III
        raise CaseMismatch(f"rate pair ({R1}, {R2}) is not on the region boundary", key='case')
