import logging

import numpy as np

from fblsc.errors import InfeasibleDistortion
from fblsc.models import KaspiSolution, TiltedTable
from fblsc.services.rd_service import RdService, DEGENERATE_TOL
from fblsc.services.two_stage import MAX_ITER, TwoStageProblem

logger = logging.getLogger(__name__)


class KaspiService:
    @staticmethod
    def kaspi_rate(j, d1, d2, D1, D2, max_iter=MAX_ITER):
        """Kaspi rate: decoder 1 without side information, decoder 2 with Y"""
        px = j.probs.sum(axis=1)
        d_min1 = float(px @ d1.d.min(axis=1))
        d_min2 = float(px @ d2.d.min(axis=1))
        if D1 < d_min1 - DEGENERATE_TOL:
            raise InfeasibleDistortion(f"D1={D1} is below d_min={d_min1}", key='D1')
        if D2 < d_min2 - DEGENERATE_TOL:
            raise InfeasibleDistortion(f"D2={D2} is below d_min={d_min2}", key='D2')

        nx, ny = j.shape
        na, nb = d1.shape[1], d2.shape[1]
        d_max1 = float((px @ d1.d).min())
        cond_max2 = float(sum(j.probs[:, y].sum() * (j.probs[:, y] / j.probs[:, y].sum() @ d2.d).min()
                              for y in range(ny) if j.probs[:, y].sum() > 0))
        if D1 >= d_max1 - DEGENERATE_TOL and D2 >= cond_max2 - DEGENERATE_TOL:
            logger.debug("Both Kaspi distortions are trivially met")
            tilted = TiltedTable.from_values(np.zeros(nx * ny), j.probs.ravel())
            return KaspiSolution(0.0, 0.0, 0.0, np.ones((nx, ny, na)), np.ones((nx, ny)), tilted,
                                 np.full(na, 1.0 / na), np.full((ny, na, nb), 1.0 / nb))

        problem = TwoStageProblem(j.probs, d1.d, d2.d, D1, D2, max_iter=max_iter)
        multipliers, value, point = problem.solve()
        _, lam1, lam2 = multipliers
        values = problem.tilted(multipliers, point)
        tilted = TiltedTable.from_values(values.ravel(), j.probs.ravel(),
                                         tuple((a, b) for a in j.row_labels for b in j.col_labels))
        rate = max(float(value), 0.0)
        logger.info(f"Kaspi rate {rate:.10g} at (D1, D2)=({D1}, {D2})")
        return KaspiSolution(
            rate=rate,
            lambda1_star=float(lam1),
            lambda2_star=float(lam2),
            alpha2=np.exp(-point.lb2),
            alpha=np.exp(-point.lb),
            tilted=tilted,
            q1=np.exp(point.log_q1),
            q2=np.exp(point.log_q2),
            residuals=point.residuals,
        )

    @staticmethod
    def nu(sol, j, d1, d2, Q):
        """Lagrangian test function nu(xhat1, Q) for a conditional Q[y, a, b]"""
        kernel2 = np.einsum('yab,xb->xya', Q, np.exp(-sol.lambda2_star * d2.d))
        weights = j.probs[:, :, None] * sol.alpha[:, :, None] * np.exp(-sol.lambda1_star * d1.d)[:, None, :]
        return np.sum(weights * kernel2, axis=(0, 1))

    @staticmethod
    def reduction_bounds(j, d1, d2, D1, D2):
        """Single-decoder rates bracketing the Kaspi rate from below"""
        first = RdService.rate_distortion(j.marginal_x(), d1, D1).rate
        second = RdService.conditional_rate_distortion(j, d2, D2).rate
        return first, second
