"""
Alternating minimisation for two-stage test channels.

The first stage maps (x, y) to xhat1 through q1; the second stage maps
(x, y, xhat1) to xhat2 through q2(. | y, xhat1). With rate weight w = 1 + xi
on the first stage this covers the Kaspi, successive refinement and Fu-Yeung
problems.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from config import Config
from fblsc.errors import ConvergenceFailure
from fblsc.services.lagrange import maximize_dual

logger = logging.getLogger(__name__)

MAX_ITER = Config.BA_MAX_ITER
TOL = 1e-11
FLOOR = 1e-300


@dataclass
class TwoStagePoint:
    log_q1: np.ndarray   # [A]
    log_q2: np.ndarray   # [Y, A, B]
    lb: np.ndarray       # [X, Y], log of 1/beta
    lb2: np.ndarray      # [X, Y, A], log of 1/beta2
    p1: np.ndarray       # [X, Y, A]
    p2: np.ndarray       # [X, Y, A, B]
    expected_d1: float
    expected_d2: float
    first_rate: float
    weighted_value: float
    residuals: tuple     # optimality gaps of the q1 and q2 conditions
    iterations: int


def _log(a):
    with np.errstate(divide='ignore'):
        return np.log(a)


def _stage_terms(pxy, d1, d2, log_q1, log_q2, lam1, lam2, w):
    lb2 = logsumexp(log_q2[None, :, :, :] - lam2 * d2[:, None, None, :], axis=3)
    t = log_q1[None, None, :] + (lb2 - lam1 * d1[:, None, :]) / w
    lb = logsumexp(t, axis=2)
    p1 = np.exp(t - lb[:, :, None])
    p2 = np.exp(log_q2[None, :, :, :] - lam2 * d2[:, None, None, :] - lb2[:, :, :, None])
    return lb, lb2, p1, p2


def solve_fixed(pxy, d1, d2, multipliers, start=None, max_iter=MAX_ITER, tol=TOL):
    """Converge the two-stage marginals at fixed (xi, lam1, lam2)"""
    xi, lam1, lam2 = multipliers
    w = 1.0 + xi
    nx, ny = pxy.shape
    na, nb = d1.shape[1], d2.shape[1]
    if start is None:
        log_q1 = np.full(na, -math.log(na))
        log_q2 = np.full((ny, na, nb), -math.log(nb))
    else:
        q1 = (1 - 1e-6) * np.exp(start[0]) + 1e-6 / na
        q2 = (1 - 1e-6) * np.exp(start[1]) + 1e-6 / nb
        log_q1 = np.log(q1 / q1.sum())
        log_q2 = np.log(q2 / q2.sum(axis=2, keepdims=True))

    residuals = (math.inf, math.inf)
    for it in range(1, max_iter + 1):
        lb, lb2, p1, p2 = _stage_terms(pxy, d1, d2, log_q1, log_q2, lam1, lam2, w)
        joint1 = pxy[:, :, None] * p1
        q1 = joint1.sum(axis=(0, 1))
        mass = joint1.sum(axis=0)
        joint2 = np.einsum('xya,xyab->yab', joint1, p2)
        with np.errstate(divide='ignore', invalid='ignore'):
            q2 = np.where(mass[:, :, None] > FLOOR, joint2 / mass[:, :, None], np.exp(log_q2))
        new_log_q1 = _log(q1)
        new_log_q2 = _log(q2)

        # optimality gaps: the largest log growth factor of each marginal, zero at the fixed point
        finite1 = np.isfinite(log_q1)
        live2 = (mass[:, :, None] > 1e-14) & np.isfinite(log_q2)
        residuals = (
            float(np.max((new_log_q1 - log_q1)[finite1], initial=0.0)),
            float(np.max((new_log_q2 - log_q2)[live2], initial=0.0)),
        )
        log_q1, log_q2 = new_log_q1, new_log_q2
        if max(residuals) < tol:
            break
    else:
        raise ConvergenceFailure(
            f"two-stage iteration did not converge in {max_iter} iterations",
            iterations=max_iter, residual=max(residuals))

    lb, lb2, p1, p2 = _stage_terms(pxy, d1, d2, log_q1, log_q2, lam1, lam2, w)
    joint1 = pxy[:, :, None] * p1
    expected_d1 = float(np.sum(joint1 * d1[:, None, :]))
    expected_d2 = float(np.einsum('xya,xyab,xb->', joint1, p2, d2))
    q1 = joint1.sum(axis=(0, 1))
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(joint1 > 0, np.log(p1 / q1[None, None, :]), 0.0)
    first_rate = max(float(np.sum(joint1 * ratio)), 0.0)
    value = float(-w * np.sum(pxy * np.where(pxy > 0, lb, 0.0)))
    return TwoStagePoint(log_q1, log_q2, lb, lb2, p1, p2, expected_d1, expected_d2,
                         first_rate, value, residuals, it)


class TwoStageProblem:
    """Dual of min I(XY;Xhat1) + I(X;Xhat2|Y,Xhat1) with optional rate constraint"""

    def __init__(self, pxy, d1, d2, D1, D2, R1=None, max_iter=MAX_ITER):
        self.pxy = np.asarray(pxy, dtype=float)
        self.d1 = np.asarray(d1, dtype=float)
        self.d2 = np.asarray(d2, dtype=float)
        self.D1, self.D2, self.R1 = D1, D2, R1
        self.max_iter = max_iter
        self._start = None
        self.point = None

    def multipliers(self, m):
        if self.R1 is None:
            return 0.0, m[0], m[1]
        return m[0], m[1], m[2]

    def evaluate(self, m):
        xi, lam1, lam2 = self.multipliers(m)
        point = solve_fixed(self.pxy, self.d1, self.d2, (xi, lam1, lam2),
                            self._start, self.max_iter)
        self._start = (point.log_q1, point.log_q2)
        self.point = point
        value = point.weighted_value - lam1 * self.D1 - lam2 * self.D2
        grad = [point.expected_d1 - self.D1, point.expected_d2 - self.D2]
        if self.R1 is not None:
            value -= xi * self.R1
            grad = [point.first_rate - self.R1] + grad
        return value, np.array(grad)

    def solve(self, start=None):
        """Optimal multipliers, dual value and the fixed point at the optimum"""
        if self.R1 is None:
            start = np.array([1.0, 1.0]) if start is None else start
            patterns = [(True, False), (False, True)]
        else:
            start = np.array([0.0, 1.0, 1.0]) if start is None else start
            patterns = [(True, True, False), (True, False, False), (False, True, False)]
        result = maximize_dual(self.evaluate, start, patterns)
        value, grad = self.evaluate(result.multipliers)
        xi, lam1, lam2 = self.multipliers(result.multipliers)
        logger.debug(f"Two-stage dual {value:.12g} at xi={xi:.6g} lam=({lam1:.6g}, {lam2:.6g}); "
                     f"constraint residuals {grad.tolist()}")
        return (xi, lam1, lam2), value, self.point

    def tilted(self, multipliers, point):
        """(1+xi) log beta - xi R1 - lam1 D1 - lam2 D2 over (x, y)"""
        xi, lam1, lam2 = multipliers
        w = 1.0 + xi
        values = -w * point.lb - lam1 * self.D1 - lam2 * self.D2
        if self.R1 is not None:
            values -= xi * self.R1
        return values
