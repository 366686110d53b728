import logging
import math

import numpy as np
from scipy import integrate
from scipy.optimize import brentq

from fblsc.errors import DomainError, InfeasibleDistortion
from fblsc.models import Expansion, GmSolution
from fblsc.services.prob_service import ProbService

logger = logging.getLogger(__name__)

QUAD_TOL = 1e-13
WATER_TOL = 1e-10
REMAINDER = 'o(sqrt n) remainder omitted'


def _spectrum(a, sigma2):
    return lambda w: sigma2 / (1.0 + a * a - 2.0 * a * math.cos(w))


def _crossing(a, sigma2, theta):
    """Frequency in (0, pi) where the spectrum meets the water level, if any"""
    if a == 0.0:
        return None
    c = (1.0 + a * a - sigma2 / theta) / (2.0 * a)
    if -1.0 < c < 1.0:
        return math.acos(c)
    return None


def _average(f, a, sigma2, theta):
    """(1/pi) times the integral of f over (0, pi), split at the water crossing"""
    kink = _crossing(a, sigma2, theta)
    points = [kink] if kink is not None else None
    value, _ = integrate.quad(f, 0.0, math.pi, points=points, epsabs=QUAD_TOL, epsrel=1e-12, limit=400)
    return value / math.pi


class GaussMarkovService:
    @staticmethod
    def distortion_at(a, sigma2, theta):
        """Average of min(theta, h(w)) over the unit circle"""
        h = _spectrum(a, sigma2)
        return _average(lambda w: min(theta, h(w)), a, sigma2, theta)

    @staticmethod
    def gauss_markov(a, sigma2, D):
        """Reverse waterfilling, rate and dispersion of a Gauss-Markov source"""
        if not 0.0 <= a < 1.0:
            raise DomainError(f"a must lie in [0,1), got {a}", key='a')
        if sigma2 <= 0:
            raise DomainError(f"sigma2 must be positive, got {sigma2}", key='sigma2')
        d_max = sigma2 / (1.0 - a * a)
        d_c = sigma2 / (1.0 + a) ** 2
        if not 0.0 < D < d_max:
            raise InfeasibleDistortion(f"D={D} must lie in (0, {d_max})", key='D')

        h = _spectrum(a, sigma2)
        if D <= d_c:
            theta = D
        else:
            h_max = sigma2 / (1.0 - a) ** 2
            theta = brentq(lambda t: GaussMarkovService.distortion_at(a, sigma2, t) - D,
                           d_c, h_max, xtol=1e-15, rtol=4e-16, maxiter=500)
        residual = abs(GaussMarkovService.distortion_at(a, sigma2, theta) - D)
        if residual > WATER_TOL:
            logger.warning(f"Waterfilling residual {residual:.2e} at D={D}")

        rate = 0.5 * _average(lambda w: max(0.0, math.log(h(w) / theta)), a, sigma2, theta)
        dispersion = 0.5 * _average(lambda w: min(1.0, (h(w) / theta) ** 2), a, sigma2, theta)
        logger.debug(f"Gauss-Markov a={a}: theta={theta:.12g}, R={rate:.12g}, V={dispersion:.12g}")
        return GmSolution(a, sigma2, D, theta, rate, dispersion, d_c, d_max)

    @staticmethod
    def gm_expansion(gm, n, eps):
        """nR + sqrt(nV) Q^-1(eps) for one blocklength or a sequence of them"""
        if np.ndim(n) > 0:
            return [GaussMarkovService.gm_expansion(gm, int(k), eps) for k in n]
        z = ProbService.q_inverse(eps)
        value = n * gm.rate_gm + math.sqrt(n * gm.v_gm) * z
        return Expansion(n, gm.rate_gm, gm.v_gm, eps, 0.0, value, REMAINDER)
