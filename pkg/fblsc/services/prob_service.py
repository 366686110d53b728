import math
import logging

import numpy as np
from scipy import integrate
from scipy.special import entr, rel_entr
from scipy.stats import norm

from fblsc.errors import DomainError, SupportViolation
from fblsc.models import Covariance2, Pmf, JointPmf

logger = logging.getLogger(__name__)


class ProbService:
    @staticmethod
    def entropy(p):
        """Shannon entropy in nats"""
        probs = p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=float)
        return float(np.sum(entr(probs)))

    @staticmethod
    def binary_entropy(p):
        """Binary entropy in nats"""
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"binary entropy needs p in [0,1], got {p}", key='p')
        return float(entr(p) + entr(1.0 - p))

    @staticmethod
    def mutual_information(j):
        """I(X;Y) of a joint pmf"""
        probs = j.probs if isinstance(j, JointPmf) else np.asarray(j, dtype=float)
        product = np.outer(probs.sum(axis=1), probs.sum(axis=0))
        return max(0.0, float(np.sum(rel_entr(probs, product))))

    @staticmethod
    def kl_divergence(p, q):
        """Relative entropy D(p||q) in nats"""
        pp = p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=float)
        qq = q.probs if isinstance(q, Pmf) else np.asarray(q, dtype=float)
        if np.any((pp > 0) & (qq <= 0)):
            raise SupportViolation("p is not absolutely continuous with respect to q", key='q')
        return max(0.0, float(np.sum(rel_entr(pp, qq))))

    @staticmethod
    def q_function(t):
        """Gaussian complementary cdf"""
        return float(norm.sf(t))

    @staticmethod
    def q_inverse(eps):
        """Inverse of the Gaussian complementary cdf"""
        if not 0.0 < eps < 1.0:
            raise DomainError(f"Q inverse needs eps in (0,1), got {eps}", key='eps')
        x = float(norm.isf(eps))
        for _ in range(5):
            resid = norm.sf(x) - eps
            if abs(resid) < 1e-15:
                break
            x += resid / norm.pdf(x)
        return x

    @staticmethod
    def bivariate_normal_cdf(x1, x2, cov):
        """Pr{Z1 <= x1, Z2 <= x2} for a centred Gaussian pair with covariance cov"""
        if not isinstance(cov, Covariance2):
            cov = Covariance2.from_matrix(cov)
        s1, s2 = math.sqrt(max(cov.v11, 0.0)), math.sqrt(max(cov.v22, 0.0))

        def marginal(x, s):
            if s == 0.0:
                return 1.0 if x >= 0 else 0.0
            return float(norm.cdf(x / s))

        if x1 == -math.inf or x2 == -math.inf:
            return 0.0
        if x1 == math.inf:
            return marginal(x2, s2)
        if x2 == math.inf:
            return marginal(x1, s1)
        if s1 == 0.0 or s2 == 0.0:
            return marginal(x1, s1) * marginal(x2, s2)

        rho = max(-1.0, min(1.0, cov.v12 / (s1 * s2)))
        z1, z2 = x1 / s1, x2 / s2
        # rank one: the pair lives on a line through the origin
        if 1.0 - abs(rho) < 1e-9:
            if rho > 0:
                return float(norm.cdf(min(z1, z2)))
            return float(max(0.0, norm.cdf(z1) - norm.cdf(-z2)))

        scale = math.sqrt(1.0 - rho * rho)
        upper = min(z1, 40.0)
        if upper < -40.0:
            return 0.0
        kink = z2 / rho if rho != 0 else None
        points = [kink] if kink is not None and -40.0 < kink < upper else None
        value, _ = integrate.quad(
            lambda u: norm.pdf(u) * norm.cdf((z2 - rho * u) / scale),
            -40.0, upper, epsabs=1e-13, epsrel=1e-11, limit=400, points=points,
        )
        return float(min(1.0, max(0.0, value)))

    @staticmethod
    def information_density(p):
        """Per-symbol -log P(x); zero off the support"""
        probs = p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=float)
        with np.errstate(divide='ignore'):
            return np.where(probs > 0, -np.log(np.where(probs > 0, probs, 1.0)), 0.0)

    @staticmethod
    def varentropy(p):
        """Var[-log P(X)], the source dispersion"""
        probs = p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=float)
        info = ProbService.information_density(probs)
        mean = float(np.dot(probs, info))
        return float(np.dot(probs, (info - mean) ** 2))
