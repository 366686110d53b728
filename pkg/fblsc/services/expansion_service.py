import logging
import math

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.special import entr, logsumexp, rel_entr
from scipy.stats import norm

from config import Config
from fblsc.errors import DegenerateChannel, DomainError, MomentOrderViolation
from fblsc.models import CodebookKind, Expansion, ExponentResult, JsccResult, Pmf
from fblsc.services.prob_service import ProbService
from fblsc.services.rd_service import RdService

logger = logging.getLogger(__name__)

LOG_N_COEFF_LOSSLESS = -0.5
LOG_N_COEFF_LOSSY = 0.0
SSCC_GRID = Config.SSCC_GRID
LOSSY_REMAINDER = 'log n coefficient unresolved'


def _check_eps(eps):
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0,1), got {eps}", key='eps')


def _assemble(n, first_order, dispersion, eps, log_n_coeff, flag=None):
    _check_eps(eps)
    dispersion = max(float(dispersion), 0.0)
    value = n * first_order + math.sqrt(n * dispersion) * ProbService.q_inverse(eps)
    if n > 1:
        value += log_n_coeff * math.log(n)
    return Expansion(n, first_order, dispersion, eps, log_n_coeff, value, flag)


def _tilted_law(probs, rho):
    """Q proportional to P^(1/(1+rho)) on the support"""
    logs = np.log(probs) / (1.0 + rho)
    return np.exp(logs - logsumexp(logs))


class ExpansionService:
    @staticmethod
    def lossless_expansion(p, n, eps, log_n_coeff=LOG_N_COEFF_LOSSLESS):
        """nH + sqrt(nV) Q^-1(eps) + c log n"""
        return _assemble(n, ProbService.entropy(p), ProbService.varentropy(p), eps, log_n_coeff)

    @staticmethod
    def _gallager(probs, R):
        def objective(rho):
            return -(rho * R - (1.0 + rho) * logsumexp(np.log(probs) / (1.0 + rho)))

        hi = 1.0
        while ProbService.entropy(_tilted_law(probs, hi)) < R and hi < 1e8:
            hi *= 2.0
        res = minimize_scalar(objective, bounds=(0.0, hi), method='bounded',
                              options={'xatol': 1e-12, 'maxiter': 2000})
        return -float(res.fun), float(res.x)

    @staticmethod
    def _csiszar_longo(probs, R):
        """min D(Q||P) over Q with H(Q) >= R by sequential quadratic programming"""
        m = probs.size
        start = np.full(m, 1.0 / m)
        constraints = [
            {'type': 'eq', 'fun': lambda q: q.sum() - 1.0, 'jac': lambda q: np.ones(m)},
            {'type': 'ineq',
             'fun': lambda q: float(np.sum(entr(q))) - R,
             'jac': lambda q: -np.log(np.maximum(q, 1e-300)) - 1.0},
        ]
        res = minimize(
            lambda q: float(np.sum(rel_entr(q, probs))),
            start,
            jac=lambda q: np.log(np.maximum(q, 1e-300) / probs) + 1.0,
            bounds=[(1e-15, 1.0)] * m,
            constraints=constraints,
            method='SLSQP',
            options={'ftol': 1e-15, 'maxiter': 1000},
        )
        if not res.success:
            logger.warning(f"Csiszar-Longo descent stopped early: {res.message}")
        q = np.maximum(res.x, 0.0)
        q /= q.sum()
        return float(np.sum(rel_entr(q, probs))), q

    @staticmethod
    def lossless_exponents(p, R):
        """Error exponent in the Gallager and Csiszar-Longo forms and the moderate deviations constant"""
        if R <= 0:
            raise DomainError(f"rate must be positive, got {R}", key='R')
        probs = p.probs[p.support]
        entropy = ProbService.entropy(probs)
        variance = ProbService.varentropy(probs)
        infinite_moderate = variance <= 1e-15
        moderate = math.inf if infinite_moderate else 1.0 / (2.0 * variance)
        if R <= entropy:
            return ExponentResult(0.0, 0.0, moderate, 0.0, Pmf(probs),
                                  infinite_moderate=infinite_moderate)
        if R >= math.log(probs.size) - 1e-12:
            logger.warning(f"R={R} reaches log of the support size; the exponent is infinite")
            return ExponentResult(math.inf, math.inf, moderate, math.inf, None,
                                  infinite_exponent=True, infinite_moderate=infinite_moderate)
        gallager, rho = ExpansionService._gallager(probs, R)
        cl, q = ExpansionService._csiszar_longo(probs, R)
        if abs(gallager - cl) > 1e-6:
            logger.warning(f"Exponent forms disagree: Gallager {gallager:.10g}, Csiszar-Longo {cl:.10g}")
        return ExponentResult(gallager, cl, moderate, rho, Pmf(q),
                              infinite_moderate=infinite_moderate)

    @staticmethod
    def rd_expansion(sol, tilted, n, eps, log_n_coeff=LOG_N_COEFF_LOSSY):
        """nR(D) + sqrt(nV(D)) Q^-1(eps) + c log n"""
        return _assemble(n, sol.rate, tilted.variance, eps, log_n_coeff, LOSSY_REMAINDER)

    @staticmethod
    def noisy_expansion(ns, n, eps, log_n_coeff=LOG_N_COEFF_LOSSY):
        return _assemble(n, ns.rate, ns.dispersion_tilde, eps, log_n_coeff, LOSSY_REMAINDER)

    @staticmethod
    def kaspi_expansion(ks, n, eps, log_n_coeff=LOG_N_COEFF_LOSSY):
        return _assemble(n, ks.rate, ks.tilted.variance, eps, log_n_coeff, LOSSY_REMAINDER)

    @staticmethod
    def mismatch_dispersion(sigma2, zeta):
        if sigma2 <= 0:
            raise DomainError(f"sigma2 must be positive, got {sigma2}", key='sigma2')
        if zeta < sigma2 ** 2:
            raise MomentOrderViolation(f"zeta={zeta} is below sigma2^2={sigma2 ** 2}", key='zeta')
        return (zeta - sigma2 ** 2) / (4.0 * sigma2 ** 2)

    @staticmethod
    def mismatch_expansion(sigma2, zeta, D, n, eps, codebook=CodebookKind.SPHERICAL,
                           log_n_coeff=LOG_N_COEFF_LOSSY):
        """Gaussian codebooks under quadratic distortion; both codebook kinds share the expansion"""
        CodebookKind(codebook)
        dispersion = ExpansionService.mismatch_dispersion(sigma2, zeta)
        if not 0 < D < sigma2:
            raise DomainError(f"D must lie in (0, sigma2), got {D}", key='D')
        return _assemble(n, 0.5 * math.log(sigma2 / D), dispersion, eps, log_n_coeff, LOSSY_REMAINDER)

    @staticmethod
    def vl_expansion(sol, tilted, n, eps, log_n_coeff=LOG_N_COEFF_LOSSY):
        """Approximate minimal average length of variable-length codes with excess probability eps"""
        rate, dispersion = sol.rate, tilted.variance
        if not 0.0 <= eps <= 1.0:
            raise DomainError(f"eps must lie in [0,1], got {eps}", key='eps')
        log_term = log_n_coeff * math.log(n) if n > 1 else 0.0
        if eps == 1.0:
            return log_term
        if eps == 0.0:
            return n * rate + log_term
        z = ProbService.q_inverse(eps)
        gaussian = math.sqrt(n * max(dispersion, 0.0) / (2 * math.pi)) * math.exp(-z * z / 2)
        return (1 - eps) * n * rate - gaussian + log_term

    @staticmethod
    def jscc_tradeoff(p, d, D, ch, k, eps, grid=SSCC_GRID):
        """Source symbols per k channel uses and the joint and separate second-order costs"""
        _check_eps(eps)
        if ch.capacity <= 1e-12:
            raise DegenerateChannel("channel capacity is zero", key='channel')
        sol = RdService.rate_distortion(p, d, D)
        if sol.rate <= 1e-12:
            raise DomainError(f"R(P_X, D) vanishes at D={D}", key='D')
        tilted = RdService.tilted_density(sol, p, d, D)
        R, V = sol.rate, tilted.variance
        C, Vc = ch.capacity, ch.dispersion_vc
        z = ProbService.q_inverse(eps)

        def gap(n):
            return k * C - n * R - math.sqrt(k * Vc + n * V) * z

        if gap(0.0) <= 0:
            n_star = 0.0
        else:
            hi = max(1.0, 2 * k * C / R)
            while gap(hi) > 0:
                hi *= 2.0
            n_star = brentq(gap, 0.0, hi, xtol=1e-10)

        rho = C / R
        l_jscc = -math.sqrt(Vc + rho * V) * z / R
        eps1 = np.geomspace(eps * 1e-6, eps * (1 - 1e-6), grid)
        eps2 = eps - eps1
        costs = -(math.sqrt(Vc) * norm.isf(eps2) + math.sqrt(rho * V) * norm.isf(eps1)) / R
        best = int(np.argmax(costs))
        logger.debug(f"JSCC: n*={n_star:.6g}, L_jscc={l_jscc:.6g}, L_sscc={costs[best]:.6g}")
        return JsccResult(n_star, l_jscc, float(costs[best]), float(eps1[best]))
