"""
Closed-form values of the worked examples.

Every formula is evaluated in nats. Parameters outside the region where a
closed form holds raise OutOfValidityRegion naming the violated inequality.
"""
import logging
import math

import numpy as np

from fblsc.errors import DomainError, OutOfValidityRegion
from fblsc.models import ClosedFormResult, ExampleId
from fblsc.services.prob_service import ProbService

logger = logging.getLogger(__name__)

hb = ProbService.binary_entropy


def _require(example, condition, inequality):
    if not condition:
        logger.debug(f"{example.value} rejected: {inequality}")
        raise OutOfValidityRegion(example.value, inequality)


def _param(params, name, default=None):
    value = params.get(name, default)
    if value is None:
        raise DomainError(f"missing parameter {name}", key=name)
    return float(value)


def _bms_dispersion(p):
    return p * (1 - p) * math.log((1 - p) / p) ** 2


class OracleService:
    @staticmethod
    def bms(params):
        p, D = _param(params, 'p'), _param(params, 'D')
        _require(ExampleId.BMS, 0 < p < 1, "0 < p < 1")
        _require(ExampleId.BMS, 0 < D < min(p, 1 - p), "0 < D < min(p, 1-p)")
        rate = hb(p) - hb(D)
        return {
            'rate': rate,
            'lambda_star': math.log((1 - D) / D),
            'dispersion': _bms_dispersion(p),
            'tilted_0': -math.log(1 - p) - hb(D),
            'tilted_1': -math.log(p) - hb(D),
        }

    @staticmethod
    def noisy_bec(params):
        delta, D = _param(params, 'delta'), _param(params, 'D')
        _require(ExampleId.NOISY_BEC, 0 <= delta < 1, "0 <= delta < 1")
        _require(ExampleId.NOISY_BEC, 0.5 * delta < D < 0.5, "0.5*delta < D < 0.5")
        lam = math.log((1 - D - 0.5 * delta) / (D - 0.5 * delta))
        rate = (1 - delta) * (math.log(2) - hb((D - 0.5 * delta) / (1 - delta)))
        log_cosh = math.log(math.cosh(lam / 2))
        return {
            'rate': rate,
            'lambda_star': lam,
            'dispersion_tilde': delta * (1 - delta) * log_cosh ** 2 + delta * lam ** 2 / 4,
            'surrogate_dispersion': delta * (1 - delta) * log_cosh ** 2,
            'tilted_observed': math.log(2 / (1 + math.exp(-lam))) - lam * D,
            'tilted_erased': lam / 2 - lam * D,
        }

    @staticmethod
    def kaspi_bec(params):
        p, D1, D2 = _param(params, 'p'), _param(params, 'D1'), _param(params, 'D2')
        ex = ExampleId.KASPI_BEC
        _require(ex, 0 < p < 1, "0 < p < 1")
        _require(ex, 0 < D2 < D1 <= 0.5, "0 < D2 < D1 <= 1/2")
        _require(ex, D1 - (1 - p) / 2 <= D2 <= p * D1, "D1 - (1-p)/2 <= D2 <= p*D1")
        lam1 = math.log((1 - p - (D1 - D2)) / (D1 - D2))
        lam2 = -lam1 + math.log((p - D2) / D2)
        shift = lam1 * D1 + lam2 * D2
        alpha_seen = 2 / (1 + math.exp(-lam1))
        alpha_erased = 2 / (1 + math.exp(-lam1 - lam2))
        rate = math.log(2) - (1 - p) * hb((D1 - D2) / (1 - p)) - p * hb(D2 / p)
        dispersion = p * (1 - p) * (math.log((p - D2) / p) - math.log((1 - p - (D1 - D2)) / (1 - p))) ** 2
        return {
            'rate': rate,
            'lambda1_star': lam1,
            'lambda2_star': lam2,
            'dispersion': dispersion,
            'alpha_seen': alpha_seen,
            'alpha_erased': alpha_erased,
            'tilted_seen': math.log(alpha_seen) - shift,
            'tilted_erased': math.log(alpha_erased) - shift,
        }

    @staticmethod
    def kaspi_dsbs(params):
        p, D1, D2 = _param(params, 'p'), _param(params, 'D1'), _param(params, 'D2')
        ex = ExampleId.KASPI_DSBS
        _require(ex, 0 < p <= 0.5, "0 < p <= 1/2")
        _require(ex, D1 >= 0 and D2 >= 0, "D1, D2 >= 0")
        cond_entropy = hb(p)
        cond_dispersion = _bms_dispersion(p) if p < 0.5 else 0.0
        if D1 >= 0.5 and D2 >= p:
            return {'regime': 'trivial', 'rate': 0.0, 'dispersion': 0.0}
        if D1 < 0.5 and D2 >= min(p, D1):
            return {'regime': 'rate-distortion', 'rate': math.log(2) - hb(D1), 'dispersion': 0.0}
        _require(ex, D1 >= D2 + (1 - 2 * p) / 2 and D2 < p, "D1 >= D2 + (1-2p)/2 and D2 < p")
        return {'regime': 'conditional', 'rate': cond_entropy - hb(D2), 'dispersion': cond_dispersion}

    @staticmethod
    def sr_binary(params):
        p, D1, D2 = _param(params, 'p'), _param(params, 'D1'), _param(params, 'D2')
        _require(ExampleId.SR_BINARY, 0 < p <= 0.5, "0 < p <= 1/2")
        _require(ExampleId.SR_BINARY, 0 < D2 < D1 < p, "0 < D2 < D1 < p")
        v = _bms_dispersion(p)
        return {
            'rate_d1': hb(p) - hb(D1),
            'sum_rate': hb(p) - hb(D2),
            'xi_star': 0.0,
            'nu1_star': 0.0,
            'nu2_star': math.log((1 - D2) / D2),
            'dispersion': v,
            'dispersion_matrix': (v * np.ones((2, 2))).tolist(),
        }

    @staticmethod
    def fy_example(params):
        p, D1, D2 = _param(params, 'p'), _param(params, 'D1'), _param(params, 'D2')
        ex = ExampleId.FY_EXAMPLE
        _require(ex, 0 < p < 1, "0 < p < 1")
        _require(ex, 0 < D2 < D1 <= 0.5, "0 < D2 < D1 <= 1/2")
        _require(ex, D1 - (1 - p) / 2 <= D2 <= p * D1, "D1 - (1-p)/2 <= D2 <= p*D1")
        lam1 = math.log((1 - p) / (D1 - D2) - 1)
        lam2 = -lam1 + math.log(p / D2 - 1)
        shift = lam1 * D1 + lam2 * D2
        alpha0 = math.log(2 / (1 + math.exp(-lam1))) - shift
        alpha = math.log(2 / (1 + math.exp(-lam1 - lam2))) - shift
        g1 = math.log(2) - (1 - p) * hb((D1 - D2) / (1 - p)) - p * hb(D2 / p)
        g2 = p * (1 - p) * (math.log(1 - D2 / p) - math.log(1 - (D1 - D2) / (1 - p))) ** 2
        g3 = (1 - p) * alpha0 * math.log(2 / (1 - p)) + p * alpha * math.log(1 / p)
        entropy_y = (1 - p) * math.log(2) + hb(p)
        var_y = p * (1 - p) * math.log(2 * p / (1 - p)) ** 2
        return {
            'xi_star': 0.0,
            'lambda1_star': lam1,
            'lambda2_star': lam2,
            'alpha0': alpha0,
            'alpha': alpha,
            'sum_rate': g1,
            'g1': g1,
            'g2': g2,
            'g3': g3,
            'entropy_y': entropy_y,
            'var_y': var_y,
            'dispersion': 2 * (g3 - entropy_y * g1) + g2 + var_y,
        }

    @staticmethod
    def gw_dsbs(params):
        p, D = _param(params, 'p'), _param(params, 'D')
        delta = _param(params, 'Delta', D)
        ex = ExampleId.GW_DSBS
        _require(ex, 0 < p <= 0.5, "0 < p <= 1/2")
        p1 = 0.5 - 0.5 * math.sqrt(1 - 2 * p)
        _require(ex, 0 < D <= delta <= p1, f"0 < D <= Delta <= p1 = {p1:.12g}")
        joint = math.log(2) + hb(p) - 2 * hb(D)
        return {
            'p1': p1,
            'joint_rate': joint,
            'common_rate': math.log(2) + hb(p) - 2 * hb(delta),
            'private_rate': hb(delta) - hb(D),
            'nu': math.log((1 - D) / D),
            'tilted_equal': math.log(2 / (1 - p)) - 2 * hb(D),
            'tilted_differ': math.log(2 / p) - 2 * hb(D),
            'dispersion': _bms_dispersion(p) if p < 0.5 else 0.0,
        }

    @staticmethod
    def joint_rate_dsbs(p, D):
        """Joint rate-distortion function of the DSBS at equal distortions"""
        p1 = 0.5 - 0.5 * math.sqrt(1 - 2 * p)
        if D <= p1:
            return math.log(2) + hb(p) - 2 * hb(D)
        if D >= 0.5:
            return 0.0
        f = lambda t: -t * math.log(t) if t > 0 else 0.0
        return f(1 - p) - 0.5 * (f(2 * D - p) + f(2 * (1 - D) - p))

    @staticmethod
    def closed_form_oracle(example_id, params):
        """All closed-form quantities of a named example"""
        example = ExampleId(example_id) if not isinstance(example_id, ExampleId) else example_id
        handler = {
            ExampleId.BMS: OracleService.bms,
            ExampleId.NOISY_BEC: OracleService.noisy_bec,
            ExampleId.KASPI_BEC: OracleService.kaspi_bec,
            ExampleId.KASPI_DSBS: OracleService.kaspi_dsbs,
            ExampleId.SR_BINARY: OracleService.sr_binary,
            ExampleId.FY_EXAMPLE: OracleService.fy_example,
            ExampleId.GW_DSBS: OracleService.gw_dsbs,
        }[example]
        values = handler(params)
        return ClosedFormResult(example, dict(params), values)
