import math

import numpy as np
import pytest

from fblsc.errors import DegenerateChannel, DomainError, MomentOrderViolation
from fblsc.models import CondPmf, Pmf
from fblsc.services import BoundsService, ExpansionService, ProbService, RdService


class TestLossless:
    def test_expansion_terms(self, bms):
        exp = ExpansionService.lossless_expansion(bms, 400, 0.1)
        expected = (400 * ProbService.entropy(bms)
                    + math.sqrt(400 * ProbService.varentropy(bms)) * ProbService.q_inverse(0.1)
                    - 0.5 * math.log(400))
        assert exp.value == pytest.approx(expected, rel=1e-12)
        assert exp.rate == pytest.approx(expected / 400)

    @pytest.mark.parametrize('R', [0.55, 0.6, 0.65])
    def test_exponent_forms_agree(self, bms, R):
        result = ExpansionService.lossless_exponents(bms, R)
        assert result.error_exponent > 0
        assert result.error_exponent == pytest.approx(result.csiszar_longo, abs=1e-6)

    def test_exponent_vanishes_below_entropy(self, bms):
        result = ExpansionService.lossless_exponents(bms, 0.3)
        assert result.error_exponent == 0.0
        assert result.moderate_constant == pytest.approx(1 / (2 * ProbService.varentropy(bms)))

    def test_exponent_infinite_at_log_alphabet(self, bms):
        result = ExpansionService.lossless_exponents(bms, math.log(2))
        assert result.infinite_exponent

    def test_uniform_source_has_infinite_moderate_constant(self):
        assert ExpansionService.lossless_exponents(Pmf.uniform(4), 1.0).infinite_moderate

    @pytest.mark.parametrize('eps', [0.0, 1.0])
    def test_eps_domain(self, bms, eps):
        with pytest.raises(DomainError):
            ExpansionService.lossless_expansion(bms, 100, eps)


class TestMismatch:
    def test_gaussian_fourth_moment_gives_one_half(self):
        assert ExpansionService.mismatch_dispersion(1.0, 3.0) == 0.5
        exp = ExpansionService.mismatch_expansion(1.0, 3.0, 0.25, 200, 0.1)
        assert exp.dispersion == 0.5

    def test_moment_order(self):
        with pytest.raises(MomentOrderViolation):
            ExpansionService.mismatch_dispersion(2.0, 3.0)

    def test_distortion_range(self):
        with pytest.raises(DomainError):
            ExpansionService.mismatch_expansion(1.0, 3.0, 1.5, 200, 0.1)


class TestVariableLength:
    @pytest.fixture
    def bms_rd(self, bms, hamming2):
        sol = RdService.rate_distortion(bms, hamming2, 0.02)
        return sol, RdService.tilted_density(sol, bms, hamming2, 0.02)

    @pytest.mark.parametrize('n', [100, 500, 1000, 2000])
    def test_variable_length_beats_fixed_length(self, bms_rd, n):
        sol, tilted = bms_rd
        vl = ExpansionService.vl_expansion(sol, tilted, n, 0.05)
        fixed = ExpansionService.rd_expansion(sol, tilted, n, 0.05).value
        assert vl / n < fixed / n

    @pytest.mark.parametrize('n', [500, 1000, 2000])
    def test_achievability_close_to_expansion(self, bms_rd, n):
        sol, tilted = bms_rd
        vl = ExpansionService.vl_expansion(sol, tilted, n, 0.05)
        ach = BoundsService.vl_achievability_bms(0.2, 0.02, n, 0.05)
        assert ach / n - vl / n < 5 * math.log(n) / n

    def test_eps_extremes(self, bms_rd):
        sol, tilted = bms_rd
        assert ExpansionService.vl_expansion(sol, tilted, 100, 0.0) == pytest.approx(100 * sol.rate)
        assert ExpansionService.vl_expansion(sol, tilted, 100, 1.0) == 0.0

    def test_median_excess(self, bms_rd):
        sol, tilted = bms_rd
        expected = 50 * sol.rate - math.sqrt(100 * tilted.variance / (2 * math.pi))
        assert ExpansionService.vl_expansion(sol, tilted, 100, 0.5) == pytest.approx(expected, rel=1e-12)


class TestJscc:
    @pytest.fixture(scope='class')
    def bsc(self):
        return RdService.channel_capacity(CondPmf.bsc(0.1))

    def test_separation_never_beats_joint(self, bsc, hamming2):
        for p in np.linspace(0.06, 0.45, 40):
            result = ExpansionService.jscc_tradeoff(Pmf.bernoulli(p), hamming2, 0.05, bsc, 1000, 0.05)
            assert result.l_sscc <= result.l_jscc + 1e-12
            assert 0 < result.eps1_star < 0.05

    def test_first_order_symbols_per_channel_use(self, bsc, hamming2):
        result = ExpansionService.jscc_tradeoff(Pmf.bernoulli(0.2), hamming2, 0.05, bsc, 1000, 0.05)
        rate = ProbService.binary_entropy(0.2) - ProbService.binary_entropy(0.05)
        assert result.n_star_approx < 1000 * bsc.capacity / rate

    def test_useless_channel(self, hamming2):
        useless = RdService.channel_capacity(CondPmf.bsc(0.5))
        with pytest.raises(DegenerateChannel):
            ExpansionService.jscc_tradeoff(Pmf.bernoulli(0.2), hamming2, 0.05, useless, 1000, 0.05)
