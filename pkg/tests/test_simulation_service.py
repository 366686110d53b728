import math

import numpy as np
import pytest
from scipy.stats import chi2

from fblsc.errors import BudgetExceeded, DomainError
from fblsc.models import CondPmf, Pmf, SimConfig
from fblsc.services import BoundsService, ExpansionService, RdService, SimulationService


class TestBallProbabilities:
    def test_spherical_kernel_in_three_dimensions(self):
        # n=3: the cap area is linear in the cosine
        value = SimulationService.ball_spherical(3, 3.0, 1.0, 0.5)
        assert float(value) == pytest.approx((1 - 3 / (2 * math.sqrt(4.5))) / 2, abs=1e-12)
        assert float(value) == pytest.approx(0.14645, abs=1e-5)

    def test_spherical_kernel_edges(self):
        far = SimulationService.ball_spherical(10, 1e4, 1.0, 0.25)
        near = SimulationService.ball_spherical(10, 7.5, 1.0, 0.25)
        assert float(far) == 0.0
        assert 0.0 < float(near) < 1.0

    def test_iid_kernel_at_the_origin(self):
        value = SimulationService.ball_iid(20, 0.0, 1.0, 0.25)
        assert float(value) == pytest.approx(chi2.cdf(20 * 0.25 / 0.75, 20), rel=1e-9)

    def test_sim_config_codebook_size(self):
        assert SimConfig(10, math.log(8), 100).m == 8
        with pytest.raises(DomainError):
            SimConfig(10, -1.0, 100)


class TestDeterminism:
    def test_mismatch_independent_of_workers(self):
        results = [
            SimulationService.simulate_mismatch('gaussian', 1.0, 0.25, 'spherical',
                                                SimConfig(50, 12.0, 10_000, seed=5, workers=w))
            for w in (1, 3)
        ]
        assert results[0] == results[1]

    def test_rd_direct_codebook_independent_of_workers(self, bms, hamming2):
        results = [
            SimulationService.simulate_rd(bms, hamming2, 0.1, Pmf([0.9, 0.1]),
                                          SimConfig(12, math.log(16), 5000, seed=9, workers=w))
            for w in (1, 2)
        ]
        assert results[0].failures == results[1].failures
        assert results[0].trials_used == 5000

    def test_zero_codeword_above_variance(self):
        result = SimulationService.simulate_mismatch('uniform-discrete', 1.0, 1.5, 'iid_gaussian',
                                                     SimConfig(20, 0.0, 200, seed=1))
        assert result.failures == 0
        assert result.low_count


class TestNoisyGuards:
    def test_codebook_too_large(self, hamming2):
        cfg = SimConfig(20, 10.0, 100, seed=1)
        with pytest.raises(BudgetExceeded):
            SimulationService.simulate_noisy(Pmf.uniform(2), CondPmf.bec(0.2), hamming2, 0.2,
                                             Pmf.uniform(2), cfg)

    def test_small_noisy_run(self, hamming2):
        cfg = SimConfig(8, math.log(4), 300, seed=3)
        result = SimulationService.simulate_noisy(Pmf.uniform(2), CondPmf.bec(0.2), hamming2, 0.25,
                                                  Pmf.uniform(2), cfg)
        assert 0.0 <= result.p_hat <= 1.0
        assert result.trials_used == 300

    def test_custom_sampler_needs_fourth_moment(self):
        with pytest.raises(DomainError):
            SimulationService.simulate_mismatch('custom', 1.0, 0.25, 'spherical', SimConfig(10, 1.0, 10))


@pytest.mark.slow
class TestMonteCarloAcceptance:
    def test_binary_source_bracketing(self, bms, hamming2):
        n, D = 40, 0.1
        sol = RdService.rate_distortion(bms, hamming2, D)
        tilted = RdService.tilted_density(sol, bms, hamming2, D)
        log_m = ExpansionService.rd_expansion(sol, tilted, n, 0.1).value
        results = [
            SimulationService.simulate_rd(bms, hamming2, D, sol.repro_marginal,
                                          SimConfig(n, log_m, 200_000, seed=20240101, workers=w))
            for w in (1, 4)
        ]
        assert results[0].p_hat == results[1].p_hat
        result = results[0]
        conv = BoundsService.rd_converse(tilted, bms, n, log_m)
        ach = BoundsService.rd_achievability_bms(0.2, D, n, log_m)
        assert conv - result.ci_half_width <= result.p_hat <= ach + result.ci_half_width

    def test_codebook_kinds_agree(self):
        n, D = 200, 0.25
        log_m = ExpansionService.mismatch_expansion(1.0, 3.0, D, n, 0.1).value
        spherical, iid = (
            SimulationService.simulate_mismatch('gaussian', 1.0, D, kind,
                                                SimConfig(n, log_m, 100_000, seed=7, workers=2))
            for kind in ('spherical', 'iid_gaussian')
        )
        combined = math.hypot(spherical.ci_half_width, iid.ci_half_width)
        assert abs(spherical.p_hat - iid.p_hat) <= combined
        assert spherical.failures > 0
