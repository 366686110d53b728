import math

import numpy as np
import pytest

from fblsc.errors import CaseMismatch, InfeasibleRate
from fblsc.models import DistortionMatrix, FyCase, Pmf, SrCase
from fblsc.services import OracleService, RdService, RegionService, SrService


def _random_instances(count, seed=11):
    rng = np.random.default_rng(seed)
    for k in range(count):
        size = 2 + k % 2
        p = Pmf(rng.dirichlet(np.ones(size)))
        d = DistortionMatrix.hamming(size)
        _, d_max = RdService.d_range(p, d)
        D1 = rng.uniform(0.45, 0.8) * d_max
        D2 = rng.uniform(0.1, 0.4) * d_max
        yield p, d, D1, D2


@pytest.fixture
def fy_source():
    """(S1, S2) with S1 uniform and S2 ~ Bern(0.3); the helper sees S2"""
    p = 0.3
    probs = [(1 - p) / 2, (1 - p) / 2, p / 2, p / 2]
    d = DistortionMatrix([[0, 1], [1, 0], [0, 1], [1, 0]])
    return Pmf(probs), [0, 0, 1, 1], d


class TestSuccessiveRefinement:
    def test_binary_source_at_the_corner(self, hamming2):
        p = Pmf.bernoulli(0.3)
        r1 = RdService.rate_distortion(p, hamming2, 0.2).rate
        sr = SrService.sr_min_sum_rate(p, hamming2, hamming2, 0.2, 0.1, r1)
        expected = OracleService.sr_binary({'p': 0.3, 'D1': 0.2, 'D2': 0.1})
        assert abs(sr.xi_star) < 1e-6
        assert abs(sr.nu1_star) < 1e-6
        assert sr.sum_rate == pytest.approx(expected['sum_rate'], abs=1e-6)

        sol2 = RdService.rate_distortion(p, hamming2, 0.1)
        tilted2 = RdService.tilted_density(sol2, p, hamming2, 0.1)
        np.testing.assert_allclose(sr.tilted.values, tilted2.values, atol=1e-6)
        assert sr.rank == 1

    def test_binary_case_three_trace(self, hamming2):
        p = Pmf.bernoulli(0.3)
        r1 = RdService.rate_distortion(p, hamming2, 0.2).rate
        sr = SrService.sr_min_sum_rate(p, hamming2, hamming2, 0.2, 0.1, r1)
        boundary = RegionService.sr_region(sr, 'iii', 0.1)
        v = OracleService.sr_binary({'p': 0.3, 'D1': 0.2, 'D2': 0.1})['dispersion']
        z = math.sqrt(v) * 1.2815515655446004
        assert len(boundary.points) > 0
        np.testing.assert_allclose(boundary.points[:, 1], z, atol=1e-5)

    @pytest.mark.parametrize('D1,rank', [(0.55, 2), (0.5, 1)])
    def test_quaternary_rank(self, quaternary, D1, rank):
        d = DistortionMatrix.hamming(4)
        r1 = RdService.rate_distortion(quaternary, d, D1).rate
        sr = SrService.sr_min_sum_rate(quaternary, d, d, D1, 0.3, r1)
        assert sr.rank == rank

    def test_rate_below_first_stage_minimum(self, bms, hamming2):
        with pytest.raises(InfeasibleRate):
            SrService.sr_min_sum_rate(bms, hamming2, hamming2, 0.1, 0.05, 0.0)

    def test_case_detection(self, hamming2):
        p = Pmf.bernoulli(0.3)
        r1 = RdService.rate_distortion(p, hamming2, 0.2).rate
        corner = SrService.sr_min_sum_rate(p, hamming2, hamming2, 0.2, 0.1, r1)
        assert SrService.sr_case(corner, corner.sum_rate) is SrCase.III
        assert SrService.sr_case(corner, corner.sum_rate + 0.1) is SrCase.II
        with pytest.raises(CaseMismatch):
            SrService.sr_case(corner, corner.sum_rate - 0.1)

        slack = SrService.sr_min_sum_rate(p, hamming2, hamming2, 0.2, 0.1, r1 + 0.1)
        assert SrService.sr_case(slack, slack.sum_rate) is SrCase.I

    def test_region_rejects_wrong_case(self, hamming2):
        p = Pmf.bernoulli(0.3)
        r1 = RdService.rate_distortion(p, hamming2, 0.2).rate
        sr = SrService.sr_min_sum_rate(p, hamming2, hamming2, 0.2, 0.1, r1)
        with pytest.raises(CaseMismatch):
            RegionService.sr_region(sr, 'i', 0.1, r_sum=sr.sum_rate)


class TestFuYeung:
    @pytest.mark.parametrize('instance', list(_random_instances(20)), ids=lambda _: 'random')
    def test_constant_helper_matches_refinement(self, instance):
        p, d, D1, D2 = instance
        r1 = RdService.rate_distortion(p, d, D1).rate
        fy = SrService.fy_solution(p, np.zeros(p.size, dtype=int), d, d, D1, D2, r1)
        sr = SrService.sr_min_sum_rate(p, d, d, D1, D2, r1)
        assert fy.sum_rate_excess == pytest.approx(sr.sum_rate, abs=1e-7)
        assert fy.xi_star == pytest.approx(sr.xi_star, abs=1e-7)
        np.testing.assert_allclose(fy.tilted.values, sr.tilted.values, atol=1e-7)
        assert fy.entropy_y == 0.0

    def test_worked_example_with_slack_first_rate(self, fy_source):
        p, g, d = fy_source
        fy = SrService.fy_solution(p, g, d, d, 0.3, 0.05, 5.0)
        expected = OracleService.fy_example({'p': 0.3, 'D1': 0.3, 'D2': 0.05})
        assert fy.xi_star == pytest.approx(0.0, abs=1e-7)
        assert fy.sum_rate_excess == pytest.approx(expected['g1'], abs=1e-5)
        assert fy.tilted.variance == pytest.approx(expected['g2'], abs=1e-5)
        assert fy.entropy_y == pytest.approx(expected['entropy_y'], abs=1e-12)
        assert fy.var_y == pytest.approx(expected['var_y'], abs=1e-12)
        assert fy.cov2.v11 == pytest.approx(expected['dispersion'], abs=1e-5)
        assert max(fy.residuals) < 1e-6

    def test_boundary_rates_are_ordered(self, fy_source):
        p, g, d = fy_source
        bounds = SrService.fy_boundary_rates(p, g, d, d, 0.3, 0.05)
        assert bounds.rate_d1 <= bounds.r1_star + 1e-9
        assert bounds.entropy_y == pytest.approx(OracleService.fy_example(
            {'p': 0.3, 'D1': 0.3, 'D2': 0.05})['entropy_y'])

    def test_case_detection(self, fy_source):
        p, g, d = fy_source
        bounds = SrService.fy_boundary_rates(p, g, d, d, 0.3, 0.05)
        corner = SrService.fy_solution(p, g, d, d, 0.3, 0.05, bounds.rate_d1)
        assert SrService.fy_case(corner, bounds, bounds.r2_star) is FyCase.II
        assert SrService.fy_case(corner, bounds, bounds.r2_star + 0.2) is FyCase.I
        with pytest.raises(CaseMismatch):
            SrService.fy_case(corner, bounds, bounds.r2_star - 0.2)
