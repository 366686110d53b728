import math

import numpy as np
import pytest

from fblsc.models import (
    CondPmf, Covariance2, FySolution, GwSolution, RegionKind, SrSolution, TiltedTable,
)
from fblsc.services import ProbService, RegionService

Z = ProbService.q_inverse(0.1)


def _table():
    return TiltedTable.from_values([0.2, 1.5], [0.7, 0.3])


def _sr(cov, xi=0.0):
    return SrSolution(0.4, xi, 0.0, 2.0, _table(), _table(), cov, 0.3, 0.3, 0.4)


def _fy(cov1, cov2, var_y=0.3, xi=0.0):
    return FySolution(0.2, xi, 1.0, 2.0, np.ones(2), np.ones((2, 2)), _table(), _table(),
                      np.zeros(2), 0.5, var_y, cov1, cov2, 0.3, 0.3)


class TestSuccessiveRefinementRegion:
    def test_case_one_is_a_halfspace(self):
        boundary = RegionService.sr_region(_sr(Covariance2(0.5, 0.8, 0.3), xi=0.2), 'i', 0.1)
        assert boundary.kind is RegionKind.HALFSPACE
        assert boundary.coeffs[0] == pytest.approx((0.2, 1.0, math.sqrt(0.8) * Z))

    def test_case_two_is_univariate(self):
        boundary = RegionService.sr_region(_sr(Covariance2(0.5, 0.8, 0.3)), 'ii', 0.1)
        assert boundary.kind is RegionKind.UNIVARIATE
        assert boundary.threshold == pytest.approx(math.sqrt(0.5) * Z)
        assert boundary.coeffs[0][:2] == (1.0, 0.0)

    def test_case_three_points_solve_the_boundary_equation(self):
        cov = Covariance2(0.5, 0.8, 0.3)
        sr = _sr(cov, xi=0.1)
        boundary = RegionService.sr_region(sr, 'iii', 0.1, workers=2)
        assert boundary.kind is RegionKind.BIVARIATE_TRACED
        assert len(boundary.points) == 20
        for l1, l2 in boundary.points:
            assert ProbService.bivariate_normal_cdf(l1, 0.1 * l1 + l2, cov) == pytest.approx(0.9, abs=1e-6)

    def test_traced_boundary_is_nonincreasing(self):
        boundary = RegionService.sr_region(_sr(Covariance2(0.5, 0.8, 0.3)), 'iii', 0.1)
        assert np.all(np.diff(boundary.points[:, 1]) <= 1e-9)

    def test_separate_probability_bounds(self):
        bounds = RegionService.sr_sep_bounds(_sr(Covariance2(0.5, 0.8, 0.3)), 0.05, 0.1)
        inner, outer = bounds['inner'], bounds['outer']
        z_min = ProbService.q_inverse(0.05)
        assert inner.coeffs[0][2] == pytest.approx(math.sqrt(0.5) * z_min)
        assert outer.coeffs[1][2] == pytest.approx(math.sqrt(0.8) * Z)
        assert inner.coeffs[1][2] >= outer.coeffs[1][2]


class TestFuYeungRegion:
    def test_univariate_cases(self):
        fy = _fy(Covariance2(0.4, 0.6, 0.2), Covariance2(0.7, 0.3, 0.1), var_y=0.3)
        first = RegionService.fy_region(fy, 'i', 0.1)
        last = RegionService.fy_region(fy, 'v', 0.1)
        assert first.threshold == pytest.approx(math.sqrt(0.4) * Z)
        assert first.coeffs[0][:2] == (1.0, 0.0)
        assert last.threshold == pytest.approx(math.sqrt(0.3) * Z)
        assert last.coeffs[0][:2] == (0.0, 1.0)

    def test_case_three_halfspace(self):
        fy = _fy(Covariance2(0.4, 0.6, 0.2), Covariance2(0.7, 0.3, 0.1), xi=0.5)
        boundary = RegionService.fy_region(fy, 'iii', 0.1)
        assert boundary.coeffs[0] == pytest.approx((1.5, 1.0, math.sqrt(0.7) * Z))

    def test_case_four_trace(self):
        cov2 = Covariance2(0.7, 0.3, 0.1)
        fy = _fy(Covariance2(0.4, 0.6, 0.2), cov2)
        boundary = RegionService.fy_region(fy, 'iv', 0.1, grid=[-0.5, 0.0, 0.5, 1.0])
        for l1, l2 in boundary.points:
            value = ProbService.bivariate_normal_cdf(l1 + l2, l2, cov2)
            assert value >= 0.9 - 1e-6


class TestGrayWynerRegion:
    def test_general_halfspace(self):
        tilted = TiltedTable.from_values([0.1, 0.9, 0.4], [0.5, 0.25, 0.25])
        gw = GwSolution(0.3, 0.6, 0.4, 1.0, 1.5, CondPmf(np.eye(3)), tilted)
        boundary = RegionService.gw_region(gw, 0.1)
        assert boundary.coeffs[0] == pytest.approx((1.0, 0.6, 0.4, math.sqrt(tilted.variance) * Z))
        assert boundary.label == 'gw'
