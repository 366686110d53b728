import math

import numpy as np
import pytest

from fblsc.errors import InfeasibleDistortion
from fblsc.models import DistortionMatrix, JointPmf
from fblsc.services import KaspiService, OracleService, ProbService

hb = ProbService.binary_entropy

ERASURE_GRID = [(p, D1, f * p * D1) for p in (0.2, 0.3) for D1 in (0.15, 0.25, 0.35)
                for f in (0.25, 0.5, 0.75)]


@pytest.fixture
def hamming_bec():
    """Hamming distortion for X in {0, 1}; the second decoder reads (X, Y) rows"""
    return DistortionMatrix.hamming(2)


class TestKaspiErasure:
    @pytest.mark.parametrize('p,D1,D2', ERASURE_GRID)
    def test_matches_closed_form(self, p, D1, D2, erased, hamming_bec):
        sol = KaspiService.kaspi_rate(erased(p), hamming_bec, hamming_bec, D1, D2)
        expected = OracleService.kaspi_bec({'p': p, 'D1': D1, 'D2': D2})
        assert sol.rate == pytest.approx(expected['rate'], abs=1e-4)
        assert sol.lambda1_star == pytest.approx(expected['lambda1_star'], abs=1e-4)
        assert sol.lambda2_star == pytest.approx(expected['lambda2_star'], abs=1e-4)
        assert sol.tilted.variance == pytest.approx(expected['dispersion'], abs=1e-4)

    def test_tilted_mean_is_rate(self, kaspi_bec_source, hamming_bec):
        sol = KaspiService.kaspi_rate(kaspi_bec_source, hamming_bec, hamming_bec, 0.25, 0.05)
        assert sol.tilted.mean == pytest.approx(sol.rate, abs=1e-6)

    @pytest.mark.parametrize('D1,D2', [(0.25, 0.05), (0.35, 0.1)])
    def test_both_optimality_conditions_hold(self, kaspi_bec_source, hamming_bec, D1, D2):
        sol = KaspiService.kaspi_rate(kaspi_bec_source, hamming_bec, hamming_bec, D1, D2)
        first, second = sol.residuals
        assert 0.0 <= first < 1e-6
        assert 0.0 <= second < 1e-6

    def test_reduction_bounds_sit_below(self, kaspi_bec_source, hamming_bec):
        sol = KaspiService.kaspi_rate(kaspi_bec_source, hamming_bec, hamming_bec, 0.25, 0.05)
        first, second = KaspiService.reduction_bounds(kaspi_bec_source, hamming_bec, hamming_bec, 0.25, 0.05)
        assert sol.rate >= max(first, second) - 1e-6

    def test_infeasible_first_distortion(self, kaspi_bec_source):
        d1 = DistortionMatrix(np.ones((2, 2)))
        with pytest.raises(InfeasibleDistortion):
            KaspiService.kaspi_rate(kaspi_bec_source, d1, DistortionMatrix.hamming(2), 0.5, 0.1)


class TestKaspiDsbs:
    def test_trivial_regime(self, hamming2):
        sol = KaspiService.kaspi_rate(JointPmf.dsbs(0.1), hamming2, hamming2, 0.5, 0.2)
        assert sol.rate == 0.0
        assert OracleService.kaspi_dsbs({'p': 0.1, 'D1': 0.5, 'D2': 0.2})['regime'] == 'trivial'

    def test_rate_distortion_regime(self, hamming2):
        sol = KaspiService.kaspi_rate(JointPmf.dsbs(0.1), hamming2, hamming2, 0.2, 0.15)
        expected = OracleService.kaspi_dsbs({'p': 0.1, 'D1': 0.2, 'D2': 0.15})
        assert expected['regime'] == 'rate-distortion'
        assert sol.rate == pytest.approx(math.log(2) - hb(0.2), abs=1e-5)

    def test_conditional_regime(self, hamming2):
        sol = KaspiService.kaspi_rate(JointPmf.dsbs(0.2), hamming2, hamming2, 0.4, 0.05)
        expected = OracleService.kaspi_dsbs({'p': 0.2, 'D1': 0.4, 'D2': 0.05})
        assert expected['regime'] == 'conditional'
        assert sol.rate == pytest.approx(expected['rate'], abs=1e-5)
