import math

import pytest

from fblsc.errors import InfeasibleRate
from fblsc.models import DistortionMatrix, JointPmf
from fblsc.services import GwService, OracleService, RegionService
from fblsc.services.gw_service import _Search


@pytest.mark.slow
class TestGrayWynerDsbs:
    @pytest.fixture(scope='class')
    def solution(self):
        d = DistortionMatrix.hamming(2)
        return GwService.gw_common_rate(JointPmf.dsbs(0.1), d, d, 0.05, 0.05, 0.0, 0.0, budget=200)

    def test_lies_in_the_pangloss_plane(self, solution):
        assert solution.pangloss is not None
        assert solution.xi1_star == 1.0
        assert solution.xi2_star == 1.0

    def test_common_rate_matches_closed_form(self, solution):
        expected = OracleService.gw_dsbs({'p': 0.1, 'D': 0.05})
        assert solution.common_rate == pytest.approx(expected['common_rate'], abs=1e-5)
        assert solution.pangloss.joint_rd_rate == pytest.approx(expected['joint_rate'], abs=1e-5)

    def test_dispersion_and_identity(self, solution):
        expected = OracleService.gw_dsbs({'p': 0.1, 'D': 0.05})
        assert solution.pangloss.tilted_ixy.variance == pytest.approx(expected['dispersion'], abs=1e-6)
        assert solution.pangloss.residual < 1e-5

    def test_region_is_the_pangloss_halfspace(self, solution):
        boundary = RegionService.gw_region(solution, 0.1)
        expected = OracleService.gw_dsbs({'p': 0.1, 'D': 0.05})['dispersion']
        assert boundary.coeffs[0][:3] == (1.0, 1.0, 1.0)
        assert boundary.threshold == pytest.approx(math.sqrt(expected) * 1.2815515655446004, abs=1e-5)


class TestGrayWynerEdges:
    def test_trivial_distortions_need_no_common_rate(self, dsbs, hamming2):
        sol = GwService.gw_common_rate(dsbs, hamming2, hamming2, 0.5, 0.5, 0.0, 0.0)
        assert sol.common_rate == 0.0
        assert sol.certified
        assert sol.pangloss is None

    def test_large_private_rates_need_no_common_rate(self, dsbs, hamming2):
        sol = GwService.gw_common_rate(dsbs, hamming2, hamming2, 0.05, 0.05, 1.0, 1.0)
        assert sol.common_rate == 0.0

    def test_negative_private_rate(self, dsbs, hamming2):
        with pytest.raises(InfeasibleRate):
            GwService.gw_common_rate(dsbs, hamming2, hamming2, 0.05, 0.05, -0.1, 0.0)


class TestSearchBudget:
    def test_batch_is_cut_at_the_budget(self, dsbs, hamming2):
        search = _Search(dsbs, hamming2, hamming2, 0.2, 0.2, 0.05, 0.05, budget=5, workers=4)
        channels = GwService._clusterings(dsbs, 4)
        assert len(channels) > 5
        results = search.evaluate_many(channels)
        assert [c.index for c in results] == [0, 1, 2, 3, 4]
        assert search.evaluations == 5
        assert search.counter == 5
        assert search.evaluate(channels[0]) is None
        assert search.evaluate_many(channels) == []
        assert search.evaluations == 5

    def test_single_evaluations_number_consecutively(self, dsbs, hamming2):
        search = _Search(dsbs, hamming2, hamming2, 0.2, 0.2, 0.05, 0.05, budget=10, workers=1)
        channels = GwService._clusterings(dsbs, 2)
        first = search.evaluate(channels[0])
        batch = search.evaluate_many(channels[1:3])
        last = search.evaluate(channels[3])
        assert [first.index] + [c.index for c in batch] + [last.index] == [0, 1, 2, 3]
        assert search.counter == search.evaluations == 4

    @pytest.mark.slow
    def test_workers_do_not_change_the_result(self, dsbs, hamming2):
        args = (dsbs, hamming2, hamming2, 0.2, 0.2, 0.05, 0.05)
        serial = GwService.gw_common_rate(*args, budget=30, workers=1, with_slopes=False)
        threaded = GwService.gw_common_rate(*args, budget=30, workers=4, with_slopes=False)
        assert serial.evaluations <= 30
        assert threaded.evaluations == serial.evaluations
        assert threaded.common_rate == serial.common_rate
