import itertools
import math

import numpy as np
import pytest

from fblsc.errors import BudgetExceeded, DomainError
from fblsc.models import DistortionMatrix, Pmf
from fblsc.services import BoundsService, ExpansionService, KaspiService, ProbService, RdService, SrService


def _enumerate_tail(values, probs, n, t):
    total = 0.0
    for word in itertools.product(range(len(values)), repeat=n):
        if sum(values[i] for i in word) >= t - 1e-12:
            total += math.prod(probs[i] for i in word)
    return total


def _enumerate_union(points, probs, n, thresholds):
    total = 0.0
    for word in itertools.product(range(len(probs)), repeat=n):
        sums = np.sum([points[i] for i in word], axis=0)
        if np.any(sums >= np.asarray(thresholds) - 1e-12):
            total += math.prod(probs[i] for i in word)
    return total


class TestTailDistribution:
    @pytest.mark.parametrize('t', [-1.0, 0.5, 2.0, 3.3, 7.0])
    def test_exact_sum_tail_matches_enumeration(self, t):
        values, probs = [0.0, 0.7, 1.9], [0.5, 0.3, 0.2]
        expected = _enumerate_tail(values, probs, 6, t)
        assert BoundsService.exact_sum_tail(values, probs, 6, t) == pytest.approx(expected, abs=1e-12)

    def test_binary_values(self):
        values, probs = [0.2, 1.1], [0.8, 0.2]
        expected = _enumerate_tail(values, probs, 8, 3.0)
        assert BoundsService.exact_sum_tail(values, probs, 8, 3.0) == pytest.approx(expected, abs=1e-12)

    def test_probabilities_sum_to_one(self, quaternary):
        dist = BoundsService.tail_distribution(ProbService.information_density(quaternary), quaternary.probs, 30)
        assert dist.probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(dist.values) > 0)

    def test_union_tail_matches_enumeration(self):
        points = [[0.0, 1.0], [1.0, 0.2], [0.5, 0.5]]
        probs = [0.3, 0.3, 0.4]
        thresholds = [3.0, 3.2]
        expected = _enumerate_union(points, probs, 5, thresholds)
        assert BoundsService.union_tail(points, probs, 5, thresholds) == pytest.approx(expected, abs=1e-12)

    def test_type_budget(self):
        with pytest.raises(BudgetExceeded):
            BoundsService.tail_distribution(np.arange(6.0), np.full(6, 1 / 6), 200, budget=1000)

    def test_rejects_empty_blocklength(self):
        with pytest.raises(DomainError):
            BoundsService.tail_distribution([0.0, 1.0], [0.5, 0.5], 0)


class TestLosslessBounds:
    @pytest.mark.parametrize('n', [200, 500, 1000])
    def test_crossings_sandwich_the_expansion(self, bms, n):
        conv, ach = BoundsService.lossless_crossings(bms, n, 0.01)
        expansion = ExpansionService.lossless_expansion(bms, n, 0.01).value
        assert conv <= expansion <= ach
        assert ach - conv < 4 * math.log(n)

    def test_converse_below_achievability(self, bms):
        point = BoundsService.lossless_bounds(bms, 200, 200 * 0.55)
        assert 0.0 <= point.conv_lower <= point.ach_upper <= 1.0
        assert point.conv_lower == max(0.0, point.conv_raw)

    def test_gamma_must_be_positive(self, bms):
        with pytest.raises(DomainError):
            BoundsService.lossless_bounds(bms, 100, 50.0, gamma=0.0)


class TestLossyBounds:
    def test_rd_converse_below_achievability(self, bms, hamming2):
        sol = RdService.rate_distortion(bms, hamming2, 0.1)
        tilted = RdService.tilted_density(sol, bms, hamming2, 0.1)
        n = 100
        log_m = ExpansionService.rd_expansion(sol, tilted, n, 0.1).value
        conv = BoundsService.rd_converse(tilted, bms, n, log_m)
        ach = BoundsService.rd_achievability_bms(0.2, 0.1, n, log_m)
        assert conv <= ach

    def test_achievability_decreases_in_codebook_size(self):
        values = [BoundsService.rd_achievability_bms(0.2, 0.1, 60, lm) for lm in (5.0, 10.0, 20.0)]
        assert values[0] >= values[1] >= values[2]

    def test_bms_guard(self):
        with pytest.raises(DomainError):
            BoundsService.rd_achievability_bms(0.2, 0.3, 60, 10.0)

    def test_rd_crossings_are_ordered(self, bms, hamming2):
        sol = RdService.rate_distortion(bms, hamming2, 0.1)
        tilted = RdService.tilted_density(sol, bms, hamming2, 0.1)
        conv, ach = BoundsService.rd_crossings_bms(tilted, bms, 0.1, 100, 0.1)
        assert conv <= ach

    def test_sr_converse_slack_count(self, bms, hamming2):
        sol = RdService.rate_distortion(bms, hamming2, 0.1)
        tilted = RdService.tilted_density(sol, bms, hamming2, 0.1)
        with pytest.raises(DomainError):
            BoundsService.sr_converse(tilted, tilted, 0.0, bms, 50, 10.0, 20.0, slack_count=3)


class TestEpsilonCutoff:
    def test_two_point_law(self):
        # top 0.25 of the mass removed from the atom at 4
        assert BoundsService.epsilon_cutoff_mean(([1.0, 4.0], [0.5, 0.5]), 0.25) == pytest.approx(0.5 + 1.0)

    def test_extremes(self):
        law = ([1.0, 2.0, 3.0], [0.2, 0.3, 0.5])
        assert BoundsService.epsilon_cutoff_mean(law, 0.0) == pytest.approx(2.3)
        assert BoundsService.epsilon_cutoff_mean(law, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_whole_atom_removed(self):
        assert BoundsService.epsilon_cutoff_mean(([1.0, 2.0, 3.0], [0.2, 0.3, 0.5]), 0.5) == pytest.approx(0.8)

    def test_rejects_eps_outside_unit_interval(self):
        with pytest.raises(DomainError):
            BoundsService.epsilon_cutoff_mean(([1.0], [1.0]), 1.5)

    def test_accepts_tail_distribution(self, bms):
        dist = BoundsService.tail_distribution(ProbService.information_density(bms), bms.probs, 20)
        assert BoundsService.epsilon_cutoff_mean(dist, 0.0) == pytest.approx(20 * ProbService.entropy(bms))


class TestMultiterminalConverses:
    def test_fu_yeung_converse_matches_enumeration(self):
        p = Pmf([0.35, 0.35, 0.15, 0.15])
        g = [0, 0, 1, 1]
        d = DistortionMatrix([[0, 1], [1, 0], [0, 1], [1, 0]])
        fy = SrService.fy_solution(p, g, d, d, 0.3, 0.05, 5.0)
        n, gamma, log_m1, log_m2 = 6, 0.2, 1.0, 2.0
        points = np.column_stack([fy.tilted_d1.values, fy.neg_log_py, fy.tilted.values])
        thresholds = [log_m1 + n * gamma, log_m2 + n * gamma,
                      log_m1 + log_m2 + fy.xi_star * log_m1 + (1 + fy.xi_star) * n * gamma]
        raw = _enumerate_union(points, p.probs, n, thresholds) - 4 * math.exp(-n * gamma)
        expected = min(1.0, max(0.0, raw))
        assert BoundsService.fy_converse(fy, p, g, n, log_m1, log_m2, gamma) == pytest.approx(expected, abs=1e-10)

    def test_kaspi_converse_vanishes_for_large_codebooks(self, kaspi_bec_source, hamming2):
        ks = KaspiService.kaspi_rate(kaspi_bec_source, hamming2, hamming2, 0.25, 0.05)
        assert BoundsService.kaspi_converse(ks.tilted, kaspi_bec_source, 50, 50.0) == 0.0
        small = BoundsService.kaspi_converse(ks.tilted, kaspi_bec_source, 50, 0.1 * 50 * ks.rate)
        assert small > 0.5
