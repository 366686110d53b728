import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from fblsc.errors import DomainError, SupportViolation
from fblsc.models import Covariance2, Pmf
from fblsc.services import ProbService


class TestEntropy:
    def test_binary_entropy_matches_pmf_entropy(self):
        assert ProbService.binary_entropy(0.2) == pytest.approx(ProbService.entropy(Pmf.bernoulli(0.2)))

    def test_binary_entropy_endpoints(self):
        assert ProbService.binary_entropy(0.0) == 0.0
        assert ProbService.binary_entropy(0.5) == pytest.approx(math.log(2))

    def test_binary_entropy_rejects_outside_unit_interval(self):
        with pytest.raises(DomainError):
            ProbService.binary_entropy(1.5)

    def test_varentropy_of_bernoulli(self):
        p = 0.2
        expected = p * (1 - p) * math.log((1 - p) / p) ** 2
        assert ProbService.varentropy(Pmf.bernoulli(p)) == pytest.approx(expected, rel=1e-12)

    def test_information_density_is_zero_off_support(self):
        info = ProbService.information_density(Pmf([0.5, 0.5, 0.0]))
        np.testing.assert_allclose(info, [math.log(2), math.log(2), 0.0])


class TestDivergence:
    def test_kl_divergence_of_equal_laws_is_zero(self, quaternary):
        assert ProbService.kl_divergence(quaternary, quaternary) == pytest.approx(0.0, abs=1e-15)

    def test_kl_divergence_support_violation(self):
        with pytest.raises(SupportViolation):
            ProbService.kl_divergence(Pmf([0.5, 0.5]), Pmf([1.0, 0.0]))

    def test_mutual_information_of_product_is_zero(self):
        probs = np.outer([0.3, 0.7], [0.6, 0.4])
        assert ProbService.mutual_information(probs) == pytest.approx(0.0, abs=1e-15)

    def test_mutual_information_of_dsbs(self, dsbs):
        expected = math.log(2) - ProbService.binary_entropy(0.1)
        assert ProbService.mutual_information(dsbs) == pytest.approx(expected, rel=1e-12)


class TestGaussianTails:
    @pytest.mark.parametrize('eps', [1e-6, 0.01, 0.1, 0.5, 0.9])
    def test_q_inverse_inverts_q(self, eps):
        assert ProbService.q_function(ProbService.q_inverse(eps)) == pytest.approx(eps, rel=1e-12)

    @pytest.mark.parametrize('eps', [0.0, 1.0, -0.1])
    def test_q_inverse_domain(self, eps):
        with pytest.raises(DomainError):
            ProbService.q_inverse(eps)


class TestBivariateNormal:
    @pytest.mark.parametrize('x1,x2,cov', [
        (0.3, -0.2, [[1.0, 0.5], [0.5, 2.0]]),
        (1.5, 1.0, [[0.7, -0.3], [-0.3, 0.4]]),
        (-1.0, 0.5, [[2.0, 1.9], [1.9, 2.0]]),
    ])
    def test_matches_scipy(self, x1, x2, cov):
        expected = multivariate_normal(mean=[0, 0], cov=cov).cdf([x1, x2])
        assert ProbService.bivariate_normal_cdf(x1, x2, cov) == pytest.approx(expected, abs=1e-6)

    def test_independent_pair_factorises(self):
        cov = Covariance2(1.0, 1.0, 0.0)
        value = ProbService.bivariate_normal_cdf(0.4, -0.7, cov)
        expected = ProbService.q_function(-0.4) * ProbService.q_function(0.7)
        assert value == pytest.approx(expected, abs=1e-10)

    def test_rank_one_collapses_to_minimum(self):
        v = 0.36
        cov = Covariance2(v, v, v)
        value = ProbService.bivariate_normal_cdf(0.2, 0.5, cov)
        assert value == pytest.approx(1 - ProbService.q_function(0.2 / math.sqrt(v)), abs=1e-12)

    def test_infinite_arguments(self):
        cov = Covariance2(1.0, 4.0, 1.0)
        assert ProbService.bivariate_normal_cdf(-math.inf, 0.0, cov) == 0.0
        assert ProbService.bivariate_normal_cdf(math.inf, 2.0, cov) == pytest.approx(1 - ProbService.q_function(1.0))

    def test_monotone_in_each_argument(self):
        cov = Covariance2(1.0, 1.0, 0.3)
        grid = np.linspace(-2, 2, 9)
        values = [ProbService.bivariate_normal_cdf(x, 0.5, cov) for x in grid]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
