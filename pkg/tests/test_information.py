import math

import numpy as np
import pytest

import _oracles as oracle
from foldednormal.distribution import Params, moments
from foldednormal.information import (
    MAX_ORDER,
    entropy_quadrature,
    entropy_series,
    kl_from_halfnormal,
    kl_from_normal_quadrature,
    kl_from_normal_series,
    kl_series_terms,
    series_reliable,
)

HALF_NORMAL_ENTROPY = 0.5 * math.log(math.pi * math.e / 2)
LOG2 = math.log(2)


def log_ratio_to_halfnormal(x, mu, s2):
    """log f(x; mu, s2) - log f(x; 0, s2), each evaluated directly in log space."""
    c = -0.5 * math.log(2 * math.pi * s2)
    log_f = c + np.logaddexp(-((x - mu) ** 2) / (2 * s2), -((x + mu) ** 2) / (2 * s2))
    log_h = c + math.log(2) - x * x / (2 * s2)
    return log_f - log_h


class TestKLFromNormal:
    def test_mu_zero_partial_sums(self):
        p = Params(0.0, 4.0)
        partial = kl_from_normal_series(p, order=20, fallback=False)
        assert abs(partial - LOG2) < 0.025
        # the partial sums bracket log 2 as an alternating harmonic series does
        assert kl_from_normal_series(p, 3, fallback=False) > LOG2 > kl_from_normal_series(p, 4, fallback=False)

    def test_theta_four(self):
        p = Params(20.0, 25.0)
        q = kl_from_normal_quadrature(p)
        assert q < 1e-4
        assert kl_from_normal_series(p, 3) < 1e-4
        assert abs(kl_from_normal_series(p, 3) - q) < 1e-4

    def test_theta_one_and_a_half(self):
        p = Params(7.5, 25.0)
        assert kl_from_normal_series(p, 3) == pytest.approx(kl_from_normal_quadrature(p), abs=0.01)

    def test_quadrature_at_zero(self):
        assert kl_from_normal_quadrature(Params(0.0, 9.0)) == LOG2

    def test_scale_free(self):
        assert kl_from_normal_quadrature(Params(1, 1)) == pytest.approx(
            kl_from_normal_quadrature(Params(5, 25)), abs=1e-8
        )

    def test_quadrature_against_oracle(self):
        for mu, s2 in [(1, 1), (2, 9), (3, 1)]:
            ref = oracle.expect(lambda x: np.log1p(np.exp(-2 * mu * x / s2)), mu, s2)
            assert kl_from_normal_quadrature(Params(mu, s2)) == pytest.approx(ref, rel=1e-8)

    @pytest.mark.parametrize("theta", [1.0, 1.5, 2.0, 3.0, 4.0])
    def test_alternating_sandwich(self, theta):
        p = Params(5 * theta, 25.0)
        true = kl_from_normal_quadrature(p, rel_tol=1e-12)
        terms = kl_series_terms(p, 7)
        assert np.all(np.diff(np.abs(terms)) < 0)
        for k in range(2, 7):
            lo, hi = sorted((kl_from_normal_series(p, k), kl_from_normal_series(p, k + 1)))
            assert lo <= true <= hi

    def test_terms_stop_early(self):
        # very large theta: terms underflow quickly and the list is cut
        terms = kl_series_terms(Params(300.0, 1.0), 64)
        assert terms.size < 64
        assert abs(terms[-1]) < 1e-15

    def test_terms_overflow_free(self):
        p = Params(10.0, 25.0)
        terms = kl_series_terms(p, MAX_ORDER)
        assert np.all(np.isfinite(terms))

    def test_small_theta_falls_back(self):
        p = Params(0.01, 1.0)
        assert not series_reliable(p)
        assert kl_from_normal_series(p, 3) == kl_from_normal_quadrature(p)
        assert kl_from_normal_series(p, 3, fallback=False) != kl_from_normal_quadrature(p)

    @pytest.mark.parametrize("order", [0, MAX_ORDER + 1])
    def test_order_limits(self, order):
        with pytest.raises(ValueError):
            kl_from_normal_series(Params(1, 1), order)

    @pytest.mark.parametrize("mu,s2", oracle.GRID)
    def test_nonnegative(self, mu, s2):
        assert kl_from_normal_quadrature(Params(mu, s2)) >= 0


class TestEntropy:
    def test_half_normal(self):
        assert entropy_quadrature(Params(0, 1)) == pytest.approx(HALF_NORMAL_ENTROPY, abs=1e-6)
        assert entropy_quadrature(Params(0, 25)) == pytest.approx(HALF_NORMAL_ENTROPY + math.log(5), abs=1e-6)

    def test_half_normal_series_limit(self):
        # at mu = 0 the series sums to log 2; a large order gets close
        v = entropy_series(Params(0, 1), order=MAX_ORDER, fallback=False)
        assert v == pytest.approx(HALF_NORMAL_ENTROPY, abs=0.01)
        assert entropy_series(Params(0, 1)) == pytest.approx(HALF_NORMAL_ENTROPY, abs=1e-8)

    def test_near_normal(self):
        assert entropy_series(Params(20, 25)) == pytest.approx(0.5 * math.log(2 * math.pi * math.e * 25), abs=1e-3)

    def test_theta_two(self):
        p = Params(10, 25)
        assert entropy_series(p, 3) == pytest.approx(entropy_quadrature(p), abs=5e-3)

    def test_riemann_sum(self):
        # brute-force midpoint rule on [0, 40] with 10^7 cells
        p = Params(2, 9)
        n = 10**7
        total = 0.0
        h = 40.0 / n
        for chunk in range(10):
            x = (np.arange(chunk * n // 10, (chunk + 1) * n // 10) + 0.5) * h
            f = oracle.density(x, 2, 9)
            total += float(np.sum(-f * np.log(f))) * h
        assert entropy_quadrature(p) == pytest.approx(total, abs=1e-5)

    @pytest.mark.parametrize("mu,s2", [(0, 4), (2, 9), (5, 1), (1, 25), (20, 0.25)])
    def test_scale_covariance(self, mu, s2):
        s = math.sqrt(s2)
        unit = Params(mu / s, 1.0)
        p = Params(mu, s2)
        assert entropy_quadrature(p) == pytest.approx(entropy_quadrature(unit) + math.log(s), abs=1e-8)
        assert entropy_series(p) == pytest.approx(entropy_series(unit) + math.log(s), abs=1e-8)

    @pytest.mark.parametrize("mu,s2", oracle.GRID)
    def test_quadrature_against_oracle(self, mu, s2):
        assert entropy_quadrature(Params(mu, s2)) == pytest.approx(oracle.entropy(mu, s2), abs=1e-7)

    def test_series_error_shrinks_with_theta(self):
        errs = [abs(entropy_series(Params(5 * th, 25), 3) - entropy_quadrature(Params(5 * th, 25), rel_tol=1e-12))
                for th in (1.5, 2.0, 3.0, 4.0)]
        assert errs == sorted(errs, reverse=True)
        assert errs[-1] < 2e-6

    @pytest.mark.xfail(
        strict=True,
        reason="order-3 truncation error at theta = 4 is 1.3e-6 (confirmed at 40 digits); "
        "the alternating tail decays slowly and 1e-6 is first met at order 4",
    )
    def test_negligible_at_theta_four(self):
        p = Params(20, 25)
        assert abs(entropy_series(p, 3) - entropy_quadrature(p, rel_tol=1e-12)) <= 1e-6

    def test_high_order_meets_1e6_at_theta_four(self):
        p = Params(20, 25)
        assert abs(entropy_series(p, 8) - entropy_quadrature(p, rel_tol=1e-12)) <= 1e-6


class TestKLFromHalfNormal:
    @pytest.mark.parametrize("s2", [0.25, 1, 9])
    def test_identical_at_zero(self, s2):
        assert kl_from_halfnormal(Params(0, s2)) == pytest.approx(0.0, abs=1e-9)
        assert kl_from_halfnormal(Params(0, s2), use_quadrature=True) == pytest.approx(0.0, abs=1e-9)

    def test_theta_four_direct_ratio(self):
        mu, s2 = 20.0, 25.0
        p = Params(mu, s2)
        mf = moments(p).mean_f
        v = kl_from_halfnormal(p, use_quadrature=True)
        assert kl_from_normal_quadrature(p) < 1e-4
        assert v - (-LOG2 + (2 * mu * mf - mu * mu) / (2 * s2)) < 1e-4
        direct = oracle.expect(lambda x: log_ratio_to_halfnormal(x, mu, s2), mu, s2)
        assert v == pytest.approx(direct, abs=1e-6)

    @pytest.mark.parametrize("mu,s2", oracle.GRID)
    def test_gibbs(self, mu, s2):
        assert kl_from_halfnormal(Params(mu, s2), use_quadrature=True) >= -1e-12

    def test_direct_ratio_moderate(self):
        mu, s2 = 2.0, 9.0
        direct = oracle.expect(lambda x: log_ratio_to_halfnormal(x, mu, s2), mu, s2)
        assert kl_from_halfnormal(Params(mu, s2), use_quadrature=True) == pytest.approx(direct, abs=1e-8)

    def test_rule_of_thumb_points(self):
        a = Params(5, 1)
        b = Params(1, 25)
        assert kl_from_halfnormal(a, use_quadrature=True) > kl_from_normal_quadrature(a)
        assert kl_from_halfnormal(b, use_quadrature=True) < kl_from_normal_quadrature(b)
