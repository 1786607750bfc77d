import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foldednormal.distribution import Params, moments, pdf
from foldednormal.numerics import (
    CDF_COMPLEX_IM_LIMIT,
    QuadratureError,
    QuadratureResult,
    cdf_complex,
    erfcx,
    integrate,
    log_cdf_complex,
    log_erfcx,
    std_normal_cdf,
    std_normal_pdf,
)

mpmath.mp.dps = 40


def mp_phi(z):
    """Normal CDF of a (possibly complex) argument at 40 digits."""
    return complex(mpmath.erfc(-mpmath.mpmathify(z) / mpmath.sqrt(2)) / 2)


class TestStdNormal:
    def test_centre(self):
        assert std_normal_cdf(0.0) == 0.5
        assert std_normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)

    def test_negative_mass_values(self):
        assert round(std_normal_cdf(-0.5), 3) == 0.309
        assert round(std_normal_cdf(-4.0), 3) == 0.0

    def test_symmetry_random(self):
        z = np.random.default_rng(1).uniform(-8, 8, 1000)
        np.testing.assert_allclose(std_normal_cdf(z) + std_normal_cdf(-z), 1.0, atol=1e-15, rtol=0)

    def test_monotone(self):
        z = np.linspace(-45, 45, 20001)
        assert np.all(np.diff(std_normal_cdf(z)) >= 0)

    def test_saturation(self):
        assert std_normal_cdf(40.5) == 1.0
        assert std_normal_cdf(-40.5) == 0.0
        assert std_normal_cdf(-37.0) > 0.0

    def test_against_erf(self):
        z = np.linspace(-6, 6, 121)
        expected = [0.5 * math.erfc(-v / math.sqrt(2)) for v in z]
        np.testing.assert_allclose(std_normal_cdf(z), expected, rtol=1e-14)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            std_normal_cdf(float("nan"))


class TestErfcx:
    def test_zero(self):
        assert erfcx(0.0) == 1.0

    @pytest.mark.parametrize("z", [0.5, 1.0, 2.0])
    def test_small_args_against_integral(self, z):
        # erfc(z) = 2/sqrt(pi) int_z^inf exp(-t^2) dt, by our own quadrature
        tail = integrate(lambda t: np.exp(-t * t), z, rel_tol=1e-13).value
        assert erfcx(z) * math.exp(-z * z) == pytest.approx(2 / math.sqrt(math.pi) * tail, rel=1e-10)

    def test_asymptotic(self):
        assert erfcx(30.0) == pytest.approx(1 / (30 * math.sqrt(math.pi)), rel=2e-3)

    def test_relative_error_over_range(self):
        # erfcx overflows below about -26.6, so the range tested is [-26, 30]
        zs = np.linspace(-26, 30, 113)
        ref = np.array([float(mpmath.exp(mpmath.mpf(z) ** 2) * mpmath.erfc(z)) for z in zs])
        np.testing.assert_allclose(erfcx(zs), ref, rtol=1e-12)

    def test_identity_with_erfc(self):
        zs = np.linspace(0, 25, 251)
        ref = np.array([float(mpmath.erfc(z)) for z in zs])
        np.testing.assert_allclose(erfcx(zs) * np.exp(-zs * zs), ref, rtol=1e-10)

    def test_log_erfcx_large_negative(self):
        for z in (-30.0, -100.0, -5.0, 0.0, 3.0, 400.0):
            ref = float(mpmath.log(mpmath.exp(mpmath.mpf(z) ** 2) * mpmath.erfc(z)))
            assert log_erfcx(z) == pytest.approx(ref, rel=1e-13, abs=1e-15)


class TestComplexCdf:
    def test_origin(self):
        assert cdf_complex(0j) == 0.5 + 0j

    @pytest.mark.parametrize("x", [-2.0, 1.0, 0.3, -7.5])
    def test_real_axis(self, x):
        v = cdf_complex(complex(x, 0.0))
        assert v.imag == 0.0
        assert v.real == pytest.approx(std_normal_cdf(x), abs=1e-12)

    def test_real_axis_through_log_path(self):
        # the log route, fed a tiny imaginary part, agrees with the real CDF
        for x in np.linspace(-5, 5, 21):
            v = np.exp(log_cdf_complex(complex(x, 1e-300)))
            assert abs(v - std_normal_cdf(x)) <= 1e-12

    @pytest.mark.parametrize("y", [0.1, 1.0, 3.0, 10.0])
    def test_imaginary_axis(self, y):
        # Phi(iy) - 1/2 = i/sqrt(2 pi) int_0^y exp(s^2/2) ds, by quadrature
        v = cdf_complex(complex(0.0, y))
        seg = integrate(lambda s: np.exp(0.5 * s * s), 0.0, y, rel_tol=1e-12).value
        assert v.real == pytest.approx(0.5, abs=1e-12)
        assert v.imag == pytest.approx(seg / math.sqrt(2 * math.pi), rel=1e-10)

    @pytest.mark.parametrize(
        "z", [1 + 1j, -1 + 1j, 2 - 3j, -4 + 0.5j, 0.7 + 6j, -3 - 8j, 5 + 2j, -1.5 + 20j]
    )
    def test_against_mpmath(self, z):
        assert abs(cdf_complex(z) - mp_phi(z)) <= 1e-12 * max(1.0, abs(mp_phi(z)))

    def test_log_form_deep_in_plane(self):
        z = complex(-3.0, 45.0)
        ref = mpmath.log(mpmath.erfc(-mpmath.mpc(z) / mpmath.sqrt(2)) / 2)
        got = log_cdf_complex(z)
        assert got.real == pytest.approx(float(ref.real), rel=1e-12)
        assert np.exp(1j * got.imag) == pytest.approx(complex(mpmath.exp(1j * ref.imag)), abs=1e-9)

    def test_limit(self):
        with pytest.raises(ValueError):
            cdf_complex(complex(0.0, CDF_COMPLEX_IM_LIMIT + 1))
        with pytest.raises(ValueError):
            log_cdf_complex(complex(1.0, -CDF_COMPLEX_IM_LIMIT - 1))

    def test_overflow_is_reported(self):
        with pytest.raises(OverflowError):
            cdf_complex(complex(0.0, 45.0))

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-6, 6), st.floats(-6, 6))
    def test_conjugate_symmetry(self, x, y):
        a = cdf_complex(complex(x, y))
        b = cdf_complex(complex(x, -y))
        assert abs(a - b.conjugate()) <= 1e-12 * max(1.0, abs(a))


class TestIntegrate:
    def test_exponential_tail(self):
        r = integrate(lambda x: np.exp(-x), 0.0, math.inf, rel_tol=1e-12)
        assert r.value == pytest.approx(1.0, abs=1e-10)
        assert r.abs_error_estimate >= 0 and r.evaluations >= 15

    def test_folded_normalisation_and_mean(self):
        p = Params(2.0, 9.0)
        norm = integrate(lambda x: pdf(x, p), 0.0)
        mean = integrate(lambda x: x * pdf(x, p), 0.0, rel_tol=1e-10)
        assert norm.value == pytest.approx(1.0, abs=1e-8)
        assert mean.value == pytest.approx(moments(p).mean_f, abs=1e-8)

    @pytest.mark.parametrize("deg", range(6))
    def test_polynomials_exact(self, deg):
        coef = np.random.default_rng(deg).normal(size=deg + 1)
        poly = np.polynomial.Polynomial(coef)
        exact = poly.integ()(3.0) - poly.integ()(-1.5)
        r = integrate(poly, -1.5, 3.0, rel_tol=1e-12)
        assert r.value == pytest.approx(exact, rel=1e-12, abs=1e-13)

    def test_breakpoints_help_narrow_peak(self):
        f = lambda x: np.exp(-0.5 * ((x - 1e3) / 1e-2) ** 2)  # noqa: E731
        r = integrate(f, 0.0, math.inf, rel_tol=1e-10, points=[1e3 - 0.1, 1e3, 1e3 + 0.1])
        assert r.value == pytest.approx(1e-2 * math.sqrt(2 * math.pi), rel=1e-9)

    def test_budget_exhaustion(self):
        with pytest.raises(QuadratureError):
            integrate(lambda x: np.sin(1.0 / x) / x, 1e-6, 1.0, rel_tol=1e-10, max_intervals=20)

    def test_nonfinite_integrand(self):
        with pytest.raises(QuadratureError):
            integrate(lambda x: np.where(x > 0.3, np.inf, 1.0), 0.0, 1.0)

    @pytest.mark.parametrize("tol", [1e-15, 1e-2, 0.5])
    def test_bad_tolerance(self, tol):
        with pytest.raises(ValueError):
            integrate(np.exp, 0.0, 1.0, rel_tol=tol)

    def test_bad_limits(self):
        with pytest.raises(ValueError):
            integrate(np.exp, 1.0, 1.0)
        with pytest.raises(ValueError):
            integrate(np.exp, -math.inf, 1.0)

    def test_result_validation(self):
        with pytest.raises(ValueError):
            QuadratureResult(1.0, -1.0, 15)
        with pytest.raises(ValueError):
            QuadratureResult(1.0, 0.0, 0)
        assert float(QuadratureResult(2.5, 0.0, 15)) == 2.5
