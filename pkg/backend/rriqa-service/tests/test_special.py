import math

import numpy as np
import pytest
from scipy import integrate
from scipy import special as sp

from app.core.errors import DomainError
from app.services.special import bessel_k, hypergeometric_2f1, log_bessel_k


class TestHypergeometric:
    def test_zero_argument(self):
        assert hypergeometric_2f1(0.7, 1.3, 2.2, 0.0) == 1.0

    def test_log_identity(self):
        assert hypergeometric_2f1(1.0, 1.0, 2.0, 0.5) == pytest.approx(-math.log(0.5) / 0.5, rel=1e-12)

    def test_symmetric_in_a_b(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a, b = rng.uniform(0.1, 3.0, size=2)
            c = a + b + rng.uniform(0.1, 2.0)
            z = rng.uniform(-3.0, 0.99)
            assert hypergeometric_2f1(a, b, c, z) == pytest.approx(hypergeometric_2f1(b, a, c, z), rel=1e-10)

    @pytest.mark.parametrize("z", [-5.0, -1.5, -0.5, 0.3, 0.89, 0.95, 0.999])
    @pytest.mark.parametrize("a,b,c", [(0.8, 0.5, 1.6), (2.3, 0.5, 3.1), (1.05, 1.3, 2.1), (4.0, 0.5, 6.5)])
    def test_against_scipy(self, a, b, c, z):
        assert hypergeometric_2f1(a, b, c, z) == pytest.approx(sp.hyp2f1(a, b, c, z), rel=1e-10)

    def test_integer_gap_near_one(self):
        assert hypergeometric_2f1(0.5, 1.0, 2.5, 0.95) == pytest.approx(sp.hyp2f1(0.5, 1.0, 2.5, 0.95), rel=1e-9)
        # F(1, 1/2; 5/2; 1) = Gamma(5/2) / (Gamma(3/2) Gamma(2))
        value = hypergeometric_2f1(1.0, 0.5, 2.5, 0.999999)
        assert math.isfinite(value)
        assert value == pytest.approx(1.5, rel=1e-3)

    def test_logarithmic_case_closed_form(self):
        z = 0.999999
        expected = math.atanh(math.sqrt(z)) / math.sqrt(z)
        assert hypergeometric_2f1(0.5, 1.0, 1.5, z) == pytest.approx(expected, rel=1e-8)

    @pytest.mark.parametrize("a,b,c,z", [(1000.0, 0.5, 1046.36, 0.9636), (1000.0, 0.5, 1013.88, 0.9893), (4.143, 0.5, 33.743, 0.9662)])
    def test_large_gap_near_one(self, a, b, c, z):
        assert hypergeometric_2f1(a, b, c, z) == pytest.approx(sp.hyp2f1(a, b, c, z), rel=1e-8)

    def test_negative_gap_near_one(self):
        # Euler: F(a, b; c; z) = (1 - z)^(c - a - b) F(c - a, c - b; c; z)
        a, b, c, z = 40.5, 40.0, 41.0, 0.95
        expected = (1 - z) ** (c - a - b) * sp.hyp2f1(c - a, c - b, c, z)
        assert hypergeometric_2f1(a, b, c, z) == pytest.approx(expected, rel=1e-8)

    @pytest.mark.parametrize("args", [(1.0, 1.0, 0.0, 0.5), (1.0, 1.0, -2.0, 0.5), (1.0, 1.0, 2.0, 1.0), (1.0, math.nan, 2.0, 0.1)])
    def test_domain_errors(self, args):
        with pytest.raises(DomainError):
            hypergeometric_2f1(*args)


class TestBesselK:
    @pytest.mark.parametrize("nu", [0.0, 0.25, 0.5, 1.3, 2.5, 7.0])
    @pytest.mark.parametrize("z", [0.05, 0.7, 3.0, 20.0])
    def test_matches_integral_representation(self, nu, z):
        # K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt; beyond `upper` the integrand is below e^-50
        upper = math.acosh((50.0 + 20.0 * nu) / z + 1.0)
        expected, _ = integrate.quad(lambda t: math.exp(-z * math.cosh(t)) * math.cosh(nu * t), 0, upper,
                                     epsabs=0, epsrel=1e-12, limit=200)
        assert bessel_k(nu, z) == pytest.approx(expected, rel=1e-8)

    def test_half_order_closed_form(self):
        z = np.array([0.1, 1.0, 5.0])
        assert bessel_k(0.5, z) == pytest.approx(np.sqrt(np.pi / (2 * z)) * np.exp(-z), rel=1e-12)

    def test_negative_order_symmetry(self):
        assert bessel_k(-1.7, 2.0) == pytest.approx(bessel_k(1.7, 2.0), rel=1e-14)

    def test_large_order_stays_finite(self):
        # kv overflows here; the Debye expansion takes over
        value = log_bessel_k(400.0, 1e-3)
        assert math.isfinite(value)
        expected = sp.gammaln(400.0) - math.log(2.0) + 400.0 * math.log(2.0 / 1e-3)
        assert value == pytest.approx(expected, rel=1e-6)

    def test_vectorised(self):
        z = np.linspace(0.1, 10, 7)
        assert log_bessel_k(1.2, z).shape == z.shape
