"""Scalar kernel: message function, field, entropy, fixed-point solver."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hclab.kernel import binary_entropy, f_message, field_h, log_odds_threshold, x_star


class TestMessageFunction:
    def test_zero_input(self):
        assert f_message(0.0, 2.0) == pytest.approx(math.log(1.5), rel=1e-14)

    def test_infinite_limits(self):
        assert f_message(-np.inf, 3.0) == 0.0
        assert f_message(np.inf, 3.0) == pytest.approx(math.log(3.0), rel=1e-15)

    def test_high_precision_reference(self):
        # independent arbitrary-precision evaluation of the defining formula
        import mpmath

        mpmath.mp.dps = 50
        for xi, rho in [(5.0, 1.5), (-33.0, 12.0), (700.0, 2.0), (-700.0, 9.9), (0.3, 80.0)]:
            want = mpmath.log((1 + rho * mpmath.e**xi) / (1 + mpmath.e**xi))
            assert f_message(xi, rho) == pytest.approx(float(want), rel=1e-13, abs=1e-300)

    def test_rho_one_vanishes(self):
        xi = np.linspace(-50, 50, 101)
        assert np.all(f_message(xi, 1.0) == 0.0)

    @given(st.floats(-700, 700), st.floats(1.0001, 1e4))
    @settings(max_examples=300, deadline=None)
    def test_bounds_attractive(self, xi, rho):
        val = f_message(xi, rho)
        assert 0.0 <= val <= math.log(rho)

    def test_strictly_increasing_for_attractive_rho(self):
        # strict inequality is only representable before float saturation
        xi = np.linspace(-25, 25, 2001)
        vals = f_message(xi, 7.3)
        assert np.all(np.diff(vals) > 0)

    def test_no_overflow_across_domain(self):
        xi = np.array([-700.0, -100.0, 0.0, 100.0, 700.0])
        assert np.all(np.isfinite(f_message(xi, 1e6)))

    def test_saturation_gap_closes(self):
        rho = 4.0
        assert f_message(40.0, rho) - f_message(-40.0, rho) == pytest.approx(
            math.log(rho), rel=1e-12
        )

    def test_nan_rejected(self):
        with pytest.raises(ValueError, match="invalid field"):
            f_message(float("nan"), 2.0)

    def test_bad_rho_rejected(self):
        with pytest.raises(ValueError):
            f_message(0.0, 0.0)


class TestExternalField:
    def test_symmetric_point(self):
        assert field_h(7.0, 7.0, 0.5) == 0.0

    def test_equal_intensities(self):
        kappa = 0.2
        assert field_h(3.0, 3.0, kappa) == pytest.approx(math.log(kappa / (1 - kappa)))

    def test_direct_reevaluation(self):
        a, b, kappa = 1192.7, 100.0, 0.005
        want = -kappa * (a - b) - math.log((1 - kappa) / kappa)
        assert field_h(a, b, kappa) == pytest.approx(want, rel=1e-15)

    @pytest.mark.parametrize("kappa", [0.0, 1.0, -0.1, 1.5])
    def test_invalid_fraction(self, kappa):
        with pytest.raises(ValueError, match="invalid fraction"):
            field_h(2.0, 1.0, kappa)


class TestBinaryEntropy:
    def test_maximum(self):
        assert binary_entropy(0.5) == pytest.approx(math.log(2.0), rel=1e-15)

    def test_small_fraction_value(self):
        assert binary_entropy(0.005) == pytest.approx(0.03148, abs=5e-6)

    def test_edges(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    @settings(max_examples=200, deadline=None)
    def test_concavity(self, k1, k2):
        mid = binary_entropy((k1 + k2) / 2.0)
        assert mid >= (binary_entropy(k1) + binary_entropy(k2)) / 2.0 - 1e-12

    def test_out_of_range(self):
        with pytest.raises(ValueError, match="invalid fraction"):
            binary_entropy(1.2)


class TestXStar:
    def test_small_lambda_limit(self):
        assert x_star(1e-12) == pytest.approx(1.0, abs=1e-10)

    def test_boundary_value(self):
        assert x_star(math.exp(-1)) == pytest.approx(math.e, rel=1e-12)

    def test_bisection_residual(self):
        for lam in (0.05, 0.1, 0.2, 0.3, 0.36):
            x = x_star(lam)
            assert abs(x - math.exp(lam * x)) < 1e-12
            assert 1.0 <= x <= math.e

    def test_root_in_expected_window(self):
        assert 1.2 < x_star(0.2) < 1.4

    def test_monotone_in_lambda(self):
        lams = np.linspace(0.01, math.exp(-1), 60)
        vals = [x_star(l) for l in lams]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_ceiling_below_global_cap(self):
        for lam in np.linspace(0.01, math.exp(-1) - 1e-6, 30):
            assert (x_star(lam) - 1.0) / 4.0 < (math.e - 1.0) / 4.0

    def test_no_solution_above_threshold(self):
        with pytest.raises(ValueError, match="no fixed point"):
            x_star(0.4)


class TestThreshold:
    def test_half(self):
        assert log_odds_threshold(0.5) == 0.0

    def test_matches_field_at_equal_intensities(self):
        kappa = 0.005
        assert log_odds_threshold(kappa) == pytest.approx(field_h(2.0, 2.0, kappa))
