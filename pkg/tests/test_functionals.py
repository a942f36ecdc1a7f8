import math

import mpmath
import numpy as np
import pytest

from cssf.functionals import (Term, FunctionalPair, b_eval, cos_power_integral, f_lambda,
                              gaussian_radial, h_eval, huisken_pair, lambda_pair, log_pair,
                              pair_from_spec, pair_validate, parse_radial, radial_pair,
                              sphere_pair)

# frozen mpmath values (30 digits, adaptive tanh-sinh)
F2_HALF_PI = 1.19814023473559220743992249228    # int_0^{pi/2} sqrt(cos t) dt
F2_AT_1 = 1.56339282463868354302739763421       # f_2(1)
F_HALF_AT_07 = 0.607897284175436081913345018085  # f_{1/2}(0.7)
F3_AT_M12 = 1.79500542733610162906548509148      # f_3(-1.2)


def mp_f_lambda(psi, lam):
    mpmath.mp.dps = 30
    psi, lam = mpmath.mpf(psi), mpmath.mpf(lam)
    integral = mpmath.quad(lambda t: mpmath.cos(t) ** (1 / lam), [0, psi])
    return float(mpmath.sin(psi) * integral + lam * mpmath.cos(psi) ** (1 + 1 / lam))


class TestFLambda:
    @pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
    def test_value_at_zero(self, lam):
        assert abs(f_lambda(0.0, lam) - lam) <= 1e-12

    def test_lambda_one_is_constant(self):
        psi = np.linspace(-math.pi / 2, math.pi / 2, 301)
        assert np.max(np.abs(f_lambda(psi, 1.0) - 1.0)) <= 1e-12

    def test_quarter_turn(self):
        assert abs(f_lambda(math.pi / 2, 2.0) - F2_HALF_PI) <= 1e-11
        assert abs(cos_power_integral(math.pi / 2, 2.0) - F2_HALF_PI) <= 1e-11

    @pytest.mark.parametrize("psi, lam, want", [(1.0, 2.0, F2_AT_1), (0.7, 0.5, F_HALF_AT_07),
                                                (-1.2, 3.0, F3_AT_M12)])
    def test_against_frozen_oracle(self, psi, lam, want):
        assert abs(f_lambda(psi, lam) - want) <= 1e-11

    def test_oracle_fresh(self):
        # the frozen constants above are reproducible
        assert mp_f_lambda(1.0, 2.0) == pytest.approx(F2_AT_1, abs=1e-15)

    def test_even(self):
        psi = np.linspace(0, 1.5, 31)
        assert np.max(np.abs(f_lambda(psi, 0.7) - f_lambda(-psi, 0.7))) <= 1e-14

    @pytest.mark.parametrize("lam", [1 - 1e-4, 1 + 1e-4])
    def test_continuous_in_lambda(self, lam):
        psi = np.linspace(-1.3, 1.3, 121)
        assert np.max(np.abs(f_lambda(psi, lam) - f_lambda(psi, 1.0))) <= 1e-3

    def test_bad_lambda(self):
        with pytest.raises(ValueError):
            f_lambda(0.3, 0.0)
        with pytest.raises(ValueError):
            lambda_pair(-1.0)


class TestLambdaPair:
    def test_lambda_one_is_huisken(self):
        p, h = lambda_pair(1.0), huisken_pair()
        r = np.linspace(0.2, 4.0, 50)
        psi = np.linspace(-1.3, 1.3, 50)
        (t,), (u,) = p.terms, h.terms
        for a, b in zip(t.radial_values(r), u.radial_values(r)):
            assert np.max(np.abs(a - b)) <= 1e-15
        assert np.max(np.abs(t.g(psi) - 1.0)) <= 1e-12

    def test_g_closed_form(self):
        (t,) = lambda_pair(2.0).terms
        assert t.g(math.pi / 3) == pytest.approx(math.sqrt(2), abs=1e-12)

    @pytest.mark.parametrize("lam", [0.5, 0.7, 2.0, 3.0])
    def test_m_is_lambda_g(self, lam):
        (t,) = lambda_pair(lam).terms
        psi = np.linspace(-1.3, 1.3, 131)
        v = t.angular_values(psi)
        assert np.max(np.abs(v.m - lam * v.g)) <= 1e-9

    def test_singular_flag(self):
        assert lambda_pair(2.0).psi_singular
        assert not lambda_pair(0.7).psi_singular
        assert not lambda_pair(1.0).psi_singular


class TestLogFamily:
    def test_h_and_b_zeros(self):
        assert h_eval(0.0) == 0.0
        assert abs(b_eval(math.sqrt(2))) <= 1e-14

    def test_h_value(self):
        want = (math.pi / 3) * (math.sqrt(3) / 2) + 0.5 * math.log(0.5)
        assert h_eval(math.pi / 3) == pytest.approx(want, abs=1e-15)
        assert want == pytest.approx(0.5603260918, abs=1e-10)

    def test_b_value(self):
        assert b_eval(1.0) == pytest.approx(0.25 - (1 - math.log(2)) / 2, abs=1e-15)
        assert b_eval(1.0) == pytest.approx(0.096574, abs=1e-6)

    def test_h_endpoints_by_continuity(self):
        assert h_eval(math.pi / 2) == pytest.approx(math.pi / 2, abs=1e-14)
        assert h_eval(-math.pi / 2) == pytest.approx(math.pi / 2, abs=1e-14)

    def test_h_ode(self):
        psi = np.linspace(-1.4, 1.4, 281)
        # five-point h'' at step 1e-3 balances truncation (~1e-12 h^(6)) and rounding
        d = 1e-3
        h2 = (-h_eval(psi + 2 * d) + 16 * h_eval(psi + d) - 30 * h_eval(psi)
              + 16 * h_eval(psi - d) - h_eval(psi - 2 * d)) / (12 * d * d)
        assert np.max(np.abs(h2 + h_eval(psi) - 1 / np.cos(psi))) <= 1e-8
        # the analytic h'' used by the pair meets the ODE to rounding
        (first, _) = log_pair().terms
        f, _, d2f = first.angular(psi)
        assert np.max(np.abs(d2f + f - 1 / np.cos(psi))) <= 1e-8

    def test_rb_minimum(self):
        r = np.linspace(1e-3, 10.0, 2_000_001)
        rb = r * b_eval(r)
        assert rb.min() >= -1e-12
        assert abs(r[np.argmin(rb)] - math.sqrt(2)) <= 1e-5
        # sharpen the location on a fine bracket around the sampled minimum
        fine = np.linspace(math.sqrt(2) - 1e-5, math.sqrt(2) + 1e-5, 200001)
        assert abs(fine[np.argmin(fine * b_eval(fine))] - math.sqrt(2)) <= 1e-6

    def test_b_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            b_eval(0.0)

    def test_terms(self):
        first, second = log_pair().terms
        assert first.g(0.0) == pytest.approx(1.0, abs=1e-15)
        assert second.m(math.pi / 3) == pytest.approx(2.0, abs=1e-12)
        assert second.sign == -1.0 and log_pair().psi_singular


class TestSphereAndRadial:
    def test_sphere(self):
        (t,) = sphere_pair().terms
        psi = np.linspace(-1.5, 1.5, 61)
        assert np.max(np.abs(t.g(psi))) <= 1e-15
        assert t.m(0.5) == pytest.approx(1 / math.cos(0.5), abs=1e-14)
        assert t.m(0.5) == pytest.approx(1.139494, abs=1e-6)

    def test_radial(self):
        (t,) = radial_pair(gaussian_radial(2.0)).terms
        psi = np.linspace(-1.5, 1.5, 61)
        assert np.max(np.abs(t.g(psi))) <= 1e-15
        assert np.max(np.abs(t.m(psi))) <= 1e-14


class TestValidate:
    def test_huisken_exact(self):
        rep = pair_validate(huisken_pair(), 1.3)
        assert rep.passed
        assert max(rep.max_df_residual, rep.max_d2f_residual, rep.max_m_residual,
                   rep.max_da_residual) <= 1e-10

    def test_lambda_07(self):
        rep = pair_validate(lambda_pair(0.7), 1.3)
        assert rep.passed
        assert max(rep.max_df_residual, rep.max_d2f_residual, rep.max_da_residual) <= 1e-8

    def test_lambda_2(self):
        assert pair_validate(lambda_pair(2.0), 1.3).passed

    def test_log_pair(self):
        rep = pair_validate(log_pair(), 1.2)
        assert rep.passed
        assert max(rep.max_df_residual, rep.max_d2f_residual) <= 1e-8
        # central-difference truncation of 1/r at r = 0.1, relative to 1 + |a'|
        assert rep.max_da_residual <= 1e-6

    def test_corrupted_second_derivative(self):
        (t,) = huisken_pair().terms

        def bad(psi):
            f, df, d2f = t.angular(psi)
            return f, df, d2f + 1e-3

        pair = FunctionalPair("bad", (Term(t.radial, bad),))
        rep = pair_validate(pair, 1.3)
        assert not rep.passed
        assert rep.max_d2f_residual == pytest.approx(1e-3, rel=1e-6)

    def test_psi_max_range(self):
        with pytest.raises(ValueError):
            pair_validate(huisken_pair(), math.pi / 2)


class TestSpecs:
    @pytest.mark.parametrize("spec, name", [("huisken", "huisken"), ("log", "log"),
                                            ("sphere", "sphere"), ("lambda:0.7", "lambda:0.7"),
                                            (" lambda:2 ", "lambda:2.0"),
                                            ("radial:poly:1,0,1", "radial:poly:1,0,1")])
    def test_names(self, spec, name):
        assert pair_from_spec(spec).name == name

    def test_poly_weight(self):
        a, da = parse_radial("poly:1,2,3")(np.array([2.0]))
        assert a[0] == 17.0 and da[0] == 14.0

    def test_gauss_weight(self):
        a, _ = parse_radial("gauss:2")(np.array([1.0]))
        assert a[0] == pytest.approx(math.exp(-0.5))

    @pytest.mark.parametrize("spec", ["lambda:x", "lambda:0", "kepler", "radial:poly:1,2",
                                      "radial:gauss:-1", "radial:cubic:1"])
    def test_rejects(self, spec):
        with pytest.raises(ValueError):
            pair_from_spec(spec)
