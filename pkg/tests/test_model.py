import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from switchdiff import (
    Constant,
    ConstantRadial,
    InfeasibleError,
    InverseRadial,
    LogisticRadial,
    ParameterRangeError,
    ScalarPerRegime,
    SwitchingDiffusionModel,
    ZeroDrift,
    build_model,
    check_recurrence_criterion,
    compute_eps_q_c,
)
from switchdiff.model import drift_eval, intensity_eval

from oracles import REFERENCE_MODEL, exact_constants


class TestFamilies:
    def test_inverse_radial_outside_cap(self):
        b = InverseRadial(rho=2, sign=-1, cap=1)
        x = np.array([[3.0, 4.0]])
        np.testing.assert_allclose(b(x), -2 * x / 25)
        assert float(np.sum(x * b(x))) == pytest.approx(-2.0)

    def test_inverse_radial_inside_cap_is_linear(self):
        b = InverseRadial(rho=2, sign=1, cap=2)
        np.testing.assert_allclose(b(np.array([0.5])), [0.25])

    def test_constant_radial(self):
        b = ConstantRadial(rho=1.5, sign=-1, cap=1)
        x = np.array([6.0, 8.0])
        np.testing.assert_allclose(b(x), -1.5 * x / 10)

    def test_zero_drift(self):
        np.testing.assert_array_equal(ZeroDrift()(np.ones((4, 3))), np.zeros((4, 3)))

    def test_logistic_midpoint(self):
        lam = LogisticRadial(1, 2, center=5, slope=1)
        assert lam(np.array([5.0])) == pytest.approx(1.5)
        assert (lam.lower, lam.upper) == (1, 2)

    @pytest.mark.parametrize("kwargs,field", [
        (dict(rho=0), "rho"),
        (dict(rho=1, sign=0), "sign"),
        (dict(rho=1, cap=-1), "cap"),
        (dict(rho=math.inf), "rho"),
    ])
    def test_inverse_radial_rejects(self, kwargs, field):
        with pytest.raises(ParameterRangeError) as exc:
            InverseRadial(**kwargs)
        assert exc.value.field == field

    def test_logistic_rejects_inverted_range(self):
        with pytest.raises(ParameterRangeError):
            LogisticRadial(2, 1)


class TestBuildModel:
    def test_reference(self, ref_model):
        b = ref_model.bounds
        assert (b.r_minus, b.r_plus, b.M) == (2, 1, 1)
        assert (b.lam0_hi, b.lam1_lo, b.lam_bar) == (0.5, 2, 2)
        assert (b.R_minus, b.R_plus) == (3, 3)

    def test_round_trip(self, ref_model):
        assert build_model(ref_model.to_dict()) == ref_model

    def test_typo_family_names_field(self):
        spec = dict(REFERENCE_MODEL, drift_0={"family": "InverseRadail", "rho": 2})
        with pytest.raises(ParameterRangeError) as exc:
            build_model(spec)
        assert exc.value.field == "drift_0.family"

    def test_unknown_parameter(self):
        spec = dict(REFERENCE_MODEL, intensity_0={"family": "Constant", "rate": 1})
        with pytest.raises(ParameterRangeError) as exc:
            build_model(spec)
        assert exc.value.field == "intensity_0.rate"

    def test_missing_field(self):
        spec = {k: v for k, v in REFERENCE_MODEL.items() if k != "intensity_1"}
        with pytest.raises(ParameterRangeError) as exc:
            build_model(spec)
        assert exc.value.field == "intensity_1"

    def test_negative_lambda(self):
        spec = dict(REFERENCE_MODEL, intensity_1={"family": "Constant", "lambda": -1})
        with pytest.raises(ParameterRangeError) as exc:
            build_model(spec)
        assert exc.value.field == "intensity_1.lambda"

    def test_bad_dim(self):
        with pytest.raises(ParameterRangeError):
            build_model(dict(REFERENCE_MODEL, dim=0))

    def test_eval_helpers(self, ref_model):
        np.testing.assert_allclose(drift_eval(ref_model, [4.0], 0), [-0.5])
        np.testing.assert_allclose(drift_eval(ref_model, [[4.0], [2.0]], 1), [[0.25], [0.5]])
        assert intensity_eval(ref_model, [4.0], 1) == 2
        with pytest.raises(ValueError):
            drift_eval(ref_model, [1.0, 2.0], 0)


class TestConstants:
    def test_reference_arithmetic(self):
        k = compute_eps_q_c(2, 1, 1, 0.5, 2, eps=0.3)
        ref = exact_constants(2, 1, 1, 0.5, 2, "0.3")
        for name in ("q", "c", "C_z0", "C_z1"):
            assert getattr(k, name) == pytest.approx(float(ref[name]), rel=1e-14)
        assert k.q == pytest.approx(0.305556, abs=1e-6)
        assert k.c == 0.9375

    def test_default_eps_is_tenth_of_R_minus(self, ref_model):
        rep = check_recurrence_criterion(ref_model)
        assert rep.eps == pytest.approx(0.3)
        assert rep.eps_is_default

    def test_default_eps_clipped_near_criticality(self):
        # A=2*1.02=2.04, B=1*2=2 -> eps_max=0.04/3, 10% of R_- would overshoot
        k = compute_eps_q_c(1.01, 0.5, 1, 1.0, 2.0)
        assert k.eps == pytest.approx(0.9 * 0.04 / 3)
        assert k.q < 1

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            compute_eps_q_c(1, 1, 1, 1, 1)

    def test_eps_out_of_range(self):
        with pytest.raises(InfeasibleError):
            compute_eps_q_c(2, 1, 1, 0.5, 2, eps=3.5)


class TestCriterion:
    def test_reference_recurrent(self, ref_model):
        rep = check_recurrence_criterion(ref_model)
        assert rep.recurrent and rep.recurrent_verdict
        assert (rep.A, rep.B) == (6.0, 1.5)
        assert rep.balance_residual() <= 1e-12

    def test_equal_rates_fail(self):
        m = build_model(dict(REFERENCE_MODEL, intensity_0={"family": "Constant", "lambda": 2}))
        rep = check_recurrence_criterion(m)
        assert not rep.recurrent
        assert (rep.A, rep.B) == (6.0, 6.0)
        assert "A=6.0 <= B=6.0" in rep.reason

    def test_weak_inward_drift(self):
        m = build_model(dict(REFERENCE_MODEL, drift_0={"family": "InverseRadial", "rho": 0.5}))
        rep = check_recurrence_criterion(m)
        assert not rep.recurrent and rep.reason.startswith("2r_- <= d")

    def test_zero_drift_has_no_r_minus(self):
        m = build_model(dict(REFERENCE_MODEL, drift_0={"family": "ZeroDrift"}))
        assert not check_recurrence_criterion(m).recurrent

    def test_outward_constant_radial_unbounded(self):
        m = build_model(dict(REFERENCE_MODEL, drift_1={"family": "ConstantRadial", "rho": 1,
                                                        "sign": 1}))
        rep = check_recurrence_criterion(m)
        assert not rep.recurrent and "unbounded" in rep.reason

    def test_theory_bound_offset(self, ref_model):
        rep = check_recurrence_criterion(ref_model)
        assert rep.theory_bound([10.0], 1) - rep.theory_bound([10.0], 0) == pytest.approx(0.5)
        assert rep.theory_bound([10.0], 0) == pytest.approx(100 / 0.9375)

    def test_scalar_diffusion_uses_traces(self):
        m = SwitchingDiffusionModel(1, InverseRadial(2), InverseRadial(1, sign=1),
                                    Constant(0.5), Constant(2), ScalarPerRegime(0.5, 1.0))
        rep = check_recurrence_criterion(m)
        assert (m.bounds.R_minus, m.bounds.R_plus) == (3.75, 3.0)
        assert rep.A == pytest.approx(7.5)


positive = st.floats(0.05, 20, allow_nan=False, allow_infinity=False)


class TestCriterionProperties:
    @settings(max_examples=200, deadline=None)
    @given(rm=positive, rp=positive, l0=positive, l1=positive, d=st.integers(1, 4))
    def test_constants_consistent(self, rm, rp, l0, l1, d):
        A, B = l1 * (2 * rm - d), l0 * (2 * rp + d)
        if not (2 * rm > d and A > B):
            with pytest.raises(InfeasibleError):
                compute_eps_q_c(rm, rp, d, l0, l1)
            return
        k = compute_eps_q_c(rm, rp, d, l0, l1)
        assert 0 < k.q < 1
        assert k.c > 0
        assert k.C_z1 - k.C_z0 == pytest.approx(1 / l1)
        lhs = l0 * (2 * rp + d + k.eps)
        rhs = k.q * l1 * (2 * rm - d - k.eps)
        assert abs(lhs - rhs) <= 1e-12 * lhs
        ref = exact_constants(rm, rp, d, l0, l1, k.eps)
        assert k.c == pytest.approx(float(ref["c"]), rel=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(rho=positive, cap=st.floats(0.1, 5), sign=st.sampled_from([-1, 1]),
           x=st.lists(st.floats(-50, 50), min_size=1, max_size=4))
    def test_inverse_radial_radial_component(self, rho, cap, sign, x):
        x = np.array(x)
        r2 = float(x @ x)
        b = InverseRadial(rho, sign, cap)
        assert np.linalg.norm(b(x)) <= b.sup_norm * (1 + 1e-12)
        if r2 >= cap * cap:
            assert float(x @ b(x)) == pytest.approx(sign * rho)

    @settings(max_examples=100, deadline=None)
    @given(lo=positive, span=positive, center=st.floats(-5, 5), slope=st.floats(-10, 10),
           r=st.floats(0, 1e3))
    def test_logistic_within_bounds(self, lo, span, center, slope, r):
        lam = LogisticRadial(lo, lo + span, center, slope)
        v = lam(np.array([r]))
        assert lo <= v <= lo + span
