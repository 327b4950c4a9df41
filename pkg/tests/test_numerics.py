import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from misdelay.numerics import (
    ConvergenceError,
    DomainError,
    NoCrossingError,
    NoSignChangeError,
    StepUnderflowError,
    Tolerance,
    bisect_threshold_crossing,
    find_root_bracketed,
    integrate_ode,
    lambert_w_m1,
)
from oracles import lambert_w_m1_bisect


class TestLambertWm1:
    def test_branch_point_exact(self):
        assert lambert_w_m1(-math.exp(-1.0)) == -1.0

    def test_minus_two_over_e_squared_exact(self):
        assert lambert_w_m1(-2.0 * math.exp(-2.0)) == -2.0

    def test_reference_value(self):
        # frozen from the bisection oracle
        w = lambert_w_m1(-0.1)
        assert w == pytest.approx(-3.577152063957297, abs=1e-12)
        assert w == pytest.approx(-3.5771520640, abs=1e-9)

    def test_against_bisection_oracle_grid(self):
        # log-spaced magnitudes plus points snuggled up to the branch point
        xs = [-(10.0 ** e) for e in [x * (-29.0 / 39.0) - 0.5 for x in range(40)]]
        xs += [-math.exp(-1.0) + d for d in (1e-12, 1e-9, 1e-6, 1e-3)]
        # oracle bisection itself loses absolute accuracy near the branch
        # point where the residual derivative vanishes, hence abs=1e-9
        for x in xs:
            w = lambert_w_m1(x)
            w_ref = lambert_w_m1_bisect(x)
            assert w == pytest.approx(w_ref, rel=1e-12, abs=1e-9), f"x={x}"

    @given(st.floats(min_value=-299.0, max_value=-1.0001))
    @settings(max_examples=300)
    def test_defining_residual(self, log10_neg_x):
        x = -(10.0 ** log10_neg_x)
        w = lambert_w_m1(x)
        assert w <= -1.0
        assert abs(w * math.exp(w) - x) <= 1e-12 * max(abs(x), 1e-300)

    @given(st.floats(min_value=1e-16, max_value=0.367))
    @settings(max_examples=300)
    def test_residual_near_branch(self, offset):
        x = -math.exp(-1.0) + offset
        if x >= 0.0:
            return
        w = lambert_w_m1(x)
        assert w <= -1.0
        assert abs(w * math.exp(w) - x) <= 1e-12 * max(abs(x), 1e-300)

    def test_monotone_decreasing_in_x(self):
        # the lower branch runs from -1 at the branch point to -inf at 0-
        xs = [-0.367, -0.3, -0.2, -0.1, -1e-2, -1e-5, -1e-100]
        ws = [lambert_w_m1(x) for x in xs]
        assert all(a > b for a, b in zip(ws, ws[1:]))

    @pytest.mark.parametrize("bad", [0.0, 0.5, -0.5, -math.exp(-1.0) * (1 + 1e-9),
                                     math.nan])
    def test_domain_errors(self, bad):
        with pytest.raises(DomainError):
            lambert_w_m1(bad)

    def test_tiny_magnitudes(self):
        for x in (-1e-300, -5e-324):
            w = lambert_w_m1(x)
            assert w < -600.0
            # residual in log form, since e^w underflows
            assert abs(w + math.log(-w) - math.log(-x)) <= 1e-12 * abs(math.log(-x))


class TestFindRootBracketed:
    def test_sqrt_two(self):
        r = find_root_bracketed(lambda x: x * x - 2.0, 1.0, 2.0,
                                Tolerance(rel=1e-15, abs=0.0))
        assert r == pytest.approx(math.sqrt(2.0), rel=1e-14)

    def test_endpoint_root_returned(self):
        assert find_root_bracketed(lambda x: x - 1.0, 1.0, 2.0) == 1.0
        assert find_root_bracketed(lambda x: x - 2.0, 1.0, 2.0) == 2.0

    def test_no_sign_change_raises(self):
        with pytest.raises(NoSignChangeError):
            find_root_bracketed(lambda x: x * x + 1.0, -1.0, 1.0)

    def test_iteration_budget(self):
        with pytest.raises(ConvergenceError):
            find_root_bracketed(lambda x: x * x - 2.0, 1.0, 2.0,
                                Tolerance(rel=1e-15, abs=0.0, max_iter=2))

    def test_flat_then_steep(self):
        # function with a nasty flat region, still bracketed
        f = lambda x: math.tanh(50.0 * (x - 0.7)) + x * 1e-6
        r = find_root_bracketed(f, 0.0, 1.0, Tolerance(rel=1e-14, abs=1e-18))
        assert abs(f(r)) < 1e-9

    def test_bad_bracket_order(self):
        with pytest.raises(ValueError):
            find_root_bracketed(lambda x: x, 2.0, 1.0)


class TestBisectThresholdCrossing:
    def test_exponential_half_crossing(self):
        tau = 3.2e-12
        traj = lambda t: math.exp(-t / tau)
        t = bisect_threshold_crossing(traj, 0.5, 0.0, 1e-9,
                                      Tolerance(abs=1e-18))
        assert t == pytest.approx(tau * math.log(2.0), abs=1e-15)

    def test_rising_crossing(self):
        traj = lambda t: 1.0 - math.exp(-t / 1e-12)
        t = bisect_threshold_crossing(traj, 0.5, 0.0, 1e-9, Tolerance(abs=1e-18))
        assert t == pytest.approx(1e-12 * math.log(2.0), abs=1e-15)

    def test_no_crossing_raises(self):
        with pytest.raises(NoCrossingError):
            bisect_threshold_crossing(lambda t: 1.0, 0.5, 0.0, 1.0,
                                      Tolerance(abs=1e-12))

    def test_exact_endpoint(self):
        traj = lambda t: 1.0 - t
        assert bisect_threshold_crossing(traj, 1.0, 0.0, 1.0,
                                         Tolerance(abs=1e-12)) == 0.0

    def test_bracket_width_bound(self):
        tau = 1e-11
        traj = lambda t: math.exp(-t / tau)
        for tol_abs in (1e-14, 1e-16):
            t = bisect_threshold_crossing(traj, 0.5, 0.0, 1e-9,
                                          Tolerance(abs=tol_abs))
            assert abs(t - tau * math.log(2.0)) <= tol_abs


class TestIntegrateOde:
    def test_exponential_decay(self):
        tau = 1e-12
        sol = integrate_ode(lambda t, v: -v / tau, 0.0, 5 * tau, 1.0,
                            Tolerance(rel=1e-10, abs=1e-14))
        assert sol.v1 == pytest.approx(math.exp(-5.0), rel=1e-8)

    def test_dense_output_accuracy(self):
        tau = 2.0
        sol = integrate_ode(lambda t, v: -v / tau, 0.0, 10.0, 1.0,
                            Tolerance(rel=1e-10, abs=1e-14))
        for i in range(101):
            t = 0.1 * i
            assert sol(t) == pytest.approx(math.exp(-t / tau), rel=1e-7, abs=1e-12)

    def test_forced_linear_ode(self):
        # dv/dt = (1 - v)/tau from 0: v = 1 - e^{-t/tau}
        tau = 0.7
        sol = integrate_ode(lambda t, v: (1.0 - v) / tau, 0.0, 3.0, 0.0,
                            Tolerance(rel=1e-11, abs=1e-14))
        assert sol(1.3) == pytest.approx(1.0 - math.exp(-1.3 / tau), rel=1e-8)

    def test_reproducible_bit_for_bit(self):
        f = lambda t, v: math.sin(3.0 * t) - 0.5 * v
        s1 = integrate_ode(f, 0.0, 4.0, 0.2)
        s2 = integrate_ode(f, 0.0, 4.0, 0.2)
        assert s1.ts == s2.ts
        assert s1.vs == s2.vs
        assert s1.dvs == s2.dvs

    def test_step_underflow_raises(self):
        # right-hand side oscillating far below any resolvable step
        f = lambda t, v: 1e30 * math.sin(1e30 * t + 1.0)
        with pytest.raises(StepUnderflowError):
            integrate_ode(f, 0.0, 1.0, 0.0)

    def test_bad_window_raises(self):
        with pytest.raises(ValueError):
            integrate_ode(lambda t, v: v, 1.0, 1.0, 0.0)

    def test_endpoint_hit_exactly(self):
        sol = integrate_ode(lambda t, v: -v, 0.0, 1.0, 1.0)
        assert sol.t1 == 1.0


class TestTolerance:
    @pytest.mark.parametrize("kwargs", [
        {"rel": 0.0}, {"rel": -1.0}, {"rel": math.nan},
        {"abs": -1e-9}, {"max_iter": 0},
    ])
    def test_rejects_bad_fields(self, kwargs):
        with pytest.raises(ValueError):
            Tolerance(**kwargs)

    def test_defaults_valid(self):
        t = Tolerance()
        assert t.rel > 0 and t.abs >= 0 and t.max_iter >= 1
