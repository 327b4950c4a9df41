"""Tests for the closed-form delay families in misdelay.gates."""

import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from misdelay.gates import (
    Breakpoints,
    CGateParams,
    DelayQuery,
    NorGateParams,
    ParamError,
    cgate_breakpoints,
    cgate_delay,
    cgate_extremal,
    effective_caps,
    nor_breakpoints,
    nor_delay,
    nor_extremal_rising,
)
from misdelay.numerics import DomainError

LN2 = math.log(2.0)

# 15 nm NOR gate behind a 3 um wire
NOR_A = NorGateParams(r_n_a=2193.6, r_n_b=2011.0, r=1277.1,
                      alpha1=1.078e-9, alpha2=0.5102e-9,
                      c_load=1.2831e-15, r5=399.41, delta_min=4.32e-12)
# same gate behind a 15 um wire
NOR_B = NorGateParams(r_n_a=2900.0, r_n_b=2749.3, r=2054.5,
                      alpha1=1.479e-9, alpha2=0.8441e-9,
                      c_load=1.2831e-15, r5=360.49, delta_min=5.08e-12)
# 15 nm C gate without interconnect
CG_ISO = CGateParams(r_n=2142.0, r_p=2321.5,
                     alpha1=2.1472, alpha2=1.1303,
                     alpha3=1.5549, alpha4=1.8403,
                     c_load=2.6331e-15, r5=0.0, delta_min=1.77e-12)


def rising_crossing_oracle(alpha_sum: float, r: float, r5: float,
                           c: float) -> float:
    """Threshold crossing of the drive-up transient, found by bisection.

    Independent of the Lambert-W closed form: evaluates the trajectory
    factor exp(-t/tau) * (1 + t/a)^(a/tau) directly and bisects it
    against 1/2.
    """
    a = alpha_sum / (2.0 * r)
    tau = c * (r5 + 2.0 * r)

    def phi(t):
        return math.exp((-t + a * math.log1p(t / a)) / tau)

    hi = 4.0 * (tau + a)
    while phi(hi) >= 0.5:
        hi *= 2.0
    return oracles.crossing_time_bisect(phi, 0.5, 0.0, hi)


class TestEffectiveCaps:
    def test_no_interconnect_collapses_to_load(self):
        p = replace(NOR_A, r5=0.0)
        caps = effective_caps(p)
        assert caps == (p.c_load,) * 4

    def test_known_values(self):
        caps = effective_caps(NOR_A)
        assert math.isclose(caps.c1, 1.5167e-15, rel_tol=1e-4)
        assert math.isclose(
            caps.c1, NOR_A.c_load * (NOR_A.r5 + NOR_A.r_n_a) / NOR_A.r_n_a)
        assert math.isclose(
            caps.c3, NOR_A.c_load * (NOR_A.r5 + 2 * NOR_A.r) / (2 * NOR_A.r))

    def test_symmetric_pulldowns(self):
        p = replace(NOR_A, r_n_a=2000.0, r_n_b=2000.0)
        caps = effective_caps(p)
        assert math.isclose(caps.c2,
                            p.c_load * (2 * p.r5 + 2000.0) / 2000.0)

    def test_each_at_least_load(self):
        for p in (NOR_A, NOR_B):
            assert all(c >= p.c_load for c in effective_caps(p))


class TestNorExtremals:
    def test_equal_alphas_degenerate(self):
        p = replace(NOR_A, alpha1=8e-10, alpha2=8e-10)
        ext = nor_extremal_rising(p)
        assert ext.d_inf == ext.d_minus_inf
        assert ext.d0 > ext.d_inf

    def test_all_positive_and_zero_delta_dominates(self):
        for p in (NOR_A, NOR_B):
            ext = nor_extremal_rising(p)
            assert 0.0 < ext.d_inf < ext.d0
            assert 0.0 < ext.d_minus_inf < ext.d0

    def test_matches_trajectory_bisection(self):
        caps = effective_caps(NOR_A)
        ext = nor_extremal_rising(NOR_A)
        pairs = [
            (ext.d0, NOR_A.alpha1 + NOR_A.alpha2),
            (ext.d_inf, NOR_A.alpha2),
            (ext.d_minus_inf, NOR_A.alpha1),
        ]
        for closed, alpha_sum in pairs:
            t_ref = rising_crossing_oracle(alpha_sum, NOR_A.r, NOR_A.r5,
                                           NOR_A.c_load)
            assert abs(closed - t_ref) <= 1e-12
            # cross-check the effective-cap route: same crossing computed
            # against c3 with the interconnect folded out
            assert math.isclose(caps.c3 * 2 * NOR_A.r,
                                NOR_A.c_load * (NOR_A.r5 + 2 * NOR_A.r))

    def test_transient_underflow_rejected(self):
        # alpha so small against the RC constant that the transistor
        # transient is over before the output moves: no finite W argument
        p = replace(NOR_A, alpha1=0.6e-12, alpha2=0.6e-12,
                    c_load=2.6331e-15, r5=801.28)
        with pytest.raises(DomainError):
            nor_extremal_rising(p)


class TestNorFallingFamily:
    def test_single_input_limits(self):
        caps = effective_caps(NOR_A)
        d_plus = nor_delay(NOR_A, DelayQuery("falling", math.inf))
        d_minus = nor_delay(NOR_A, DelayQuery("falling", -math.inf))
        assert math.isclose(d_plus,
                            LN2 * caps.c1 * NOR_A.r_n_a + NOR_A.delta_min,
                            rel_tol=1e-15)
        assert math.isclose(d_minus,
                            LN2 * caps.c1_prime * NOR_A.r_n_b + NOR_A.delta_min,
                            rel_tol=1e-15)

    def test_zero_delta_value(self):
        caps = effective_caps(NOR_A)
        ra, rb = NOR_A.r_n_a, NOR_A.r_n_b
        want = LN2 * caps.c2 * ra * rb / (ra + rb) + NOR_A.delta_min
        assert nor_delay(NOR_A, DelayQuery("falling", 0.0)) == want
        assert nor_delay(NOR_A, DelayQuery("falling", -0.0)) == want

    def test_linear_segment_value(self):
        caps = effective_caps(NOR_A)
        ra, rb = NOR_A.r_n_a, NOR_A.r_n_b
        delta = 1e-12
        want = ((LN2 * caps.c2 * ra * rb - (caps.c2 / caps.c1) * delta * rb)
                / (ra + rb) + delta + NOR_A.delta_min)
        got = nor_delay(NOR_A, DelayQuery("falling", delta))
        assert math.isclose(got, want, rel_tol=1e-14)

    def test_slowest_at_simultaneous_switch(self):
        # the second pulldown can only help, so delay grows with |delta|
        d0 = nor_delay(NOR_A, DelayQuery("falling", 0.0))
        bps = nor_breakpoints(NOR_A)
        for delta in (0.3 * bps.down_plus, bps.down_plus, 2 * bps.down_plus):
            assert nor_delay(NOR_A, DelayQuery("falling", delta)) > d0
        for delta in (0.3 * bps.down_minus, bps.down_minus):
            assert nor_delay(NOR_A, DelayQuery("falling", -delta)) > d0


class TestNorRisingFamily:
    def test_single_input_limits(self):
        ext = nor_extremal_rising(NOR_A)
        assert nor_delay(NOR_A, DelayQuery("rising", math.inf)) == \
            ext.d_inf + NOR_A.delta_min
        assert nor_delay(NOR_A, DelayQuery("rising", -math.inf)) == \
            ext.d_minus_inf + NOR_A.delta_min

    def test_linear_slope(self):
        # the linear region of this gate ends below 1 ps, so probe at
        # half the breakpoint rather than a fixed separation
        ext = nor_extremal_rising(NOR_A)
        bps = nor_breakpoints(NOR_A)
        asum = NOR_A.alpha1 + NOR_A.alpha2
        d_plus = 0.5 * bps.up_plus
        got = nor_delay(NOR_A, DelayQuery("rising", d_plus))
        want = ext.d0 - (NOR_A.alpha1 / asum) * d_plus + NOR_A.delta_min
        assert math.isclose(got, want, rel_tol=1e-14)
        d_minus = 0.5 * bps.up_minus
        got = nor_delay(NOR_A, DelayQuery("rising", -d_minus))
        want = ext.d0 - (NOR_A.alpha2 / asum) * d_minus + NOR_A.delta_min
        assert math.isclose(got, want, rel_tol=1e-14)
        # one picosecond is already past both rising breakpoints here
        assert nor_delay(NOR_A, DelayQuery("rising", 1e-12)) == \
            ext.d_inf + NOR_A.delta_min

    def test_clamp_beyond_breakpoint(self):
        bps = nor_breakpoints(NOR_A)
        at_inf = nor_delay(NOR_A, DelayQuery("rising", math.inf))
        assert nor_delay(NOR_A, DelayQuery("rising", 1.5 * bps.up_plus)) == at_inf
        at_minus_inf = nor_delay(NOR_A, DelayQuery("rising", -math.inf))
        assert nor_delay(
            NOR_A, DelayQuery("rising", -1.5 * bps.up_minus)) == at_minus_inf

    def test_symmetric_breakpoints(self):
        p = NorGateParams(r_n_a=2000.0, r_n_b=2000.0, r=1500.0,
                          alpha1=9e-10, alpha2=9e-10, c_load=2e-15)
        ext = nor_extremal_rising(p)
        bps = nor_breakpoints(p)
        assert math.isclose(bps.up_plus, 2 * (ext.d0 - ext.d_inf),
                            rel_tol=1e-15)
        assert bps.up_plus == bps.up_minus


class TestNorBreakpoints:
    def test_values(self):
        caps = effective_caps(NOR_A)
        ext = nor_extremal_rising(NOR_A)
        asum = NOR_A.alpha1 + NOR_A.alpha2
        bps = nor_breakpoints(NOR_A)
        assert bps == Breakpoints(
            LN2 * caps.c1 * NOR_A.r_n_a,
            LN2 * caps.c1_prime * NOR_A.r_n_b,
            asum * (ext.d0 - ext.d_inf) / NOR_A.alpha1,
            asum * (ext.d0 - ext.d_minus_inf) / NOR_A.alpha2,
        )
        assert all(0.0 < bp < math.inf for bp in bps)

    def test_continuity_at_every_breakpoint(self):
        bps = nor_breakpoints(NOR_A)
        for direction, bp, sign in (
            ("falling", bps.down_plus, 1.0),
            ("falling", bps.down_minus, -1.0),
            ("rising", bps.up_plus, 1.0),
            ("rising", bps.up_minus, -1.0),
        ):
            inside = nor_delay(NOR_A, DelayQuery(direction,
                                                 sign * bp * (1 - 1e-12)))
            clamped = nor_delay(NOR_A, DelayQuery(direction, sign * bp))
            assert abs(inside - clamped) <= 1e-15


class TestCGateFamilies:
    def test_zero_delta_is_extremal(self):
        for direction in ("rising", "falling"):
            ext = cgate_extremal(CG_ISO, direction)
            want = ext.d0 + CG_ISO.delta_min
            assert cgate_delay(CG_ISO, DelayQuery(direction, 0.0)) == want
            assert cgate_delay(CG_ISO, DelayQuery(direction, -0.0)) == want

    def test_rising_slope(self):
        ext = cgate_extremal(CG_ISO, "rising")
        asum = CG_ISO.alpha1 + CG_ISO.alpha2
        got = cgate_delay(CG_ISO, DelayQuery("rising", 2e-12))
        want = ext.d0 - (CG_ISO.alpha1 / asum) * 2e-12 + CG_ISO.delta_min
        assert math.isclose(got, want, rel_tol=1e-14)

    def test_falling_slope_uses_mirrored_pair(self):
        ext = cgate_extremal(CG_ISO, "falling")
        asum = CG_ISO.alpha3 + CG_ISO.alpha4
        got = cgate_delay(CG_ISO, DelayQuery("falling", 2e-12))
        want = ext.d0 - (CG_ISO.alpha4 / asum) * 2e-12 + CG_ISO.delta_min
        assert math.isclose(got, want, rel_tol=1e-14)

    def test_equal_falling_alphas_degenerate(self):
        p = replace(CG_ISO, alpha3=1.6, alpha4=1.6)
        ext = cgate_extremal(p, "falling")
        assert ext.d_inf == ext.d_minus_inf

    def test_extremal_matches_trajectory_bisection(self):
        ext = cgate_extremal(CG_ISO, "rising")
        t_ref = rising_crossing_oracle(CG_ISO.alpha1 + CG_ISO.alpha2,
                                       CG_ISO.r_n, CG_ISO.r5, CG_ISO.c_load)
        assert abs(ext.d0 - t_ref) <= 1e-12
        ext = cgate_extremal(CG_ISO, "falling")
        t_ref = rising_crossing_oracle(CG_ISO.alpha3 + CG_ISO.alpha4,
                                       CG_ISO.r_p, CG_ISO.r5, CG_ISO.c_load)
        assert abs(ext.d0 - t_ref) <= 1e-12

    def test_inverted_flag_swaps_families(self):
        inv = replace(CG_ISO, inverted=True)
        for delta in (-5e-12, 0.0, 3e-12, math.inf):
            assert cgate_delay(inv, DelayQuery("rising", delta)) == \
                cgate_delay(CG_ISO, DelayQuery("falling", delta))
            assert cgate_delay(inv, DelayQuery("falling", delta)) == \
                cgate_delay(CG_ISO, DelayQuery("rising", delta))

    def test_clamps(self):
        ext = cgate_extremal(CG_ISO, "rising")
        asum = CG_ISO.alpha1 + CG_ISO.alpha2
        bp_plus = asum * (ext.d0 - ext.d_inf) / CG_ISO.alpha1
        assert cgate_delay(CG_ISO, DelayQuery("rising", 2 * bp_plus)) == \
            ext.d_inf + CG_ISO.delta_min

    def test_breakpoints_mark_the_clamp(self):
        for direction in ("rising", "falling"):
            ext = cgate_extremal(CG_ISO, direction)
            bp_plus, bp_minus = cgate_breakpoints(CG_ISO, direction)
            at_plus = cgate_delay(CG_ISO, DelayQuery(direction, bp_plus))
            at_minus = cgate_delay(CG_ISO, DelayQuery(direction, -bp_minus))
            assert at_plus == pytest.approx(ext.d_inf + CG_ISO.delta_min,
                                            rel=1e-14)
            assert at_minus == pytest.approx(ext.d_minus_inf + CG_ISO.delta_min,
                                             rel=1e-14)
        with pytest.raises(ValueError, match="input_direction"):
            cgate_breakpoints(CG_ISO, "sideways")


class TestValidation:
    def test_nor_params_rejected(self):
        with pytest.raises(ParamError):
            NorGateParams(r_n_a=-1.0, r_n_b=2000.0, r=1500.0,
                          alpha1=1e-9, alpha2=1e-9, c_load=1e-15)
        with pytest.raises(ParamError):
            NorGateParams(r_n_a=2000.0, r_n_b=2000.0, r=1500.0,
                          alpha1=0.0, alpha2=1e-9, c_load=1e-15)
        with pytest.raises(ParamError):
            replace(NOR_A, c_load=math.nan)
        with pytest.raises(ParamError):
            replace(NOR_A, r5=-1e-3)
        with pytest.raises(ParamError):
            replace(NOR_A, delta_min=-1e-12)

    def test_cgate_params_rejected(self):
        with pytest.raises(ParamError):
            replace(CG_ISO, alpha3=-1.0)
        with pytest.raises(ParamError):
            replace(CG_ISO, r_p=math.inf)
        with pytest.raises(ParamError):
            replace(CG_ISO, inverted="yes")

    def test_query_rejected(self):
        with pytest.raises(ValueError):
            DelayQuery("sideways", 0.0)
        with pytest.raises(ValueError):
            DelayQuery("rising", math.nan)
        with pytest.raises(ValueError):
            DelayQuery("rising", True)


# bounds keep 2RC(R5+2R)/alpha below ~150 for every alpha subset, well
# inside the Lambert-W domain (the argument underflows near 1070)
nor_params = st.builds(
    NorGateParams,
    r_n_a=st.floats(500.0, 8000.0),
    r_n_b=st.floats(500.0, 8000.0),
    r=st.floats(300.0, 2500.0),
    alpha1=st.floats(5e-10, 1e-8),
    alpha2=st.floats(5e-10, 1e-8),
    c_load=st.floats(5e-16, 2.5e-15),
    r5=st.floats(0.0, 800.0),
    delta_min=st.floats(0.0, 1e-11),
)

cgate_params = st.builds(
    CGateParams,
    r_n=st.floats(300.0, 2500.0),
    r_p=st.floats(300.0, 2500.0),
    alpha1=st.floats(5e-10, 1e-8),
    alpha2=st.floats(5e-10, 1e-8),
    alpha3=st.floats(5e-10, 1e-8),
    alpha4=st.floats(5e-10, 1e-8),
    c_load=st.floats(5e-16, 2.5e-15),
    r5=st.floats(0.0, 800.0),
    delta_min=st.floats(0.0, 1e-11),
)


def scaled_nor(p: NorGateParams, k: float) -> NorGateParams:
    return NorGateParams(r_n_a=p.r_n_a / k, r_n_b=p.r_n_b / k, r=p.r / k,
                         alpha1=p.alpha1 / k, alpha2=p.alpha2 / k,
                         c_load=p.c_load * k, r5=p.r5 / k,
                         delta_min=p.delta_min)


def scaled_cgate(p: CGateParams, k: float) -> CGateParams:
    return CGateParams(r_n=p.r_n / k, r_p=p.r_p / k,
                       alpha1=p.alpha1 / k, alpha2=p.alpha2 / k,
                       alpha3=p.alpha3 / k, alpha4=p.alpha4 / k,
                       c_load=p.c_load * k, r5=p.r5 / k,
                       delta_min=p.delta_min)


class TestNorProperties:
    @given(nor_params)
    @settings(max_examples=80, deadline=None)
    def test_breakpoint_continuity(self, p):
        bps = nor_breakpoints(p)
        cases = (("falling", bps.down_plus, 1.0),
                 ("falling", bps.down_minus, -1.0),
                 ("rising", bps.up_plus, 1.0),
                 ("rising", bps.up_minus, -1.0))
        for direction, bp, sign in cases:
            inside = nor_delay(p, DelayQuery(direction, sign * bp * (1 - 1e-12)))
            clamped = nor_delay(p, DelayQuery(direction, sign * bp))
            assert abs(inside - clamped) <= 1e-15

    @given(nor_params)
    @settings(max_examples=80, deadline=None)
    def test_signed_zero_and_clamping(self, p):
        for direction in ("rising", "falling"):
            plus = nor_delay(p, DelayQuery(direction, 0.0))
            minus = nor_delay(p, DelayQuery(direction, -0.0))
            assert plus == minus
        bps = nor_breakpoints(p)
        assert nor_delay(p, DelayQuery("rising", 3 * bps.up_plus)) == \
            nor_delay(p, DelayQuery("rising", math.inf))
        assert nor_delay(p, DelayQuery("falling", -3 * bps.down_minus)) == \
            nor_delay(p, DelayQuery("falling", -math.inf))

    @given(nor_params)
    @settings(max_examples=60, deadline=None)
    def test_scaling_invariance(self, p):
        bps = nor_breakpoints(p)
        deltas = (0.0, 0.5 * bps.up_plus, -0.7 * bps.down_minus,
                  2 * bps.down_plus, math.inf)
        for k in (0.1, 10.0, 1000.0):
            q = scaled_nor(p, k)
            for direction in ("rising", "falling"):
                for delta in deltas:
                    a = nor_delay(p, DelayQuery(direction, delta))
                    b = nor_delay(q, DelayQuery(direction, delta))
                    assert math.isclose(a, b, rel_tol=1e-12)

    @given(nor_params)
    @settings(max_examples=80, deadline=None)
    def test_positive_beyond_transport(self, p):
        bps = nor_breakpoints(p)
        for direction, bp in (("rising", bps.up_plus),
                              ("falling", bps.down_plus)):
            for delta in (0.0, 0.5 * bp, -2 * bp, math.inf):
                assert nor_delay(p, DelayQuery(direction, delta)) > p.delta_min


class TestCGateProperties:
    @given(cgate_params)
    @settings(max_examples=80, deadline=None)
    def test_continuity_and_clamping(self, p):
        for direction in ("rising", "falling"):
            ext = cgate_extremal(p, direction)
            first, second = ((p.alpha1, p.alpha2) if direction == "rising"
                             else (p.alpha4, p.alpha3))
            asum = first + second
            bp_plus = asum * (ext.d0 - ext.d_inf) / first
            bp_minus = asum * (ext.d0 - ext.d_minus_inf) / second
            for bp, sign in ((bp_plus, 1.0), (bp_minus, -1.0)):
                inside = cgate_delay(p, DelayQuery(direction,
                                                   sign * bp * (1 - 1e-12)))
                clamped = cgate_delay(p, DelayQuery(direction, sign * bp))
                assert abs(inside - clamped) <= 1e-15
            assert cgate_delay(p, DelayQuery(direction, 2 * bp_plus)) == \
                ext.d_inf + p.delta_min

    @given(cgate_params)
    @settings(max_examples=60, deadline=None)
    def test_scaling_invariance(self, p):
        for k in (0.1, 10.0, 1000.0):
            q = scaled_cgate(p, k)
            for direction in ("rising", "falling"):
                for delta in (0.0, 1e-12, -4e-12, math.inf, -math.inf):
                    a = cgate_delay(p, DelayQuery(direction, delta))
                    b = cgate_delay(q, DelayQuery(direction, delta))
                    assert math.isclose(a, b, rel_tol=1e-12)
