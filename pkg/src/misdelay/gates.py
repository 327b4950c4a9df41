"""Closed-form gate delay families with input-separation dependence.

A 2-input gate hit by transitions on both inputs does not show a single
pair of up/down delays: the delay depends on the separation
``delta = t_b - t_a`` between the two input transitions (the Charlie
effect).  This module provides the piecewise closed forms for the four
delay families of a 2-input NOR gate and of a Muller C gate, their
single-input limits, and the breakpoints where the finite-separation
branch hands over to the clamped branch.

Sign convention: delta > 0 means input B switched after input A.
delta = +/-inf selects the single-input-switching limits directly.
All quantities are SI (seconds, ohms, farads); alpha parameters are
ohm-seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Tuple

from .numerics import DomainError, lambert_w_m1

__all__ = [
    "ParamError",
    "NorGateParams",
    "CGateParams",
    "EffectiveCaps",
    "ExtremalDelays",
    "Breakpoints",
    "DelayQuery",
    "effective_caps",
    "nor_extremal_rising",
    "nor_breakpoints",
    "nor_delay",
    "cgate_extremal",
    "cgate_breakpoints",
    "cgate_delay",
]

_LN2 = math.log(2.0)


class ParamError(ValueError):
    """Gate parameter set violates a validity constraint."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ParamError(msg)


def _check_positive(name: str, value: float) -> None:
    _require(isinstance(value, (int, float)) and math.isfinite(value) and value > 0.0,
             f"{name} must be finite and > 0, got {value!r}")


def _check_nonnegative(name: str, value: float) -> None:
    _require(isinstance(value, (int, float)) and math.isfinite(value) and value >= 0.0,
             f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class NorGateParams:
    """First-order switched-resistor parameters of a 2-input NOR gate.

    r_n_a, r_n_b: on-resistances of the two pulldown transistors.
    r: common scale of the two pullup on-resistances (their series
       stack settles at 2r).
    alpha1, alpha2: switch-on transient coefficients of the pullups,
       for the first and second switching input respectively.
    c_load: output load capacitance.
    r5: series interconnect resistance between gate and load.
    delta_min: pure interconnect transport delay, added to every delay.
    """

    r_n_a: float
    r_n_b: float
    r: float
    alpha1: float
    alpha2: float
    c_load: float
    r5: float = 0.0
    delta_min: float = 0.0

    def __post_init__(self) -> None:
        for name in ("r_n_a", "r_n_b", "r", "alpha1", "alpha2", "c_load"):
            _check_positive(name, getattr(self, name))
        _check_nonnegative("r5", self.r5)
        _check_nonnegative("delta_min", self.delta_min)


@dataclass(frozen=True)
class CGateParams:
    """First-order switched-resistor parameters of a Muller C gate.

    r_n, r_p: per-transistor on-resistances of the pulldown and pullup
       stacks (each stack settles at twice its value).
    alpha1, alpha2: switch-on transients engaged by a rising input
       pair, for the earlier and later input respectively.
    alpha3, alpha4: same for a falling input pair.
    inverted: True if the stored output is the negated consensus; this
       only affects which delay family a given output direction maps to.
    """

    r_n: float
    r_p: float
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    c_load: float
    r5: float = 0.0
    delta_min: float = 0.0
    inverted: bool = False

    def __post_init__(self) -> None:
        for name in ("r_n", "r_p", "alpha1", "alpha2", "alpha3", "alpha4",
                     "c_load"):
            _check_positive(name, getattr(self, name))
        _check_nonnegative("r5", self.r5)
        _check_nonnegative("delta_min", self.delta_min)
        _require(isinstance(self.inverted, bool),
                 f"inverted must be a bool, got {self.inverted!r}")


class EffectiveCaps(NamedTuple):
    """Mode-dependent effective load capacitances of a NOR gate.

    The series interconnect resistance is folded into the load by a
    constant voltage-divider factor per conduction mode: c1/c1_prime
    for single pulldown A/B, c2 for both pulldowns, c3 for the pullup
    stack.
    """

    c1: float
    c1_prime: float
    c2: float
    c3: float


class ExtremalDelays(NamedTuple):
    """Delays of one family at delta = 0, +inf and -inf (no transport term)."""

    d0: float
    d_inf: float
    d_minus_inf: float


class Breakpoints(NamedTuple):
    """|delta| values where each NOR family reaches its clamped branch."""

    down_plus: float
    down_minus: float
    up_plus: float
    up_minus: float


_DIRECTIONS = ("rising", "falling")


@dataclass(frozen=True)
class DelayQuery:
    """One delay lookup: output transition direction and input separation."""

    output_direction: str
    delta: float

    def __post_init__(self) -> None:
        if self.output_direction not in _DIRECTIONS:
            raise ValueError(
                f"output_direction must be one of {_DIRECTIONS}, "
                f"got {self.output_direction!r}")
        if isinstance(self.delta, bool) or not isinstance(self.delta, (int, float)):
            raise ValueError(f"delta must be a float, got {self.delta!r}")
        if math.isnan(self.delta):
            raise ValueError("delta must not be NaN")


def effective_caps(p: NorGateParams) -> EffectiveCaps:
    """Constant-divider effective capacitances for the four NOR modes."""
    c, r5 = p.c_load, p.r5
    return EffectiveCaps(
        c1=c * (r5 + p.r_n_a) / p.r_n_a,
        c1_prime=c * (r5 + p.r_n_b) / p.r_n_b,
        c2=c * (r5 * (p.r_n_a + p.r_n_b) + p.r_n_a * p.r_n_b)
        / (p.r_n_a * p.r_n_b),
        c3=c * (r5 + 2.0 * p.r) / (2.0 * p.r),
    )


def _extremal_delay(alpha_sum: float, r: float, r5: float, c: float) -> float:
    """Threshold-crossing time of the switch-on transient pullup mode.

    Solves the crossing of the rising trajectory driven through two
    series transistors of half-resistance r with combined transient
    coefficient alpha_sum, against load c behind interconnect r5.
    """
    q = 2.0 * r * c * (r5 + 2.0 * r) / alpha_sum
    e = q * _LN2
    if e < 1e-4:
        # forming -exp(-1-e) and taking W of it loses e to rounding;
        # expand 1+W about the branch point from e directly instead
        p = math.sqrt(-2.0 * math.expm1(-e))
        return (alpha_sum / (2.0 * r)) * p * (
            1.0 + p * (1.0 / 3.0 + p * (11.0 / 72.0 + p * (43.0 / 540.0
            + p * (769.0 / 17280.0 + p * (221.0 / 8505.0))))))
    arg = -math.exp(-1.0 - e)
    if arg == 0.0:
        raise DomainError(
            "switch-on transient is negligible against the RC constant "
            f"(exponent {e:.3g}); the crossing-time argument underflows")
    w = lambert_w_m1(arg)
    return -(alpha_sum / (2.0 * r)) * (1.0 + w)


@lru_cache(maxsize=512)
def _nor_extremals(p: NorGateParams) -> ExtremalDelays:
    return ExtremalDelays(
        d0=_extremal_delay(p.alpha1 + p.alpha2, p.r, p.r5, p.c_load),
        d_inf=_extremal_delay(p.alpha2, p.r, p.r5, p.c_load),
        d_minus_inf=_extremal_delay(p.alpha1, p.r, p.r5, p.c_load),
    )


def nor_extremal_rising(p: NorGateParams) -> ExtremalDelays:
    """Rising-output delays at delta = 0 and in the two one-sided limits.

    The transport term delta_min is not included.
    """
    return _nor_extremals(p)


class _NorTables(NamedTuple):
    # precomputed constants so the hot path is a few flops
    dmin: float
    fall_k: float            # down-family delay at delta = 0
    fall_frac_pos: float     # c2*r_n_b / (c1*(r_n_a + r_n_b))
    fall_frac_neg: float
    bp_down_plus: float
    bp_down_minus: float
    d0: float
    d_inf: float
    d_minus_inf: float
    rise_slope_pos: float    # alpha1 / (alpha1 + alpha2)
    rise_slope_neg: float
    bp_up_plus: float
    bp_up_minus: float


@lru_cache(maxsize=512)
def _nor_tables(p: NorGateParams) -> _NorTables:
    caps = effective_caps(p)
    ra, rb = p.r_n_a, p.r_n_b
    fall_k = _LN2 * caps.c2 * ra * rb / (ra + rb)
    ext = _nor_extremals(p)
    asum = p.alpha1 + p.alpha2
    return _NorTables(
        dmin=p.delta_min,
        fall_k=fall_k,
        fall_frac_pos=caps.c2 * rb / (caps.c1 * (ra + rb)),
        fall_frac_neg=caps.c2 * ra / (caps.c1_prime * (ra + rb)),
        bp_down_plus=_LN2 * caps.c1 * ra,
        bp_down_minus=_LN2 * caps.c1_prime * rb,
        d0=ext.d0,
        d_inf=ext.d_inf,
        d_minus_inf=ext.d_minus_inf,
        rise_slope_pos=p.alpha1 / asum,
        rise_slope_neg=p.alpha2 / asum,
        bp_up_plus=asum * (ext.d0 - ext.d_inf) / p.alpha1,
        bp_up_minus=asum * (ext.d0 - ext.d_minus_inf) / p.alpha2,
    )


def nor_breakpoints(p: NorGateParams) -> Breakpoints:
    """|delta| beyond which each family sits on its single-input branch."""
    t = _nor_tables(p)
    return Breakpoints(t.bp_down_plus, t.bp_down_minus, t.bp_up_plus,
                       t.bp_up_minus)


def _nor_delay_value(t: _NorTables, rising: bool, delta: float) -> float:
    if rising:
        if delta >= 0.0:
            if delta >= t.bp_up_plus:
                return t.d_inf + t.dmin
            return t.d0 - t.rise_slope_pos * delta + t.dmin
        mag = -delta
        if mag >= t.bp_up_minus:
            return t.d_minus_inf + t.dmin
        return t.d0 - t.rise_slope_neg * mag + t.dmin
    if delta >= 0.0:
        if delta >= t.bp_down_plus:
            return t.bp_down_plus + t.dmin
        return t.fall_k - t.fall_frac_pos * delta + delta + t.dmin
    mag = -delta
    if mag >= t.bp_down_minus:
        return t.bp_down_minus + t.dmin
    return t.fall_k - t.fall_frac_neg * mag + mag + t.dmin


def nor_delay(p: NorGateParams, q: DelayQuery) -> float:
    """Delay of a NOR output transition for input separation q.delta.

    Falling outputs are referenced to the first rising input, rising
    outputs to the second falling input.  The result includes the
    interconnect transport delay delta_min.
    """
    return _nor_delay_value(_nor_tables(p), q.output_direction == "rising",
                            q.delta)


class _CGateFamily(NamedTuple):
    dmin: float
    d0: float
    d_inf: float
    d_minus_inf: float
    slope_pos: float
    slope_neg: float
    bp_plus: float
    bp_minus: float


@lru_cache(maxsize=512)
def _cgate_family(p: CGateParams, pair_rising: bool) -> _CGateFamily:
    if pair_rising:
        # rising input pair drives the nMOS stack
        a_first, a_second, r = p.alpha1, p.alpha2, p.r_n
    else:
        # falling input pair drives the pMOS stack; the aged/fresh roles
        # of the two coefficients mirror the rising case
        a_first, a_second, r = p.alpha4, p.alpha3, p.r_p
    asum = a_first + a_second
    d0 = _extremal_delay(asum, r, p.r5, p.c_load)
    d_inf = _extremal_delay(a_second, r, p.r5, p.c_load)
    d_minus_inf = _extremal_delay(a_first, r, p.r5, p.c_load)
    return _CGateFamily(
        dmin=p.delta_min,
        d0=d0,
        d_inf=d_inf,
        d_minus_inf=d_minus_inf,
        slope_pos=a_first / asum,
        slope_neg=a_second / asum,
        bp_plus=asum * (d0 - d_inf) / a_first,
        bp_minus=asum * (d0 - d_minus_inf) / a_second,
    )


def cgate_extremal(p: CGateParams, input_direction: str) -> ExtremalDelays:
    """C gate family extremals for a rising or falling input pair.

    The transport term delta_min is not included.
    """
    if input_direction not in _DIRECTIONS:
        raise ValueError(
            f"input_direction must be one of {_DIRECTIONS}, "
            f"got {input_direction!r}")
    fam = _cgate_family(p, input_direction == "rising")
    return ExtremalDelays(fam.d0, fam.d_inf, fam.d_minus_inf)


def cgate_breakpoints(p: CGateParams, input_direction: str) -> Tuple[float, float]:
    """(plus, minus) |delta| values where this input pair's family clamps."""
    if input_direction not in _DIRECTIONS:
        raise ValueError(
            f"input_direction must be one of {_DIRECTIONS}, "
            f"got {input_direction!r}")
    fam = _cgate_family(p, input_direction == "rising")
    return fam.bp_plus, fam.bp_minus


def _cgate_delay_value(fam: _CGateFamily, delta: float) -> float:
    if delta >= 0.0:
        if delta >= fam.bp_plus:
            return fam.d_inf + fam.dmin
        return fam.d0 - fam.slope_pos * delta + fam.dmin
    mag = -delta
    if mag >= fam.bp_minus:
        return fam.d_minus_inf + fam.dmin
    return fam.d0 - fam.slope_neg * mag + fam.dmin


def cgate_delay(p: CGateParams, q: DelayQuery) -> float:
    """Delay of a C gate output transition for input separation q.delta.

    The query names the output direction; with inverted=True a rising
    output is produced by a falling input pair and vice versa.  Delays
    are referenced to the second input transition and include
    delta_min.
    """
    pair_rising = (q.output_direction == "rising") != p.inverted
    return _cgate_delay_value(_cgate_family(p, pair_rising), q.delta)
