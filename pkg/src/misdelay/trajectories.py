"""Analytic output trajectories and independent delay oracles.

The closed-form delay families in :mod:`misdelay.gates` are compact
approximations of a mode-switched first-order circuit.  This module
carries the underlying machinery: the exact per-mode output voltage
trajectories (with the interconnect folded in by a constant divider),
the implicit crossing function for the rising-output family, and two
delay oracles that do not share code with the closed forms:

* trajectory inversion, which chains mode trajectories and bisects the
  threshold crossing;
* full ODE integration with the exact time-varying interconnect
  divider f(t), the only place the constant-divider approximation is
  dropped.

Voltages are ratiometric: the supply defaults to 1.0 and the switching
threshold is half the supply, so delays are independent of the chosen
scale.  Mode kinds name the input-state transition, e.g. "01->00"
means input A was already low and input B falls now.  ModeSwitch.delta
is the nonnegative separation between the two input transitions of a
double transition; the order is carried by the kind itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .gates import CGateParams, NorGateParams, effective_caps
from .numerics import (
    DomainError,
    NoCrossingError,
    OdeSolution,
    Tolerance,
    bisect_threshold_crossing,
    integrate_ode,
)

__all__ = [
    "ModeSwitch",
    "TrajectoryContext",
    "trajectory_context",
    "eval_trajectory",
    "implicit_I",
    "delay_by_inversion",
    "integrate_full_ode",
    "delay_by_ode",
    "PiecewiseSolution",
    "NOR_MODE_KINDS",
    "CGATE_MODE_KINDS",
]

# input-state transitions; "ab->a'b'" with a = input A, b = input B
NOR_MODE_KINDS = frozenset({
    "00->10", "00->01", "10->11", "01->11",
    "11->10", "11->01", "01->00", "10->00",
})
CGATE_MODE_KINDS = NOR_MODE_KINDS

_DOUBLE_UP = {"10->11", "01->11"}     # second input rises
_DOUBLE_DOWN = {"01->00", "10->00"}   # second input falls

# starting integration a tick after a switch keeps the 1/t transient
# coefficients finite; the voltage moved in that tick is O(1e-9) of the
# supply for any realistic parameter set
_T_EPS = 1e-18


@dataclass(frozen=True)
class ModeSwitch:
    """One conduction-mode change of a gate.

    kind: the input-state transition ("ab->a'b'").
    delta: separation in seconds between the two input transitions of a
        double transition (nonnegative; +inf means the first input
        switched in the unbounded past).  Ignored for single
        transitions out of a settled state.
    initial_v: output voltage when the mode begins; None selects the
        natural steady level (supply for discharging modes, 0 for the
        drive-up modes).
    """

    kind: str
    delta: float = 0.0
    initial_v: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in NOR_MODE_KINDS:
            raise ValueError(f"unknown mode kind {self.kind!r}")
        if math.isnan(self.delta) or self.delta < 0.0:
            raise ValueError(f"delta must be >= 0, got {self.delta!r}")


@dataclass(frozen=True)
class TrajectoryContext:
    """Derived constants of one double-falling-input trajectory.

    a = (alpha_aged + alpha_fresh) / 2R, d = a + delta,
    c_prime = alpha_fresh * delta / 2R, chi = d^2 - 4 c_prime, and
    a_exp the coefficient splitting the two power-law factors.  c_eff
    is the divider-corrected load for the mode, v_th = v_dd / 2.
    """

    a: float
    d: float
    chi: float
    c_prime: float
    a_exp: float
    c_eff: float
    v_dd: float
    v_th: float


def _dual_transient_context(alpha_aged: float, alpha_fresh: float, r: float,
                            delta: float, c_eff: float,
                            v_dd: float) -> TrajectoryContext:
    two_r = 2.0 * r
    a = (alpha_aged + alpha_fresh) / two_r
    if math.isinf(delta):
        # aged transistor fully settled: single-transient limit
        af = alpha_fresh / two_r
        return TrajectoryContext(a=af, d=math.inf, chi=math.inf, c_prime=math.inf,
                                 a_exp=0.0, c_eff=c_eff, v_dd=v_dd,
                                 v_th=0.5 * v_dd)
    d = a + delta
    c_prime = alpha_fresh * delta / two_r
    # chi = d^2 - 4 c' >= (alpha_fresh/2R - delta)^2 >= 0; the stable
    # forms below avoid the cancellation for small c'
    ratio = 4.0 * c_prime / (d * d)
    if ratio > 1.0:
        raise DomainError(f"negative discriminant chi for delta={delta!r}")
    sqrt_chi = d * math.sqrt(1.0 - ratio)
    chi = d * d - 4.0 * c_prime
    if sqrt_chi > 0.0:
        p_minus = 4.0 * c_prime / (d + sqrt_chi)  # = d - sqrt(chi), stably
        a_exp = (c_prime - 0.5 * a * p_minus) / sqrt_chi
    else:
        a_exp = 0.0
    return TrajectoryContext(a=a, d=d, chi=chi, c_prime=c_prime, a_exp=a_exp,
                             c_eff=c_eff, v_dd=v_dd, v_th=0.5 * v_dd)


def _log_phi(ctx: TrajectoryContext, r: float, t: float, delta: float) -> float:
    """log of the homogeneous decay factor of a dual-transient mode."""
    tau = 2.0 * r * ctx.c_eff
    if math.isinf(delta):
        af = ctx.a
        return (-t + af * math.log1p(t / af)) / tau
    if delta < 1e-6 * ctx.a:
        # near-simultaneous switching: the exact form degenerates and
        # loses all precision; use its analytic limit
        return (-t + ctx.a * math.log1p(t / ctx.a)) / tau
    sqrt_chi = math.sqrt(ctx.chi) if ctx.chi > 0.0 else 0.0
    p_plus = ctx.d + sqrt_chi
    p_minus = 4.0 * ctx.c_prime / p_plus
    return (-t
            + (ctx.a - ctx.a_exp) * math.log1p(2.0 * t / p_plus)
            + ctx.a_exp * math.log1p(2.0 * t / p_minus)) / tau


def _mode_constants(params, kind: str, delta: float, v_dd: float):
    """Resolve per-mode law: ('exp', tau) | ('dual', ctx, r, toward_vdd)
    | ('hold',)."""
    if isinstance(params, NorGateParams):
        caps = effective_caps(params)
        if kind in ("00->10", "11->10"):
            return ("exp", caps.c1 * params.r_n_a)
        if kind in ("00->01", "11->01"):
            return ("exp", caps.c1_prime * params.r_n_b)
        if kind in _DOUBLE_UP:
            rpar = params.r_n_a * params.r_n_b / (params.r_n_a + params.r_n_b)
            return ("exp", caps.c2 * rpar)
        aged, fresh = ((params.alpha1, params.alpha2) if kind == "01->00"
                       else (params.alpha2, params.alpha1))
        ctx = _dual_transient_context(aged, fresh, params.r, delta, caps.c3,
                                      v_dd)
        return ("dual", ctx, params.r, True)
    if isinstance(params, CGateParams):
        if kind in _DOUBLE_UP:
            aged, fresh = ((params.alpha1, params.alpha2) if kind == "10->11"
                           else (params.alpha2, params.alpha1))
            r = params.r_n
            c_eff = params.c_load * (params.r5 + 2.0 * r) / (2.0 * r)
            ctx = _dual_transient_context(aged, fresh, r, delta, c_eff, v_dd)
            return ("dual", ctx, r, True)
        if kind in _DOUBLE_DOWN:
            aged, fresh = ((params.alpha4, params.alpha3) if kind == "01->00"
                           else (params.alpha3, params.alpha4))
            r = params.r_p
            c_eff = params.c_load * (params.r5 + 2.0 * r) / (2.0 * r)
            ctx = _dual_transient_context(aged, fresh, r, delta, c_eff, v_dd)
            return ("dual", ctx, r, False)
        # single transition breaks the conduction path; the keeper holds
        return ("hold",)
    raise TypeError(f"unsupported params type {type(params).__name__}")


def trajectory_context(params, ms: ModeSwitch, v_dd: float = 1.0) -> TrajectoryContext:
    """Derived constants for a dual-transient mode (see TrajectoryContext)."""
    law = _mode_constants(params, ms.kind, ms.delta, v_dd)
    if law[0] != "dual":
        raise ValueError(f"mode {ms.kind!r} has no dual-transient context")
    return law[1]


def eval_trajectory(ms: ModeSwitch, params, t: float, v_dd: float = 1.0) -> float:
    """Closed-form output voltage of one mode, t seconds after its start."""
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    law = _mode_constants(params, ms.kind, ms.delta, v_dd)
    if law[0] == "hold":
        return ms.initial_v if ms.initial_v is not None else v_dd
    if law[0] == "exp":
        v0 = ms.initial_v if ms.initial_v is not None else v_dd
        return v0 * math.exp(-t / law[1])
    _, ctx, r, toward_vdd = law
    phi = math.exp(_log_phi(ctx, r, t, ms.delta))
    if toward_vdd:
        v0 = ms.initial_v if ms.initial_v is not None else 0.0
        return v_dd + (v0 - v_dd) * phi
    v0 = ms.initial_v if ms.initial_v is not None else v_dd
    return v0 * phi


def implicit_I(t: float, delta: float, params,
               input_direction: str = "falling") -> float:
    """Implicit crossing function of the drive-toward-supply family.

    Returns phi(t, delta) - 1/2 where phi is the homogeneous decay
    factor of the dual-transient mode whose later input switches at
    t = 0; the root in t is the family delay before the transport term.
    Requires delta >= 0 (the mirrored family is obtained by exchanging
    the two transient coefficients, which delay_by_inversion does).
    For NOR parameters input_direction is necessarily "falling"; for C
    gate parameters it selects the input-pair direction.
    """
    if math.isnan(delta) or delta < 0.0:
        raise ValueError(f"delta must be >= 0, got {delta!r}")
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    if isinstance(params, NorGateParams):
        kind = "01->00"
    elif input_direction == "falling":
        kind = "01->00"
    else:
        kind = "10->11"
    law = _mode_constants(params, kind, delta, 1.0)
    _, ctx, r, _ = law
    return math.exp(_log_phi(ctx, r, t, delta)) - 0.5


def _bisect_phi_half(ctx: TrajectoryContext, r: float, delta: float,
                     hint: float) -> float:
    """Root of phi = 1/2; phi decays monotonically from 1."""
    phi = lambda t: math.exp(_log_phi(ctx, r, t, delta))
    hi = max(hint, 1e-15)
    for _ in range(200):
        if phi(hi) < 0.5:
            break
        hi *= 2.0
    else:
        raise NoCrossingError("drive trajectory never reaches threshold")
    return bisect_threshold_crossing(phi, 0.5, 0.0, hi, Tolerance(abs=1e-17))


def delay_by_inversion(gate_kind: str, direction: str, delta: float, params,
                       ) -> float:
    """Oracle delay by inverting the chained closed-form trajectories.

    Falling NOR outputs chain the single-input discharge into the dual
    discharge and are referenced to the first input transition; rising
    NOR outputs (and both C gate families) solve the implicit crossing
    of the dual-transient drive, referenced to the second transition.
    The transport delay delta_min is included, matching nor_delay and
    cgate_delay conventions.
    """
    if math.isnan(delta):
        raise ValueError("delta must not be NaN")
    if direction not in ("rising", "falling"):
        raise ValueError(f"direction must be rising or falling, got {direction!r}")
    if gate_kind == "nor2":
        if not isinstance(params, NorGateParams):
            raise TypeError("gate_kind nor2 needs NorGateParams")
        if direction == "falling":
            return _nor_fall_by_inversion(params, delta)
        return _nor_rise_by_inversion(params, delta)
    if gate_kind == "cgate":
        if not isinstance(params, CGateParams):
            raise TypeError("gate_kind cgate needs CGateParams")
        return _cgate_by_inversion(params, direction, delta)
    raise ValueError(f"unknown gate_kind {gate_kind!r}")


def _nor_fall_by_inversion(p: NorGateParams, delta: float) -> float:
    caps = effective_caps(p)
    if delta >= 0.0:
        tau1 = caps.c1 * p.r_n_a
    else:
        tau1 = caps.c1_prime * p.r_n_b
    sep = abs(delta)
    rpar = p.r_n_a * p.r_n_b / (p.r_n_a + p.r_n_b)
    tau2 = caps.c2 * rpar

    def traj(t: float) -> float:
        if t <= sep:
            return math.exp(-t / tau1)
        # handoff keeps the voltage continuous at the second transition
        return math.exp(-sep / tau1) * math.exp(-(t - sep) / tau2)

    hi = math.log(2.0) * tau1 * 1.0000001 if math.isinf(sep) else \
        min(sep, math.log(2.0) * tau1) + 40.0 * tau2
    t_cross = bisect_threshold_crossing(traj, 0.5, 0.0, hi, Tolerance(abs=1e-17))
    return t_cross + p.delta_min


def _nor_rise_by_inversion(p: NorGateParams, delta: float) -> float:
    if delta >= 0.0:
        aged, fresh = p.alpha1, p.alpha2
    else:
        aged, fresh = p.alpha2, p.alpha1
    sep = abs(delta)
    caps = effective_caps(p)
    ctx = _dual_transient_context(aged, fresh, p.r, sep, caps.c3, 1.0)
    hint = 8.0 * p.r * caps.c3 + (aged + fresh) / p.r
    return _bisect_phi_half(ctx, p.r, sep, hint) + p.delta_min


def _cgate_by_inversion(p: CGateParams, direction: str, delta: float) -> float:
    pair_rising = (direction == "rising") != p.inverted
    if pair_rising:
        first, second, r = p.alpha1, p.alpha2, p.r_n
    else:
        first, second, r = p.alpha4, p.alpha3, p.r_p
    aged, fresh = (first, second) if delta >= 0.0 else (second, first)
    sep = abs(delta)
    c_eff = p.c_load * (p.r5 + 2.0 * r) / (2.0 * r)
    ctx = _dual_transient_context(aged, fresh, r, sep, c_eff, 1.0)
    hint = 8.0 * r * c_eff + (aged + fresh) / r
    return _bisect_phi_half(ctx, r, sep, hint) + p.delta_min


class PiecewiseSolution:
    """Chained dense ODE solutions over consecutive modes."""

    def __init__(self, segments: list[tuple[float, OdeSolution]]):
        # segments: (absolute start time, solution in local mode time)
        self.segments = segments

    @property
    def t0(self) -> float:
        return self.segments[0][0]

    @property
    def t1(self) -> float:
        start, sol = self.segments[-1]
        return start + sol.t1

    @property
    def v1(self) -> float:
        return self.segments[-1][1].v1

    def __call__(self, t: float) -> float:
        for start, sol in reversed(self.segments):
            if t >= start:
                return sol(min(max(t - start, sol.t0), sol.t1))
        start, sol = self.segments[0]
        return sol(sol.t0)


def _ode_rhs(params, kind: str, delta: float, exact_f: bool, v_dd: float):
    """Right-hand side dv/dt = f(s) * (drive - v) / (C * rg(s)) for one mode.

    s is local mode time.  Returns None for non-conducting modes.
    """
    c, r5 = params.c_load, params.r5
    if isinstance(params, NorGateParams):
        if kind in ("00->10", "11->10"):
            rg_const, drive = params.r_n_a, 0.0
        elif kind in ("00->01", "11->01"):
            rg_const, drive = params.r_n_b, 0.0
        elif kind in _DOUBLE_UP:
            rg_const = params.r_n_a * params.r_n_b / (params.r_n_a + params.r_n_b)
            drive = 0.0
        else:
            aged, fresh = ((params.alpha1, params.alpha2) if kind == "01->00"
                           else (params.alpha2, params.alpha1))
            return _dual_rhs(c, r5, aged, fresh, 2.0 * params.r, delta,
                             exact_f, v_dd)
        return _const_rhs(c, r5, rg_const, drive)
    if kind in _DOUBLE_UP:
        aged, fresh = ((params.alpha1, params.alpha2) if kind == "10->11"
                       else (params.alpha2, params.alpha1))
        return _dual_rhs(c, r5, aged, fresh, 2.0 * params.r_n, delta,
                         exact_f, v_dd)
    if kind in _DOUBLE_DOWN:
        aged, fresh = ((params.alpha4, params.alpha3) if kind == "01->00"
                       else (params.alpha3, params.alpha4))
        return _dual_rhs(c, r5, aged, fresh, 2.0 * params.r_p, delta,
                         exact_f, 0.0)
    return None


def _const_rhs(c: float, r5: float, rg: float, drive: float):
    # constant conduction path: the divider is exact, no approximation
    tau = c * (r5 + rg)

    def rhs(s: float, v: float) -> float:
        return (drive - v) / tau

    return rhs


def _dual_rhs(c: float, r5: float, aged: float, fresh: float, r_series: float,
              delta: float, exact_f: bool, drive: float):
    if exact_f:
        def rhs(s: float, v: float) -> float:
            rg = aged / (s + delta) + fresh / s + r_series
            return (drive - v) / (c * (r5 + rg))
    else:
        f_const = r_series / (r5 + r_series)

        def rhs(s: float, v: float) -> float:
            rg = aged / (s + delta) + fresh / s + r_series
            return f_const * (drive - v) / (c * rg)
    return rhs


def integrate_full_ode(modes, params, t_end: float, exact_f: bool = True,
                       v_dd: float = 1.0,
                       tol: Tolerance = Tolerance(rel=1e-10, abs=1e-13),
                       ) -> PiecewiseSolution:
    """Numerically integrate the output through a sequence of modes.

    modes[0] starts at t = 0 with its initial_v (or the natural steady
    level); each later mode starts its own delta after the previous one
    and inherits the running voltage, so the trajectory is continuous.
    Integration runs to t_end; the last mode must contain it.
    """
    if not modes:
        raise ValueError("empty mode sequence")
    starts = [0.0]
    for ms in modes[1:]:
        if math.isinf(ms.delta):
            raise ValueError("only the first mode may have infinite delta")
        starts.append(starts[-1] + ms.delta)
    if t_end <= starts[-1]:
        raise ValueError(f"t_end={t_end!r} does not reach the last mode")

    first = modes[0]
    law = _mode_constants(params, first.kind, first.delta, v_dd)
    if first.initial_v is not None:
        v = first.initial_v
    elif law[0] == "dual" and law[3]:
        v = 0.0
    else:
        v = v_dd

    segments: list[tuple[float, OdeSolution]] = []
    for i, ms in enumerate(modes):
        seg_end = (starts[i + 1] if i + 1 < len(modes) else t_end) - starts[i]
        rhs = _ode_rhs(params, ms.kind, ms.delta, exact_f, v_dd)
        if rhs is None:
            # non-conducting mode: hold v
            sol = OdeSolution([0.0, seg_end], [v, v], [0.0, 0.0])
        else:
            sol = integrate_ode(rhs, _T_EPS, seg_end, v, tol)
        segments.append((starts[i], sol))
        v = sol.v1
    return PiecewiseSolution(segments)


def delay_by_ode(gate_kind: str, direction: str, delta: float, params,
                 exact_f: bool = True,
                 tol: Tolerance = Tolerance(rel=1e-10, abs=1e-13)) -> float:
    """Oracle delay from full ODE integration of the canonical mode chain.

    Reference conventions and delta_min handling match
    delay_by_inversion.  With exact_f=True this is the only delay in
    the package free of the constant-divider interconnect
    approximation.
    """
    inv_hint = delay_by_inversion(gate_kind, direction, delta, params)
    horizon = 12.0 * max(inv_hint - params.delta_min, 1e-15)
    sep = abs(delta)

    if gate_kind == "nor2":
        if not isinstance(params, NorGateParams):
            raise TypeError("gate_kind nor2 needs NorGateParams")
        if direction == "falling":
            if delta >= 0.0:
                chain = ["00->10", "10->11"]
            else:
                chain = ["00->01", "01->11"]
            if math.isinf(sep):
                modes = [ModeSwitch(chain[0], delta=math.inf)]
            elif sep == 0.0:
                modes = [ModeSwitch(chain[1], delta=0.0, initial_v=1.0)]
            else:
                modes = [ModeSwitch(chain[0]), ModeSwitch(chain[1], delta=sep)]
            t_end = (0.0 if math.isinf(sep) else sep) + horizon
        else:
            kind = "01->00" if delta >= 0.0 else "10->00"
            modes = [ModeSwitch(kind, delta=sep, initial_v=0.0)]
            t_end = horizon
    elif gate_kind == "cgate":
        if not isinstance(params, CGateParams):
            raise TypeError("gate_kind cgate needs CGateParams")
        pair_rising = (direction == "rising") != params.inverted
        if pair_rising:
            kind = "10->11" if delta >= 0.0 else "01->11"
            initial = 0.0
        else:
            kind = "01->00" if delta >= 0.0 else "10->00"
            initial = 1.0
        modes = [ModeSwitch(kind, delta=sep, initial_v=initial)]
        t_end = horizon
    else:
        raise ValueError(f"unknown gate_kind {gate_kind!r}")

    sol = integrate_full_ode(modes, params, t_end, exact_f=exact_f, tol=tol)
    # the crossing may sit in any segment (a falling output past the
    # single-input limit crosses before the second transition arrives),
    # so bisect the chained solution as a whole; it is monotone
    t_cross = bisect_threshold_crossing(sol, 0.5, 0.0, sol.t1,
                                        Tolerance(abs=1e-17))
    return t_cross + params.delta_min
