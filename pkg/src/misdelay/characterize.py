"""Parameter extraction from measured extremal delays.

Six delays pin down one gate: falling- and rising-output delays at
input separations 0, +inf and -inf.  Delays only constrain R*C
products, so the caller fixes the load capacitance and every
resistance and transient coefficient is referred to that choice.
The exponential (falling NOR) family inverts in closed form; the
switch-on transient families need a one-dimensional root solve for
the series resistance seen by the recharge path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List

from .gates import CGateParams, NorGateParams, ParamError
from .numerics import DomainError, lambert_w_m1, find_root_bracketed

_LN2 = math.log(2.0)

# search window for the pull resistance; outside this range the gate is
# not a gate worth modelling
_R_MIN = 1e-2
_R_MAX = 1e9
_GRID = 128

_DELAY_FIELDS = (
    "d_down_minus_inf", "d_down_zero", "d_down_inf",
    "d_up_minus_inf", "d_up_zero", "d_up_inf",
)


class InvalidMeasurementsError(ValueError):
    """The measured delays cannot come from any gate of the assumed kind.

    `problems` lists every violated requirement, not just the first.
    """

    def __init__(self, problems: Iterable[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class MeasuredDelays:
    """Extremal delays of one gate.

    All delays include the fixed offset `delta_min`.  `c_chosen` is the
    load capacitance the extracted parameters are referred to.
    """

    d_down_minus_inf: float
    d_down_zero: float
    d_down_inf: float
    d_up_minus_inf: float
    d_up_zero: float
    d_up_inf: float
    delta_min: float
    c_chosen: float


def _is_pos(value) -> bool:
    return (isinstance(value, (int, float)) and math.isfinite(value)
            and value > 0.0)


def validate_measured(m: MeasuredDelays, kind: str) -> None:
    """Check a measurement set for structural consistency.

    Raises InvalidMeasurementsError listing every violation found;
    ordering checks are skipped for fields that already failed the
    structural ones.
    """
    if kind not in ("nor2", "cgate"):
        raise ValueError(f"unknown gate kind {kind!r}")
    problems: List[str] = []
    for name in _DELAY_FIELDS:
        if not _is_pos(getattr(m, name)):
            problems.append(f"{name} must be a finite positive delay, "
                            f"got {getattr(m, name)!r}")
    dm_ok = (isinstance(m.delta_min, (int, float))
             and math.isfinite(m.delta_min) and m.delta_min >= 0.0)
    if not dm_ok:
        problems.append(f"delta_min must be finite and non-negative, "
                        f"got {m.delta_min!r}")
    if not _is_pos(m.c_chosen):
        problems.append(f"c_chosen must be a finite positive capacitance, "
                        f"got {m.c_chosen!r}")

    def clean(*names: str) -> bool:
        return all(_is_pos(getattr(m, n)) for n in names)

    if dm_ok:
        for name in _DELAY_FIELDS:
            if clean(name) and getattr(m, name) <= m.delta_min:
                problems.append(f"{name} must exceed delta_min")

    # rising-output delays peak at zero separation for both gate kinds
    for name in ("d_up_inf", "d_up_minus_inf"):
        if clean("d_up_zero", name) and getattr(m, name) >= m.d_up_zero:
            problems.append(f"d_up_zero must exceed {name}")
    if kind == "nor2":
        # both pull-downs acting together is the fastest discharge
        for name in ("d_down_inf", "d_down_minus_inf"):
            if clean("d_down_zero", name) and getattr(m, name) <= m.d_down_zero:
                problems.append(f"{name} must exceed d_down_zero")
    else:
        for name in ("d_down_inf", "d_down_minus_inf"):
            if clean("d_down_zero", name) and getattr(m, name) >= m.d_down_zero:
                problems.append(f"d_down_zero must exceed {name}")
    if problems:
        raise InvalidMeasurementsError(problems)


def _a_from_extremal(t: float, z: float, c: float) -> float:
    """Transient scale a = alpha/(2R) whose extremal crossing sits at t.

    z is the total series resistance of the recharge path.  The delay
    can never fall below the pure-RC bound c*z*ln2, so t at or under it
    has no preimage.
    """
    tau = c * z * _LN2
    if not t > tau:
        raise DomainError(
            f"delay {t:.6g} s is at or below the pure-RC bound {tau:.6g} s")
    u = tau / t
    if u < 1e-3:
        # W+1 and u cancel near the branch point; expand both there
        # instead of subtracting nearly equal numbers
        s = u + (u - 1.0) * math.expm1(u)
        p = math.sqrt(2.0 * s)
        w_plus_1 = -p * (1.0 + p * (1.0 / 3.0 + p * (11.0 / 72.0
                         + p * (43.0 / 540.0 + p * (769.0 / 17280.0)))))
        denom = w_plus_1 - u
    else:
        x = (u - 1.0) * math.exp(u - 1.0)
        denom = lambert_w_m1(x) + 1.0 - u
    return (tau - t) / denom


def alpha_from_extremal_delay(t: float, r: float, r5: float,
                              c: float) -> float:
    """Transient coefficient that makes a lone switch-on transient,
    recharging c through r5 and pull resistance r, cross half supply
    at delay t (offset excluded)."""
    if not _is_pos(t):
        raise DomainError(f"delay must be finite and positive, got {t!r}")
    if not (_is_pos(r) and _is_pos(c)):
        raise DomainError("resistance and capacitance must be positive")
    if not (isinstance(r5, (int, float)) and math.isfinite(r5) and r5 >= 0.0):
        raise DomainError(f"r5 must be finite and non-negative, got {r5!r}")
    return 2.0 * r * _a_from_extremal(t, r5 + 2.0 * r, c)


def _solve_z(t_zero: float, t_first: float, t_second: float, c: float,
             z_lo: float) -> float:
    """Series resistance consistent with the three rising extremals.

    At zero separation both transients act and their scales add, so the
    correct z zeroes a(t_zero) - a(t_first) - a(t_second).
    """

    def g(z: float) -> float:
        return (_a_from_extremal(t_zero, z, c)
                - _a_from_extremal(t_first, z, c)
                - _a_from_extremal(t_second, z, c))

    z_lo = max(z_lo, 2.0 * _R_MIN)
    z_hi = min(t_zero, t_first, t_second) / (c * _LN2) * (1.0 - 1e-12)
    z_hi = min(z_hi, z_lo + 2.0 * _R_MAX)
    if not z_lo < z_hi:
        raise InvalidMeasurementsError(
            ["extremal delays leave no admissible pull resistance"])
    # g can approach either sign limit at the low end, so scan a log
    # grid for a bracket instead of trusting the endpoints
    ratio = z_hi / z_lo
    zs = [z_lo * ratio ** (i / (_GRID - 1)) for i in range(_GRID)]
    gs = [g(z) for z in zs]
    for i in range(_GRID - 1):
        if gs[i] == 0.0:
            return zs[i]
        if gs[i] * gs[i + 1] < 0.0:
            return find_root_bracketed(g, zs[i], zs[i + 1])
    if gs[-1] == 0.0:
        return zs[-1]
    raise InvalidMeasurementsError(
        ["rising extremal delays are mutually inconsistent: no series "
         "resistance makes the zero-separation transient the sum of "
         "the single-input ones"])


def characterize_nor(m: MeasuredDelays) -> NorGateParams:
    """Extract NOR gate parameters from its six extremal delays."""
    validate_measured(m, "nor2")
    t_dm = m.d_down_minus_inf - m.delta_min
    t_d0 = m.d_down_zero - m.delta_min
    t_di = m.d_down_inf - m.delta_min
    t_um = m.d_up_minus_inf - m.delta_min
    t_u0 = m.d_up_zero - m.delta_min
    t_ui = m.d_up_inf - m.delta_min
    ln2c = _LN2 * m.c_chosen

    eps = math.sqrt((t_di - t_d0) * (t_dm - t_d0))
    r5 = (t_d0 - eps) / ln2c
    if r5 < 0.0:
        if r5 > -1e-9 * t_d0 / ln2c:
            r5 = 0.0
        else:
            raise InvalidMeasurementsError(
                ["falling delays imply a negative interconnect resistance"])
    r_n_a = (t_di - t_d0 + eps) / ln2c
    r_n_b = (t_dm - t_d0 + eps) / ln2c

    z = _solve_z(t_u0, t_ui, t_um, m.c_chosen, z_lo=r5 + 2.0 * _R_MIN)
    r = (z - r5) / 2.0
    alpha1 = 2.0 * r * _a_from_extremal(t_um, z, m.c_chosen)
    alpha2 = 2.0 * r * _a_from_extremal(t_ui, z, m.c_chosen)
    return NorGateParams(r_n_a=r_n_a, r_n_b=r_n_b, r=r,
                         alpha1=alpha1, alpha2=alpha2,
                         c_load=m.c_chosen, r5=r5, delta_min=m.delta_min)


def characterize_cgate(m: MeasuredDelays, r5_choice: float = 0.0,
                       inverted: bool = False) -> CGateParams:
    """Extract C gate parameters from its six extremal delays.

    Delays only determine the series totals r5 + 2*r_n and r5 + 2*r_p,
    so the interconnect share is a free convention: any r5_choice in
    [0, min of the two totals) yields the same delay model.
    """
    validate_measured(m, "cgate")
    if not (isinstance(r5_choice, (int, float)) and math.isfinite(r5_choice)
            and r5_choice >= 0.0):
        raise ParamError(f"r5_choice must be finite and non-negative, "
                         f"got {r5_choice!r}")
    t_dm = m.d_down_minus_inf - m.delta_min
    t_d0 = m.d_down_zero - m.delta_min
    t_di = m.d_down_inf - m.delta_min
    t_um = m.d_up_minus_inf - m.delta_min
    t_u0 = m.d_up_zero - m.delta_min
    t_ui = m.d_up_inf - m.delta_min
    if inverted:
        # an inverting stage drives its output up through the p-side
        # pair when the inputs fall, so the measured families swap
        (t_u0, t_ui, t_um), (t_d0, t_di, t_dm) = \
            (t_d0, t_di, t_dm), (t_u0, t_ui, t_um)

    x = _solve_z(t_u0, t_ui, t_um, m.c_chosen, z_lo=2.0 * _R_MIN)
    y = _solve_z(t_d0, t_di, t_dm, m.c_chosen, z_lo=2.0 * _R_MIN)
    if not r5_choice < min(x, y):
        raise ParamError(
            f"r5_choice must stay below {min(x, y):.6g} ohm, the smaller "
            f"of the two series totals")
    r_n = (x - r5_choice) / 2.0
    r_p = (y - r5_choice) / 2.0
    alpha1 = 2.0 * r_n * _a_from_extremal(t_um, x, m.c_chosen)
    alpha2 = 2.0 * r_n * _a_from_extremal(t_ui, x, m.c_chosen)
    alpha3 = 2.0 * r_p * _a_from_extremal(t_di, y, m.c_chosen)
    alpha4 = 2.0 * r_p * _a_from_extremal(t_dm, y, m.c_chosen)
    return CGateParams(r_n=r_n, r_p=r_p,
                       alpha1=alpha1, alpha2=alpha2,
                       alpha3=alpha3, alpha4=alpha4,
                       c_load=m.c_chosen, r5=float(r5_choice),
                       delta_min=m.delta_min, inverted=inverted)
