"""Scalar numeric kernels used by the delay models.

Everything here is deterministic, dependency-free and double precision:
the lower Lambert W branch, Brent root bracketing, threshold-crossing
bisection, and an adaptive embedded Runge-Kutta integrator with dense
output.  These are the only nontrivial numerics the rest of the package
relies on.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

__all__ = [
    "Tolerance",
    "DomainError",
    "NoSignChangeError",
    "NoCrossingError",
    "ConvergenceError",
    "StepUnderflowError",
    "lambert_w_m1",
    "find_root_bracketed",
    "bisect_threshold_crossing",
    "integrate_ode",
    "OdeSolution",
]


class DomainError(ValueError):
    """Argument lies outside the mathematical domain of the function."""


class NoSignChangeError(ValueError):
    """Root bracket does not actually bracket a sign change."""


class NoCrossingError(ValueError):
    """Trajectory does not cross the requested level inside the window."""


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted before reaching the tolerance."""


class StepUnderflowError(RuntimeError):
    """Adaptive step control drove the step size below the resolvable floor."""


@dataclass(frozen=True)
class Tolerance:
    """Accuracy request for the iterative routines.

    rel and abs combine into the usual mixed criterion
    ``abs + rel * scale``; max_iter bounds the iteration count.
    """

    rel: float = 1e-12
    abs: float = 0.0
    max_iter: int = 100

    def __post_init__(self) -> None:
        if not (self.rel > 0.0) or not math.isfinite(self.rel):
            raise ValueError(f"tolerance rel must be finite and > 0, got {self.rel!r}")
        if not (self.abs >= 0.0) or not math.isfinite(self.abs):
            raise ValueError(f"tolerance abs must be finite and >= 0, got {self.abs!r}")
        if self.max_iter < 1:
            raise ValueError(f"tolerance max_iter must be >= 1, got {self.max_iter!r}")


_EXP_NEG1 = math.exp(-1.0)

# Coefficients of the branch-point series W(x) = -1 - p - p^2/3 - ... with
# p = sqrt(2(1 + e*x)); see Corless et al., "On the Lambert W function".
_BRANCH_SERIES = (-1.0, -1.0, -1.0 / 3.0, -11.0 / 72.0, -43.0 / 540.0,
                  -769.0 / 17280.0, -221.0 / 8505.0)


def _residual(w: float, x: float) -> float:
    # w * e^w - x, with e^w underflow treated as an exact zero
    try:
        ew = math.exp(w)
    except OverflowError:  # pragma: no cover - w <= -1 never overflows
        raise
    return w * ew - x


def _mantissa_trailing_zeros(w: float) -> int:
    m = int(abs(math.frexp(w)[0]) * (1 << 53))
    return (m & -m).bit_length() - 1


def _snap_to_best_neighbor(w: float, x: float) -> float:
    # Final cleanup: among w and its two float neighbors, return the one
    # minimizing |w e^w - x|.  Adjacent floats can tie at residual 0.0
    # when double arithmetic cannot separate them; ties go to the value
    # with the most trailing zero mantissa bits so that exactly
    # representable roots (e.g. -2.0 for x = -2 exp(-2)) win.
    candidates = (w, math.nextafter(w, -math.inf), math.nextafter(w, math.inf))
    return min(candidates,
               key=lambda c: (abs(_residual(c, x)), -_mantissa_trailing_zeros(c)))


def lambert_w_m1(x: float) -> float:
    """Lower branch W_-1 of the Lambert W function.

    Defined for x in [-1/e, 0); returns the solution w <= -1 of
    w * exp(w) = x.  Accurate to roughly machine precision in the
    defining residual over the whole branch, including arguments within
    a few ulp of the branch point and subnormally small magnitudes.
    """
    if math.isnan(x):
        raise DomainError("lambert_w_m1: x is NaN")
    if x >= 0.0:
        raise DomainError(f"lambert_w_m1: x must be negative, got {x!r}")
    if x < -_EXP_NEG1:
        raise DomainError(
            f"lambert_w_m1: x={x!r} below branch point -1/e={-_EXP_NEG1!r}")

    # Distance above the branch point, computed cancellation-free:
    # s = 1 + e*x = -expm1(1 + log(-x)).
    log_neg_x = math.log(-x)
    s = -math.expm1(1.0 + log_neg_x)
    if s <= 0.0:
        # x is the branch point (or within rounding of it)
        return -1.0

    p = math.sqrt(2.0 * s)
    if s <= 1e-4:
        # Branch-point series; truncation error ~ p^7 is far below the
        # residual floor here because d(w e^w)/dw vanishes at the branch.
        w = 0.0
        for coef in reversed(_BRANCH_SERIES):
            w = w * p + coef
        # Horner above gives c0 + p(c1 + p(...)); c0 term is -1.
        return _snap_to_best_neighbor(w, x)

    # Initial guess: branch-point series close in, asymptotic expansion
    # in log(-x) farther out.
    if s < 0.5:
        w = -1.0 - p - p * p / 3.0 - 11.0 * p ** 3 / 72.0
    else:
        l1 = log_neg_x
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1 + l2 * (l2 - 2.0) / (2.0 * l1 * l1)
    if w >= -1.0:
        w = -1.0 - p

    # Safeguarded Newton on the log form g(w) = w + log(-w) - log(-x),
    # which is immune to exp underflow for very negative w.
    lo, hi = -760.0, -1.0  # covers subnormal x down to 5e-324
    if w <= lo or w >= hi:
        w = 0.5 * (lo + hi)
    for _ in range(80):
        g = w + math.log(-w) - log_neg_x
        if g > 0.0:
            # g is increasing in w on (-inf, -1)
            hi = w
        else:
            lo = w
        gp = 1.0 + 1.0 / w
        if gp <= 0.0:
            step = 0.0
        else:
            step = g / gp
        w_next = w - step
        if not (lo < w_next < hi):
            w_next = 0.5 * (lo + hi)
        if abs(w_next - w) <= 1e-15 * abs(w_next):
            w = w_next
            break
        w = w_next
    else:
        raise ConvergenceError(f"lambert_w_m1: no convergence for x={x!r}")

    # One Halley polish in the direct residual when exp(w) is resolvable.
    if w > -700.0:
        ew = math.exp(w)
        f = w * ew - x
        fp = ew * (w + 1.0)
        if fp != 0.0:
            denom = fp - f * (w + 2.0) / (2.0 * (w + 1.0))
            if denom != 0.0:
                w -= f / denom
    return _snap_to_best_neighbor(w, x)


def find_root_bracketed(f, a: float, b: float, tol: Tolerance = Tolerance()) -> float:
    """Find a root of f on [a, b] by Brent's method.

    The endpoints must bracket a sign change (an exact zero at either
    endpoint is returned directly).  Convergence criterion is the usual
    ``tol.abs + tol.rel * |x|`` interval width.
    """
    if not (a < b):
        raise ValueError(f"invalid bracket [{a!r}, {b!r}]")
    fa = f(a)
    fb = f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise NoSignChangeError(
            f"f({a!r})={fa!r} and f({b!r})={fb!r} have the same sign")

    c, fc = a, fa
    d = e = b - a
    for _ in range(tol.max_iter):
        if (fb > 0.0) == (fc > 0.0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol_here = 2.0 * math.ulp(b) + 0.5 * (tol.abs + tol.rel * abs(b))
        m = 0.5 * (c - b)
        if abs(m) <= tol_here or fb == 0.0:
            return b
        if abs(e) < tol_here or abs(fa) <= abs(fb):
            d = e = m
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            else:
                p = -p
            if 2.0 * p < min(3.0 * m * q - abs(tol_here * q), abs(e * q)):
                e = d
                d = p / q
            else:
                d = e = m
        a, fa = b, fb
        if abs(d) > tol_here:
            b += d
        else:
            b += tol_here if m > 0.0 else -tol_here
        fb = f(b)
    raise ConvergenceError(
        f"find_root_bracketed: {tol.max_iter} iterations exhausted")


def bisect_threshold_crossing(trajectory, level: float, t_lo: float, t_hi: float,
                              tol: Tolerance = Tolerance(abs=1e-16)) -> float:
    """Locate where a monotone trajectory crosses a level by bisection.

    Returns the midpoint of the final bracket once its width is at most
    ``tol.abs``.  Raises NoCrossingError when trajectory - level has the
    same sign at both window ends.
    """
    if not (t_lo < t_hi):
        raise ValueError(f"invalid window [{t_lo!r}, {t_hi!r}]")
    if tol.abs <= 0.0:
        raise ValueError("bisect_threshold_crossing needs tol.abs > 0")
    g_lo = trajectory(t_lo) - level
    g_hi = trajectory(t_hi) - level
    if g_lo == 0.0:
        return t_lo
    if g_hi == 0.0:
        return t_hi
    if (g_lo > 0.0) == (g_hi > 0.0):
        raise NoCrossingError(
            f"no crossing of level {level!r} in [{t_lo!r}, {t_hi!r}]")
    lo_positive = g_lo > 0.0
    # ceil(log2(width/tol)) iterations reach the requested bracket width;
    # the +8 covers pathological float spacing near the endpoints.
    for _ in range(int(math.log2(max((t_hi - t_lo) / tol.abs, 1.0))) + 8):
        if t_hi - t_lo <= tol.abs:
            break
        mid = 0.5 * (t_lo + t_hi)
        if mid <= t_lo or mid >= t_hi:
            break  # bracket narrowed to adjacent floats
        g_mid = trajectory(mid) - level
        if g_mid == 0.0:
            return mid
        if (g_mid > 0.0) == lo_positive:
            t_lo = mid
        else:
            t_hi = mid
    return 0.5 * (t_lo + t_hi)


# Dormand-Prince 5(4) tableau.
_DP_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_DP_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
     -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
     11.0 / 84.0),
)
_DP_B5 = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
          11.0 / 84.0, 0.0)
_DP_B4 = (5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0,
          -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0)

_MIN_STEP = 1e-18


class OdeSolution:
    """Dense ODE solution: piecewise cubic Hermite over accepted steps."""

    __slots__ = ("ts", "vs", "dvs")

    def __init__(self, ts, vs, dvs):
        self.ts = ts
        self.vs = vs
        self.dvs = dvs

    @property
    def t0(self) -> float:
        return self.ts[0]

    @property
    def t1(self) -> float:
        return self.ts[-1]

    @property
    def v1(self) -> float:
        return self.vs[-1]

    def __call__(self, t: float) -> float:
        ts = self.ts
        if t <= ts[0]:
            if t < ts[0] - 1e-30:
                raise ValueError(f"t={t!r} before solution start {ts[0]!r}")
            return self.vs[0]
        if t >= ts[-1]:
            if t > ts[-1] + max(1e-30, 1e-12 * abs(ts[-1])):
                raise ValueError(f"t={t!r} after solution end {ts[-1]!r}")
            return self.vs[-1]
        i = bisect_right(ts, t) - 1
        h = ts[i + 1] - ts[i]
        x = (t - ts[i]) / h
        v0, v1 = self.vs[i], self.vs[i + 1]
        d0, d1 = self.dvs[i] * h, self.dvs[i + 1] * h
        x2 = x * x
        x3 = x2 * x
        return ((2.0 * x3 - 3.0 * x2 + 1.0) * v0
                + (x3 - 2.0 * x2 + x) * d0
                + (-2.0 * x3 + 3.0 * x2) * v1
                + (x3 - x2) * d1)


def integrate_ode(f, t0: float, t1: float, v0: float,
                  tol: Tolerance = Tolerance(rel=1e-10, abs=1e-12)) -> OdeSolution:
    """Integrate dv/dt = f(t, v) from t0 to t1 with adaptive RK5(4).

    Returns a dense OdeSolution.  Step acceptance uses the mixed local
    error criterion ``|err| <= tol.abs + tol.rel * max(|v|, |v_new|)``.
    Raises StepUnderflowError if controlling the error would need steps
    below 1e-18 (stiff or singular right-hand side).  The integration is
    exactly reproducible: identical inputs give identical solutions.
    """
    if not (t1 > t0):
        raise ValueError(f"integrate_ode needs t1 > t0, got [{t0!r}, {t1!r}]")
    ts = [t0]
    vs = [v0]
    k1 = f(t0, v0)
    dvs = [k1]
    t, v = t0, v0
    h = (t1 - t0) / 64.0
    k = [0.0] * 7
    k[0] = k1
    max_steps = 1_000_000
    for _ in range(max_steps):
        if t >= t1:
            return OdeSolution(ts, vs, dvs)
        h = min(h, t1 - t)
        if h < _MIN_STEP:
            raise StepUnderflowError(
                f"step size {h!r} below {_MIN_STEP!r} at t={t!r}")
        for i in range(1, 7):
            vi = v
            a_row = _DP_A[i]
            for j in range(i):
                if a_row[j] != 0.0:
                    vi += h * a_row[j] * k[j]
            k[i] = f(t + _DP_C[i] * h, vi)
        v5 = v
        err = 0.0
        for j in range(7):
            if _DP_B5[j] != 0.0:
                v5 += h * _DP_B5[j] * k[j]
            err += h * (_DP_B5[j] - _DP_B4[j]) * k[j]
        scale = tol.abs + tol.rel * max(abs(v), abs(v5))
        if scale <= 0.0:
            scale = tol.abs if tol.abs > 0.0 else 1e-300
        ratio = abs(err) / scale
        if ratio <= 1.0:
            t, v = t + h, v5
            ts.append(t)
            vs.append(v)
            k[0] = k[6]  # FSAL; a rejected step keeps the old stage-1 slope
            dvs.append(k[0])
        factor = 0.9 * (1.0 / ratio) ** 0.2 if ratio > 0.0 else 5.0
        h *= min(5.0, max(0.2, factor))
    raise ConvergenceError(f"integrate_ode: exceeded {max_steps} steps")
