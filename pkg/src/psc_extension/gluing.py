"""Gluing two convex PSC warping functions.

Two profiles ``f1`` on ``[a1, b1]`` and ``f2`` on ``[a2, b2]`` with
``f1(b1) < f2(a2)`` and equal slopes at the ends are joined by translating
the second interval so that the line of slope ``f1'(b1)`` through
``(b1, f1(b1))`` hits ``(a2, f2(a2))``.  The resulting C^1 profile has
second-derivative jumps at ``b1`` and ``a2``, which are removed by a
mollification whose radius ``nu * eta(t)`` vanishes away from the bridge.

A warped metric ``dt^2 + f^2 g_*`` has positive scalar curvature exactly
when ``f'' < Omega[f] = (n-1)(1 - f'^2) / (2 f)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import HypothesisViolated, SearchExhausted
from .geometry import RadialProfile, warped_curvature_values
from .mollifiers import piecewise_mollify, smoothstep

SLOPE_TOL = 1e-10


@dataclass
class GlueInput:
    f1: RadialProfile
    f2: RadialProfile
    n: int


def omega_values(f, fp, n):
    return (n - 1) * (1.0 - fp**2) / (2.0 * f)


def omega(f, h=1e-5):
    """``Omega[f]`` as a profile on the same interval.

    The first derivative is exact; the second is a central difference of it.
    """
    n = f.n

    def d1(s):
        v, vp, vpp = f.derivatives(s)
        return (n - 1) * (-2.0 * vp * vpp * v - (1.0 - vp**2) * vp) / (2.0 * v**2)

    def func(s):
        v, vp, _ = f.derivatives(s)
        step = h * max(1.0, f.stop - f.start)
        return omega_values(v, vp, n), d1(s), (d1(s + step) - d1(s - step)) / (2 * step)

    return RadialProfile(f.start, f.stop, n, func, f._samples)


def check_hypotheses(glue_input, samples=2001):
    """Raise :class:`HypothesisViolated` naming the first failed hypothesis."""
    n = glue_input.n
    for name, f in (("f1", glue_input.f1), ("f2", glue_input.f2)):
        s = np.linspace(f.start, f.stop, samples)
        v, vp, vpp = f.derivatives(s)
        if np.min(v) <= 0 or np.min(vp) <= 0 or np.min(vpp) <= 0:
            raise HypothesisViolated("I", f"{name} must be positive, increasing and convex")
        R = warped_curvature_values(v, vp, vpp, n)
        if np.min(R) <= 0:
            raise HypothesisViolated("II", f"{name} has scalar curvature down to {np.min(R):.3e}")
    f1b, s1 = [float(x[0]) for x in glue_input.f1.derivatives(np.array([glue_input.f1.stop]))[:2]]
    f2a, s2 = [float(x[0]) for x in glue_input.f2.derivatives(np.array([glue_input.f2.start]))[:2]]
    if not f1b < f2a:
        raise HypothesisViolated("III", f"need f1(b1) < f2(a2), got {f1b:.12g} >= {f2a:.12g}")
    if abs(s1 - s2) >= SLOPE_TOL:
        raise HypothesisViolated("III", f"slope mismatch {abs(s1 - s2):.3e}")


def translation_gap(f1_end, f2_start, slope):
    """Length of the linear bridge: ``(f2(a2) - f1(b1)) / f1'(b1)``."""
    return (f2_start - f1_end) / slope


def translate_intervals(glue_input):
    """Shift ``f2`` so the line of slope ``f1'(b1)`` joins both ends.

    Returns the translated input and the applied offset.
    """
    f1, f2 = glue_input.f1, glue_input.f2
    f1b, s1, _ = f1.derivatives(np.array([f1.stop]))
    f2a = f2(np.array([f2.start]))
    gap = translation_gap(float(f1b[0]), float(f2a[0]), float(s1[0]))
    offset = f1.stop + gap - f2.start
    return GlueInput(f1, f2.shifted(offset), glue_input.n), offset


def bridged(glue_input):
    """The C^1 profile ``f~``: ``f1``, the linear bridge, then ``f2`` (already translated)."""
    f1, f2 = glue_input.f1, glue_input.f2
    b1, a2 = f1.stop, f2.start
    y0, sl, _ = [float(x[0]) for x in f1.derivatives(np.array([b1]))]

    def func(s):
        s = np.asarray(s, dtype=float)
        out = [np.empty_like(s), np.empty_like(s), np.empty_like(s)]
        left, right = s <= b1, s >= a2
        mid = ~left & ~right
        for mask, f in ((left, f1), (right, f2)):
            if mask.any():
                vals = f.derivatives(s[mask])
                for o in range(3):
                    out[o][mask] = vals[o]
        out[0][mid] = y0 + sl * (s[mid] - b1)
        out[1][mid] = sl
        out[2][mid] = 0.0
        return tuple(out)

    return RadialProfile(f1.start, f2.stop, glue_input.n, func)


class Cutoff:
    """``eta``: 0 outside ``[m1, m2]``, 1 on ``[lo, hi]``, smooth steps between."""

    def __init__(self, m1, lo, hi, m2):
        self.m1, self.lo, self.hi, self.m2 = m1, lo, hi, m2

    def __call__(self, t, order=0):
        t = np.asarray(t, dtype=float)
        up = smoothstep((t - self.m1) / (self.lo - self.m1), order) / (self.lo - self.m1) ** order
        down = smoothstep((self.m2 - t) / (self.m2 - self.hi), order) * (-1.0 / (self.m2 - self.hi)) ** order
        if order == 0:
            return np.where(t <= self.hi, up, down)
        return np.where(t <= 0.5 * (self.hi + self.lo), up, down)


def mollify_variable(ftilde, nu, cutoff, breaks):
    """``f_nu(t) = int f~(t - nu eta(t) s) phi(s) ds`` with two derivatives.

    Where ``eta = 0`` the values of ``f~`` are returned unchanged.
    """

    def func(t):
        t = np.asarray(t, dtype=float)
        f, fp, fpp = (np.array(v, dtype=float, copy=True) for v in ftilde.derivatives(t))
        eta = cutoff(t)
        act = eta > 0
        if not act.any():
            return f, fp, fpp
        ta = t[act]
        r = nu * eta[act]
        e1 = nu * cutoff(ta, 1)
        e2 = nu * cutoff(ta, 2)

        def part(order):
            return lambda y: ftilde.derivatives(y.ravel())[order].reshape(y.shape)

        f0, f1_, f2_ = part(0), part(1), part(2)
        f[act] = piecewise_mollify(lambda y, s, i: f0(y), ta, r, breaks)
        fp[act] = piecewise_mollify(lambda y, s, i: f1_(y) * (1.0 - e1[i, None] * s), ta, r, breaks)
        fpp[act] = piecewise_mollify(
            lambda y, s, i: f2_(y) * (1.0 - e1[i, None] * s) ** 2 - f1_(y) * e2[i, None] * s, ta, r, breaks
        )
        return f, fp, fpp

    return RadialProfile(ftilde.start, ftilde.stop, ftilde.n, func)


@dataclass
class GlueResult:
    f: RadialProfile
    nu: float
    delta_cut: float
    margin: float
    required_margin: float
    offset: float
    m1: float
    m2: float
    b1: float
    a2: float
    verified_points: int


def _check_grid(a, b, keys, nu, refine=1):
    base = np.linspace(a, b, 4001 * refine)
    windows = [np.linspace(k - 3 * nu, k + 3 * nu, 801 * refine) for k in keys]
    return np.unique(np.clip(np.concatenate([base, *windows]), a, b))


def glue(glue_input, nu_floor=1e-12, shrink=0.5):
    """Glue ``f1`` and ``f2`` into one PSC profile on ``[a1, b2 + offset]``.

    Raises
    ------
    HypothesisViolated
        If (I) positivity/monotonicity/convexity, (II) positive curvature or
        (III) the height and slope conditions fail, or the bridge slope is
        at least 1 (no positive curvature on a line of that slope).
    SearchExhausted
        If no mollification radius above ``nu_floor`` verifies.
    """
    check_hypotheses(glue_input)
    n = glue_input.n
    slope = float(glue_input.f1(np.array([glue_input.f1.stop]), 1)[0])
    if slope >= 1.0:
        raise HypothesisViolated("II", f"bridge slope {slope:.6g} >= 1 leaves no positive curvature on the bridge")
    moved, offset = translate_intervals(glue_input)
    ft = bridged(moved)
    a1, b1 = moved.f1.start, moved.f1.stop
    a2, b2 = moved.f2.start, moved.f2.stop
    m1, m2 = 0.5 * (a1 + b1), 0.5 * (a2 + b2)
    delta_cut = 0.5 * min(b1 - m1, m2 - a2)
    cutoff = Cutoff(m1, b1 - delta_cut, a2 + delta_cut, m2)
    gap = a2 - b1

    s = _check_grid(a1, b2, (b1, a2), 0.0)
    v, vp, vpp = ft.derivatives(s)
    margin3 = float(np.min(omega_values(v, vp, n) - vpp))
    if margin3 <= 0:
        raise HypothesisViolated("II", f"bridged profile violates the curvature inequality ({margin3:.3e})")
    d = margin3 / 3.0

    # the mollification window must stay inside the cut-off plateau
    nu = min(gap / 4.0, delta_cut) if gap > 0 else delta_cut
    while nu >= nu_floor:
        f = mollify_variable(ft, nu, cutoff, (b1, a2))
        ok, worst, pts = _verify(f, n, (b1, a2), nu, d, refine=1)
        if ok:
            ok, worst, pts = _verify(f, n, (b1, a2), nu, d, refine=4)
            if ok:
                f._samples = _check_grid(a1, b2, (b1, a2), nu)
                return GlueResult(f, nu, delta_cut, worst, d, offset, m1, m2, b1, a2, pts)
        nu *= shrink
    raise SearchExhausted(f"no mollification radius above {nu_floor:.0e} verified")


def _verify(f, n, keys, nu, d, refine):
    s = _check_grid(f.start, f.stop, keys, nu, refine)
    v, vp, vpp = f.derivatives(s)
    gapv = omega_values(v, vp, n) - vpp
    worst = float(np.min(gapv))
    R = warped_curvature_values(v, vp, vpp, n)
    ok = worst >= d and np.min(vp) > 0 and np.min(v) > 0 and np.min(R) > 0
    return bool(ok), worst, int(s.size)


def glue_table(result):
    """Rows ``(t, f, f', f'', Omega[f], R)`` of the glued profile."""
    f = result.f
    s = f.samples
    v, vp, vpp = f.derivatives(s)
    return np.column_stack([s, v, vp, vpp, omega_values(v, vp, f.n), warped_curvature_values(v, vp, vpp, f.n)])
