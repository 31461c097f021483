"""Spatial Schwarzschild profile in horizon-distance gauge and its bending.

The Schwarzschild metric of mass ``m`` outside its horizon is
``ds^2 + u(s)^2 g_*`` with

    u(0) = r0 = (2m)^(1/(n-1)),   u'(0) = 0,
    u' = sqrt(1 - 2m / u^(n-1)),   u'' = (n-1) m / u^n.

The first-order equation is not Lipschitz at the horizon, so the profile is
integrated from the regular second-order equation and the first-order one is
monitored as a conserved quantity.

Bending replaces ``u`` near the horizon by ``u(sigma(s))`` where
``sigma' = 1 + exp(-(lam / (s0 - s))^2)`` below ``s0`` and ``sigma(s) = s``
above it, giving positive scalar curvature on the bent zone.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import erfc

from .errors import PositivityFailed, SearchExhausted, StepFailure
from .geometry import RadialProfile, warped_curvature_values
from .mollifiers import flat_exp

# predicted curvature below which the computed value is dominated by round-off
RESOLVED_CURVATURE = 1e-9


def horizon_radius(m, n):
    return (2.0 * m) ** (1.0 / (n - 1))


def default_s_max(m, n):
    return max(100.0, 50.0 * horizon_radius(m, n))


class SchwarzschildProfile(RadialProfile):
    """Schwarzschild warping function ``u_m`` on ``[0, s_max]``.

    Attributes
    ----------
    mass, r0 : float
        Mass parameter and horizon radius.
    residual_first, residual_second : float
        Sup over the sample points of the residuals of the first-order
        equation (in squared form) and of the second-order equation.
    """

    def __init__(self, mass, n, s_max, solution, samples):
        self.mass = float(mass)
        self.r0 = horizon_radius(mass, n)
        self._sol = solution
        super().__init__(0.0, s_max, n, self._evaluate, samples)
        self.residual_first = float(np.max(np.abs(self.first_order_residual(samples))))
        self.residual_second = float(np.max(np.abs(self.second_order_residual(samples))))

    def _evaluate(self, s):
        s = np.asarray(s, dtype=float)
        u, up = self._sol(s)
        return u, up, (self.n - 1) * self.mass / u**self.n

    def first_order_residual(self, s):
        """``u'^2 - (1 - 2m/u^(n-1))``; the squared form stays well conditioned at s=0."""
        u, up, _ = self._evaluate(s)
        return up**2 - (1.0 - 2.0 * self.mass / u ** (self.n - 1))

    def second_order_residual(self, s, h=1e-3):
        """Fourth-order central difference of ``u'`` minus ``(n-1) m / u^n``."""
        s = np.clip(np.asarray(s, dtype=float), 2 * h, self.stop - 2 * h)
        up = lambda t: self._sol(t)[1]  # noqa: E731
        fd = (-up(s + 2 * h) + 8 * up(s + h) - 8 * up(s - h) + up(s - 2 * h)) / (12 * h)
        u = self._sol(s)[0]
        return fd - (self.n - 1) * self.mass / u**self.n


def solve_profile(m, n, s_max=None, tol=1e-10, samples=4001):
    """Integrate the Schwarzschild profile from the horizon.

    Parameters
    ----------
    m : float
        Mass, positive.
    n : int
        Dimension of the spherical fibre (>= 3).
    s_max : float, optional
        End of the interval; defaults to ``max(100, 50 r0)``.
    tol : float
        Required bound on both equation residuals at the sample points.

    Raises
    ------
    StepFailure
        If the integrator fails or the residual target is not met.
    """
    if m <= 0:
        raise ValueError("mass must be positive")
    if n < 3:
        raise ValueError("fibre dimension must be >= 3")
    s_max = default_s_max(m, n) if s_max is None else float(s_max)
    if s_max <= 0:
        raise ValueError("s_max must be positive")
    r0 = horizon_radius(m, n)

    def rhs(s, y):
        return [y[1], (n - 1) * m / y[0] ** n]

    sol = solve_ivp(
        rhs, (0.0, s_max), [r0, 0.0], method="DOP853", rtol=1e-13, atol=1e-14 * r0, dense_output=True
    )
    if not sol.success:
        raise StepFailure(f"Schwarzschild integration failed: {sol.message}")
    # denser sampling near the horizon where the profile bends most
    grid = np.unique(np.concatenate([np.linspace(0.0, s_max, samples), np.geomspace(1e-6, 1.0, 400) * min(s_max, 4 * r0)]))
    prof = SchwarzschildProfile(m, n, s_max, sol.sol, grid)
    if prof.residual_first > tol or prof.residual_second > 10 * tol:
        raise StepFailure(
            f"residuals {prof.residual_first:.2e}, {prof.residual_second:.2e} exceed tolerance {tol:.1e}"
        )
    return prof


def _bump(x, lam):
    """``exp(-(lam/x)^2)`` for ``x > 0``; zero for ``x <= 0``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = flat_exp((lam / x[pos]) ** 2)
    return out


def _bump_integral(x, lam):
    """Antiderivative of the bump vanishing at ``x = 0``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    out[pos] = xp * flat_exp((lam / xp) ** 2) - np.sqrt(np.pi) * lam * erfc(lam / xp)
    return out


class BentProfile(RadialProfile):
    """``u_m(sigma(s))`` on ``[s0 - delta, s_max]``.

    ``sigma(s) = s - J(s0 - s)`` where ``J`` is the antiderivative of the
    bump, so ``sigma(s0) = s0`` and ``sigma = id`` beyond ``s0`` exactly.
    ``bump_scale`` (``lam``) sets the width of ``exp(-(lam/x)^2)``;
    ``lam = 1`` is the unscaled bump ``exp(-1/x^2)``.
    """

    def __init__(self, base, s0, delta, bump_scale=None):
        if not 0 < delta < s0:
            raise ValueError("need 0 < delta < s0")
        self.base = base
        self.s0 = float(s0)
        self.delta = float(delta)
        self.bump_scale = 2.0 * self.delta if bump_scale is None else float(bump_scale)
        self.closure_constant = self.s0 - self.delta - float(_bump_integral(np.array([self.delta]), self.bump_scale)[0])
        start = self.s0 - self.delta
        samples = np.unique(
            np.concatenate(
                [
                    np.linspace(start, self.s0, 2001),
                    self.s0 - self.delta * np.geomspace(1e-6, 1.0, 200),
                    base.samples[base.samples > self.s0],
                ]
            )
        )
        super().__init__(start, base.stop, base.n, self._evaluate, samples)

    def sigma(self, s):
        """Return ``sigma, sigma', sigma''`` at ``s``."""
        s = np.asarray(s, dtype=float)
        x = self.s0 - s
        lam = self.bump_scale
        E = _bump(x, lam)
        sig = s - _bump_integral(x, lam)
        d2 = np.zeros_like(s)
        pos = E > 0
        d2[pos] = -E[pos] * 2.0 * lam**2 / x[pos] ** 3
        return sig, 1.0 + E, d2

    def _evaluate(self, s):
        sig, sp, spp = self.sigma(s)
        u, up, upp = self.base.derivatives(sig)
        return u, up * sp, upp * sp**2 + up * spp

    def inequality_factor(self, s):
        """Bending inequality divided by the bump.

        The left side ``(n-1)(1 - sigma'^2) - 2 u u' sigma''`` equals
        ``E * (4 u u' lam^2 / x^3 - (n-1)(2 + E))`` with ``E`` the bump; the
        bracket keeps its sign information where ``E`` underflows.
        """
        s = np.asarray(s, dtype=float)
        x = self.s0 - s
        if np.any(x <= 0):
            raise ValueError("the factor is defined on the bent zone only")
        lam = self.bump_scale
        E = _bump(x, lam)
        sig = s - _bump_integral(x, lam)
        u, up, _ = self.base.derivatives(sig)
        return 4.0 * u * up * lam**2 / x**3 - (self.n - 1) * (2.0 + E)

    def inequality_lhs(self, s):
        """``(n-1)(1 - sigma'^2) - 2 u(sigma) u'(sigma) sigma''``."""
        sig, sp, spp = self.sigma(s)
        u, up, _ = self.base.derivatives(sig)
        return (self.n - 1) * (1.0 - sp**2) - 2.0 * u * up * spp

    def bent_samples(self, count=4001):
        """Sample points of ``[s0 - delta, s0)`` clustered toward ``s0``."""
        return np.unique(
            np.concatenate(
                [
                    np.linspace(self.start, self.s0, count, endpoint=False),
                    self.s0 - self.delta * np.geomspace(1e-9, 1.0, 400),
                ]
            )
        )


def bend(profile, s0, delta, bump_scale=None, require_convex=False):
    """Bend ``profile`` on ``[s0 - delta, s0]``.

    Raises
    ------
    PositivityFailed
        If the bending inequality (or, with ``require_convex``, ``f'' > 0``)
        fails at a sample, or the reparametrized start leaves the horizon
        chart.
    """
    if not 0 < delta < s0:
        raise ValueError("need 0 < delta < s0")
    bent = BentProfile(profile, s0, delta, bump_scale)
    if bent.closure_constant < 0:
        raise PositivityFailed(delta, bent.closure_constant)
    s = bent.bent_samples()
    margin = float(np.min(bent.inequality_factor(s)))
    if margin <= 0:
        raise PositivityFailed(delta, margin)
    if require_convex:
        fpp = bent(s, 2)
        if np.min(fpp) <= 0:
            raise PositivityFailed(delta, float(np.min(fpp)))
    return bent


def search_delta(profile, s0, shrink=1.5, max_tries=40, bump_ratio=2.0, require_convex=True):
    """Largest ``delta`` in ``{s0/2, s0/(2*shrink), ...}`` accepted by :func:`bend`.

    The bump width is tied to the bend width, ``lam = bump_ratio * delta``.
    """
    delta = 0.5 * s0
    last = None
    for _ in range(max_tries):
        try:
            return bend(profile, s0, delta, bump_ratio * delta, require_convex)
        except PositivityFailed as exc:
            last = exc
        delta /= shrink
    raise SearchExhausted(f"no admissible bend width at s0={s0:.6g} (last margin {last.margin:.3e})")


@dataclass
class BendReport:
    """Curvature evidence for a bent profile.

    ``min_curvature`` is the minimum of the warped-line curvature over bent
    samples where the curvature predicted by the factored inequality is at
    least ``RESOLVED_CURVATURE``.  Closer to ``s0`` the exact curvature is
    below double precision and ``max_abs_unresolved`` bounds what is
    computed there.
    """

    min_curvature: float
    resolved_until: float
    max_abs_unresolved: float
    max_abs_flat: float
    min_inequality_factor: float
    passed: bool


def verify_bent_psc(bent, flat_tol=1e-8):
    """Recompute the bent profile's scalar curvature through the warped-line operator."""
    s = bent.bent_samples()
    f, fp, fpp = bent.derivatives(s)
    R = warped_curvature_values(f, fp, fpp, bent.n)
    E = _bump(bent.s0 - s, bent.bump_scale)
    predicted = bent.n / f**2 * E * bent.inequality_factor(s)
    resolved = predicted >= RESOLVED_CURVATURE
    flat_s = bent.samples[bent.samples >= bent.s0]
    R_flat = warped_curvature_values(*bent.derivatives(flat_s), bent.n)
    min_R = float(np.min(R[resolved])) if resolved.any() else float("nan")
    unresolved = float(np.max(np.abs(R[~resolved]))) if (~resolved).any() else 0.0
    factor = float(np.min(bent.inequality_factor(s)))
    max_flat = float(np.max(np.abs(R_flat)))
    passed = bool(min_R > 0 and unresolved < flat_tol and max_flat < flat_tol and factor > 0)
    return BendReport(
        min_curvature=min_R,
        resolved_until=float(s[resolved].max()) if resolved.any() else bent.start,
        max_abs_unresolved=unresolved,
        max_abs_flat=max_flat,
        min_inequality_factor=factor,
        passed=passed,
    )


def profile_table(profile, s=None):
    """Columns ``s, f, f', f'', R`` for CSV export."""
    s = profile.samples if s is None else np.asarray(s, dtype=float)
    f, fp, fpp = profile.derivatives(s)
    return np.column_stack([s, f, fp, fpp, warped_curvature_values(f, fp, fpp, profile.n)])
