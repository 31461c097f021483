"""Paths of axisymmetric metrics on S^n and their normalizations.

A :class:`MetricPath` is a family ``h(t)``, ``t in [0, 1]``, given by an
evaluator returning the nodal coefficients ``(a, beta)`` or their first or
second t-derivatives.  The operations here build paths (conformal straight
line, mollified piecewise-linear paths) and transform them: constant volume,
plateau reparametrization, and the pullback that makes the volume form
t-independent.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.integrate import solve_ivp
from scipy.interpolate import make_interp_spline

from .errors import InputNotPSC, NotPSC, PathPositivityFailed, PositivityLost, SolveFailure
from .geometry import (
    AxiMetric,
    c2_distance,
    curvature_values,
    laplacian_matrix,
    scalar_curvature_conformal,
    sphere_volume,
)
from .mollifiers import BUMP_MASS, bump, piecewise_mollify, smoothstep

DEFAULT_T_SAMPLES = 33


class MetricPath:
    """A t-family of axisymmetric metrics with two t-derivatives.

    Parameters
    ----------
    grid : AngularGrid
    evaluator : callable
        ``evaluator(t, order)`` with ``t`` a 1-d array returns the pair
        ``(a, beta)`` of t-derivatives of the given order, each of shape
        ``(len(t), grid.size)``.
    base : MetricPath, optional
        For a plateau path, the path it reparametrizes.
    """

    def __init__(
        self,
        grid,
        evaluator,
        *,
        volume_normalized=False,
        plateau=False,
        equalized=False,
        base=None,
        t_samples=None,
    ):
        self.grid = grid
        self._evaluator = evaluator
        self.volume_normalized = volume_normalized
        self.plateau = plateau
        self.equalized = equalized
        self.base = base
        self.t_samples = np.linspace(0.0, 1.0, DEFAULT_T_SAMPLES) if t_samples is None else np.asarray(t_samples)
        self.diagnostics = {}

    @property
    def n(self):
        return self.grid.n

    def coefficients(self, t, order=0):
        """``(a, beta)`` (or t-derivatives); a scalar ``t`` gives 1-d arrays."""
        scalar = np.ndim(t) == 0
        a, b = self._evaluator(np.atleast_1d(np.asarray(t, dtype=float)), order)
        if scalar:
            return a[0], b[0]
        return a, b

    def metric(self, t):
        a, b = self.coefficients(float(t))
        return AxiMetric(a, b, self.grid)

    def curvature(self, t):
        """Nodal scalar curvature of ``h(t)``, shape ``(len(t), size)``."""
        a, b = self.coefficients(np.atleast_1d(t))
        return curvature_values(self.grid, a, b)

    def min_curvature(self, t=None):
        t = self.t_samples if t is None else t
        return float(np.min(self.curvature(t)))

    def volumes(self, t=None):
        t = self.t_samples if t is None else np.atleast_1d(t)
        a, b = self.coefficients(t)
        return sphere_volume(self.n - 1) * (a * b ** (self.n - 1)) @ self.grid.weights

    def volume_trace(self, t):
        """``a_t / a + (n-1) beta_t / beta``, i.e. half the trace of the t-derivative."""
        a, b = self.coefficients(t)
        ad, bd = self.coefficients(t, 1)
        return ad / a + (self.n - 1) * bd / b

    def top_radius(self, tol=1e-8):
        """Radius of ``h(1)`` if it is round (constant curvature), else ``None``."""
        R = self.curvature(1.0)[0]
        if np.ptp(R) > tol * np.max(np.abs(R)) or np.min(R) <= 0:
            return None
        vol = float(self.volumes(1.0)[0])
        return (vol / sphere_volume(self.n)) ** (1.0 / self.n)


def constant_path(metric):
    a, b = metric.a, metric.beta

    def evaluator(t, order):
        shape = (t.size, metric.grid.size)
        if order == 0:
            return np.broadcast_to(a, shape).copy(), np.broadcast_to(b, shape).copy()
        return np.zeros(shape), np.zeros(shape)

    return MetricPath(metric.grid, evaluator)


def chebyshev_path(grid, t_nodes, a_values, beta_values, **flags):
    """Path interpolating samples at Chebyshev points of ``[0, 1]``."""
    tau = 2.0 * np.asarray(t_nodes) - 1.0
    deg = len(tau) - 1
    ca = C.chebfit(tau, a_values, deg)
    cb = C.chebfit(tau, beta_values, deg)
    coeffs = [(ca, cb)]
    for order in (1, 2):
        pa, pb = coeffs[-1]
        coeffs.append((C.chebder(pa) * 2.0, C.chebder(pb) * 2.0))

    def evaluator(t, order):
        ca_, cb_ = coeffs[order]
        x = 2.0 * t - 1.0
        return C.chebval(x, ca_).T, C.chebval(x, cb_).T

    return MetricPath(grid, evaluator, **flags)


def chebyshev_nodes(count):
    """Chebyshev-Lobatto points of ``[0, 1]``, increasing."""
    return 0.5 * (1.0 - np.cos(np.pi * np.arange(count) / (count - 1)))


def spline_path(grid, t, a_values, beta_values, k=5, **flags):
    """Path through samples ``(t_j, a_j, beta_j)`` by a degree-``k`` spline in t."""
    sa = make_interp_spline(t, a_values, k=k, axis=0)
    sb = make_interp_spline(t, beta_values, k=k, axis=0)
    splines = [(sa, sb), (sa.derivative(1), sb.derivative(1)), (sa.derivative(2), sb.derivative(2))]

    def evaluator(tt, order):
        pa, pb = splines[order]
        tt = np.clip(tt, t[0], t[-1])
        return pa(tt), pb(tt)

    return MetricPath(grid, evaluator, **flags)


def conformal_path(u, n=None, t_samples=None, check=True):
    """Straight conformal path ``h(t) = ((1-t) u + t)^(4/(n-2)) g_*``.

    Parameters
    ----------
    u : AxiFunction
        Positive conformal factor of the input metric ``u^(4/(n-2)) g_*``.
    check : bool
        Verify positive scalar curvature at ``t = 0`` and along the path.

    Raises
    ------
    InputNotPSC
        If ``u^(4/(n-2)) g_*`` has non-positive curvature at some node.
    PathPositivityFailed
        If some interior ``h(t)`` fails the same check.
    """
    grid = u.grid
    n = grid.n if n is None else n
    uv = np.asarray(u.values, dtype=float)
    if np.any(uv <= 0):
        raise ValueError("conformal factor must be positive")
    p = 2.0 / (n - 2)
    du = 1.0 - uv

    def evaluator(t, order):
        w = (1.0 - t)[:, None] * uv[None, :] + t[:, None]
        if order == 0:
            a = w**p
        elif order == 1:
            a = p * w ** (p - 1) * du
        else:
            a = p * (p - 1) * w ** (p - 2) * du**2
        return a, a.copy()

    path = MetricPath(grid, evaluator, t_samples=t_samples)
    if check:
        R0 = scalar_curvature_conformal(type(u)(grid, uv ** (2 * p)), n).values
        if np.min(R0) <= 0:
            raise InputNotPSC(f"input metric has scalar curvature down to {np.min(R0):.4g}")
        Rmin = path.min_curvature()
        if Rmin <= 0:
            raise PathPositivityFailed(f"conformal path loses positive curvature (min {Rmin:.4g})")
    return path


def volume_normalize(path):
    """Rescale ``h(t)`` by ``psi(t) = (vol(h(0)) / vol(h(t)))^(2/n)``."""
    n, k = path.n, path.n - 1
    w = path.grid.weights
    V0 = float(path.volumes(0.0)[0])

    def evaluator(t, order):
        a, b = path.coefficients(t)
        a1, b1 = path.coefficients(t, 1)
        a2, b2 = path.coefficients(t, 2)
        V = (a * b**k) @ w
        V1 = (a1 * b**k + k * a * b ** (k - 1) * b1) @ w
        V2 = (a2 * b**k + 2 * k * a1 * b ** (k - 1) * b1 + k * a * b ** (k - 1) * b2 + k * (k - 1) * a * b ** (k - 2) * b1**2) @ w
        V0q = V0 / sphere_volume(k)
        l1 = -(2.0 / n) * V1 / V
        l2 = -(2.0 / n) * (V2 / V - (V1 / V) ** 2)
        # r = sqrt(psi): r'/r = l1/2, r''/r = (l2 + l1^2)/2 - l1^2/4
        r = ((V0q / V) ** (2.0 / n)) ** 0.5
        r1 = r * 0.5 * l1
        r2 = r * (0.5 * (l2 + l1**2) - 0.25 * l1**2)
        r, r1, r2 = r[:, None], r1[:, None], r2[:, None]
        if order == 0:
            return r * a, r * b
        if order == 1:
            return r1 * a + r * a1, r1 * b + r * b1
        return r2 * a + 2 * r1 * a1 + r * a2, r2 * b + 2 * r1 * b1 + r * b2

    return MetricPath(
        path.grid,
        evaluator,
        volume_normalized=True,
        equalized=path.equalized,
        t_samples=path.t_samples,
    )


def plateau_map(t, order=0):
    """``zeta(t) = S(2t)``: smooth, flat at 0 and 1/2, identically 1 on [1/2, 1]."""
    return (2.0**order) * smoothstep(2.0 * np.asarray(t, dtype=float), order)


def reparametrize_plateau(path, round_tol=1e-8):
    """The path ``h(zeta(t))``, constant equal to ``h(1)`` for ``t >= 1/2``.

    Raises
    ------
    ValueError
        If ``h(1)`` is not round.
    """
    if path.top_radius(round_tol) is None:
        raise ValueError("the path does not end at a round metric")

    def evaluator(t, order):
        z = plateau_map(t)
        a, b = path.coefficients(z)
        if order == 0:
            return a, b
        z1 = plateau_map(t, 1)[:, None]
        a1, b1 = path.coefficients(z, 1)
        if order == 1:
            return a1 * z1, b1 * z1
        z2 = plateau_map(t, 2)[:, None]
        a2, b2 = path.coefficients(z, 2)
        return a2 * z1**2 + a1 * z2, b2 * z1**2 + b1 * z2

    return MetricPath(
        path.grid,
        evaluator,
        volume_normalized=path.volume_normalized,
        plateau=True,
        equalized=path.equalized,
        base=path,
        t_samples=path.t_samples,
    )


def _potential(grid, a, b, rhs):
    """Solve ``Laplace(psi) = rhs`` with zero mean for ``a^2 dtheta^2 + (b sin)^2 g``."""
    k = grid.n - 1
    dV = grid.weights * a * b**k
    rhs = rhs - (rhs @ dV) / dV.sum()
    L = _laplacian(grid, a, b)
    N = grid.size
    M = np.zeros((N + 1, N + 1))
    M[:N, :N] = L
    M[:N, N] = 1.0
    M[N, :N] = dV
    sol = np.linalg.solve(M, np.append(rhs, 0.0))
    psi = sol[:N]
    res = np.max(np.abs(L @ psi + sol[N] - rhs))
    if not np.isfinite(res) or res > 1e-8 * max(1.0, np.max(np.abs(rhs))):
        raise SolveFailure(f"elliptic solve residual {res:.2e}")
    return psi


def _laplacian(grid, a, b):
    return laplacian_matrix(AxiMetric(a, b, grid))


def equalize_volume_form(path, nodes=41, rtol=1e-11, tol=1e-6):
    """Pull ``h(t)`` back by diffeomorphisms so the volume form is t-independent.

    At each t, ``Laplace_h psi = -(1/2) tr_h h'`` is solved and the points of
    the sphere are moved along ``grad_h psi``; in ``x = cos(theta)`` the flow
    is ``x' = (1 - x^2) psi_x / a^2``.  Writing the moved point as
    ``chi = x + (1 - x^2) eta`` keeps both poles fixed exactly.  The
    pulled-back coefficients are represented by Chebyshev interpolation in t.
    A plateau path is handled by equalizing the path it reparametrizes, which
    commutes with the reparametrization.

    Raises
    ------
    SolveFailure
        If an elliptic solve is singular or the resulting trace defect
        exceeds ``tol``.
    """
    if path.plateau and path.base is not None:
        inner = equalize_volume_form(path.base, nodes, rtol, tol)
        out = reparametrize_plateau(inner)
        out.diagnostics = dict(inner.diagnostics)
        out.diffeo = lambda t: inner.diffeo(plateau_map(t))
        out.source = path
        return out

    grid = path.grid
    k = grid.n - 1
    x, s2 = grid.x, grid.sin2

    def shrink(eta):
        # (1 - chi^2) / (1 - x^2)
        return 1.0 - 2.0 * x * eta - s2 * eta**2

    def velocity(t, eta):
        a, b = path.coefficients(t)
        ad, bd = path.coefficients(t, 1)
        psi = _potential(grid, a, b, -(ad / a + k * bd / b))
        P = grid.interpolation_matrix(x + s2 * eta)
        return shrink(eta) * (P @ grid.dx(psi)) / (P @ a) ** 2

    sol = solve_ivp(velocity, (0.0, 1.0), np.zeros(grid.size), method="DOP853", rtol=rtol, atol=rtol * 0.1, dense_output=True)
    if not sol.success:
        raise SolveFailure(f"diffeomorphism flow failed: {sol.message}")

    def eta_at(t):
        return sol.sol(np.clip(np.atleast_1d(t), 0.0, 1.0)).T

    def diffeo(t):
        e = eta_at(t)
        return x + s2 * C.chebval(x, C.chebfit(x, e.T, grid.size // 2))

    tn = chebyshev_nodes(nodes)
    eta = eta_at(tn)
    eta[0] = 0.0
    a_h, b_h = path.coefficients(tn)
    a_g = np.empty_like(a_h)
    b_g = np.empty_like(b_h)
    # drop the round-off floor of eta, which the pole rows of the curvature amplify
    coef = C.chebfit(x, eta.T, grid.size // 2)
    eta = C.chebval(x, coef)
    eta_x = C.chebval(x, C.chebder(coef))
    for j in range(nodes):
        chi = x + s2 * eta[j]
        chi_x = 1.0 - 2.0 * x * eta[j] + s2 * eta_x[j]
        P = grid.interpolation_matrix(chi)
        ratio = np.sqrt(shrink(eta[j]))
        a_g[j] = (P @ a_h[j]) * chi_x / ratio
        b_g[j] = (P @ b_h[j]) * ratio
    out = chebyshev_path(
        grid,
        tn,
        a_g,
        b_g,
        volume_normalized=path.volume_normalized,
        equalized=True,
        t_samples=path.t_samples,
    )
    out.diffeo = diffeo
    out.source = path
    check_t = np.linspace(0.0, 1.0, 4 * len(path.t_samples) + 1)
    defect = float(np.max(np.abs(out.volume_trace(check_t))))
    out.diagnostics = {"trace_defect": 2.0 * defect, "flow_steps": int(sol.t.size)}
    if 2.0 * defect > tol:
        raise SolveFailure(f"volume-form defect {2.0 * defect:.2e} exceeds {tol:.1e}")
    return out


@dataclass
class PSCCertificate:
    """Minimum curvature over sampled metrics and the largest C2 step between neighbours."""

    margin: float
    max_step: float


def psc_margin(samples):
    """Certificate for a finite list of :class:`AxiMetric` samples.

    Raises
    ------
    NotPSC
        If some sample has non-positive curvature at a node.
    """
    mins = [float(np.min(curvature_values(s.grid, s.a, s.beta))) for s in samples]
    worst = int(np.argmin(mins))
    if mins[worst] <= 0:
        raise NotPSC(f"sample {worst} has scalar curvature {mins[worst]:.4g}")
    steps = [c2_distance(p, q) for p, q in zip(samples[:-1], samples[1:])]
    return PSCCertificate(min(mins), max(steps) if steps else 0.0)


def smooth_path(samples, t=None, sigma=None, check_t=None):
    """Mollify the piecewise-linear path through ``samples``.

    Coefficients are interpolated linearly between the sample times and the
    corners are mollified with the even normalized bump at radius
    ``sigma * S(t/(2 sigma)) * S((1-t)/(2 sigma))``, which vanishes at both
    ends so ``h(0)`` and ``h(1)`` are reproduced bitwise.

    Raises
    ------
    PositivityLost
        If the smoothed path has non-positive curvature at a check sample.
    """
    grid = samples[0].grid
    m = len(samples)
    t = np.linspace(0.0, 1.0, m) if t is None else np.asarray(t, dtype=float)
    gap = float(np.min(np.diff(t))) if m > 1 else 1.0
    sigma = gap / 8.0 if sigma is None else float(sigma)
    if m > 1 and sigma >= gap / 4.0:
        raise ValueError("sigma must be below a quarter of the smallest sample gap")
    A = np.array([s.a for s in samples])
    B = np.array([s.beta for s in samples])
    corners = t[1:-1]

    def linear(y, values, order):
        # piecewise-linear interpolant, extended linearly past both ends
        idx = np.clip(np.searchsorted(t, y, side="right") - 1, 0, m - 2)
        h = t[idx + 1] - t[idx]
        slope = (values[idx + 1] - values[idx]) / h[..., None]
        if order == 1:
            return slope
        return values[idx] + (y - t[idx])[..., None] * slope

    def radius(y):
        return sigma * smoothstep(y / (2 * sigma)) * smoothstep((1.0 - y) / (2 * sigma))

    if m == 1:
        return constant_path(samples[0])

    slopes = np.diff(A, axis=0) / np.diff(t)[:, None], np.diff(B, axis=0) / np.diff(t)[:, None]

    def evaluator(tt, order):
        out = []
        r = radius(tt)
        active = r > 0
        for values, sl in ((A, slopes[0]), (B, slopes[1])):
            if order == 2:
                res = np.zeros((tt.size, grid.size))
                for i, c in enumerate(corners):
                    jump = sl[i + 1] - sl[i]
                    z = (tt - c) / sigma
                    res += (bump(z) / (BUMP_MASS * sigma))[:, None] * jump[None, :]
                out.append(res)
                continue
            res = linear(tt, values, order)
            if active.any():
                ta, ra = tt[active], r[active]
                cols = [
                    piecewise_mollify(lambda y, s, i, j=j: linear(y, values, order)[..., j], ta, ra, corners)
                    for j in range(grid.size)
                ]
                res[active] = np.array(cols).T
            out.append(res)
        return out[0], out[1]

    path = MetricPath(grid, evaluator)
    check_t = np.linspace(0.0, 1.0, 8 * (m - 1) * 4 + 1) if check_t is None else check_t
    Rmin = path.min_curvature(check_t)
    if Rmin <= 0:
        raise PositivityLost(f"smoothed path has scalar curvature {Rmin:.4g}")
    path.diagnostics = {"sigma": sigma, "min_curvature": Rmin}
    return path
