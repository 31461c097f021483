"""Spectral kernels and curvature operators for axisymmetric data on S^n.

An axisymmetric function on S^n depends only on the polar angle theta, and a
smooth one is a smooth function of ``x = cos(theta)``.  Functions are stored
by their values at the roots of the Gegenbauer polynomial whose weight is
``(1 - x^2)^((n-2)/2)``, i.e. the measure ``sin^(n-1)(theta) d theta``.
Differentiation goes through the polynomial interpolant in ``x``, which keeps
the even extension across both poles smooth automatically.

An axisymmetric metric ``a^2 dtheta^2 + b^2 g_{S^{n-1}}`` is stored through
``a`` and ``beta = b / sin(theta)``; closure at the poles is ``beta = a``
there.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln, roots_gegenbauer

from .errors import ResolutionError

DEFAULT_GRID_SIZE = 128


def sphere_volume(n):
    """Volume of the unit round n-sphere."""
    return float(2.0 * np.exp(0.5 * (n + 1) * np.log(np.pi) - gammaln(0.5 * (n + 1))))


def _barycentric_weights(x):
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    logw = -np.sum(np.log(np.abs(diff)), axis=1)
    sign = np.prod(np.sign(diff), axis=1)
    return sign * np.exp(logw - logw.max())


class AngularGrid:
    """Gegenbauer collocation grid on S^n, ordered by increasing theta.

    Parameters
    ----------
    n : int
        Dimension of the sphere (>= 3).
    size : int
        Number of interior nodes.
    """

    def __init__(self, n, size=DEFAULT_GRID_SIZE):
        if n < 3:
            raise ValueError("sphere dimension must be >= 3")
        self.n = int(n)
        self.size = int(size)
        x, w = roots_gegenbauer(self.size, 0.5 * (self.n - 1))
        order = np.argsort(-x)
        self.x = x[order]
        self.weights = w[order]
        self.theta = np.arccos(self.x)
        self.sin2 = 1.0 - self.x**2
        self.bary = _barycentric_weights(self.x)
        self.D1, self.D2 = self._differentiation_matrices()

    def _differentiation_matrices(self):
        x, w = self.x, self.bary
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, 1.0)
        D1 = (w[None, :] / w[:, None]) / diff
        np.fill_diagonal(D1, 0.0)
        np.fill_diagonal(D1, -D1.sum(axis=1))
        D2 = 2.0 * D1 * (np.diag(D1)[:, None] - 1.0 / diff)
        np.fill_diagonal(D2, 0.0)
        np.fill_diagonal(D2, -D2.sum(axis=1))
        return D1, D2

    def __eq__(self, other):
        return isinstance(other, AngularGrid) and (self.n, self.size) == (other.n, other.size)

    def __hash__(self):
        return hash((self.n, self.size))

    def __repr__(self):
        return f"AngularGrid(n={self.n}, size={self.size})"

    @property
    def total_weight(self):
        """Quadrature approximation of the integral of sin^(n-1) over [0, pi]."""
        return float(self.weights.sum())

    def _apply(self, D, values):
        # sum_j D_ij (v_j - v_i): exact on constants, limits pole-row roundoff
        off = D - np.diag(np.diag(D))
        values = np.asarray(values, dtype=float)
        diff = values[..., None, :] - values[..., :, None]
        return np.einsum("ij,...ij->...i", off, diff)

    def dx(self, values):
        return self._apply(self.D1, values)

    def dxx(self, values):
        return self._apply(self.D2, values)

    def interpolation_matrix(self, x_new):
        """Matrix mapping nodal values to values at ``x_new`` (barycentric)."""
        x_new = np.atleast_1d(np.asarray(x_new, dtype=float))
        diff = x_new[:, None] - self.x[None, :]
        exact = diff == 0.0
        diff[exact] = 1.0
        k = self.bary[None, :] / diff
        M = k / k.sum(axis=1, keepdims=True)
        rows = exact.any(axis=1)
        if rows.any():
            M[rows] = exact[rows].astype(float)
        return M

    def interpolate(self, values, x_new):
        """Evaluate nodal ``values`` (shape ``(..., size)``) at ``x_new``."""
        return values @ self.interpolation_matrix(x_new).T

    def integrate(self, values):
        """Integral of ``values * sin^(n-1)(theta)`` over [0, pi]."""
        return values @ self.weights

    def sample(self, fn):
        """Nodal values of ``fn(theta)``."""
        return np.asarray(fn(self.theta), dtype=float) * np.ones(self.size)


@dataclass(frozen=True)
class AxiFunction:
    """An axisymmetric function on S^n given by nodal values."""

    grid: AngularGrid
    values: np.ndarray

    @classmethod
    def from_function(cls, grid, fn):
        return cls(grid, grid.sample(fn))

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.size, float(value)))

    def at_x(self, x, order=0):
        """Value (or x-derivative of given order) at ``x = cos(theta)``."""
        v = self.values
        if order >= 1:
            v = self.grid.dx(v) if order == 1 else self.grid.dxx(v)
        return self.grid.interpolate(v, x)

    def __call__(self, theta):
        return self.at_x(np.cos(theta))

    def derivative(self, theta, order=1):
        """Theta-derivative of order 1 or 2 at ``theta``."""
        theta = np.atleast_1d(theta)
        x, s = np.cos(theta), np.sin(theta)
        fx = self.at_x(x, 1)
        if order == 1:
            return -s * fx
        if order == 2:
            return s**2 * self.at_x(x, 2) - x * fx
        raise ValueError("order must be 1 or 2")

    def pole_odd_derivatives(self):
        """Odd-part residual of the theta-derivative across each pole."""
        # symmetric sum of the first derivative across the pole vanishes for even data
        h = 1e-4
        out = []
        for pole in (0.0, np.pi):
            d = self.derivative(np.array([pole - h, pole + h]), 1)
            out.append(float(d[0] + d[1]) / 2.0)
        return out


@dataclass(frozen=True)
class AxiMetric:
    """Metric ``a^2 dtheta^2 + (beta sin theta)^2 g_{S^{n-1}}`` on S^n."""

    a: np.ndarray
    beta: np.ndarray
    grid: AngularGrid

    @property
    def n(self):
        return self.grid.n

    @classmethod
    def round(cls, grid, radius=1.0):
        r = np.full(grid.size, float(radius))
        return cls(r, r.copy(), grid)

    @classmethod
    def conformal(cls, grid, c):
        """The metric ``c g_*`` for nodal conformal factor values ``c``."""
        c = np.asarray(getattr(c, "values", c), dtype=float)
        r = np.sqrt(c)
        return cls(r, r.copy(), grid)

    def b(self, theta):
        return np.sin(theta) * self.grid.interpolate(self.beta, np.cos(theta))

    def scaled(self, lam):
        """The homothetic metric ``lam * self``."""
        s = np.sqrt(lam)
        return AxiMetric(self.a * s, self.beta * s, self.grid)

    def closure_defect(self):
        """``|beta - a|`` at both poles; zero for a smooth metric on S^n."""
        x = np.array([1.0, -1.0])
        g = self.grid
        return np.abs(g.interpolate(self.beta, x) - g.interpolate(self.a, x))

    def check(self, tol=1e-8):
        if np.any(self.a <= 0) or np.any(self.beta <= 0):
            raise ValueError("metric coefficients must be positive")
        if np.any(self.closure_defect() > tol):
            raise ValueError(f"metric does not close smoothly at the poles: {self.closure_defect()}")
        return self


def volume(metric):
    """Riemannian volume of an axisymmetric metric on S^n."""
    n = metric.n
    return sphere_volume(n - 1) * float(metric.grid.integrate(metric.a * metric.beta ** (n - 1)))


def _curvature_nodal(grid, a, beta):
    """Scalar curvature at the nodes for arrays of shape ``(..., size)``."""
    k = grid.n - 1
    x, s2 = grid.x, grid.sin2
    ax, bx = grid.dx(a), grid.dx(beta)
    bxx = grid.dxx(beta)
    b2 = (-beta - 3.0 * x * bx + s2 * bxx) / beta
    b1 = -(x * beta - s2 * bx) * ax / beta
    q = (a - beta) / s2
    fiber = ((a + beta) * q + beta**2 + 2.0 * x * beta * bx - s2 * bx**2) / (a**2 * beta**2)
    return -2.0 * k * (a * b2 - b1) / a**3 + k * (k - 1) * fiber


def curvature_values(grid, a, beta):
    """Nodal scalar curvature for coefficient arrays of shape ``(..., size)``."""
    return _curvature_nodal(grid, np.asarray(a, dtype=float), np.asarray(beta, dtype=float))


def _curvature_at_poles(grid, a, beta):
    """Scalar curvature at x = +1, -1 evaluated from the pole limit of the formula."""
    k = grid.n - 1
    x = np.array([1.0, -1.0])
    A = grid.interpolate(a, x)
    B = grid.interpolate(beta, x)
    Ax = grid.interpolate(grid.dx(a), x)
    Bx = grid.interpolate(grid.dx(beta), x)
    q = -x * (Ax - Bx) / 2.0
    b2 = (-B - 3.0 * x * Bx) / B
    b1 = -(x * B) * Ax / B
    fiber = ((A + B) * q + B**2 + 2.0 * x * B * Bx) / (A**2 * B**2)
    return -2.0 * k * (A * b2 - b1) / A**3 + k * (k - 1) * fiber


def scalar_curvature_axi(metric, pole_tol=1e-6):
    """Scalar curvature field of an axisymmetric metric.

    Raises
    ------
    ResolutionError
        If the pole limit of the curvature formula disagrees with the
        polynomial extrapolation of the interior values by more than
        ``pole_tol`` (relative to the field's magnitude).
    """
    g = metric.grid
    R = _curvature_nodal(g, metric.a, metric.beta)
    if pole_tol is not None:
        limit = _curvature_at_poles(g, metric.a, metric.beta)
        extrap = g.interpolate(R, np.array([1.0, -1.0]))
        scale = max(1.0, float(np.max(np.abs(R))))
        if np.max(np.abs(limit - extrap)) > pole_tol * scale:
            raise ResolutionError(
                f"pole curvature {limit} disagrees with interior extrapolation {extrap}"
            )
    return AxiFunction(g, R)


def round_laplacian(grid, u):
    """Laplacian of the unit round metric applied to nodal values ``u``."""
    return grid.sin2 * grid.dxx(u) - grid.n * grid.x * grid.dx(u)


def scalar_curvature_conformal(c, n=None):
    """Scalar curvature of ``c g_*`` through the conformal Laplacian."""
    grid = c.grid
    n = grid.n if n is None else n
    u = c.values ** ((n - 2) / 4.0)
    lap = round_laplacian(grid, u)
    R = u ** (-(n + 2) / (n - 2)) * (-4.0 * (n - 1) / (n - 2) * lap + n * (n - 1) * u)
    return AxiFunction(grid, R)


def laplace_beltrami(metric, u):
    """Laplace-Beltrami operator of ``metric`` applied to ``u``."""
    g = metric.grid
    return AxiFunction(g, laplacian_matrix(metric) @ u.values)


def laplacian_matrix(metric):
    """Collocation matrix of the Laplace-Beltrami operator at the nodes."""
    g = metric.grid
    k = g.n - 1
    a, beta = metric.a, metric.beta
    drift = g.sin2 * (k * g.dx(beta) / beta - g.dx(a) / a) - g.n * g.x
    L = g.sin2[:, None] * g.D2 + drift[:, None] * g.D1
    return L / a[:, None] ** 2


def slice_mean_curvature(path, A, t):
    """Mean curvature of ``{t} x S^n`` in ``A^2 dt^2 + h(t)`` w.r.t. ``d/dt``."""
    a, beta = path.coefficients(t, 0)
    ad, bd = path.coefficients(t, 1)
    k = path.grid.n - 1
    H = (ad / a + k * bd / beta) / A
    if np.ndim(t) == 0:
        return AxiFunction(path.grid, H[0] if H.ndim == 2 else H)
    return H


class RadialProfile:
    """A positive warping function ``f`` on ``[start, stop]`` with two derivatives.

    ``func(s)`` must return the tuple ``(f, f', f'')`` evaluated at the array
    ``s``.
    """

    def __init__(self, start, stop, n, func: Callable, samples=None):
        self.start = float(start)
        self.stop = float(stop)
        self.n = int(n)
        self._func = func
        self._samples = samples

    def __repr__(self):
        return f"RadialProfile([{self.start:.6g}, {self.stop:.6g}], n={self.n})"

    def derivatives(self, s):
        s = np.asarray(s, dtype=float)
        return self._func(s)

    def __call__(self, s, order=0):
        return self.derivatives(s)[order]

    @property
    def samples(self):
        if self._samples is None:
            return np.linspace(self.start, self.stop, 2001)
        return self._samples

    @classmethod
    def constant(cls, radius, start, stop, n):
        def func(s):
            z = np.zeros_like(s)
            return z + radius, z, z

        return cls(start, stop, n, func)

    @classmethod
    def from_samples(cls, s, values, n, k=5):
        from scipy.interpolate import make_interp_spline

        spl = make_interp_spline(s, values, k=k)
        d1, d2 = spl.derivative(1), spl.derivative(2)
        return cls(s[0], s[-1], n, lambda t: (spl(t), d1(t), d2(t)), samples=np.asarray(s))

    def shifted(self, offset):
        """The profile ``t -> f(t - offset)`` on the translated interval."""
        return RadialProfile(
            self.start + offset,
            self.stop + offset,
            self.n,
            lambda s: self._func(np.asarray(s) - offset),
            None if self._samples is None else self._samples + offset,
        )


def warped_curvature_values(f, fp, fpp, n):
    return n / f**2 * ((n - 1) * (1.0 - fp**2) - 2.0 * f * fpp)


def scalar_curvature_warped_line(f, s=None):
    """Scalar curvature of ``ds^2 + f(s)^2 g_*`` on ``[start, stop] x S^n``.

    Returns the values at ``s`` (default: the profile's sample points).
    """
    s = f.samples if s is None else np.asarray(s, dtype=float)
    v, vp, vpp = f.derivatives(s)
    return warped_curvature_values(v, vp, vpp, f.n)


def c2_distance(m1, m2):
    """Grid sup-norm distance over values and two theta-derivatives of (a, beta)."""
    g = m1.grid
    out = 0.0
    for u, v in ((m1.a, m2.a), (m1.beta, m2.beta)):
        d = u - v
        dx = g.dx(d)
        d1 = -np.sqrt(g.sin2) * dx
        d2 = g.sin2 * g.dxx(d) - g.x * dx
        out = max(out, float(np.max(np.abs(d))), float(np.max(np.abs(d1))), float(np.max(np.abs(d2))))
    return out
