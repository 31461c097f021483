"""Collar metrics ``A^2 dt^2 + (1 + eps t^2) g(t)`` on ``[0, 1] x S^n``.

For ``tau = A t`` and ``h = (1 + eps t^2) g``, the scalar curvature of
``d tau^2 + h(tau)`` is

    R = R(h) - tr_h h'' - (1/4)(tr_h h')^2 + (3/4)|h'|_h^2,

with derivatives in ``tau``; in ``t`` the bracket picks up ``A^-2``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SearchExhausted
from .geometry import curvature_values

EPS_GRID = np.round(np.linspace(0.0, 1.0, 11), 12)


@dataclass
class CollarMetric:
    A: float
    eps: float
    path: object

    @property
    def n(self):
        return self.path.n

    @property
    def grid(self):
        return self.path.grid

    def default_t(self, count=129):
        return np.union1d(np.linspace(0.0, 1.0, count), self.path.t_samples)


def _traces(path, t):
    k = path.n - 1
    a, b = path.coefficients(t)
    a1, b1 = path.coefficients(t, 1)
    a2, b2 = path.coefficients(t, 2)
    tr1 = 2.0 * a1 / a + 2.0 * k * b1 / b
    norm1 = 4.0 * (a1 / a) ** 2 + 4.0 * k * (b1 / b) ** 2
    tr2 = 2.0 * (a1**2 + a * a2) / a**2 + 2.0 * k * (b1**2 + b * b2) / b**2
    return a, b, tr1, norm1, tr2


def collar_fields(collar, t=None):
    """Scalar curvature and slice mean curvature on a ``(t, theta)`` grid.

    Returns
    -------
    t : ndarray
    R, H : ndarray of shape ``(len(t), size)``
    """
    t = collar.default_t() if t is None else np.atleast_1d(np.asarray(t, dtype=float))
    n, A, eps = collar.n, collar.A, collar.eps
    a, b, trg, normg, trg2 = _traces(collar.path, t)
    p = (1.0 + eps * t**2)[:, None]
    r = (2.0 * eps * t)[:, None] / p
    pdd = 2.0 * eps / p
    tr_h1 = n * r + trg
    norm_h1 = n * r**2 + 2.0 * r * trg + normg
    tr_h2 = n * pdd + 2.0 * r * trg + trg2
    Rg = curvature_values(collar.grid, a, b)
    R = Rg / p + (-tr_h2 - 0.25 * tr_h1**2 + 0.75 * norm_h1) / A**2
    H = tr_h1 / (2.0 * A)
    return t, R, H


def collar_scalar_curvature(collar, t=None):
    """Scalar curvature of the collar at nodes, shape ``(len(t), size)``."""
    return collar_fields(collar, t)[1]


def neck_profile_values(rho, A, eps, s):
    """``f_eps(s) = rho sqrt(1 + eps s^2 / A^2)`` with two derivatives."""
    s = np.asarray(s, dtype=float)
    c = eps / A**2
    q = 1.0 + c * s**2
    f = rho * np.sqrt(q)
    fp = rho * c * s / np.sqrt(q)
    fpp = rho * c / q**1.5
    return f, fp, fpp


def find_A(path, eps=None, A0=1.0, margin=0.1, max_doublings=30, t=None):
    """Smallest ``A0 2^k`` giving positive collar curvature with relative margin.

    The bound is required on the whole grid ``eps in {0, 0.1, ..., 1}`` (and at
    ``eps`` if given) so that one ``A`` serves the entire family: the minimum
    of ``R`` must be at least ``margin`` times the minimum of ``R(g(t))``.

    Raises
    ------
    SearchExhausted
        If no admissible ``A`` is found within ``max_doublings``.
    """
    eps_values = EPS_GRID if eps is None else np.union1d(EPS_GRID, [eps])
    probe = CollarMetric(A0, 0.0, path)
    t = probe.default_t() if t is None else t
    floor = margin * path.min_curvature(t)
    if floor <= 0:
        raise SearchExhausted("the path does not have positive scalar curvature")
    A = float(A0)
    for _ in range(max_doublings + 1):
        worst = min(float(np.min(collar_scalar_curvature(CollarMetric(A, e, path), t))) for e in eps_values)
        if worst >= floor:
            return A
        A *= 2.0
    raise SearchExhausted(f"no collar length up to {A / 2:.3g} reaches the curvature margin")


@dataclass
class BoundaryReport:
    boundary_residual: float
    min_slice_H: float
    closed_form_gap: float
    gap_budget: float
    monotone: bool
    foliation_ok: bool


def collar_boundary_report(collar, t=None, tol=1e-8):
    """Mean curvature of the slices: minimal bottom, mean convex above it."""
    t = collar.default_t() if t is None else np.atleast_1d(t)
    _, _, H = collar_fields(collar, t)
    n, A, eps = collar.n, collar.A, collar.eps
    closed = n * eps * t / (A * (1.0 + eps * t**2))
    trg = 2.0 * np.abs(collar.path.volume_trace(t))
    gap = float(np.max(np.abs(H - closed[:, None])))
    budget = float(np.max(trg)) / (2.0 * A) + 1e-12
    positive = t > 0
    min_H = float(np.min(H[positive])) if positive.any() else float("nan")
    boundary = float(np.max(np.abs(H[~positive]))) if (~positive).any() else float("nan")
    Hmean = H.mean(axis=1)
    upto = t <= (1.0 / np.sqrt(eps) if eps > 0 else 0.0)
    monotone = bool(np.all(np.diff(Hmean[upto]) > -tol)) if upto.sum() > 1 else True
    return BoundaryReport(
        boundary_residual=boundary,
        min_slice_H=min_H,
        closed_form_gap=gap,
        gap_budget=budget,
        monotone=monotone,
        foliation_ok=bool((np.isnan(boundary) or boundary < tol) and min_H > 0),
    )


def collar_table(collar, t=None):
    """Rows ``(t, theta, a, b, R, H)`` of the sampled collar."""
    t, R, H = collar_fields(collar, t)
    a, b = collar.path.coefficients(t)
    p = np.sqrt(1.0 + collar.eps * t**2)[:, None]
    g = collar.grid
    T = np.repeat(t, g.size)
    th = np.tile(g.theta, t.size)
    return np.column_stack([T, th, (p * a).ravel(), (p * b * np.sin(g.theta)).ravel(), R.ravel(), H.ravel()])
