"""Inverse sigma_1/sigma_2 curvature flow of axisymmetric star-shaped hypersurfaces.

A star-shaped hypersurface of R^(n+1) is the radial graph ``rho(theta) x``
over the unit sphere.  It moves outward with normal speed
``sigma_1 / sigma_2 = (n-1) H / R``; as a radial graph this is
``rho_t = (sigma_1/sigma_2) W / rho`` with ``W = sqrt(rho^2 + rho_theta^2)``.
The rescaled radius ``e^(-t) rho`` converges to a constant, and the induced
metrics along the rescaled flow give a path of PSC metrics ending at a round
one.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import make_interp_spline

from .errors import ClosureNotSmooth, CurvatureSignLost, StepFailure
from .geometry import AxiFunction
from .paths import spline_path

RK4_STABILITY = 2.78


@dataclass(frozen=True)
class StarShapedHypersurface:
    """Radial graph of ``rho > 0`` over the unit n-sphere."""

    rho: AxiFunction

    @property
    def grid(self):
        return self.rho.grid

    @property
    def n(self):
        return self.rho.grid.n

    def induced_metric(self):
        """Coefficients ``(a, beta)`` of the induced metric: ``a = W``, ``beta = rho``."""
        r = self.rho.values
        g = self.grid
        rp = -np.sqrt(g.sin2) * g.dx(r)
        return np.sqrt(r**2 + rp**2), r.copy()


@dataclass
class Curvatures:
    kappa_merid: np.ndarray
    kappa_azim: np.ndarray
    H: np.ndarray
    R: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    second_form_norm2: np.ndarray


def _curvatures(grid, r, fast=False):
    """Principal curvatures and symmetric functions for nodal radii (any leading shape).

    ``fast`` uses plain matrix products on ``r - mean(r)``, so round-off
    scales with the deviation from a sphere instead of the radius.
    """
    n = grid.n
    k = n - 1
    if fast:
        c = r - r.mean()
        rx = grid.D1 @ c
        rxx = grid.D2 @ c
    else:
        rx = grid.dx(r)
        rxx = grid.dxx(r)
    rp2 = grid.sin2 * rx**2
    rpp = grid.sin2 * rxx - grid.x * rx
    W = np.sqrt(r**2 + rp2)
    k1 = (r**2 + 2.0 * rp2 - r * rpp) / W**3
    k2 = (r + grid.x * rx) / (r * W)
    s1 = (k1 + k * k2) / n
    s2 = (2.0 * k1 * k2 + (k - 1) * k2**2) / n
    return k1, k2, s1, s2, W


def hypersurface_curvatures(surface):
    """Principal curvatures, ``H``, ``R`` and normalized ``sigma_1, sigma_2``."""
    g = surface.grid
    n = g.n
    k1, k2, s1, s2, _ = _curvatures(g, surface.rho.values)
    wrap = lambda v: AxiFunction(g, v)  # noqa: E731
    return Curvatures(
        kappa_merid=wrap(k1),
        kappa_azim=wrap(k2),
        H=wrap(n * s1),
        R=wrap(n * (n - 1) * s2),
        sigma1=wrap(s1),
        sigma2=wrap(s2),
        second_form_norm2=wrap(k1**2 + (n - 1) * k2**2),
    )


@dataclass
class FlowResult:
    """Trajectory of the rescaled flow.

    ``times`` and ``rescaled`` hold snapshots of ``e^(-t) rho``; the
    unrescaled radius is ``radius(j) = e^(t_j) rescaled[j]``.
    """

    grid: object
    times: np.ndarray
    rescaled: np.ndarray
    limit_radius: float
    decay_rate: float
    deviations: np.ndarray
    converged: bool
    steps: int
    burn_in: float
    diagnostics: dict = field(default_factory=dict)

    def radius(self, j):
        return np.exp(self.times[j]) * self.rescaled[j]

    def surface(self, j):
        return StarShapedHypersurface(AxiFunction(self.grid, self.radius(j)))

    @property
    def final_time(self):
        return float(self.times[-1])

    @property
    def final_deviation(self):
        return float(self.deviations[-1])

    def summary(self):
        return {
            "limit_radius": self.limit_radius,
            "decay_rate": self.decay_rate,
            "stop_time": self.final_time,
            "final_deviation": self.final_deviation,
            "converged": self.converged,
            "steps": self.steps,
            "burn_in": self.burn_in,
        }

    def trajectory_table(self):
        """Rows ``(t, theta, rho, rescaled rho)`` for every snapshot and node."""
        T = np.repeat(self.times, self.grid.size)
        th = np.tile(self.grid.theta, self.times.size)
        rt = self.rescaled.ravel()
        return np.column_stack([T, th, np.exp(T) * rt, rt])

    def write(self, csv_path, json_path):
        np.savetxt(csv_path, self.trajectory_table(), delimiter=",", header="t,theta,rho,rho_rescaled", comments="")
        with open(json_path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def _mean(grid, v):
    return float(grid.integrate(v) / grid.total_weight)


def icf_flow(rho0, stop_tol=1e-6, cfl=0.5, t_min=0.0, t_max=60.0, snapshot_dt=0.05):
    """Integrate the rescaled flow from ``rho0`` until it is round to ``stop_tol``.

    Parameters
    ----------
    rho0 : AxiFunction or StarShapedHypersurface
        Initial radial function.
    stop_tol : float
        Stop once ``sup |rho~ - mean(rho~)| < stop_tol`` (and ``t >= t_min``).
    cfl : float
        Fraction of the RK4 stability bound used for the step.

    Raises
    ------
    CurvatureSignLost
        If ``R <= 0`` or ``H <= 0`` at a node at any stage.
    StepFailure
        If the stable step collapses or ``t_max`` is reached unconverged.
    """
    rho0 = rho0.rho if isinstance(rho0, StarShapedHypersurface) else rho0
    grid = rho0.grid
    n, N = grid.n, grid.size
    r = np.asarray(rho0.values, dtype=float).copy()
    if np.any(r <= 0):
        raise CurvatureSignLost("radial function must be positive")
    spectral = RK4_STABILITY * n / (N * (N + n - 1))

    def rhs(v):
        _, _, s1, s2, W = _curvatures(grid, v, fast=True)
        if np.min(s2) <= 0 or np.min(s1) <= 0:
            raise CurvatureSignLost(f"curvature sign lost: min sigma2 {np.min(s2):.3e}, min sigma1 {np.min(s1):.3e}")
        F = s1 / s2
        return F * W / v - v, F * W / v**2

    k1, diff = rhs(r)
    t = 0.0
    times, snaps, devs = [0.0], [r.copy()], []
    dev = float(np.max(np.abs(r - _mean(grid, r))))
    devs.append(dev)
    steps = 0
    next_snap = snapshot_dt
    while dev >= stop_tol or t < t_min:
        if t >= t_max:
            raise StepFailure(f"flow not round to {stop_tol:.1e} by t={t_max} (deviation {dev:.2e})")
        dt = cfl * spectral / float(np.max(diff))
        if dt < 1e-10:
            raise StepFailure(f"stable step collapsed to {dt:.2e}")
        dt = min(dt, next_snap - t) if next_snap > t else dt
        k2, _ = rhs(r + 0.5 * dt * k1)
        k3, _ = rhs(r + 0.5 * dt * k2)
        k4, _ = rhs(r + dt * k3)
        r = r + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
        steps += 1
        k1, diff = rhs(r)
        dev = float(np.max(np.abs(r - _mean(grid, r))))
        if t >= next_snap - 1e-14 or (dev < stop_tol and t >= t_min):
            times.append(t)
            snaps.append(r.copy())
            devs.append(dev)
            next_snap = t + snapshot_dt
    times = np.array(times)
    devs = np.array(devs)
    rate, burn_in = _fit_decay(times, devs)
    return FlowResult(
        grid=grid,
        times=times,
        rescaled=np.array(snaps),
        limit_radius=_mean(grid, r),
        decay_rate=rate,
        deviations=devs,
        converged=bool(dev < stop_tol),
        steps=steps,
        burn_in=burn_in,
    )


def _fit_decay(times, devs):
    """Least-squares rate of ``log sup-deviation`` over the final half; burn-in is the first quarter."""
    T = times[-1]
    burn_in = float(0.25 * T)
    sel = (times >= 0.5 * T) & (devs > 0)
    if T <= 0 or sel.sum() < 3:
        return float("nan"), burn_in
    slope = np.polyfit(times[sel], np.log(devs[sel]), 1)[0]
    return float(-slope), burn_in


def reparametrized_time(s):
    """``t(s) = 1/(1-s)^2 - 1`` mapping ``[0, 1)`` onto ``[0, inf)``."""
    s = np.asarray(s, dtype=float)
    return 1.0 / (1.0 - s) ** 2 - 1.0


def icf_to_metric_path(flow, samples=129, closure_tol=1e-6):
    """Induced metrics of the rescaled flow as a path on ``s in [0, 1]``.

    Beyond the last snapshot the rescaled radius is continued by the fitted
    exponential decay toward the limit; ``s = 1`` is the round metric of the
    limit radius.

    Raises
    ------
    ClosureNotSmooth
        If the first or second s-derivative at ``s = 1`` exceeds
        ``closure_tol`` (the flow was stopped too early).
    """
    grid = flow.grid
    T = flow.final_time
    rho_star = flow.limit_radius
    rate = flow.decay_rate if np.isfinite(flow.decay_rate) and flow.decay_rate > 0 else 1.0
    if flow.times.size >= 6:
        traj = make_interp_spline(flow.times, flow.rescaled, k=5, axis=0)
    else:
        traj = make_interp_spline(flow.times, flow.rescaled, k=min(3, flow.times.size - 1), axis=0)
    s = np.linspace(0.0, 1.0, samples)
    rows = []
    for sj in s:
        if sj >= 1.0:
            rows.append(np.full(grid.size, rho_star))
            continue
        tj = float(reparametrized_time(sj))
        if tj <= T:
            rows.append(traj(tj))
        else:
            rows.append(rho_star + (flow.rescaled[-1] - rho_star) * np.exp(-rate * (tj - T)))
    R = np.array(rows)
    rp = -np.sqrt(grid.sin2) * grid.dx(R)
    a = np.sqrt(R**2 + rp**2)
    path = spline_path(grid, s, a, R)
    d1 = np.max(np.abs(np.concatenate(path.coefficients(1.0, 1))))
    d2 = np.max(np.abs(np.concatenate(path.coefficients(1.0, 2))))
    path.diagnostics = {"closure_d1": float(d1), "closure_d2": float(d2), "limit_radius": rho_star}
    if max(d1, d2) > closure_tol:
        raise ClosureNotSmooth(f"s-derivatives at the round end are {d1:.2e}, {d2:.2e}")
    return path
