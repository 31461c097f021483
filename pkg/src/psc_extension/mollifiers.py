"""Smooth bump, smoothstep and mollification quadrature.

All smoothing in the package uses one bump family, ``exp(-1/y)``.
"""

import numpy as np
from scipy.integrate import quad
from scipy.special import expit

QUADRATURE_POINTS = 64
_LOG_TINY = np.log(1e-300)


def bump(s):
    """Unnormalized even bump ``exp(-1/(1 - s^2))`` supported in (-1, 1)."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


BUMP_MASS = quad(lambda s: float(bump(np.array(s))), -1.0, 1.0, epsabs=1e-14, limit=200)[0]

_nodes, _weights = np.polynomial.legendre.leggauss(QUADRATURE_POINTS)
GAUSS_NODES = _nodes
GAUSS_WEIGHTS = _weights
# discrete rule for the normalized bump; sums to 1 and has zero first moment exactly
MOLLIFIER_NODES = _nodes
MOLLIFIER_WEIGHTS = _weights * bump(_nodes)
MOLLIFIER_WEIGHTS = 0.5 * (MOLLIFIER_WEIGHTS + MOLLIFIER_WEIGHTS[::-1])
MOLLIFIER_WEIGHTS /= MOLLIFIER_WEIGHTS.sum()


def flat_exp(z):
    """``exp(-z)`` for ``z >= 0`` evaluated in log space, clamped to 0 below 1e-300."""
    z = np.asarray(z, dtype=float)
    out = np.exp(-np.minimum(z, 800.0))
    out[-z < _LOG_TINY] = 0.0
    return out


def smoothstep(y, order=0):
    """C-infinity step: 0 for y <= 0, 1 for y >= 1, flat to all orders at both ends.

    ``S(y) = e^{-1/y} / (e^{-1/y} + e^{-1/(1-y)})``.  ``order`` selects the
    derivative (0, 1 or 2).
    """
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    if order == 0:
        out[y >= 1.0] = 1.0
    mid = (y > 0.0) & (y < 1.0)
    if not mid.any():
        return out
    ym = y[mid]
    z = 1.0 / ym - 1.0 / (1.0 - ym)
    S = expit(-z)
    if order == 0:
        out[mid] = S
        return out
    z1 = -1.0 / ym**2 - 1.0 / (1.0 - ym) ** 2
    S1 = -S * (1.0 - S) * z1
    if order == 1:
        out[mid] = S1
        return out
    z2 = 2.0 / ym**3 - 2.0 / (1.0 - ym) ** 3
    out[mid] = -S1 * (1.0 - 2.0 * S) * z1 - S * (1.0 - S) * z2
    return out


def piecewise_mollify(func, t, radius, breaks):
    """``int func(t - radius*s, s) phi(s) ds`` with panel splits at kinks.

    Parameters
    ----------
    func : callable
        ``func(y, s, rows)`` evaluated on arrays of shape
        ``(len(rows), QUADRATURE_POINTS)``; ``rows`` indexes ``t``.
    t, radius : ndarray
        Evaluation points and (positive) mollification radii.
    breaks : sequence of float
        Points ``y`` where the integrand loses smoothness.

    Where no break falls inside a window the normalized discrete rule is used,
    so affine integrands are reproduced to round-off.
    """
    t = np.asarray(t, dtype=float)
    radius = np.asarray(radius, dtype=float) * np.ones_like(t)
    cuts = [np.clip((t - b) / radius, -1.0, 1.0) for b in breaks]
    split = np.zeros(t.shape, dtype=bool)
    for c in cuts:
        split |= np.abs(c) < 1.0
    s = MOLLIFIER_NODES[None, :]
    result = np.einsum(
        "ij,j->i", func(t[:, None] - radius[:, None] * s, np.broadcast_to(s, (t.size, s.size)), np.arange(t.size)),
        MOLLIFIER_WEIGHTS,
    )
    if split.any():
        rows = np.nonzero(split)[0]
        ts, rs = t[rows], radius[rows]
        edges = np.sort(np.stack([np.full(ts.shape, -1.0)] + [c[split] for c in cuts] + [np.ones(ts.shape)]), axis=0)
        total = np.zeros(ts.shape)
        for lo, hi in zip(edges[:-1], edges[1:]):
            half = 0.5 * (hi - lo)
            sp = 0.5 * (hi + lo)[:, None] + half[:, None] * GAUSS_NODES[None, :]
            w = half[:, None] * GAUSS_WEIGHTS[None, :] * bump(sp) / BUMP_MASS
            total += np.sum(func(ts[:, None] - rs[:, None] * sp, sp, rows) * w, axis=1)
        result[split] = total
    return result
