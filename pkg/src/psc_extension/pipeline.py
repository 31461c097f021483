"""End-to-end construction of PSC extensions with a Schwarzschild end.

Given a PSC metric ``g`` on S^n and a mass ``m`` above
``(1/2)(vol(g)/omega_n)^((n-1)/n)``, the build produces a manifold
``[0, inf) x S^n`` with boundary isometric to ``(S^n, g)``, minimal boundary,
a mean-convex foliation, non-negative scalar curvature, and an exterior that
is exactly Schwarzschild of mass ``m``.  It is assembled from five pieces:

* collar ``A^2 dt^2 + (1 + eps t^2) g(t)``, ``t in [0, 1/2]``;
* neck ``ds^2 + f_eps(s)^2 g_*`` with ``f_eps = rho sqrt(1 + eps s^2/A^2)``;
* bridge, the glued profile joining the neck to the bent Schwarzschild one;
* bent Schwarzschild ``u_m(sigma(s))`` up to the bending point;
* exact Schwarzschild tail.

:func:`verify` rebuilds every piece from the stored parameters and samples.
"""

import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import bisect

from .collar import CollarMetric, collar_fields, find_A, neck_profile_values
from .errors import MatchingFailed, PositivityFailed, PreconditionError, SearchExhausted, VerificationFailed
from .flow import StarShapedHypersurface, icf_flow, icf_to_metric_path
from .geometry import (
    AngularGrid,
    AxiFunction,
    AxiMetric,
    RadialProfile,
    curvature_values,
    sphere_volume,
    volume,
    warped_curvature_values,
)
from .gluing import Cutoff, GlueInput, bridged, glue, mollify_variable, translate_intervals
from .paths import conformal_path, equalize_volume_form, reparametrize_plateau, spline_path, volume_normalize
from .schwarzschild import BentProfile, search_delta, solve_profile, verify_bent_psc

INPUT_CLASSES = ("conformal", "star_shaped")
GLUE_WINDOW = 0.25  # fraction of the bend width used as the glued piece of the bent profile
COLLAR_SAMPLES = 129


def threshold_mass(vol, n):
    """``(1/2)(vol / omega_n)^((n-1)/n)``, the mass whose horizon has volume ``vol``."""
    if vol <= 0:
        raise ValueError("volume must be positive")
    return 0.5 * (vol / sphere_volume(n)) ** ((n - 1) / n)


@dataclass
class BuildConfig:
    """Build parameters.

    ``coefficients`` are the coefficients of a polynomial in ``cos(theta)``
    giving the conformal factor ``u`` (class ``conformal``, metric
    ``u^(4/(n-2)) g_*``) or the radial function ``rho0`` (class
    ``star_shaped``, induced metric of the radial graph).  Exactly one of
    ``mass`` and ``mass_ratio`` (relative to the threshold) is given.
    """

    n: int
    input_class: str
    coefficients: list
    mass: float = None
    mass_ratio: float = None
    grid_size: int = 128
    flow_tol: float = 1e-6
    joint_tol: float = 1e-8
    boundary_tol: float = 1e-8
    output_dir: str = "out"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError("n must be an integer >= 3")
        self.n = int(self.n)
        if self.input_class not in INPUT_CLASSES:
            raise ValueError(
                f"input class must be one of {INPUT_CLASSES}; general PSC metrics on S^n are not supported "
                "because the path to the round metric is non-constructive for them"
            )
        if (self.mass is None) == (self.mass_ratio is None):
            raise ValueError("give exactly one of mass and mass_ratio")
        self.coefficients = [float(c) for c in self.coefficients]

    @classmethod
    def from_dict(cls, d):
        inp = d.get("input", {})
        tol = d.get("tolerances", {})
        return cls(
            n=d["n"],
            input_class=inp.get("class", d.get("input_class")),
            coefficients=inp.get("cos_poly", d.get("coefficients")),
            mass=d.get("mass"),
            mass_ratio=d.get("mass_ratio"),
            grid_size=int(d.get("grid_size", 128)),
            flow_tol=float(tol.get("flow_stop", 1e-6)),
            joint_tol=float(tol.get("joint", 1e-8)),
            boundary_tol=float(tol.get("boundary", 1e-8)),
            output_dir=d.get("output_dir", "out"),
        )

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        d = {
            "n": self.n,
            "input": {"class": self.input_class, "cos_poly": list(self.coefficients)},
            "grid_size": self.grid_size,
            "tolerances": {"flow_stop": self.flow_tol, "joint": self.joint_tol, "boundary": self.boundary_tol},
            "output_dir": self.output_dir,
        }
        if self.mass is not None:
            d["mass"] = self.mass
        else:
            d["mass_ratio"] = self.mass_ratio
        return d


def input_values(grid, coefficients):
    return np.polynomial.polynomial.polyval(grid.x, coefficients)


def input_metric(input_class, coefficients, grid):
    """The boundary metric described by an input class and its coefficients."""
    v = input_values(grid, coefficients)
    if np.any(v <= 0):
        raise PreconditionError("the input function must be positive")
    if input_class == "conformal":
        return AxiMetric.conformal(grid, v ** (4.0 / (grid.n - 2)))
    a, b = StarShapedHypersurface(AxiFunction(grid, v)).induced_metric()
    return AxiMetric(a, b, grid)


def resolve_mass(config, vol):
    m_min = threshold_mass(vol, config.n)
    m = config.mass if config.mass is not None else config.mass_ratio * m_min
    if not m > m_min:
        raise PreconditionError(
            f"hypothesis omega_n (2m)^(n/(n-1)) > vol(g) violated: m={m:.6g} but the threshold is {m_min:.6g}"
        )
    return m, m_min


def build_path(config, grid):
    """Input path to a round metric, normalized, plateaued and equalized."""
    u = AxiFunction(grid, input_values(grid, config.coefficients))
    if config.input_class == "conformal":
        path = conformal_path(u)
        flow = None
    else:
        flow = icf_flow(u, stop_tol=config.flow_tol)
        path = icf_to_metric_path(flow)
    path = equalize_volume_form(reparametrize_plateau(volume_normalize(path)))
    return path, flow


def solve_slope_equation(target, rho, A, tol=1e-12):
    """``eps in (0, 1)`` with ``rho eps / (A sqrt(1 + eps)) = target``, by bisection."""
    F = lambda e: rho * e / (A * np.sqrt(1.0 + e)) - target  # noqa: E731
    if target <= 0 or F(1.0) <= 0:
        return None
    return bisect(F, 0.0, 1.0, xtol=tol * 1e-3, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass
class MatchResult:
    eps: float
    s0: float
    delta: float
    bump_scale: float
    slope: float
    height_gap: float
    attempts: int
    bent: BentProfile = field(repr=False)


def match_parameters(profile, A, rho, attempts=20):
    """Choose ``s0``, ``delta`` and ``eps`` so the neck end meets the bent profile.

    The neck end ``(f_eps(A), f_eps'(A))`` must have the slope of the bent
    profile at ``s0 - delta`` and lie strictly below it.

    Raises
    ------
    MatchingFailed
        If no ``s0`` in ``r0/2, r0/4, ...`` works within ``attempts`` halvings.
    """
    n = profile.n
    s0 = profile.r0 / 2.0
    diag = []
    for k in range(attempts):
        try:
            bent = search_delta(profile, s0)
        except SearchExhausted as exc:
            diag.append({"s0": s0, "reason": str(exc)})
            s0 /= 2.0
            continue
        a2 = s0 - bent.delta
        h2, slope, _ = (float(v[0]) for v in bent.derivatives(np.array([a2])))
        eps = solve_slope_equation(slope, rho, A)
        if eps is None:
            diag.append({"s0": s0, "reason": "slope beyond the neck family", "slope": slope})
            s0 /= 2.0
            continue
        h1 = rho * np.sqrt(1.0 + eps)
        if not h1 < h2:
            diag.append({"s0": s0, "reason": "neck end above the bent profile", "gap": h2 - h1})
            s0 /= 2.0
            continue
        # the Schwarzschild curve over [0, s0] stays right of and below the neck curve
        s = np.linspace(0.0, s0, 201)[1:]
        u, up, _ = profile.derivatives(s)
        ok = True
        for uj, upj in zip(u, up):
            e = solve_slope_equation(upj, rho, A)
            if e is not None and not rho * np.sqrt(1.0 + e) < uj:
                ok = False
                break
        if not ok:
            diag.append({"s0": s0, "reason": "Schwarzschild curve crosses the neck curve"})
            s0 /= 2.0
            continue
        return MatchResult(eps, s0, bent.delta, bent.bump_scale, slope, h2 - h1, k + 1, bent)
    raise MatchingFailed(
        f"no matching bending point after {attempts} attempts; the mass is too close to the threshold "
        "for the configured resolution",
        {"attempts": diag, "horizon_radius": profile.r0, "rho": rho},
    )


# --- profile reconstruction from stored parameters -------------------------------------


@lru_cache(maxsize=16)
def _schwarzschild(mass, n, s_max=None):
    return solve_profile(mass, n, s_max)


def neck_profile(rec, n):
    rho, A, eps = rec["rho"], rec["A"], rec["eps"]
    return RadialProfile(rec["start"], rec["stop"], n, lambda s: neck_profile_values(rho, A, eps, s))


def bent_profile(rec, n):
    base = _schwarzschild(float(rec["mass"]), n)
    bent = BentProfile(base, rec["s0"], rec["delta"], rec["bump_scale"])
    return bent


def bridge_profile(rec, n):
    """Recompute the glued profile from its pieces and mollification parameters."""
    f1 = neck_profile(rec["neck"], n)
    b = rec["bent"]
    bent = bent_profile(b, n)
    f2 = RadialProfile(b["start"], b["stop"], n, bent.derivatives)
    moved, offset = translate_intervals(GlueInput(f1, f2, n))
    ft = bridged(moved)
    cut = Cutoff(rec["m1"], moved.f1.stop - rec["delta_cut"], moved.f2.start + rec["delta_cut"], rec["m2"])
    f = mollify_variable(ft, rec["nu"], cut, (moved.f1.stop, moved.f2.start))
    return f, offset


@dataclass
class CompositeMetric:
    """Ordered segments of the extension, each with its own parameters.

    Profile coordinates are the arclength ``s`` from the boundary; the collar
    occupies ``s in [0, A/2]`` with ``s = A t``.
    """

    config: dict
    segments: list

    def segment(self, kind):
        for seg in self.segments:
            if seg["kind"] == kind:
                return seg
        raise KeyError(kind)

    def to_dict(self):
        return {"config": self.config, "segments": self.segments}

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict) or "segments" not in d or "config" not in d:
            raise ValueError("not a composite metric document")
        return cls(d["config"], d["segments"])

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _collar_record(path, A, eps, samples=COLLAR_SAMPLES):
    t = np.linspace(0.0, 0.5, samples)
    rec = {"kind": "collar", "A": A, "eps": eps, "t": t.tolist()}
    for order, names in ((0, ("a", "beta")), (1, ("a_t", "beta_t")), (2, ("a_tt", "beta_tt"))):
        a, b = path.coefficients(t, order)
        rec[names[0]] = a.tolist()
        rec[names[1]] = b.tolist()
    return rec


def assemble(config, path, A, rho, mass, match, glued):
    n = path.n
    bent = match.bent
    a2 = match.s0 - match.delta
    neck_rec = {"rho": rho, "A": A, "eps": match.eps, "start": 0.5 * A, "stop": A}
    bent_base = {
        "mass": mass,
        "s0": match.s0,
        "delta": match.delta,
        "bump_scale": bent.bump_scale,
    }
    segments = [
        _collar_record(path, A, match.eps),
        dict(kind="neck", **dict(neck_rec, stop=glued.m1)),
        {
            "kind": "bridge",
            "neck": neck_rec,
            "bent": dict(bent_base, start=a2, stop=a2 + GLUE_WINDOW * match.delta),
            "nu": glued.nu,
            "delta_cut": glued.delta_cut,
            "m1": glued.m1,
            "m2": glued.m2,
            "start": glued.m1,
            "stop": glued.m2,
        },
        dict(kind="bent", offset=glued.offset, start=glued.m2, stop=match.s0 + glued.offset, **bent_base),
        {"kind": "tail", "mass": mass, "offset": glued.offset, "start": match.s0 + glued.offset},
    ]
    return CompositeMetric(config.to_dict() | {"mass": mass}, segments)


# --- verification ----------------------------------------------------------------------


@dataclass
class VerificationReport:
    min_curvature: dict
    boundary_mean_curvature: float
    min_slice_mean_curvature: float
    boundary_volume: float
    adm_mass: float
    threshold_mass: float
    penrose_ratio: float
    parameters: dict
    joint_errors: dict
    clauses: dict
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.clauses.values())

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return _plain(d)


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _collar_from_record(rec, grid):
    t = np.asarray(rec["t"])
    arrays = {k: np.asarray(rec[k]) for k in ("a", "beta", "a_t", "beta_t", "a_tt", "beta_tt")}

    def evaluator(tt, order):
        idx = np.searchsorted(t, tt)
        if np.any(idx >= t.size) or np.any(np.abs(t[np.minimum(idx, t.size - 1)] - tt) > 1e-14):
            raise ValueError("the collar block is only known at its stored samples")
        suffix = ("", "_t", "_tt")[order]
        return arrays["a" + suffix][idx], arrays["beta" + suffix][idx]

    from .paths import MetricPath

    return MetricPath(grid, evaluator, t_samples=t), t, arrays


def _profile_samples(start, stop, count=4001, cluster=()):
    s = np.linspace(start, stop, count)
    extra = [np.linspace(max(start, c - w), min(stop, c + w), 801) for c, w in cluster]
    return np.unique(np.concatenate([s, *extra]))


def verify(composite, refine=1):
    """Recompute every clause of the construction from the stored composite."""
    cfg = composite.config
    n = int(cfg["n"])
    jt = float(cfg["tolerances"]["joint"])
    bt = float(cfg["tolerances"]["boundary"])
    grid = AngularGrid(n, int(cfg["grid_size"]))
    clauses, minR, joints, details = {}, {}, {}, {}

    # collar
    crec = composite.segment("collar")
    cpath, t, arr = _collar_from_record(crec, grid)
    A, eps = float(crec["A"]), float(crec["eps"])
    _, Rc, Hc = collar_fields(CollarMetric(A, eps, cpath), t)
    # stored derivatives must be consistent with the stored values
    from scipy.interpolate import make_interp_spline

    spl = make_interp_spline(t, arr["a"], k=5, axis=0)
    deriv_gap = float(np.max(np.abs(spl.derivative(1)(t[2:-2]) - arr["a_t"][2:-2])))
    details["collar_derivative_consistency"] = deriv_gap
    clauses["collar_samples_consistent"] = deriv_gap < 1e-4
    minR["collar"] = float(np.min(Rc))
    boundary_H = float(np.max(np.abs(Hc[0])))
    min_H = float(np.min(Hc[1:]))

    # input isometry and boundary volume
    g0 = AxiMetric(arr["a"][0], arr["beta"][0], grid)
    ref = input_metric(cfg["input"]["class"], cfg["input"]["cos_poly"], grid)
    iso = float(max(np.max(np.abs(g0.a - ref.a)), np.max(np.abs(g0.beta - ref.beta))))
    vol = volume(g0)

    # profile segments
    neck = neck_profile(composite.segment("neck"), n)
    brec = composite.segment("bridge")
    bridge, offset = bridge_profile(brec, n)
    krec = composite.segment("bent")
    bent = bent_profile(krec, n)
    koff = float(krec["offset"])
    trec = composite.segment("tail")
    tail_base = _schwarzschild(float(trec["mass"]), n)
    toff = float(trec["offset"])

    def shifted_eval(prof, off):
        return lambda s: prof.derivatives(np.asarray(s) - off)

    profiles = {
        "neck": (neck.derivatives, neck.start, neck.stop, ()),
        "bridge": (
            bridge.derivatives,
            brec["start"],
            brec["stop"],
            ((brec["neck"]["stop"], 3 * brec["nu"]), (brec["bent"]["start"] + offset, 3 * brec["nu"])),
        ),
    }
    for name, (fn, a, b, cl) in profiles.items():
        s = _profile_samples(a, b, 4001 * refine, cl)
        f, fp, fpp = fn(s)
        R = warped_curvature_values(f, fp, fpp, n)
        minR[name] = float(np.min(R))
        min_H = min(min_H, float(np.min(n * fp / f)))

    # bent segment: positive where resolvable, negligible where the bump is below round-off
    bent_piece = BentProfile(bent.base, bent.s0, bent.delta, bent.bump_scale)
    rep = verify_bent_psc(bent_piece)
    s = _profile_samples(krec["start"], krec["stop"], 4001 * refine) - koff
    s = s[s < bent.s0]
    f, fp, fpp = bent.derivatives(s)
    R = warped_curvature_values(f, fp, fpp, n)
    predicted = n / f**2 * np.exp(-((bent.bump_scale / (bent.s0 - s)) ** 2)) * bent.inequality_factor(s)
    resolved = predicted >= 1e-9
    minR["bent"] = float(np.min(R[resolved])) if resolved.any() else float("nan")
    details["bent_unresolved_max_abs"] = float(np.max(np.abs(R[~resolved]))) if (~resolved).any() else 0.0
    details["bent_inequality_factor_min"] = rep.min_inequality_factor
    min_H = min(min_H, float(np.min(n * fp / f)))

    # tail: exact Schwarzschild
    s_tail = tail_base.samples[tail_base.samples >= 0.0]
    Rt = warped_curvature_values(*tail_base.derivatives(s_tail), n)
    tail_max = float(np.max(np.abs(Rt)))
    ft, fpt, _ = tail_base.derivatives(s_tail[s_tail > 0])
    min_H = min(min_H, float(np.min(n * fpt / ft)))

    # joints
    def jump(fa, fb, x):
        va = [float(v[0]) for v in fa(np.array([x]))[:2]]
        vb = [float(v[0]) for v in fb(np.array([x]))[:2]]
        return max(abs(va[0] - vb[0]), abs(va[1] - vb[1]))

    x_top = 0.5 * A
    f_top, fp_top, _ = (float(v[0]) for v in neck.derivatives(np.array([x_top])))
    top = AxiMetric(arr["a"][-1] * np.sqrt(1 + eps * 0.25), arr["beta"][-1] * np.sqrt(1 + eps * 0.25), grid)
    R_top = curvature_values(grid, top.a, top.beta)
    joints["collar_neck"] = float(
        max(
            np.max(np.abs(R_top - n * (n - 1) / f_top**2)),
            abs(volume(top) - sphere_volume(n) * f_top**n),
            np.max(np.abs(Hc[-1] - n * fp_top / f_top)),
        )
    )
    joints["neck_bridge"] = jump(neck.derivatives, bridge.derivatives, float(brec["start"]))
    joints["bridge_bent"] = jump(bridge.derivatives, shifted_eval(bent, koff), float(brec["stop"]))
    joints["bent_tail"] = jump(shifted_eval(bent, koff), shifted_eval(tail_base, toff), float(trec["start"]))

    m = float(trec["mass"])
    m_min = threshold_mass(vol, n)
    ratio = m / m_min
    clauses["boundary_isometric"] = iso < 1e-10
    clauses["boundary_minimal"] = boundary_H < bt
    clauses["collar_psc"] = minR["collar"] > 0
    clauses["neck_psc"] = minR["neck"] > 0
    clauses["bridge_psc"] = minR["bridge"] > 0
    clauses["bent_psc"] = bool(minR["bent"] > 0 and details["bent_unresolved_max_abs"] < jt and rep.passed)
    clauses["tail_scalar_flat"] = tail_max < jt
    clauses["foliation_mean_convex"] = min_H > 0
    clauses["joints_continuous"] = all(v < jt for v in joints.values())
    clauses["adm_mass_matches"] = m == float(cfg["mass"])
    clauses["penrose_ratio_above_one"] = ratio > 1.0
    minR["tail_max_abs"] = tail_max
    details["boundary_isometry_error"] = iso
    params = {
        "A": A,
        "eps": eps,
        "s0": float(krec["s0"]),
        "delta": float(krec["delta"]),
        "bump_scale": float(krec["bump_scale"]),
        "nu": float(brec["nu"]),
        "delta_cut": float(brec["delta_cut"]),
        "rho": float(brec["neck"]["rho"]),
    }
    return VerificationReport(
        min_curvature=minR,
        boundary_mean_curvature=boundary_H,
        min_slice_mean_curvature=min_H,
        boundary_volume=vol,
        adm_mass=m,
        threshold_mass=m_min,
        penrose_ratio=ratio,
        parameters=params,
        joint_errors=joints,
        clauses=clauses,
        details=details,
    )


@dataclass
class BuildResult:
    composite: CompositeMetric
    report: VerificationReport
    path: object = field(repr=False)
    flow: object = field(repr=False, default=None)
    glue: object = field(repr=False, default=None)
    match: object = field(repr=False, default=None)


def build(config):
    """Run the whole construction and verify it.

    Raises
    ------
    PreconditionError
        If the mass does not exceed the threshold.
    ConstructionError
        From any stage; :class:`VerificationFailed` if the assembled
        composite fails a clause.
    """
    grid = AngularGrid(config.n, config.grid_size)
    g = input_metric(config.input_class, config.coefficients, grid)
    m, _ = resolve_mass(config, volume(g))
    path, flow = build_path(config, grid)
    rho = path.top_radius()
    expected = (volume(g) / sphere_volume(config.n)) ** (1.0 / config.n)
    if rho is None or abs(rho - expected) > 1e-8 * expected:
        raise PreconditionError(f"normalized path does not end at the round sphere of radius {expected:.12g}")
    A = find_A(path)
    profile = _schwarzschild(m, config.n)
    match = match_parameters(profile, A, rho)
    f1 = RadialProfile(0.5 * A, A, config.n, lambda s: neck_profile_values(rho, A, match.eps, s))
    a2 = match.s0 - match.delta
    f2 = RadialProfile(a2, a2 + GLUE_WINDOW * match.delta, config.n, match.bent.derivatives)
    glued = glue(GlueInput(f1, f2, config.n))
    composite = assemble(config, path, A, rho, m, match, glued)
    report = verify(composite)
    if not report.passed:
        raise VerificationFailed(report)
    return BuildResult(composite, report, path, flow, glued, match)


def segment_tables(composite):
    """CSV-ready tables ``name -> (header, rows)`` of every segment."""
    from .collar import collar_table

    cfg = composite.config
    n = int(cfg["n"])
    grid = AngularGrid(n, int(cfg["grid_size"]))
    crec = composite.segment("collar")
    cpath, t, _ = _collar_from_record(crec, grid)
    tables = {
        "collar": ("t,theta,a,b,R,H", collar_table(CollarMetric(crec["A"], crec["eps"], cpath), t)),
    }
    neck = neck_profile(composite.segment("neck"), n)
    brec = composite.segment("bridge")
    bridge, _ = bridge_profile(brec, n)
    krec = composite.segment("bent")
    bent = bent_profile(krec, n)
    trec = composite.segment("tail")
    tail = _schwarzschild(float(trec["mass"]), n)

    def rows(fn, s, shift=0.0):
        f, fp, fpp = fn(s - shift)
        return np.column_stack([s, f, fp, fpp, warped_curvature_values(f, fp, fpp, n)])

    header = "s,f,f_s,f_ss,R"
    tables["neck"] = (header, rows(neck.derivatives, np.linspace(neck.start, neck.stop, 401)))
    tables["bridge"] = (header, rows(bridge.derivatives, np.linspace(brec["start"], brec["stop"], 2001)))
    tables["bent"] = (
        header,
        rows(bent.derivatives, np.linspace(krec["start"], krec["stop"], 2001), float(krec["offset"])),
    )
    s_tail = float(trec["start"]) + np.linspace(0.0, 50.0 * tail.r0, 2001)
    tables["tail"] = (header, rows(tail.derivatives, s_tail, float(trec["offset"])))
    return tables
