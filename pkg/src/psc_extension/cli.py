"""Command-line front end.

Exit codes: 0 when everything verifies, 1 for usage or IO errors, 2 when a
construction stage fails or a verification clause does not hold.
"""

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from importlib import metadata

import numpy as np

from .errors import ConstructionError, VerificationFailed
from .geometry import AngularGrid, AxiFunction

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


class UsageError(Exception):
    pass


def tool_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _read_json(path):
    if path is None:
        raise UsageError("--config is required")
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"{path} must hold a JSON object")
    return doc


class Output:
    """Writes files into one directory and records their checksums."""

    def __init__(self, out_dir, config):
        self.dir = out_dir
        self.config = config
        self.files = {}
        self.started = datetime.now(timezone.utc).isoformat()
        try:
            os.makedirs(out_dir, exist_ok=True)
        except OSError as exc:
            raise UsageError(f"cannot create {out_dir}: {exc.strerror}") from exc

    def _record(self, name):
        with open(os.path.join(self.dir, name), "rb") as fh:
            self.files[name] = hashlib.sha256(fh.read()).hexdigest()

    def json(self, name, obj):
        with open(os.path.join(self.dir, name), "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self._record(name)

    def csv(self, name, header, rows):
        np.savetxt(os.path.join(self.dir, name), rows, delimiter=",", header=header, comments="", fmt="%.17g")
        self._record(name)

    def manifest(self, command):
        doc = {
            "command": command,
            "config": self.config,
            "tool_version": tool_version(),
            "started": self.started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "files": dict(sorted(self.files.items())),
        }
        with open(os.path.join(self.dir, "manifest.json"), "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _failure(exc):
    doc = {"passed": False, "error": type(exc).__name__, "stage": getattr(exc, "stage", "unknown"), "message": str(exc)}
    for attr in ("which", "diagnostics"):
        if getattr(exc, attr, None) is not None:
            doc[attr] = getattr(exc, attr)
    if isinstance(exc, VerificationFailed):
        doc["report"] = exc.report.to_dict()
    return _jsonable(doc)


def _jsonable(x):
    return json.loads(json.dumps(x, default=lambda v: v.item() if hasattr(v, "item") else str(v)))


def _build_config(doc, args):
    from .pipeline import BuildConfig

    if args.resolution is not None:
        doc = dict(doc, grid_size=args.resolution)
    if args.tolerance is not None:
        doc = dict(doc, tolerances=dict(doc.get("tolerances", {}), flow_stop=args.tolerance))
    try:
        return BuildConfig.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid build config: {exc}") from exc


def cmd_build(args, log):
    from .pipeline import build, segment_tables

    doc = _read_json(args.config)
    config = _build_config(doc, args)
    out = Output(args.out or config.output_dir, config.to_dict())
    try:
        result = build(config)
    except ConstructionError as exc:
        out.json("report.json", _failure(exc))
        out.manifest("build")
        log(f"build failed in stage {getattr(exc, 'stage', 'unknown')}: {exc}")
        return EXIT_FAILED
    report = result.report.to_dict()
    out.json("report.json", report)
    with open(os.path.join(out.dir, "composite.json"), "w") as fh:
        json.dump(result.composite.to_dict(), fh, sort_keys=True)
    out._record("composite.json")
    for name, (header, rows) in segment_tables(result.composite).items():
        out.csv(f"{name}.csv", header, rows)
    out.manifest("build")
    log(f"build passed: penrose ratio {report['penrose_ratio']:.6f}, mass {report['adm_mass']:.10g}")
    return EXIT_OK


def cmd_flow(args, log):
    from .flow import icf_flow

    doc = _read_json(args.config)
    try:
        n = int(doc["n"])
        coeffs = doc.get("input", {}).get("cos_poly", doc.get("cos_poly"))
        size = int(args.resolution or doc.get("grid_size", 128))
        tol = float(args.tolerance or doc.get("tolerances", {}).get("flow_stop", 1e-6))
        grid = AngularGrid(n, size)
        rho0 = AxiFunction(grid, np.polynomial.polynomial.polyval(grid.x, [float(c) for c in coeffs]))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid flow config: {exc}") from exc
    out = Output(args.out or doc.get("output_dir", "out"), doc)
    try:
        result = icf_flow(rho0, stop_tol=tol)
    except ConstructionError as exc:
        out.json("flow_summary.json", _failure(exc))
        out.manifest("flow")
        log(f"flow failed: {exc}")
        return EXIT_FAILED
    out.csv("trajectory.csv", "t,theta,rho,rho_rescaled", result.trajectory_table())
    out.json("flow_summary.json", _jsonable(dict(result.summary(), passed=result.converged)))
    out.manifest("flow")
    log(f"flow converged to radius {result.limit_radius:.12g} with rate {result.decay_rate:.4f}")
    return EXIT_OK if result.converged else EXIT_FAILED


def cmd_bend(args, log):
    from .schwarzschild import profile_table, search_delta, solve_profile, verify_bent_psc

    doc = _read_json(args.config)
    try:
        n, m = int(doc["n"]), float(doc["mass"])
        s0 = doc.get("s0")
        count = int(args.resolution or doc.get("samples", 4001))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid bend config: {exc}") from exc
    out = Output(args.out or doc.get("output_dir", "out"), doc)
    try:
        profile = solve_profile(m, n)
        s0 = profile.r0 / 2.0 if s0 is None else float(s0)
        bent = search_delta(profile, s0)
        rep = verify_bent_psc(bent, flat_tol=args.tolerance or 1e-8)
    except (ConstructionError, ValueError) as exc:
        if not isinstance(exc, ConstructionError):
            raise UsageError(str(exc)) from exc
        out.json("bend_report.json", _failure(exc))
        out.manifest("bend")
        log(f"bend failed: {exc}")
        return EXIT_FAILED
    s = np.linspace(0.0, bent.s0 + 10.0 * profile.r0, count)
    out.csv("bent_profile.csv", "s,f,f_s,f_ss,R", profile_table(bent, s))
    summary = dict(vars(rep), s0=bent.s0, delta=bent.delta, bump_scale=bent.bump_scale, horizon_radius=profile.r0)
    out.json("bend_report.json", _jsonable(summary))
    out.manifest("bend")
    log(f"bend at s0={bent.s0:.6g} with delta={bent.delta:.6g}: {'pass' if rep.passed else 'fail'}")
    return EXIT_OK if rep.passed else EXIT_FAILED


def cmd_glue(args, log):
    from .collar import neck_profile_values
    from .geometry import RadialProfile
    from .gluing import GlueInput, glue, glue_table
    from .pipeline import GLUE_WINDOW, match_parameters
    from .schwarzschild import solve_profile

    doc = _read_json(args.config)
    try:
        n, m = int(doc["n"]), float(doc["mass"])
        rho, A = float(doc.get("rho", 1.0)), float(doc.get("A", 2.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid glue config: {exc}") from exc
    out = Output(args.out or doc.get("output_dir", "out"), doc)
    try:
        match = match_parameters(solve_profile(m, n), A, rho)
        f1 = RadialProfile(0.5 * A, A, n, lambda s: neck_profile_values(rho, A, match.eps, s))
        a2 = match.s0 - match.delta
        f2 = RadialProfile(a2, a2 + GLUE_WINDOW * match.delta, n, match.bent.derivatives)
        result = glue(GlueInput(f1, f2, n))
    except ConstructionError as exc:
        out.json("glue_report.json", _failure(exc))
        out.manifest("glue")
        log(f"glue failed: {exc}")
        return EXIT_FAILED
    out.csv("glue.csv", "s,f,f_s,f_ss,omega,R", glue_table(result))
    summary = {k: v for k, v in vars(result).items() if k != "f"}
    summary.update(eps=match.eps, s0=match.s0, delta=match.delta, passed=True)
    out.json("glue_report.json", _jsonable(summary))
    out.manifest("glue")
    log(f"glued with nu={result.nu:.3e}, margin {result.margin:.3e} (required {result.required_margin:.3e})")
    return EXIT_OK


def cmd_verify(args, log):
    from .pipeline import CompositeMetric, verify

    path = args.composite or args.config
    doc = _read_json(path)
    try:
        composite = CompositeMetric.from_dict(doc)
        if args.tolerance is not None:
            composite.config["tolerances"]["joint"] = args.tolerance
        report = verify(composite)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise UsageError(f"malformed composite: {exc}") from exc
    rep = report.to_dict()
    if args.out:
        out = Output(args.out, composite.config)
        out.json("report.json", rep)
        out.manifest("verify")
    failed = [k for k, v in report.clauses.items() if not v]
    log("verification passed" if not failed else f"verification failed: {', '.join(failed)}")
    return EXIT_OK if report.passed else EXIT_FAILED


COMMANDS = {"build": cmd_build, "flow": cmd_flow, "bend": cmd_bend, "glue": cmd_glue, "verify": cmd_verify}


def make_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--resolution", type=int, help="angular grid size (build, flow) or sample count (bend)")
    common.add_argument("--tolerance", type=float, help="flow stopping tolerance, flatness tolerance (bend) or joint tolerance (verify)")
    common.add_argument("--quiet", action="store_true", help="print nothing on success or failure")
    parser = argparse.ArgumentParser(prog="psc-extension", description="PSC extensions with a Schwarzschild end")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="run the full construction and verify it")
    sub.add_parser("flow", parents=[common], help="run the inverse curvature flow of a star-shaped hypersurface")
    sub.add_parser("bend", parents=[common], help="bend a Schwarzschild profile to positive scalar curvature")
    sub.add_parser("glue", parents=[common], help="glue a collar neck to a bent Schwarzschild profile")
    p = sub.add_parser("verify", parents=[common], help="re-verify a stored composite metric")
    p.add_argument("composite", nargs="?", help="composite.json written by build")
    return parser


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE

    def log(msg):
        if not args.quiet:
            print(msg, file=sys.stderr)

    try:
        return COMMANDS[args.command](args, log)
    except UsageError as exc:
        log(f"error: {exc}")
        return EXIT_USAGE
    except OSError as exc:
        log(f"error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
