"""Exception hierarchy.

Every failure raised by a construction stage derives from
:class:`ConstructionError`; the CLI maps these to exit code 2.
"""


class ConstructionError(Exception):
    """A verified failure of the construction (not a usage or IO error)."""

    stage = "unknown"


class ResolutionError(ConstructionError):
    stage = "geometry"


class PositivityFailed(ConstructionError):
    stage = "bend"

    def __init__(self, delta, margin):
        super().__init__(f"bending inequality fails for delta={delta:.6g} (min margin {margin:.3e})")
        self.delta = delta
        self.margin = margin


class StepFailure(ConstructionError):
    stage = "flow"


class CurvatureSignLost(ConstructionError):
    stage = "flow"


class ClosureNotSmooth(ConstructionError):
    stage = "path"


class InputNotPSC(ConstructionError):
    stage = "path"


class PathPositivityFailed(ConstructionError):
    stage = "path"


class NotPSC(ConstructionError):
    stage = "path"


class PositivityLost(ConstructionError):
    stage = "path"


class SolveFailure(ConstructionError):
    stage = "path"


class SearchExhausted(ConstructionError):
    stage = "search"


class HypothesisViolated(ConstructionError):
    stage = "glue"

    def __init__(self, which, detail=""):
        msg = f"hypothesis ({which}) violated"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.which = which


class MatchingFailed(ConstructionError):
    stage = "match"

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class PreconditionError(ConstructionError):
    stage = "config"


class VerificationFailed(ConstructionError):
    stage = "verify"

    def __init__(self, report):
        failed = [k for k, v in report.clauses.items() if not v]
        super().__init__(f"verification failed: {', '.join(failed)}")
        self.report = report
