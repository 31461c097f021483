"""Positive scalar curvature extensions of metrics on spheres with an exact Schwarzschild end."""

from .errors import ConstructionError
from .geometry import AngularGrid, AxiFunction, AxiMetric, RadialProfile, scalar_curvature_axi
from .pipeline import BuildConfig, CompositeMetric, build, threshold_mass, verify

__all__ = [
    "AngularGrid",
    "AxiFunction",
    "AxiMetric",
    "BuildConfig",
    "CompositeMetric",
    "ConstructionError",
    "RadialProfile",
    "build",
    "scalar_curvature_axi",
    "threshold_mass",
    "verify",
]
