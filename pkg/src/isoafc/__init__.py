"""High-resolution isogeometric solver for stationary convection-diffusion.

Quadratic (or any degree) tensor B-spline Galerkin discretization on a spline
mapped domain, stabilized by algebraic flux correction of TVD type.
"""

from .config import ProblemConfig, parse_config
from .driver import run_case
from .geometry import GeometryMap
from .spline import KnotVector, TensorSplineSpace

__all__ = ["GeometryMap", "KnotVector", "ProblemConfig", "TensorSplineSpace", "parse_config", "run_case"]
__version__ = "0.1.0"
