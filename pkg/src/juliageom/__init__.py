"""Numerical experiments on the geometry of Julia sets of rational maps."""

__version__ = "0.1.0"

from .errors import JuliaGeomError, NumericalError, ValidationError
from .ratmap import Polynomial, RationalMap, parse_map
from .sphere import INF, chordal_distance

__all__ = [
    "INF",
    "JuliaGeomError",
    "NumericalError",
    "Polynomial",
    "RationalMap",
    "ValidationError",
    "chordal_distance",
    "parse_map",
]
