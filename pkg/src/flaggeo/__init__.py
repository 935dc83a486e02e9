"""Riemannian geometry of flag manifolds and Grassmannians as tuples of projectors.

The main entry points are re-exported here; see the submodules for the rest.
"""

from .eigtrack import MatrixCurve, TrackResult, eigenflag, lift_length_check, polynomial_curve, sampled_curve, track
from .errors import DomainError, FlagGeoError, ValidationError
from .flag import (
    FlagPoint,
    FlagSignature,
    FlagTangent,
    flag_connection,
    flag_exp,
    flag_geodesic,
    flag_metric,
    flag_sectional,
    local_section_flag,
    make_flag,
    make_flag_tangent,
    standard_flag,
)
from .grassmann import (
    GrassTangent,
    Projector,
    StiefelFrame,
    grassmann_connection,
    grassmann_distance,
    grassmann_exp,
    grassmann_holonomy,
    grassmann_log,
    make_projector,
    principal_angles,
    stiefel_exp,
)
from .homogeneous import HomogeneousSetup, bracket_condition, connection_any, curvature_any, flag_setup, sphere_setup
from .linalg import DerivConfig
from .vectorfield import VectorField

__version__ = "0.1.0"

__all__ = [
    "MatrixCurve", "TrackResult", "eigenflag", "lift_length_check", "polynomial_curve",
    "sampled_curve", "track", "DomainError", "FlagGeoError", "ValidationError",
    "FlagPoint", "FlagSignature", "FlagTangent", "flag_connection", "flag_exp", "flag_geodesic",
    "flag_metric", "flag_sectional", "local_section_flag", "make_flag", "make_flag_tangent",
    "standard_flag", "GrassTangent", "Projector", "StiefelFrame", "grassmann_connection",
    "grassmann_distance", "grassmann_exp", "grassmann_holonomy", "grassmann_log",
    "make_projector", "principal_angles", "stiefel_exp", "HomogeneousSetup",
    "bracket_condition", "connection_any", "curvature_any", "flag_setup", "sphere_setup",
    "DerivConfig", "VectorField",
]
