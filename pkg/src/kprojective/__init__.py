"""Projective geometry over R, C and H.

Dual-set (Hilbert-type) metrics on properly convex domains, proximal
dynamics of projective automorphisms and the Moebius group of the
quaternionic line.
"""

from .config import DEFAULTS
from .domain import (
    Ball, Domain, DualSample, Paraboloid, Region, C11ExampleDomain, TransformedDomain, domain_from_json,
    dual_sample, make_ball, make_paraboloid, make_sec9, tangent_hyperplane,
)
from .dynamics import (
    Proximality, ProximalClass, StandardForm, classify, iterate_orbit, limit_set_sample,
    rank_one_limit, standard_form,
)
from .errors import KProjError, NumericalError, ValidationError
from .hilbert_metric import DistanceResult, ball_distance, general_distance
from .kmatrix import KMatrix, kak_decompose, sigma_spectrum
from .kscalar import Field, Scalar
from .moebius import MoebiusMap, SpherePlane, halfspace_aut_membership, map_sphereplane
from .projspace import DualPoint, ProjMap, ProjPoint, from_chart, proj_distance

__version__ = "0.1.0"

__all__ = [
    "DEFAULTS", "Ball", "Domain", "DualSample", "Paraboloid", "Region", "C11ExampleDomain",
    "TransformedDomain", "domain_from_json", "dual_sample", "make_ball", "make_paraboloid",
    "make_sec9", "tangent_hyperplane", "Proximality", "ProximalClass", "StandardForm", "classify",
    "iterate_orbit", "limit_set_sample", "rank_one_limit", "standard_form", "KProjError",
    "NumericalError", "ValidationError", "DistanceResult", "ball_distance", "general_distance",
    "KMatrix", "kak_decompose", "sigma_spectrum", "Field", "Scalar", "MoebiusMap", "SpherePlane",
    "halfspace_aut_membership", "map_sphereplane", "DualPoint", "ProjMap", "ProjPoint",
    "from_chart", "proj_distance", "__version__",
]
