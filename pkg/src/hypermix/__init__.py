"""Recursive hypergraph constructions: patterns, blowups, Lagrangians and extremal counts."""

from .errors import CapacityError, DomainError
from .feasible import (
    AffineMap,
    PointSet,
    hausdorff_dimension,
    ifs_maps,
    iterate_M,
    limit_shadow_density,
    open_set_check,
)
from .hypercore import RGraph, canonical_form, complete, embeds, shadow
from .lagrange import SimplexVector, is_minimal, lagrange_grad, lagrange_poly, maximize_f, pattern_lagrangian
from .mixing import (
    PatternFamily,
    RecipeTree,
    build,
    forbidden_family,
    is_subconstruction,
    lambda_n,
    limit_density,
    max_constructions,
)
from .pattern import B53, K53, Pattern, bipartite, blowup, blowup_count, library
from .sts import STS, fingerprint, fingerprint_partition, prop22_check, sts_generate, sts_validate

__version__ = "0.1.0"
