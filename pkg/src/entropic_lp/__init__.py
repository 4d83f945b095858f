"""Entropic regularization of linear programs.

Builders for transport and conic-coupling LPs, scaling solvers for the
regularized problem, exact combinatorial calculators, and a path tracker that
follows the entropic optimum down to an LP vertex.
"""

from .builders import (
    ConicProblem,
    ConstructionInfeasible,
    TransportProblem,
    birch_point_transport,
    build_conic,
    build_transport,
    conic_feasible_point,
    conic_matrix,
    transport_matrix,
)
from .combinatorics import (
    ConicShape,
    cone_membership,
    conic_degree,
    conv_A_volume,
    convA0_facets,
    hull_facets,
    volume_oracle,
)
from .dual_ascent import ascent_solve, positive_root
from .gis import OnesNotInRowSpace, gis_augment, gis_solve
from .model import (
    EntropicSolution,
    ResidualReport,
    StandardFormLP,
    integer_kernel,
    ones_coefficients,
    toric_residual,
    validate,
)
from .oracle import Infeasible, lp_feasible, lp_optimum, mirror_solve
from .path import corrector, initial_t, round_to_vertex, track
from .sinkhorn import sinkhorn_solve

__version__ = "0.1.0"

__all__ = [
    "ConicProblem",
    "ConicShape",
    "ConstructionInfeasible",
    "EntropicSolution",
    "Infeasible",
    "OnesNotInRowSpace",
    "ResidualReport",
    "StandardFormLP",
    "TransportProblem",
    "ascent_solve",
    "birch_point_transport",
    "build_conic",
    "build_transport",
    "cone_membership",
    "conic_degree",
    "conic_feasible_point",
    "conic_matrix",
    "conv_A_volume",
    "convA0_facets",
    "corrector",
    "gis_augment",
    "gis_solve",
    "hull_facets",
    "initial_t",
    "integer_kernel",
    "lp_feasible",
    "lp_optimum",
    "mirror_solve",
    "ones_coefficients",
    "positive_root",
    "round_to_vertex",
    "sinkhorn_solve",
    "toric_residual",
    "track",
    "transport_matrix",
    "validate",
    "volume_oracle",
]
