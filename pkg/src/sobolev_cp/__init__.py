"""Sharp Sobolev constants of planar domains and their extremal functions.

``C_p(D) = inf int |grad u|^2 / (int u^p)^(2/p)`` over nonnegative
``u`` vanishing on the boundary, computed with P1 finite elements, together
with numerical checks of a Schwarz-lemma monotonicity statement for
``C_p(f(r D))`` and of a reverse Hoelder inequality for the extremal.
"""

from .exceptions import (
    CgStalledError,
    FoldedMeshError,
    InsufficientRegularRowsError,
    InvalidExponentError,
    InvalidInputError,
    InvalidMapError,
    InvalidPolygonError,
    NoInteriorVerticesError,
    NotConvergedError,
    PoleHitError,
    ResolutionTooCoarseError,
    SobolevError,
    SweepTooSparseError,
    WrongExponentError,
)
from .geometry import (
    ConformalMap,
    Disk,
    MapImage,
    Polygon,
    TriMesh,
    domain_from_json,
    eval_derivative,
    eval_map,
    mesh_disk,
    mesh_domain,
    mesh_map_image,
    mesh_polygon,
)
from .solver import (
    SobolevExtremal,
    SolveResult,
    SolverConfig,
    el_residual,
    minimize_quotient,
    sobolev_constant,
)

__version__ = "0.1.0"
