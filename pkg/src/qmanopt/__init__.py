"""Riemannian eigensolvers on Stiefel and Grassmann manifolds.

Tangent vectors are handled as left/right Lie-algebra actions so that the
same optimizers run on dense frames and on a statevector model of an
entangled ancilla-system register.
"""

from .driver import RunConfig, RunReport, partition_sequence, run, strategy2_diagonalize, strategy3_subspace_opt
from .errors import (
    ConfigError,
    ConstraintError,
    DimensionError,
    NumericalError,
    ParameterError,
    ParseError,
    QManoptError,
    RepresentationError,
    StageFailure,
    StagnationError,
    SymmetryError,
)
from .hamiltonian import build_jw_hamiltonian, load_hamiltonian, parse_fcidump, read_fcidump, sector_project
from .manifold import GRASSMANN, STIEFEL, ManifoldKind, StiefelPoint, TangentAction, inner, retract
from .optim import CGConfig, IterationRecord, TrustRegionConfig, solve_rcg, solve_rtr
from .problems import GrassmannProblem, StiefelProblem, fd_check_gradient, fd_check_hessian

__version__ = "0.1.0"

__all__ = [
    "CGConfig",
    "ConfigError",
    "ConstraintError",
    "DimensionError",
    "GRASSMANN",
    "GrassmannProblem",
    "IterationRecord",
    "ManifoldKind",
    "NumericalError",
    "ParameterError",
    "ParseError",
    "QManoptError",
    "RepresentationError",
    "RunConfig",
    "RunReport",
    "STIEFEL",
    "StageFailure",
    "StagnationError",
    "StiefelPoint",
    "StiefelProblem",
    "SymmetryError",
    "TangentAction",
    "TrustRegionConfig",
    "build_jw_hamiltonian",
    "fd_check_gradient",
    "fd_check_hessian",
    "inner",
    "load_hamiltonian",
    "parse_fcidump",
    "partition_sequence",
    "read_fcidump",
    "retract",
    "run",
    "sector_project",
    "solve_rcg",
    "solve_rtr",
    "strategy2_diagonalize",
    "strategy3_subspace_opt",
]
