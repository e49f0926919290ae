"""KL regression solvers over the orthant, the unit box and the probability simplex."""

from ._backend import BACKEND
from .geometry import BOX, ORTHANT, SIMPLEX, DomainError, ManifoldKind, RetractionOverflowError, get_manifold
from .linops import NonnegativeSparseMatrix, OpCounter, from_coordinate_text
from .objective import KlProblem, kl
from .solvers import Algorithm, BetaRule, SolverConfig, SolveResult, Termination, solve

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BOX",
    "ORTHANT",
    "SIMPLEX",
    "Algorithm",
    "BetaRule",
    "DomainError",
    "KlProblem",
    "ManifoldKind",
    "NonnegativeSparseMatrix",
    "OpCounter",
    "RetractionOverflowError",
    "SolveResult",
    "SolverConfig",
    "Termination",
    "from_coordinate_text",
    "get_manifold",
    "kl",
    "solve",
]
