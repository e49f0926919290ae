"""The nine solvers and a dispatcher keyed by :class:`Algorithm`."""

from ._common import (
    Algorithm,
    BetaRule,
    IterationTrace,
    NumericalError,
    SolveResult,
    SolverConfig,
    Termination,
)
from .bregman import fsmart, fsmart_e, fsmart_g, smart, theta_next
from .riemannian import bb_step, cg_beta, pg_armijo, rg_armijo, rg_bb, rg_cg, rg_hz

SOLVERS = {
    Algorithm.SMART: smart,
    Algorithm.FSMART: fsmart,
    Algorithm.FSMART_E: fsmart_e,
    Algorithm.FSMART_G: fsmart_g,
    Algorithm.RG_ARMIJO: rg_armijo,
    Algorithm.RG_HZ: rg_hz,
    Algorithm.RG_BB: rg_bb,
    Algorithm.RG_CG: rg_cg,
    Algorithm.PG: pg_armijo,
}


def solve(P, x0, cfg: SolverConfig, keep_points: bool = False) -> SolveResult:
    return SOLVERS[cfg.algorithm](P, x0, cfg, keep_points=keep_points)


__all__ = [
    "Algorithm",
    "BetaRule",
    "IterationTrace",
    "NumericalError",
    "SOLVERS",
    "SolveResult",
    "SolverConfig",
    "Termination",
    "bb_step",
    "cg_beta",
    "fsmart",
    "fsmart_e",
    "fsmart_g",
    "pg_armijo",
    "rg_armijo",
    "rg_bb",
    "rg_cg",
    "rg_hz",
    "smart",
    "solve",
    "theta_next",
]
