"""Configuration, trace records and shared plumbing for the solvers."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from ..geometry import RetractionOverflowError
from ..linops import OpCounter
from ..objective import KlProblem


class Algorithm(str, enum.Enum):
    SMART = "SMART"
    FSMART = "FSMART"
    FSMART_E = "FSMART-E"
    FSMART_G = "FSMART-G"
    RG_ARMIJO = "RG-ARMIJO"
    RG_HZ = "RG-HZ"
    RG_BB = "RG-BB"
    RG_CG = "RG-CG"
    PG = "PG"


class BetaRule(str, enum.Enum):
    FR = "FR"
    PR = "PR"
    DY = "DY"
    HS = "HS"
    HZ = "HZ"
    OV = "OV"


class Termination(str, enum.Enum):
    GRAD_TOL = "GradTol"
    MAX_ITER = "MaxIter"
    NUMERICAL_ERROR = "NumericalError"


class NumericalError(ArithmeticError):
    """A solver could not continue (line search exhausted, Newton failure, ...)."""


@dataclass(frozen=True)
class SolverConfig:
    algorithm: Algorithm = Algorithm.SMART
    max_iter: int = 1000
    grad_tol: float = 1e-8
    armijo_sigma: float = 1e-3
    armijo_beta: float = 0.8
    init_step: float = 0.2
    hz_sigma2: float = 1e-3
    hz_rho: float = 0.5
    bb_gamma_min: float = 1e-7
    bb_gamma_max: float = 1.0
    bb_memory: int = 10
    e_gamma0: float = 5.0
    e_gamma_min: float = 1.0
    e_delta: float = 0.05
    g_rho: float = 1.2
    g_gamma: float = 2.0
    g_gain_min: float = 1e-3
    cg_beta_rule: BetaRule = BetaRule.DY
    cg_mu: float = 2.0
    newton_tol: float = 1e-12
    max_backtracks: int = 60
    max_gain_increases: int = 50

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        object.__setattr__(self, "cg_beta_rule", BetaRule(self.cg_beta_rule))
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if not 0 < self.armijo_beta < 1:
            raise ValueError("armijo_beta must lie in (0, 1)")
        if not 0 < self.armijo_sigma < 1:
            raise ValueError("armijo_sigma must lie in (0, 1)")
        if not 0 < self.bb_gamma_min <= self.bb_gamma_max:
            raise ValueError("need 0 < bb_gamma_min <= bb_gamma_max")
        if not 0 <= self.hz_rho < 1:
            raise ValueError("hz_rho must lie in [0, 1)")
        if not self.init_step > 0:
            raise ValueError("init_step must be positive")
        if self.e_gamma_min < 1 or self.e_gamma0 < self.e_gamma_min or not self.e_delta > 0:
            raise ValueError("need 1 <= e_gamma_min <= e_gamma0 and e_delta > 0")
        if not self.g_rho > 1 or not self.g_gain_min > 0 or self.g_gamma < 1:
            raise ValueError("need g_rho > 1, g_gain_min > 0, g_gamma >= 1")

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)

    @classmethod
    def from_mapping(cls, mapping) -> "SolverConfig":
        """Build from string key/value pairs, coercing to the field types."""
        kinds = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            key = key.strip().replace("-", "_")
            if key not in kinds:
                raise KeyError(f"unknown solver option {key!r}")
            default = getattr(cls(), key)
            if isinstance(default, enum.Enum):
                kwargs[key] = type(default)(str(raw).strip().upper())
            elif isinstance(default, bool):
                kwargs[key] = str(raw).strip().lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                kwargs[key] = int(raw)
            else:
                kwargs[key] = float(raw)
        return cls(**kwargs)

    def label(self) -> str:
        if self.algorithm is Algorithm.RG_CG:
            return f"RG-CG({self.cg_beta_rule.value})"
        return self.algorithm.value


@dataclass
class IterationTrace:
    """State of a run at iterate k.

    ``matvec_count`` is the cumulative number of products with A or A^T spent
    to produce x_k. Work that only serves to leave x_k (SMART's gradient at
    x_k, a line search's transpose product at x_k) is charged to the next
    iteration, and monitoring done only for the trace is not counted, so
    SMART and FSMART show exactly 2k at iterate k.
    """

    iter: int
    objective: float
    grad_norm: float
    step_size: float
    matvec_count: int
    certificate: float | None = None
    inner_backtracks: int = 0
    overflow_rejections: int = 0
    beta: float | None = None
    reference_value: float | None = None
    trial_step: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolveResult:
    final_point: np.ndarray
    trace: list[IterationTrace] = field(default_factory=list)
    termination: Termination = Termination.MAX_ITER
    algorithm: str = ""
    message: str = ""
    points: list[np.ndarray] | None = None

    @property
    def iterations(self) -> int:
        return max(len(self.trace) - 1, 0)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([t.objective for t in self.trace])


class Run:
    """Mutable per-run state: counter, trace, optional iterate history."""

    def __init__(self, P: KlProblem, x0, cfg: SolverConfig, keep_points: bool = False):
        self.P = P
        self.M = P.manifold
        self.cfg = cfg
        self.counter = OpCounter()
        self.trace: list[IterationTrace] = []
        self.points: list[np.ndarray] | None = [] if keep_points else None
        self.x0 = self.M.check_point(x0).copy()
        if self.x0.shape != (P.n,):
            raise ValueError(f"x0 has shape {self.x0.shape}, expected ({P.n},)")

    def monitor(self, x):
        """Uncounted objective and Riemannian gradient norm at x."""
        f, g, _ = self.P.value_and_gradient(x)
        return f, self.grad_norm(x, g)

    def grad_norm(self, x, g) -> float:
        return float(np.sqrt(max(self.M.grad_sq_norm(x, g), 0.0)))

    def record(self, x, f, grad_norm, step, count: int | None = None, **extra) -> IterationTrace:
        """Append iterate x; ``count`` overrides the counter snapshot (see IterationTrace)."""
        rec = IterationTrace(
            iter=len(self.trace),
            objective=float(f),
            grad_norm=float(grad_norm),
            step_size=float(step),
            matvec_count=self.counter.matvec_count if count is None else count,
            **extra,
        )
        self.trace.append(rec)
        if self.points is not None:
            self.points.append(np.array(x, copy=True))
        return rec

    def done(self, grad_norm) -> Termination | None:
        if grad_norm <= self.cfg.grad_tol:
            return Termination.GRAD_TOL
        if len(self.trace) > self.cfg.max_iter:
            return Termination.MAX_ITER
        return None

    def result(self, x, termination, message="") -> SolveResult:
        return SolveResult(
            final_point=np.array(x, copy=True),
            trace=self.trace,
            termination=termination,
            algorithm=self.cfg.label(),
            message=message,
            points=self.points,
        )


NUMERICAL_FAILURES = (NumericalError, FloatingPointError, RetractionOverflowError, ValueError)
