"""The KL regression objective f(x) = KL(Ax, b) and its Euclidean gradient."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .geometry import Manifold, ManifoldKind, get_manifold
from .linops import NonnegativeSparseMatrix, OpCounter

# round-off allowance for slightly negative first arguments
KL_NEG_TOL = 1e-14


def _clean_first(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if np.any(y < -KL_NEG_TOL):
        i = int(np.flatnonzero(y < -KL_NEG_TOL)[0])
        raise ValueError(f"kl: first argument negative at {i} ({y[i]!r})")
    if np.any(y < 0):
        y = np.maximum(y, 0.0)
    return np.ascontiguousarray(y)


def kl(y, yp) -> float:
    """Generalized KL divergence <y, log y - log y'> - <1, y - y'> with 0 log 0 = 0."""
    y = _clean_first(y)
    yp = np.ascontiguousarray(yp, dtype=np.float64)
    if y.shape != yp.shape:
        raise ValueError(f"kl: length mismatch {y.shape} vs {yp.shape}")
    if np.any(yp <= 0) or not np.all(np.isfinite(yp)):
        raise ValueError("kl: second argument must be strictly positive and finite")
    return max(_backend.kl_sum(y, yp), 0.0)


@dataclass(frozen=True)
class KlProblem:
    """Bundle (A, b, manifold) defining f(x) = KL(Ax, b) on one of the three domains."""

    A: NonnegativeSparseMatrix
    b: np.ndarray
    kind: ManifoldKind = ManifoldKind.BOX
    L: float = field(init=False)

    def __post_init__(self):
        b = np.ascontiguousarray(self.b, dtype=np.float64)
        if b.shape != (self.A.shape[0],):
            raise ValueError(f"b has shape {b.shape}, expected ({self.A.shape[0]},)")
        if np.any(b <= 0) or not np.all(np.isfinite(b)):
            raise ValueError("b must be strictly positive")
        b.flags.writeable = False
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "kind", ManifoldKind(self.kind))
        object.__setattr__(self, "L", self.A.one_norm())

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def manifold(self) -> Manifold:
        return get_manifold(self.kind)

    # -- evaluations --------------------------------------------------

    def forward(self, x, counter: OpCounter | None = None) -> np.ndarray:
        return self.A.matvec(x, counter)

    def value_from_forward(self, ax) -> float:
        return kl(ax, self.b)

    def gradient_from_forward(self, ax, counter: OpCounter | None = None) -> np.ndarray:
        ax = np.asarray(ax)
        if np.any(ax <= 0):
            i = int(np.flatnonzero(ax <= 0)[0])
            raise FloatingPointError(f"gradient: (Ax)_{i} = {ax[i]!r} is not positive")
        r = np.log(ax / self.b)
        if not np.all(np.isfinite(r)):
            raise FloatingPointError("gradient: non-finite log ratio")
        return self.A.rmatvec(r, counter)

    def objective(self, x, counter: OpCounter | None = None) -> float:
        return self.value_from_forward(self.forward(x, counter))

    def gradient(self, x, counter: OpCounter | None = None) -> np.ndarray:
        return self.gradient_from_forward(self.forward(x, counter), counter)

    def value_and_gradient(self, x, counter: OpCounter | None = None):
        """(f(x), grad f(x), Ax) sharing one forward product: two matvecs."""
        ax = self.forward(x, counter)
        return self.value_from_forward(ax), self.gradient_from_forward(ax, counter), ax

    def bregman_gap(self, x, y, counter: OpCounter | None = None) -> float:
        """D_f(x, y) = f(x) - f(y) - <grad f(y), x - y> = KL(Ax, Ay)."""
        return kl(self.forward(x, counter), self.forward(y, counter))


def objective(P: KlProblem, x, counter: OpCounter | None = None) -> float:
    return P.objective(x, counter)


def gradient(P: KlProblem, x, counter: OpCounter | None = None) -> np.ndarray:
    return P.gradient(x, counter)


def bregman_gap(P: KlProblem, x, y, counter: OpCounter | None = None) -> float:
    return P.bregman_gap(x, y, counter)
