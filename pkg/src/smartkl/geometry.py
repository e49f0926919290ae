"""Fisher-Rao geometry of the positive orthant, the open unit box and the simplex.

Each manifold carries closed-form metric tensors, e-geodesic retractions,
vector transports and the Bregman kernel whose mirror step coincides with the
e-geodesic step along the Riemannian gradient. Points and tangent vectors are
plain float arrays in ambient coordinates; the manifold object supplies the
validation.
"""

from __future__ import annotations

import enum
import logging

import numpy as np

from ._fallback import _kl_pos

logger = logging.getLogger(__name__)

EXP_ARG_LIMIT = 700.0
SIMPLEX_SUM_TOL = 1e-12
SIMPLEX_DRIFT_WARN = 1e-9
TANGENT_PROJECT_TOL = 1e-9


class DomainError(ValueError):
    """A point or tangent vector lies outside its manifold."""


class RetractionOverflowError(FloatingPointError):
    """An exponent argument exceeded the overflow guard."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"exponent argument {value!r} at coordinate {index} exceeds {EXP_ARG_LIMIT}")


class ManifoldKind(str, enum.Enum):
    ORTHANT = "orthant"
    BOX = "box"
    SIMPLEX = "simplex"

    @property
    def manifold(self) -> "Manifold":
        return _MANIFOLDS[self]


def _safe_div(num, den):
    """num / den with 0 wherever den == 0 (saturated coordinates carry no tangent mass)."""
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den != 0)
    return out


def _guard(arg) -> None:
    bad = ~np.isfinite(arg) | (arg > EXP_ARG_LIMIT)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise RetractionOverflowError(i, float(arg[i]))


def _kl_terms(x, y):
    """Elementwise x log(x/y) - x + y with 0 log 0 = 0 (y = 0 allowed where x = 0)."""
    out = np.array(y, dtype=np.float64, copy=True)
    pos = x > 0
    out[pos] = _kl_pos(x[pos], y[pos])
    return out


def _entropy_div(x, y):
    """sum x log(x/y) with 0 log 0 = 0."""
    pos = x > 0
    return float(np.sum(x[pos] * np.log(x[pos] / y[pos])))


class Manifold:
    kind: ManifoldKind

    # -- validation ---------------------------------------------------

    def check_point(self, x, *, closed: bool = False) -> np.ndarray:
        raise NotImplementedError

    def check_tangent(self, x, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != np.shape(x):
            raise DomainError(f"tangent has shape {v.shape}, point has {np.shape(x)}")
        if not np.all(np.isfinite(v)):
            raise DomainError("tangent vector is not finite")
        return v

    def barycenter(self, n: int) -> np.ndarray:
        raise NotImplementedError

    # -- metric -------------------------------------------------------

    def metric_diag(self, x) -> np.ndarray:
        """Diagonal of G(x); the simplex metric is diagonal in ambient coordinates."""
        raise NotImplementedError

    def inverse_metric_apply(self, x, w) -> np.ndarray:
        raise NotImplementedError

    def riemannian_gradient(self, x, euclid_grad) -> np.ndarray:
        return self.inverse_metric_apply(x, euclid_grad)

    def inner(self, x, u, v) -> float:
        x = np.asarray(x, dtype=np.float64)
        return float(np.sum(self._weighted(x, np.asarray(u) * np.asarray(v))))

    def _weighted(self, x, w):
        raise NotImplementedError

    def norm(self, x, v) -> float:
        return float(np.sqrt(max(self.inner(x, v, v), 0.0)))

    def grad_sq_norm(self, x, euclid_grad) -> float:
        """||grad f(x)||_x^2 = <g, G(x)^{-1} g> without forming the tangent vector twice."""
        g = np.asarray(euclid_grad, dtype=np.float64)
        return float(np.dot(g, self.inverse_metric_apply(x, g)))

    # -- e-geodesics --------------------------------------------------

    def retract(self, x, v, t: float = 1.0) -> np.ndarray:
        raise NotImplementedError

    def exp_shorthand(self, x, euclid_grad) -> np.ndarray:
        raise NotImplementedError

    def to_dual(self, x) -> np.ndarray:
        """Dual (natural) coordinates, the gradient of the Bregman kernel."""
        raise NotImplementedError

    def from_dual(self, theta) -> np.ndarray:
        """Inverse of :meth:`to_dual`, the gradient of the conjugate kernel."""
        raise NotImplementedError

    def mirror_step(self, x, euclid_grad, tau: float) -> np.ndarray:
        if not tau > 0:
            raise ValueError(f"step size must be positive, got {tau}")
        g = np.asarray(euclid_grad, dtype=np.float64)
        _guard(-tau * g)
        return self.from_dual(self.to_dual(x) - tau * g)

    # -- transports ---------------------------------------------------

    def transport(self, x, u, v) -> np.ndarray:
        raise NotImplementedError

    def transport_gradient(self, x, u, euclid_grad_at_x) -> np.ndarray:
        raise NotImplementedError

    # -- divergences --------------------------------------------------

    def bregman_divergence(self, x, y) -> float:
        """D_phi(x, y) for x in the closed domain and interior y."""
        x = self.check_point(x, closed=True)
        y = self.check_point(y)
        return self.divergence_unchecked(x, y)

    def divergence_unchecked(self, x, y) -> float:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class Orthant(Manifold):
    kind = ManifoldKind.ORTHANT

    def check_point(self, x, *, closed=False):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise DomainError("point must be a finite vector")
        if closed:
            if np.any(x < 0):
                raise DomainError("orthant point has a negative coordinate")
        elif np.any(x <= 0):
            raise DomainError("orthant point must be strictly positive")
        return x

    def barycenter(self, n):
        return np.ones(n)

    def metric_diag(self, x):
        return 1.0 / np.asarray(x)

    def inverse_metric_apply(self, x, w):
        return np.asarray(x) * np.asarray(w)

    def _weighted(self, x, w):
        return _safe_div(w, x)

    def retract(self, x, v, t=1.0):
        x = np.asarray(x, dtype=np.float64)
        arg = _safe_div(t * np.asarray(v, dtype=np.float64), x)
        _guard(arg)
        return x * np.exp(arg)

    def exp_shorthand(self, x, euclid_grad):
        g = np.asarray(euclid_grad, dtype=np.float64)
        _guard(g)
        return np.asarray(x) * np.exp(g)

    def to_dual(self, x):
        with np.errstate(divide="ignore"):
            return np.log(x)

    def from_dual(self, theta):
        return np.exp(theta)

    def transport(self, x, u, v):
        xp = self.retract(x, u, 1.0)
        return _safe_div(xp, np.asarray(x)) * np.asarray(v)

    def transport_gradient(self, x, u, euclid_grad_at_x):
        return self.retract(x, u, 1.0) * np.asarray(euclid_grad_at_x)

    def divergence_unchecked(self, x, y):
        return float(np.sum(_kl_terms(x, y)))


class Box(Manifold):
    kind = ManifoldKind.BOX

    def check_point(self, x, *, closed=False):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise DomainError("point must be a finite vector")
        if closed:
            if np.any(x < 0) or np.any(x > 1):
                raise DomainError("box point outside [0, 1]")
        elif np.any(x <= 0) or np.any(x >= 1):
            raise DomainError("box point must lie strictly inside (0, 1)")
        return x

    def barycenter(self, n):
        return np.full(n, 0.5)

    def metric_diag(self, x):
        x = np.asarray(x)
        return 1.0 / (x * (1.0 - x))

    def inverse_metric_apply(self, x, w):
        x = np.asarray(x)
        return x * (1.0 - x) * np.asarray(w)

    def _weighted(self, x, w):
        return _safe_div(w, x * (1.0 - x))

    @staticmethod
    def _tilt(x, q):
        # x e^q / (1 - x + x e^q), evaluated without overflow for either sign of q
        out = np.empty_like(x)
        pos = q > 0
        en = np.exp(-q[pos])
        out[pos] = x[pos] / (x[pos] + (1.0 - x[pos]) * en)
        ep = np.exp(q[~pos])
        xs = x[~pos]
        out[~pos] = xs * ep / ((1.0 - xs) + xs * ep)
        return out

    def retract(self, x, v, t=1.0):
        x = np.asarray(x, dtype=np.float64)
        q = _safe_div(t * np.asarray(v, dtype=np.float64), x * (1.0 - x))
        _guard(q)
        return self._tilt(x, q)

    def exp_shorthand(self, x, euclid_grad):
        g = np.asarray(euclid_grad, dtype=np.float64)
        _guard(g)
        return self._tilt(np.asarray(x, dtype=np.float64), g)

    def to_dual(self, x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return np.log(x) - np.log1p(-x)

    def from_dual(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        out = np.empty_like(theta)
        pos = theta >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-theta[pos]))
        e = np.exp(theta[~pos])
        out[~pos] = e / (1.0 + e)
        return out

    def transport(self, x, u, v):
        x = np.asarray(x, dtype=np.float64)
        xp = self.retract(x, u, 1.0)
        return _safe_div(xp * (1.0 - xp), x * (1.0 - x)) * np.asarray(v)

    def transport_gradient(self, x, u, euclid_grad_at_x):
        xp = self.retract(x, u, 1.0)
        return xp * (1.0 - xp) * np.asarray(euclid_grad_at_x)

    def divergence_unchecked(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return float(np.sum(_kl_terms(x, y)) + np.sum(_kl_terms(1.0 - x, 1.0 - y)))


class Simplex(Manifold):
    kind = ManifoldKind.SIMPLEX

    def check_point(self, x, *, closed=False):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise DomainError("point must be a finite vector")
        if closed:
            if np.any(x < 0):
                raise DomainError("simplex point has a negative coordinate")
        elif np.any(x <= 0):
            raise DomainError("simplex point must be strictly positive")
        if abs(x.sum() - 1.0) > SIMPLEX_SUM_TOL:
            raise DomainError(f"simplex point sums to {x.sum()!r}")
        return x

    def check_tangent(self, x, v):
        v = super().check_tangent(x, v)
        s = v.sum()
        if abs(s) > TANGENT_PROJECT_TOL:
            raise DomainError(f"simplex tangent sums to {s!r}")
        return v - s / v.size

    def barycenter(self, n):
        return np.full(n, 1.0 / n)

    def metric_diag(self, x):
        return 1.0 / np.asarray(x)

    def inverse_metric_apply(self, x, w):
        # replicator map (Diag(p) - p p^T) w
        p = np.asarray(x, dtype=np.float64)
        w = np.asarray(w, dtype=np.float64)
        return p * (w - np.dot(p, w))

    def _weighted(self, x, w):
        return _safe_div(w, x)

    @staticmethod
    def _normalize(y, s):
        out = y / s
        drift = abs(out.sum() - 1.0)
        if drift > SIMPLEX_DRIFT_WARN:
            logger.warning("simplex renormalization absorbed drift %.3e", drift)
        return out / out.sum()

    def _tilt(self, p, a):
        # p e^a / <p, e^a> with the maximum exponent shifted to zero
        w = p * np.exp(a - a.max())
        return self._normalize(w, w.sum())

    def retract(self, x, v, t=1.0):
        p = np.asarray(x, dtype=np.float64)
        if t == 0:
            return p.copy()
        a = _safe_div(t * self.check_tangent(p, v), p)
        _guard(a)
        return self._tilt(p, a)

    def exp_shorthand(self, x, euclid_grad):
        g = np.asarray(euclid_grad, dtype=np.float64)
        _guard(g)
        return self._tilt(np.asarray(x, dtype=np.float64), g)

    def to_dual(self, x):
        # gradient of <p, log p> is log p + 1; the constant drops out after normalization
        with np.errstate(divide="ignore"):
            return np.log(x) + 1.0

    def from_dual(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        e = np.exp(theta - theta.max())
        return self._normalize(e, e.sum())

    def transport(self, x, u, v):
        p = np.asarray(x, dtype=np.float64)
        pp = self.retract(p, u, 1.0)
        return self.inverse_metric_apply(pp, _safe_div(self.check_tangent(p, v), p))

    def transport_gradient(self, x, u, euclid_grad_at_x):
        return self.inverse_metric_apply(self.retract(x, u, 1.0), euclid_grad_at_x)

    def divergence_unchecked(self, x, y):
        return _entropy_div(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))


ORTHANT = Orthant()
BOX = Box()
SIMPLEX = Simplex()
_MANIFOLDS = {ManifoldKind.ORTHANT: ORTHANT, ManifoldKind.BOX: BOX, ManifoldKind.SIMPLEX: SIMPLEX}


def get_manifold(kind) -> Manifold:
    """Accept a :class:`ManifoldKind`, its string value, or a manifold instance."""
    if isinstance(kind, Manifold):
        return kind
    return ManifoldKind(kind).manifold


def bregman_divergence(kind, x, y) -> float:
    return get_manifold(kind).bregman_divergence(x, y)
