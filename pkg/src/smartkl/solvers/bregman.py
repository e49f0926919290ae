"""SMART and its accelerated Bregman proximal gradient variants."""

from __future__ import annotations

import math

import numpy as np

from ..geometry import RetractionOverflowError
from ..objective import KlProblem, kl
from ._common import NUMERICAL_FAILURES, NumericalError, Run, SolverConfig, SolveResult, Termination

NEWTON_MAX_STEPS = 100


def _theta_root(theta_eff: float, gamma: float, tol: float) -> float:
    """Root t in (0, 1) of (1 - t)/t^gamma = 1/theta_eff^gamma.

    Newton runs on h(t) = (1 - t) - (t/theta_eff)^gamma, which is concave and
    decreasing, so iterates started where h < 0 decrease monotonically to the root.
    """
    if gamma == 2.0:
        t2 = theta_eff * theta_eff
        return (math.sqrt(t2 * t2 + 4.0 * t2) - t2) / 2.0
    if gamma == 1.0:
        return theta_eff / (1.0 + theta_eff)
    t = min(1.0, theta_eff)
    for _ in range(NEWTON_MAX_STEPS):
        r = (t / theta_eff) ** gamma
        h = (1.0 - t) - r
        if abs(h) <= tol:
            return t
        dh = -1.0 - gamma * r / t
        t_new = t - h / dh
        if not 0.0 < t_new <= 1.0:
            raise NumericalError(f"theta Newton step left (0, 1]: {t_new!r}")
        if t_new == t:
            return t
        t = t_new
    raise NumericalError(f"theta Newton did not converge (theta={theta_eff}, gamma={gamma})")


def theta_next(theta: float, gamma: float = 2.0, tol: float = 1e-12) -> float:
    """Next momentum weight: the root of (1 - t)/t^gamma = 1/theta^gamma in (0, theta].

    gamma = 2 uses the closed form (sqrt(theta^4 + 4 theta^2) - theta^2)/2.
    """
    if not (0.0 < theta <= 1.0) or not gamma >= 1.0:
        raise ValueError(f"no root bracketed for theta={theta!r}, gamma={gamma!r}")
    return _theta_root(float(theta), float(gamma), tol)


def smart(P: KlProblem, x0, cfg: SolverConfig | None = None, keep_points: bool = False) -> SolveResult:
    """Multiplicative update x <- x e^{-grad f / L} / Z(x) with the manifold's normalizer."""
    cfg = cfg or SolverConfig()
    run = Run(P, x0, cfg, keep_points)
    M, tau = run.M, 1.0 / P.L
    x, step = run.x0, 0.0
    try:
        while True:
            spent = run.counter.matvec_count
            f, g, _ = P.value_and_gradient(x, run.counter)
            gn = run.grad_norm(x, g)
            run.record(x, f, gn, step, count=spent)
            stop = run.done(gn)
            if stop:
                return run.result(x, stop)
            x, step = M.exp_shorthand(x, -tau * g), tau
    except NUMERICAL_FAILURES as exc:
        return run.result(x, Termination.NUMERICAL_ERROR, str(exc))


def fsmart(P: KlProblem, x0, cfg: SolverConfig | None = None, keep_points: bool = False) -> SolveResult:
    """Three-sequence accelerated SMART.

    y = (1 - theta) x + theta z, z <- mirror step from z with the gradient at y
    and step 1/(theta L), x <- (1 - theta) x + theta z, and theta_{k+1} from
    the gamma = 2 closed form, starting at theta_0 = 1.
    """
    cfg = cfg or SolverConfig()
    run = Run(P, x0, cfg, keep_points)
    M, tau = run.M, 1.0 / P.L
    x = z = run.x0
    theta, step = 1.0, 0.0
    try:
        while True:
            f, gn = run.monitor(x)
            run.record(x, f, gn, step)
            stop = run.done(gn)
            if stop:
                return run.result(x, stop)
            y = (1.0 - theta) * x + theta * z
            g = P.gradient(y, run.counter)
            step = tau / theta
            z = M.mirror_step(z, g, step)
            x = (1.0 - theta) * x + theta * z
            theta = theta_next(theta, 2.0)
    except NUMERICAL_FAILURES as exc:
        return run.result(x, Termination.NUMERICAL_ERROR, str(exc))


def _accel_trial(run, x, z, theta, scale, g_y, ay):
    """Mirror step from z with step 1/(scale L); returns (z', x', D_f(x', y), D_phi(z', z)).

    None when the step trips the overflow guard; callers treat that as a failed test.
    """
    P, M = run.P, run.M
    try:
        z_new = M.mirror_step(z, g_y, 1.0 / (scale * P.L))
    except RetractionOverflowError:
        return None
    x_new = (1.0 - theta) * x + theta * z_new
    gap = kl(P.forward(x_new, run.counter), ay)
    div = M.divergence_unchecked(z_new, z)
    return z_new, x_new, gap, div


def fsmart_e(P: KlProblem, x0, cfg: SolverConfig | None = None, keep_points: bool = False) -> SolveResult:
    """Accelerated SMART with exponent adaption.

    The exponent gamma starts at ``e_gamma0`` and drops by ``e_delta`` (floored
    at ``e_gamma_min``) until the local triangle-scaling test
    KL(A x', A y) <= theta^gamma L D_phi(z', z) holds. The accepted gamma is the
    certificate of the iteration.
    """
    cfg = cfg or SolverConfig(algorithm="FSMART-E")
    run = Run(P, x0, cfg, keep_points)
    L = P.L
    x = z = run.x0
    theta, gamma, step, bt = 1.0, float(cfg.e_gamma0), 0.0, 0
    try:
        while True:
            f, gn = run.monitor(x)
            run.record(x, f, gn, step, certificate=gamma, inner_backtracks=bt)
            stop = run.done(gn)
            if stop:
                return run.result(x, stop)
            y = (1.0 - theta) * x + theta * z
            ay = P.forward(y, run.counter)
            g = P.gradient_from_forward(ay, run.counter)
            bt = 0
            while True:
                scale = theta ** (gamma - 1.0)
                trial = _accel_trial(run, x, z, theta, scale, g, ay)
                if trial is None:
                    if gamma <= cfg.e_gamma_min:
                        raise NumericalError("mirror step overflows even at the minimal exponent")
                else:
                    z_new, x_new, gap, div = trial
                    if gap < theta**gamma * L * div or gamma <= cfg.e_gamma_min:
                        break
                gamma = max(gamma - cfg.e_delta, cfg.e_gamma_min)
                bt += 1
            x, z, step = x_new, z_new, 1.0 / (scale * L)
            theta = _theta_root(theta, gamma, cfg.newton_tol)
    except NUMERICAL_FAILURES as exc:
        return run.result(x, Termination.NUMERICAL_ERROR, str(exc))


def fsmart_g(P: KlProblem, x0, cfg: SolverConfig | None = None, keep_points: bool = False) -> SolveResult:
    """Accelerated SMART with gain adaption at fixed exponent ``g_gamma``.

    Each iteration tries gain M, starting from max(g_gain_min, G_prev/g_rho),
    and multiplies it by ``g_rho`` until
    KL(A x', A y) <= M theta^gamma L D_phi(z', z). The momentum weight solves
    (1 - theta)/(M theta^gamma) = 1/(G_prev theta_prev^gamma). The accepted
    gain is the certificate.
    """
    cfg = cfg or SolverConfig(algorithm="FSMART-G")
    run = Run(P, x0, cfg, keep_points)
    P_L, gam = P.L, float(cfg.g_gamma)
    x = z = run.x0
    gain, theta_prev, step, bt = 1.0, None, 0.0, 0
    try:
        while True:
            f, gn = run.monitor(x)
            run.record(x, f, gn, step, certificate=gain, inner_backtracks=bt)
            stop = run.done(gn)
            if stop:
                return run.result(x, stop)
            trial = gain if theta_prev is None else max(cfg.g_gain_min, gain / cfg.g_rho)
            bt = 0
            while True:
                if theta_prev is None:
                    theta = 1.0
                else:
                    theta = _theta_root(theta_prev * (gain / trial) ** (1.0 / gam), gam, cfg.newton_tol)
                y = (1.0 - theta) * x + theta * z
                ay = P.forward(y, run.counter)
                g = P.gradient_from_forward(ay, run.counter)
                scale = trial * theta ** (gam - 1.0)
                res = _accel_trial(run, x, z, theta, scale, g, ay)
                if res is not None:
                    z_new, x_new, gap, div = res
                    if gap <= trial * theta**gam * P_L * div:
                        break
                bt += 1
                if bt > cfg.max_gain_increases:
                    raise NumericalError("gain adaption exceeded its inner-loop cap")
                trial *= cfg.g_rho
            x, z, step = x_new, z_new, 1.0 / (scale * P_L)
            gain, theta_prev = trial, theta
    except NUMERICAL_FAILURES as exc:
        return run.result(x, Termination.NUMERICAL_ERROR, str(exc))
