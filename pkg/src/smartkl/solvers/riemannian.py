"""Riemannian gradient methods along e-geodesics, plus projected gradient on the box.

All line searches share one cost model: every trial point costs one forward
product, and leaving the accepted point costs one transpose product for its
gradient, so iteration k costs 2 + inner_backtracks - overflow_rejections.
Trials rejected by the overflow guard cost nothing and are counted in both.
The forward product at x_0 is the only cost before iteration 1.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from ..geometry import ManifoldKind, RetractionOverflowError
from ..objective import KlProblem
from ._common import (
    NUMERICAL_FAILURES,
    BetaRule,
    NumericalError,
    Run,
    SolverConfig,
    SolveResult,
    Termination,
)

PG_MARGIN = 1e-12
BETA_DEN_TOL = 1e-12


class _LineSearch:
    """Backtracking tau <- beta tau until ``accept(f_trial, tau)`` holds."""

    def __init__(self, run: Run):
        self.run = run
        self.backtracks = 0
        self.overflows = 0

    def search(self, tau, make_point, accept):
        run, P = self.run, self.run.P
        self.backtracks = self.overflows = 0
        while True:
            try:
                x_new = make_point(tau)
            except RetractionOverflowError:
                x_new = None
                self.overflows += 1
            if x_new is not None:
                ax = P.forward(x_new, run.counter)
                f_new = P.value_from_forward(ax)
                if accept(f_new, tau):
                    return tau, x_new, f_new, ax
            self.backtracks += 1
            if self.backtracks > run.cfg.max_backtracks:
                raise NumericalError(f"line search exceeded {run.cfg.max_backtracks} reductions")
            tau *= run.cfg.armijo_beta

    def extra(self) -> dict:
        return {"inner_backtracks": self.backtracks, "overflow_rejections": self.overflows}


def _start(run: Run):
    x = run.x0
    ax = run.P.forward(x, run.counter)
    spent = run.counter.matvec_count
    f, g = run.P.value_from_forward(ax), run.P.gradient_from_forward(ax, run.counter)
    gn = run.grad_norm(x, g)
    run.record(x, f, gn, 0.0, count=spent)
    return x, f, g, gn


def rg_armijo(P: KlProblem, x0, cfg: SolverConfig | None = None, keep_points: bool = False) -> SolveResult:
    """Riemannian gradient descent along e-geodesics with monotone Armijo backtracking.

    The accepted step persists as the next trial step.
    """
    cfg = cfg or SolverConfig(algorithm="RG-ARMIJO")
    run = Run(P, x0, cfg, keep_points)
    M, ls = run.M, _LineSearch(run)
    x = run.x0
    try:
        x, f, g, gn = _start(run)
        tau = cfg.init_step
        while not (stop := run.done(gn)):
            gn2 = gn * gn
            f_k, x_k, g_k = f, x, g
            tau, x, f, ax = ls.search(
                tau,
                lambda t: M.exp_shorthand(x_k, -t * g_k),
                lambda fn, t: f_k - fn >= cfg.armijo_sigma * t * gn2,
            )
            spent = run.counter.matvec_count
            g = P.gradient_from_forward(ax, run.counter)
            gn = run.grad_norm(x, g)
            run.record(x, f, gn, tau, count=spent, **ls.extra())
        return run.result(x, stop)
    except NUMERICAL_FAILURES as exc:
        return run.result(x, Termination.NUMERICAL_ERROR, str(exc))


def rg_hz(P: KlProblem, x0, cfg: SolverConfig | None = None, keep_points: bool = False) -> SolveResult:
    """Nonmonotone line search against the averaged reference value C_k.

    Acceptance: f(x+) <= C_k - tau (rho1 + tau rho2) ||grad f(x_k)||^2, then
    Q <- varrho Q + 1 and C <- (varrho Q_old C + f(x+)) / Q.
    """
    cfg = cfg or SolverConfig(algorithm="RG-HZ")
    run = Run(P, x0, cfg, keep_points)
    M, ls = run.M, _LineSearch(run)
    rho1, rho2, vrho = cfg.armijo_sigma, cfg.hz_sigma2, cfg.hz_rho
    x = run.x0
    try:
        x, f, g, gn = _start(run)
        C, Q, tau = f, 1.0, cfg.init_step
        run.trace[-1].reference_value = C
        while not (stop := run.done(gn)):
            gn2 = gn * gn
            x_k, g_k, C_k = x, g, C
            tau, x, f, ax = ls.search(
                tau,
                lambda t: M.exp_shorthand(x_k, -t * g_k),
                lambda fn, t: fn - C_k <= -t * (rho1 + t * rho2) * gn2,
            )
            spent = run.counter.matvec_count
            g = P.gradient_from_forward(ax, run.counter)
            gn = run.grad_norm(x, g)
            Q_new = vrho * Q + 1.0
            C = (vrho * Q * C + f) / Q_new
            Q = Q_new
            run.record(x, f, gn, tau, count=spent, reference_value=C, **ls.extra())
        return run.result(x, stop)
    except NUMERICAL_FAILURES as exc:
        return run.result(x, Termination.NUMERICAL_ERROR, str(exc))


def bb_step(M, x, x_new, tau, g, g_new, gamma_min, gamma_max) -> float:
    """Clipped Riemannian long BB step from one accepted step.

    s = -tau T^g(x, -tau grad f(x)) and y = grad f(x+) + s / tau.
    """
    s = -tau * M.transport_gradient(x, -tau * M.riemannian_gradient(x, g), g)
    y = M.riemannian_gradient(x_new, g_new) + s / tau
    ss = M.inner(x_new, s, s)
    sy = abs(M.inner(x_new, s, y))
    gamma = ss / sy if sy > 0 else gamma_max
    return float(min(max(gamma, gamma_min), gamma_max))


def rg_bb(P: KlProblem, x0, cfg: SolverConfig | None = None, keep_points: bool = False) -> SolveResult:
    """Riemannian Barzilai-Borwein steps with a max-of-recent-values Armijo safeguard.

    The trial step is the clipped BB step (``init_step`` clipped at k = 0), the
    reference value C_k is the maximum of the last m_k + 1 objective values with
    m_k = min(k, bb_memory). ``trial_step`` holds the next clipped BB step.
    """
    cfg = cfg or SolverConfig(algorithm="RG-BB")
    run = Run(P, x0, cfg, keep_points)
    M, ls = run.M, _LineSearch(run)
    x = run.x0
    try:
        x, f, g, gn = _start(run)
        recent = deque([f], maxlen=cfg.bb_memory + 1)
        gamma = min(max(cfg.init_step, cfg.bb_gamma_min), cfg.bb_gamma_max)
        run.trace[-1].trial_step = gamma
        while not (stop := run.done(gn)):
            gn2 = gn * gn
            x_k, g_k, C_k = x, g, max(recent)
            tau, x, f, ax = ls.search(
                gamma,
                lambda t: M.exp_shorthand(x_k, -t * g_k),
                lambda fn, t: fn <= C_k - cfg.armijo_sigma * t * gn2,
            )
            spent = run.counter.matvec_count
            g = P.gradient_from_forward(ax, run.counter)
            gn = run.grad_norm(x, g)
            recent.append(f)
            gamma = bb_step(M, x_k, x, tau, g_k, g, cfg.bb_gamma_min, cfg.bb_gamma_max)
            run.record(x, f, gn, tau, count=spent, trial_step=gamma, **ls.extra())
        return run.result(x, stop)
    except NUMERICAL_FAILURES as exc:
        return run.result(x, Termination.NUMERICAL_ERROR, str(exc))


def cg_beta(rule, M, x, x_new, rg, rg_new, v, Tv, Tg, mu: float = 2.0, mu_k: float = 1.0):
    """Conjugate-gradient parameter for one of the six rules.

    rg, rg_new are Riemannian gradients at x and x_new; Tv and Tg are the
    transports of v and of grad f(x) along the accepted step. Returns
    (beta, restarted); a denominator below the tolerance forces a restart.
    """
    rule = BetaRule(rule)
    y = rg_new - Tg
    gg_old = M.inner(x, rg, rg)
    gg_new = M.inner(x_new, rg_new, rg_new)
    g_tv = M.inner(x_new, rg_new, Tv)
    g_v_old = M.inner(x, rg, v)
    curv = g_tv - g_v_old
    if rule in (BetaRule.FR, BetaRule.PR):
        den = gg_old
    elif rule is BetaRule.OV:
        den = -M.inner(x, v, v)
    else:
        den = curv
    if not abs(den) >= BETA_DEN_TOL:
        return 0.0, True
    if rule is BetaRule.FR:
        beta = gg_new / den
    elif rule is BetaRule.PR:
        beta = M.inner(x_new, rg_new, y) / den
    elif rule is BetaRule.DY:
        beta = gg_new / den
    elif rule is BetaRule.HS:
        beta = M.inner(x_new, rg_new, y) / den
    elif rule is BetaRule.HZ:
        hs = M.inner(x_new, rg_new, y) / den
        beta = hs - mu * M.inner(x_new, y, y) * g_tv / (den * den)
    else:
        beta = mu_k * g_tv / den
    return float(beta), False


def rg_cg(P: KlProblem, x0, cfg: SolverConfig | None = None, keep_points: bool = False) -> SolveResult:
    """Riemannian conjugate gradient along e-geodesics with Armijo backtracking.

    The accepted step length is reused as the next initial trial. If the new
    direction is not a descent direction it is reset to the negative gradient,
    which is recorded as a restart (beta = 0).
    """
    cfg = cfg or SolverConfig(algorithm="RG-CG")
    run = Run(P, x0, cfg, keep_points)
    M, ls = run.M, _LineSearch(run)
    x = run.x0
    try:
        x, f, g, gn = _start(run)
        rg = M.riemannian_gradient(x, g)
        v = -rg
        alpha = cfg.init_step
        while not (stop := run.done(gn)):
            slope = M.inner(x, rg, v)
            f_k, x_k, v_k = f, x, v
            alpha, x, f, ax = ls.search(
                alpha,
                lambda a: M.retract(x_k, v_k, a),
                lambda fn, a: fn - f_k <= cfg.armijo_sigma * a * slope,
            )
            spent = run.counter.matvec_count
            g_new = P.gradient_from_forward(ax, run.counter)
            rg_new = M.riemannian_gradient(x, g_new)
            step = alpha * v_k
            Tv = M.transport(x_k, step, v_k)
            Tg = M.transport_gradient(x_k, step, g)
            beta, restart = cg_beta(cfg.cg_beta_rule, M, x_k, x, rg, rg_new, v_k, Tv, Tg, cfg.cg_mu)
            v = -rg_new + beta * Tv
            if not restart and M.inner(x, rg_new, v) >= 0:
                beta, v = 0.0, -rg_new
            g, rg = g_new, rg_new
            gn = run.grad_norm(x, g)
            run.record(x, f, gn, alpha, count=spent, beta=beta, **ls.extra())
        return run.result(x, stop)
    except NUMERICAL_FAILURES as exc:
        return run.result(x, Termination.NUMERICAL_ERROR, str(exc))


def _project_box(x):
    return np.clip(x, PG_MARGIN, 1.0 - PG_MARGIN)


def pg_armijo(P: KlProblem, x0, cfg: SolverConfig | None = None, keep_points: bool = False) -> SolveResult:
    """Euclidean projected gradient on the box with monotone Armijo backtracking.

    Iterates are clamped to [1e-12, 1 - 1e-12]. Acceptance is
    f(x+) <= f(x) - sigma <grad f(x), x - x+>, which is the plain Armijo test
    when no coordinate is clamped. ``grad_norm`` reports the projected-gradient
    mapping norm ||x - P(x - grad f(x))||.
    """
    cfg = cfg or SolverConfig(algorithm="PG")
    if P.kind is not ManifoldKind.BOX:
        raise ValueError("projected gradient is only provided for the box")
    run = Run(P, x0, cfg, keep_points)
    ls = _LineSearch(run)
    x = run.x0

    def pg_norm(x, g):
        return float(np.linalg.norm(x - _project_box(x - g)))

    try:
        ax = P.forward(x, run.counter)
        spent = run.counter.matvec_count
        f, g = P.value_from_forward(ax), P.gradient_from_forward(ax, run.counter)
        gn = pg_norm(x, g)
        run.record(x, f, gn, 0.0, count=spent)
        tau = cfg.init_step
        while not (stop := run.done(gn)):
            f_k, x_k, g_k = f, x, g
            cand = {}

            def make(t):
                cand[t] = _project_box(x_k - t * g_k)
                return cand[t]

            tau, x, f, ax = ls.search(
                tau,
                make,
                lambda fn, t: fn <= f_k - cfg.armijo_sigma * float(np.dot(g_k, x_k - cand[t])),
            )
            spent = run.counter.matvec_count
            g = P.gradient_from_forward(ax, run.counter)
            gn = pg_norm(x, g)
            run.record(x, f, gn, tau, count=spent, **ls.extra())
        return run.result(x, stop)
    except NUMERICAL_FAILURES as exc:
        return run.result(x, Termination.NUMERICAL_ERROR, str(exc))
