"""First-order LP solver: primal-dual hybrid gradient with restarts.

Solves min c.T x s.t. A x >= b, x >= 0 through its saddle-point form
L(x, y) = c.T x - y.T A x + b.T y with y >= 0, alternating projected
gradient steps on the primal and dual variables:

    x+ = proj(x + tau * A.T y - tau * c)
    y+ = proj(y - sigma * A (2 x+ - x) + sigma * b)

Both projections land on the nonnegative orthant (the dual requires y >= 0,
so its update is projected as well).  Step sizes keep
tau * sigma * ||A||^2 <= eta_safety^2 via a power-method norm estimate; the
primal weight omega (tau = eta * omega, sigma = eta / omega) adapts only at
restarts, geometrically smoothed toward the observed primal/dual movement
ratio.  Restarts re-anchor at the running iterate average whenever the
average's relative gap has at least halved since the previous restart.

Termination accepts the current iterate or the average, whichever first
drives the relative primal residual, dual residual, and gap below eps_rel.
Identical inputs give bit-identical results.

Two kinds of re-anchoring keep the averaging window useful: gap-triggered
restarts fire when the average's relative gap has at least halved since the
last such restart (these are the recorded restarts, monotone by
construction), and artificial re-anchors fire whenever the window exceeds a
fixed fraction of the total iteration count, which bounds the averaging
horizon and restores fast convergence on degenerate problems where the gap
plateaus.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import StandardLp
from .sparse import spectral_norm_estimate, spmv, spmv_transpose

OPTIMAL = "optimal"
ITERATION_LIMIT = "iteration_limit"
SUSPECTED = "infeasible_or_unbounded_suspected"

DIVERGENCE_NORM = 1e12
# Re-anchor at the running average whenever the window since the last anchor
# exceeds this fraction of all iterations so far (PDLP-style artificial
# restart; without it the averaging window can grow without bound).
ARTIFICIAL_RESTART_FACTOR = 0.36


class PdhgDivergenceError(RuntimeError):
    """An update produced NaN; the message carries step sizes and norms."""


@dataclass(frozen=True)
class PdhgParams:
    eps_rel: float = 1e-6
    max_iters: int = 200_000
    eta_safety: float = 0.9
    restart_check_period: int = 64
    restart_trigger_ratio: float = 0.5
    primal_weight_smoothing: float = 0.5
    log_period: int = 100
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.eta_safety < 1.0):
            raise ValueError("eta_safety must lie in (0, 1)")
        if not (0.0 < self.restart_trigger_ratio < 1.0):
            raise ValueError("restart_trigger_ratio must lie in (0, 1)")
        if not (0.0 < self.primal_weight_smoothing <= 1.0):
            raise ValueError("primal_weight_smoothing must lie in (0, 1]")
        if self.eps_rel <= 0 or self.max_iters <= 0 or self.restart_check_period <= 0 \
                or self.log_period <= 0:
            raise ValueError("eps_rel, max_iters and periods must be positive")


@dataclass
class PdhgState:
    """Primal/dual iterates plus step sizes and restart averages."""

    x: np.ndarray
    y: np.ndarray
    x_prev: np.ndarray
    tau: float
    sigma: float
    omega: float
    iter: int
    avg_x: np.ndarray
    avg_y: np.ndarray
    avg_weight: int
    last_restart_gap: float


@dataclass(frozen=True)
class ResidualReport:
    primal_obj: float
    dual_obj: float
    rel_primal_res: float
    rel_dual_res: float
    rel_gap: float
    complementarity: float

    def worst(self) -> float:
        return max(self.rel_primal_res, self.rel_dual_res, self.rel_gap)


@dataclass
class LpSolution:
    status: str
    x: np.ndarray
    y: np.ndarray
    report: ResidualReport
    iterations: int
    restarts: int
    log: list[tuple[int, ResidualReport]]
    restart_history: list[tuple[int, float]] = field(default_factory=list)
    artificial_restarts: int = 0


def residuals(prob: StandardLp, x: np.ndarray, y: np.ndarray) -> ResidualReport:
    """Scale-relative optimality measures at (x, y).

    rel_primal_res = ||(b - Ax)+||_inf / (1 + ||b||_inf)
    rel_dual_res   = ||(A.T y - c)+||_inf / (1 + ||c||_inf)
    rel_gap        = |c.T x - b.T y| / (1 + |c.T x| + |b.T y|)
    complementarity = |x.T (c - A.T y)| + |y.T (Ax - b)|
    """
    ax = spmv(prob.A, x)
    aty = spmv_transpose(prob.A, y)
    primal_obj = float(np.dot(prob.c, x))
    dual_obj = float(np.dot(prob.b, y))
    primal_viol = np.maximum(prob.b - ax, 0.0)
    dual_viol = np.maximum(aty - prob.c, 0.0)
    rel_primal = float(np.max(primal_viol, initial=0.0)) \
        / (1.0 + float(np.max(np.abs(prob.b), initial=0.0)))
    rel_dual = float(np.max(dual_viol, initial=0.0)) \
        / (1.0 + float(np.max(np.abs(prob.c), initial=0.0)))
    rel_gap = abs(primal_obj - dual_obj) / (1.0 + abs(primal_obj) + abs(dual_obj))
    compl = abs(float(np.dot(x, prob.c - aty))) + abs(float(np.dot(y, ax - prob.b)))
    return ResidualReport(primal_obj, dual_obj, rel_primal, rel_dual, rel_gap, compl)


def pdhg_step(state: PdhgState, prob: StandardLp) -> PdhgState:
    """One primal-dual update; running averages gain the new iterate."""
    x, y = state.x, state.y
    x_new = np.maximum(x + state.tau * spmv_transpose(prob.A, y) - state.tau * prob.c, 0.0)
    y_new = np.maximum(
        y - state.sigma * spmv(prob.A, 2.0 * x_new - x) + state.sigma * prob.b, 0.0
    )
    # A single fused sum is NaN/inf-poisoned whenever any entry is, which is
    # all the abort check needs (both vectors are nonnegative).
    if not np.isfinite(float(np.sum(x_new)) + float(np.sum(y_new))):
        raise PdhgDivergenceError(
            f"NaN/inf at iteration {state.iter + 1}: tau={state.tau:.3e} "
            f"sigma={state.sigma:.3e} |x|={np.max(np.abs(x)):.3e} "
            f"|y|={np.max(np.abs(y)):.3e}"
        )
    w = state.avg_weight
    avg_x = (state.avg_x * w + x_new) / (w + 1)
    avg_y = (state.avg_y * w + y_new) / (w + 1)
    return PdhgState(
        x=x_new, y=y_new, x_prev=x,
        tau=state.tau, sigma=state.sigma, omega=state.omega,
        iter=state.iter + 1,
        avg_x=avg_x, avg_y=avg_y, avg_weight=w + 1,
        last_restart_gap=state.last_restart_gap,
    )


def _passes(report: ResidualReport, eps_rel: float) -> bool:
    return report.worst() <= eps_rel


def solve_lp(
    prob: StandardLp,
    params: PdhgParams = PdhgParams(),
    warm: tuple[np.ndarray, np.ndarray] | None = None,
) -> LpSolution:
    """Run restarted PDHG until the residual criteria hold or a limit hits.

    Warm starts are projected onto the nonnegative orthant.  Restart checks
    (and with them termination checks on both the current iterate and the
    running average) happen every ``restart_check_period`` iterations; the
    iterate log records every ``log_period``-th iteration plus the final one.
    """
    m, n = prob.num_rows, prob.num_cols
    norm_est = spectral_norm_estimate(prob.A, 200, 1e-6, params.seed)
    eta = params.eta_safety / norm_est if norm_est > 0.0 else params.eta_safety
    omega = 1.0

    if warm is not None:
        x0 = np.maximum(np.asarray(warm[0], dtype=np.float64), 0.0)
        y0 = np.maximum(np.asarray(warm[1], dtype=np.float64), 0.0)
        if x0.shape != (n,) or y0.shape != (m,):
            raise ValueError("warm start dimensions do not match the problem")
    else:
        x0 = np.zeros(n)
        y0 = np.zeros(m)

    state = PdhgState(
        x=x0, y=y0, x_prev=x0.copy(),
        tau=eta * omega, sigma=eta / omega, omega=omega, iter=0,
        avg_x=np.zeros(n), avg_y=np.zeros(m), avg_weight=0,
        last_restart_gap=np.inf,
    )
    anchor_x, anchor_y = x0.copy(), y0.copy()
    anchor_iter = 0
    restarts = 0
    artificial = 0
    restart_history: list[tuple[int, float]] = []
    log: list[tuple[int, ResidualReport]] = [(0, residuals(prob, x0, y0))]

    def finish(status, x, y, report, k):
        if not log or log[-1][0] != k:
            log.append((k, report))
        return LpSolution(status, x, y, report, k, restarts, log, restart_history,
                          artificial_restarts=artificial)

    while state.iter < params.max_iters:
        try:
            state = pdhg_step(state, prob)
        except PdhgDivergenceError:
            report = residuals(prob, state.x, state.y)
            return finish(SUSPECTED, state.x, state.y, report, state.iter)
        k = state.iter

        if k % params.log_period == 0:
            log.append((k, residuals(prob, state.x, state.y)))

        if k % params.restart_check_period == 0:
            # Divergence grows over many iterations, so the periodic check
            # catches it; an outright NaN aborts inside pdhg_step.
            if max(np.max(np.abs(state.x), initial=0.0),
                   np.max(np.abs(state.y), initial=0.0)) > DIVERGENCE_NORM:
                report = residuals(prob, state.x, state.y)
                return finish(SUSPECTED, state.x, state.y, report, k)
            rep_cur = residuals(prob, state.x, state.y)
            if _passes(rep_cur, params.eps_rel):
                return finish(OPTIMAL, state.x, state.y, rep_cur, k)
            rep_avg = residuals(prob, state.avg_x, state.avg_y)
            if _passes(rep_avg, params.eps_rel):
                return finish(OPTIMAL, state.avg_x, state.avg_y, rep_avg, k)

            triggered = rep_avg.rel_gap \
                <= params.restart_trigger_ratio * state.last_restart_gap
            window_full = (k - anchor_iter) >= ARTIFICIAL_RESTART_FACTOR * k
            if triggered or window_full:
                new_x, new_y = state.avg_x.copy(), state.avg_y.copy()
                dx = float(np.linalg.norm(new_x - anchor_x))
                dy = float(np.linalg.norm(new_y - anchor_y))
                omega = state.omega
                if dx > 1e-12 and dy > 1e-12:
                    theta = params.primal_weight_smoothing
                    omega = (dx / dy) ** theta * omega ** (1.0 - theta)
                anchor_x, anchor_y = new_x.copy(), new_y.copy()
                anchor_iter = k
                last_gap = state.last_restart_gap
                if triggered:
                    restarts += 1
                    restart_history.append((k, rep_avg.rel_gap))
                    last_gap = rep_avg.rel_gap
                else:
                    artificial += 1
                state = PdhgState(
                    x=new_x, y=new_y, x_prev=state.x,
                    tau=eta * omega, sigma=eta / omega, omega=omega, iter=k,
                    avg_x=np.zeros(n), avg_y=np.zeros(m), avg_weight=0,
                    last_restart_gap=last_gap,
                )

    rep_cur = residuals(prob, state.x, state.y)
    if state.avg_weight > 0:
        rep_avg = residuals(prob, state.avg_x, state.avg_y)
        if rep_avg.worst() < rep_cur.worst():
            return finish(ITERATION_LIMIT, state.avg_x, state.avg_y, rep_avg, state.iter)
    return finish(ITERATION_LIMIT, state.x, state.y, rep_cur, state.iter)


def format_log(sol: LpSolution) -> str:
    """Fixed-width iteration table: objectives, residuals, complementarity."""
    header = (
        f"{'iter':>8} {'primal_obj':>12} {'dual_obj':>12} {'rel_primal':>12} "
        f"{'rel_dual':>12} {'rel_gap':>12} {'compl':>12}"
    )
    lines = [header]
    for k, rep in sol.log:
        lines.append(
            f"{k:>8d} {rep.primal_obj:>12.2e} {rep.dual_obj:>12.2e} "
            f"{rep.rel_primal_res:>12.2e} {rep.rel_dual_res:>12.2e} "
            f"{rep.rel_gap:>12.2e} {rep.complementarity:>12.2e}"
        )
    return "\n".join(lines) + "\n"
