"""Primal simplex on the standard form, plus crossover from approximate points.

The solver works on the surplus-augmented system A x - s = b with x, s >= 0.
A dense basis inverse is maintained through elementary pivot updates and
rebuilt by a fresh dense LU factorization every ``REFACTOR_PERIOD`` pivots.
Feasibility is reached through a single-artificial phase 1, which works both
from a cold start (surplus basis) and from an arbitrary warm basis, so
crossover cleanup and branch-and-bound warm starts share one code path.

Pricing is Dantzig (most negative reduced cost) with a permanent switch to
Bland's rule after ``3 m`` degenerate pivots to break cycles.  All tie-breaks
take the lowest index, which makes every solve deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import StandardLp

REFACTOR_PERIOD = 50
FEAS_TOL = 1e-8
OPT_TOL = 1e-9
PIVOT_TOL = 1e-10
RATIO_TOL = 1e-9
DEGEN_TOL = 1e-10

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class SingularBasisError(RuntimeError):
    """Basis matrix became numerically singular; carries the pivot count."""

    def __init__(self, pivot: int, message: str):
        super().__init__(message)
        self.pivot = pivot


@dataclass
class BasicSolution:
    """Vertex solution: structural values, defining basis, exact objective.

    ``basis`` holds m column ids of the surplus-augmented matrix [A | -I]
    (ids >= n denote surplus columns).  ``y`` carries the dual values read off
    the final basis, used for warm starts and residual certificates.
    """

    x: np.ndarray
    basis: list[int]
    objective: float
    iterations: int
    status: str
    y: np.ndarray


def _augmented(prob: StandardLp) -> tuple[np.ndarray, np.ndarray]:
    m, n = prob.num_rows, prob.num_cols
    abar = np.zeros((m, n + m))
    abar[:, :n] = prob.A.to_dense()
    abar[np.arange(m), n + np.arange(m)] = -1.0
    cbar = np.concatenate([prob.c, np.zeros(m)])
    return abar, cbar


class _Basis:
    """Dense basis inverse with eta-style pivot updates and periodic LU refresh."""

    def __init__(self, abar: np.ndarray, basis: list[int]):
        self.abar = abar
        self.basis = list(basis)
        self.pivots_since_refactor = 0
        self.total_pivots = 0
        self.refactor()

    def refactor(self):
        m = self.abar.shape[0]
        b_mat = self.abar[:, self.basis]
        try:
            self.binv = np.linalg.solve(b_mat, np.eye(m))
        except np.linalg.LinAlgError as exc:
            raise SingularBasisError(
                self.total_pivots, f"singular basis at pivot {self.total_pivots}"
            ) from exc
        if not np.all(np.isfinite(self.binv)):
            raise SingularBasisError(
                self.total_pivots, f"non-finite basis inverse at pivot {self.total_pivots}"
            )
        self.pivots_since_refactor = 0

    def pivot(self, leaving_pos: int, entering_col: int, direction: np.ndarray):
        piv = direction[leaving_pos]
        if abs(piv) < PIVOT_TOL:
            raise SingularBasisError(
                self.total_pivots, f"pivot element {piv:.3e} too small at pivot {self.total_pivots}"
            )
        self.basis[leaving_pos] = entering_col
        self.binv[leaving_pos, :] /= piv
        other = np.arange(len(direction)) != leaving_pos
        self.binv[other, :] -= np.outer(direction[other], self.binv[leaving_pos, :])
        self.total_pivots += 1
        self.pivots_since_refactor += 1
        if self.pivots_since_refactor >= REFACTOR_PERIOD:
            self.refactor()

    def solution(self, b: np.ndarray) -> np.ndarray:
        return self.binv @ b

    def duals(self, cbar: np.ndarray) -> np.ndarray:
        return self.binv.T @ cbar[self.basis]


def _greedy_independent(abar: np.ndarray, candidates: list[int], m: int,
                        prefer_rows: np.ndarray | None = None,
                        ) -> tuple[list[int], np.ndarray]:
    """Greedy rank-checked column selection via incremental elimination.

    Walks ``candidates`` in order, keeping each column that increases the rank
    of the selection (checked with growing Gaussian elimination, partial
    pivoting on unused rows).  Stops at m columns.  The eliminations applied
    so far are kept as an explicit operator so each candidate costs one
    matrix-vector product.  ``prefer_rows`` biases pivot placement onto those
    rows while any usable one remains (crossover points structural pivots at
    active rows so their surplus columns stay out of the basis).  Returns the
    kept columns and their pivot-row mask.
    """
    chosen: list[int] = []
    elim = np.eye(m)          # w = elim @ column applies all eliminations
    used = np.zeros(m, dtype=bool)
    for col in candidates:
        if len(chosen) == m:
            break
        v = abar[:, col]
        w = elim @ v
        tol = PIVOT_TOL * (1.0 + np.abs(v).max())
        w_free = np.where(used, 0.0, w)
        p_new = -1
        if prefer_rows is not None:
            w_pref = np.where(prefer_rows, w_free, 0.0)
            p = int(np.argmax(np.abs(w_pref)))
            if abs(w_pref[p]) > tol:
                p_new = p
        if p_new < 0:
            p = int(np.argmax(np.abs(w_free)))
            if abs(w_free[p]) > tol:
                p_new = p
        if p_new < 0:
            continue
        u_new = w / w[p_new]
        # elim <- (I - u e_p.T) elim, the rank-1 form of the sequential
        # elimination w -= w[p] * u.
        elim -= np.outer(u_new, elim[p_new, :])
        used[p_new] = True
        chosen.append(col)
    return chosen, used


def _pad_with_slacks(chosen: list[int], used: np.ndarray, n: int) -> list[int]:
    """Complete a partial basis with the slack of every unused pivot row.

    Nonsingularity holds by construction: after permuting the used pivot rows
    first, the matrix is block triangular with the full-rank structural block
    above and -I on the unused rows.
    """
    slack_set = {c for c in chosen if c >= n}
    return chosen + [n + i for i in np.flatnonzero(~used)
                     if (n + i) not in slack_set]


def _repair_basis(abar: np.ndarray, desired: list[int]) -> list[int]:
    """Keep the independent prefix of ``desired`` and pad with surplus columns."""
    m, ncols = abar.shape
    n = ncols - m
    seen = set()
    unique_desired = [c for c in desired if not (c in seen or seen.add(c))]
    chosen, used = _greedy_independent(abar, unique_desired, m)
    if len(chosen) < m:
        chosen = _pad_with_slacks(chosen, used, n)
    if len(chosen) != m:
        raise SingularBasisError(0, "could not assemble a nonsingular basis")
    return chosen


def _price(cbar: np.ndarray, abar: np.ndarray, basis: list[int], y: np.ndarray,
           bland: bool, exclude: int = -1) -> int:
    """Entering column index, or -1 if the basis is optimal."""
    reduced = cbar - y @ abar
    eligible = np.ones(abar.shape[1], dtype=bool)
    eligible[basis] = False
    if exclude >= 0:
        eligible[exclude] = False
    viable = eligible & (reduced < -OPT_TOL)
    if not viable.any():
        return -1
    if bland:
        return int(np.argmax(viable))
    return int(np.argmin(np.where(viable, reduced, np.inf)))


def _ratio_test(x_b: np.ndarray, direction: np.ndarray, basis: list[int]) -> int:
    """Leaving position by the min-ratio rule, or -1 when unbounded.

    Ties go to the smallest leaving column id (Bland-compatible, and the
    fixed deterministic order for Dantzig pricing too).  Eligibility uses an
    absolute floor plus a relative one so near-zero pivots never enter the
    basis inverse.
    """
    floor = max(RATIO_TOL, 1e-11 * float(np.max(np.abs(direction), initial=0.0)))
    pos_dir = direction > floor
    if not pos_dir.any():
        return -1
    ratios = np.where(pos_dir, np.maximum(x_b, 0.0) / np.where(pos_dir, direction, 1.0),
                      np.inf)
    theta = ratios.min()
    ties = np.flatnonzero(ratios <= theta * (1.0 + 1e-9) + 1e-12)
    basis_ids = np.asarray(basis)[ties]
    return int(ties[np.argmin(basis_ids)])


def _run_phase(fac: _Basis, cbar: np.ndarray, b: np.ndarray, max_pivots: int,
               exclude: int = -1, stop_when_out: int = -1) -> tuple[str, int, int]:
    """Primal simplex loop.  Returns (status, pivots, column).

    ``exclude`` bars a column from entering; ``stop_when_out`` ends the phase
    as soon as that column leaves the basis (used to retire the artificial).
    On UNBOUNDED the returned column is the ray-producing entering column so
    the caller can re-verify it against a fresh factorization.
    """
    m = len(b)
    degenerate = 0
    bland = False
    pivots = 0
    while pivots < max_pivots:
        if stop_when_out >= 0 and stop_when_out not in fac.basis:
            return OPTIMAL, pivots, -1
        y = fac.duals(cbar)
        entering = _price(cbar, fac.abar, fac.basis, y, bland, exclude)
        if entering < 0:
            return OPTIMAL, pivots, -1
        direction = fac.binv @ fac.abar[:, entering]
        x_b = fac.solution(b)
        leaving = _ratio_test(x_b, direction, fac.basis)
        if leaving < 0:
            return UNBOUNDED, pivots, entering
        theta = max(x_b[leaving], 0.0) / direction[leaving]
        if theta <= DEGEN_TOL:
            degenerate += 1
            if degenerate > 3 * m:
                bland = True
        fac.pivot(leaving, entering, direction)
        pivots += 1
    return "pivot_limit", pivots, -1


def _phase1(fac: _Basis, abar: np.ndarray, b: np.ndarray,
            max_pivots: int) -> tuple[str, int, list[int]]:
    """Single-artificial phase 1 from the current (infeasible) basis.

    One artificial column a = -B e_neg covers every violated row at level
    theta* = max violation; minimizing its value to zero restores primal
    feasibility while keeping the rest of the warm basis intact.
    """
    m, n_total = abar.shape
    x_b = fac.solution(b)
    neg = x_b < -FEAS_TOL
    art_col = -(abar[:, fac.basis] @ neg.astype(np.float64))
    abar_art = np.hstack([abar, art_col[:, None]])
    art_id = n_total
    fac_art = _Basis(abar_art, fac.basis)
    direction = fac_art.binv @ art_col
    worst = int(np.argmax(np.where(neg, -x_b, -np.inf)))
    fac_art.pivot(worst, art_id, direction)
    c_phase1 = np.zeros(n_total + 1)
    c_phase1[art_id] = 1.0
    status, pivots, _ = _run_phase(fac_art, c_phase1, b, max_pivots, stop_when_out=art_id)
    pivots += 1  # the artificial's entering pivot
    if status == "pivot_limit":
        raise RuntimeError(f"phase 1 exceeded the pivot limit ({max_pivots})")
    if art_id in fac_art.basis:
        fac_art.refactor()
        pos = fac_art.basis.index(art_id)
        level = fac_art.solution(b)[pos]
        if level > FEAS_TOL:
            return INFEASIBLE, pivots, list(fac_art.basis)
        # Artificial stuck basic at zero: pivot it out through any usable
        # column ([A | -I] has full row rank, so one exists).
        row_of_art = fac_art.binv[pos, :] @ abar
        candidates = np.flatnonzero(np.abs(row_of_art) > PIVOT_TOL)
        in_basis = set(fac_art.basis)
        pivot_col = next((int(j) for j in candidates if int(j) not in in_basis), -1)
        if pivot_col < 0:
            raise SingularBasisError(pivots, "cannot retire artificial column")
        fac_art.pivot(pos, pivot_col, fac_art.binv @ abar[:, pivot_col])
        pivots += 1
    return OPTIMAL, pivots, list(fac_art.basis)


def simplex_solve(prob: StandardLp, start_basis: list[int] | None = None) -> BasicSolution:
    """Two-phase primal simplex on the surplus-augmented standard form.

    With ``start_basis`` the solver repairs it to a nonsingular basis first
    and runs phase 1 only if that basis is primal infeasible, so a good warm
    basis costs few pivots.  Every phase conclusion (optimal, unbounded,
    infeasible) is re-verified against a freshly refactorized basis; if the
    accumulated pivot updates had drifted, pivoting simply resumes.
    """
    abar, cbar = _augmented(prob)
    m, n_total = abar.shape
    b = prob.b.astype(np.float64)
    max_pivots = 50_000 + 200 * m

    if start_basis is None:
        fac = _Basis(abar, [n_total - m + i for i in range(m)])
    else:
        fac = None
        given = list(start_basis)
        if len(given) == m and len(set(given)) == m \
                and all(0 <= c < n_total for c in given):
            # Warm bases are usually factorizable as-is; repair only if not.
            try:
                fac = _Basis(abar, given)
            except SingularBasisError:
                fac = None
        if fac is None:
            fac = _Basis(abar, _repair_basis(abar, given))
    iterations = 0

    for _attempt in range(20):
        x_b = fac.solution(b)
        if np.min(x_b, initial=0.0) < -FEAS_TOL:
            status, pivots, new_basis = _phase1(fac, abar, b, max_pivots)
            iterations += pivots
            if status == INFEASIBLE:
                return BasicSolution(
                    x=np.zeros(prob.num_cols), basis=list(fac.basis),
                    objective=np.nan, iterations=iterations, status=INFEASIBLE,
                    y=np.zeros(m),
                )
            fac = _Basis(abar, new_basis)
            continue  # re-verify feasibility with the fresh factors

        status, pivots, ray_col = _run_phase(fac, cbar, b, max_pivots)
        iterations += pivots
        if status == "pivot_limit":
            raise RuntimeError(f"phase 2 exceeded the pivot limit ({max_pivots})")
        fac.refactor()

        if status == UNBOUNDED:
            y = fac.duals(cbar)
            reduced = float(cbar[ray_col] - y @ abar[:, ray_col])
            direction = fac.binv @ abar[:, ray_col]
            genuine = reduced < -OPT_TOL and not np.any(
                direction > max(RATIO_TOL, 1e-11 * np.max(np.abs(direction), initial=0.0))
            )
            if genuine:
                return BasicSolution(
                    x=np.zeros(prob.num_cols), basis=list(fac.basis),
                    objective=np.nan, iterations=iterations, status=UNBOUNDED,
                    y=np.zeros(m),
                )
            continue  # spurious ray from drifted factors; resume pivoting

        # Pricing says optimal; confirm primal feasibility with fresh factors.
        x_b = fac.solution(b)
        if np.min(x_b, initial=0.0) >= -FEAS_TOL:
            break
    else:
        raise RuntimeError("simplex failed to stabilize numerically")

    x_full = np.zeros(n_total)
    x_full[fac.basis] = np.maximum(x_b, 0.0)
    x = x_full[: prob.num_cols]
    y = fac.duals(cbar)
    return BasicSolution(
        x=x, basis=list(fac.basis),
        objective=float(np.dot(prob.c, x)),
        iterations=iterations, status=OPTIMAL, y=y,
    )


def crossover(prob: StandardLp, x_approx: np.ndarray, y_approx: np.ndarray,
              classify_tol: float = 1e-6) -> BasicSolution:
    """Refine an approximate primal/dual pair into a basic feasible solution.

    Three phases: (1) classify obviously-nonbasic structurals, i.e. tiny
    value or clearly positive reduced cost against the dual estimate (a
    positive dual likewise marks its row's surplus nonbasic); (2) build a
    rank-checked basis greedily from the remaining structurals by decreasing
    magnitude, padding with the surplus column of every row the structural
    pivots left unused (nonsingular by construction); (3) clean up with the
    warm simplex.  The returned ``iterations`` count is the cleanup pivot
    count, the warm-start quality metric.
    """
    x = np.maximum(np.asarray(x_approx, dtype=np.float64), 0.0)
    y = np.maximum(np.asarray(y_approx, dtype=np.float64), 0.0)
    m, n = prob.num_rows, prob.num_cols

    from .sparse import spmv_transpose

    x_big = 1.0 + float(np.max(x, initial=0.0))
    c_big = 1.0 + float(np.max(np.abs(prob.c), initial=0.0))
    reduced = prob.c - spmv_transpose(prob.A, y)
    nonbasic_struct = (x <= classify_tol * x_big) | (reduced > classify_tol * c_big)
    active_rows = y > classify_tol

    struct_candidates = [int(j) for j in np.argsort(-x, kind="stable")
                         if not nonbasic_struct[j]]
    abar, _ = _augmented(prob)
    chosen, used = _greedy_independent(abar, struct_candidates, m,
                                       prefer_rows=active_rows)
    basis = _pad_with_slacks(chosen, used, n)
    return simplex_solve(prob, start_basis=basis)
