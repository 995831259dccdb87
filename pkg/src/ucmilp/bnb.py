"""Branch-and-bound MILP engine over two interchangeable relaxation engines.

Every node relaxation is solved end-to-end to an exact vertex: the simplex
engine runs the primal simplex warm-started from the parent basis, while the
pdhg_crossover engine runs equilibrated PDHG warm-started from the parent
iterates and then certifies the result through crossover.  Pruning always
uses the crossover/simplex vertex objective, never a raw first-order value,
so both engines explore with exact bounds.

Search is best-bound (smallest relaxation objective first, FIFO on ties) and
children fix the branching binary to 0 or 1 through bound tightening in the
original model, which is re-canonicalized per node.  Wall time is split into
four stage buckets (presolve, relaxation, crossover, branch-and-bound) that
add up to the solve's total.
"""

from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass, replace

import numpy as np

from .model import (
    GeneralLp,
    InfeasibleModelError,
    ScalingDiagonals,
    StandardLp,
    canonicalize,
    postsolve,
    presolve,
    ruiz_scale,
)
from .pdlp import LpSolution, PdhgParams, ResidualReport, solve_lp
from .simplex import BasicSolution, crossover, simplex_solve

log = logging.getLogger(__name__)

ENGINE_PDHG = "pdhg_crossover"
ENGINE_SIMPLEX = "simplex"

OPTIMAL = "optimal"
NODE_LIMIT = "node_limit"
TIME_LIMIT = "time_limit"
INFEASIBLE = "infeasible"

# Staged first-order budget for non-root nodes: a short probe, continued
# only when the probe got close.  Crossover turns whatever PDHG reached into
# an exact vertex, so bailing out early costs accuracy nothing; it matters
# because infeasible children have no first-order certificate and would
# otherwise burn the whole budget, and because a cleanup pivot is cheaper
# than a long tail of first-order iterations.
NODE_PDHG_PROBE_ITERS = 512
NODE_PDHG_MAX_ITERS = 2_000
NODE_PDHG_STALL_RESIDUAL = 0.01
RUIZ_PASSES = 10


class UndefinedScoreError(ValueError):
    """Score is undefined for a zero baseline objective."""


@dataclass(frozen=True)
class MilpProblem:
    base: GeneralLp
    binary_set: list[int]

    def __post_init__(self):
        n = self.base.num_vars
        for j in self.binary_set:
            if not (0 <= j < n):
                raise ValueError(f"binary index {j} out of range")
            if self.base.lower[j] < 0.0 or self.base.upper[j] > 1.0:
                raise ValueError(f"binary variable {j} has bounds outside [0, 1]")


@dataclass(frozen=True)
class BnbParams:
    relaxation_engine: str = ENGINE_PDHG
    node_limit: int = 100_000
    rel_mip_gap: float = 1e-6
    int_tol: float = 1e-6
    time_limit_seconds: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.relaxation_engine not in (ENGINE_PDHG, ENGINE_SIMPLEX):
            raise ValueError(f"unknown relaxation engine {self.relaxation_engine!r}")
        if self.rel_mip_gap <= 0 or self.int_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.node_limit < 1:
            raise ValueError("node_limit must be >= 1")


@dataclass
class StageTimes:
    presolve: float = 0.0
    relaxation: float = 0.0
    crossover: float = 0.0
    branch_and_bound: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.presolve, self.relaxation, self.crossover, self.branch_and_bound)

    @property
    def total(self) -> float:
        return sum(self.as_tuple())


@dataclass
class MilpSolution:
    status: str
    incumbent_x: np.ndarray | None
    objective: float | None
    best_bound: float
    nodes_explored: int
    stage_times: StageTimes
    relax_iterations: int = 0
    cleanup_iterations: int = 0
    node_warnings: int = 0
    root_log: list[tuple[int, ResidualReport]] | None = None


def branch_select(x: np.ndarray, binary_set: list[int], int_tol: float) -> int | None:
    """Most-fractional binary (max of min(f, 1-f)), lowest index on ties;
    None when every binary sits within int_tol of {0, 1}."""
    best_j = None
    best_score = int_tol
    for j in binary_set:
        f = float(x[j]) - np.floor(float(x[j]))
        score = min(f, 1.0 - f)
        if score > best_score:
            best_score = score
            best_j = j
    return best_j


def score(obj_candidate: float, obj_baseline: float, sense: str) -> float:
    """Solution-quality ratio, oriented so values >= 1 mean the candidate
    matched or improved the baseline: candidate/baseline for max problems,
    baseline/candidate for min problems."""
    if not (np.isfinite(obj_candidate) and np.isfinite(obj_baseline)):
        raise UndefinedScoreError("scores need finite objectives")
    if obj_baseline == 0.0 or (sense == "min" and obj_candidate == 0.0):
        raise UndefinedScoreError("score undefined for zero objective")
    if sense == "max":
        return obj_candidate / obj_baseline
    return obj_baseline / obj_candidate


@dataclass
class _NodeEval:
    """Outcome of one relaxation solve, already mapped to the original model.

    ``bound`` is the relaxation objective in min-space (original objective
    times the sense sign) so pruning logic is sense-free.
    """

    feasible: bool
    bound: float = np.inf
    x_orig: np.ndarray | None = None
    warm: object = None            # engine-specific payload for children
    relax_iterations: int = 0
    cleanup_iterations: int = 0
    lp_log: list | None = None


class _PdhgEngine:
    """PDHG + crossover node solver with a shared equilibration cache.

    All nodes of one tree share the constraint matrix (bound fixes only move
    the right-hand side), so the Ruiz diagonals and scaled matrix are computed
    once and reused whenever the node's matrix matches the cached one; that
    also keeps parent iterates directly usable as child warm starts.
    """

    def __init__(self, params: PdhgParams):
        self.params = params
        self._cached_matrix = None
        self._cached_scaled = None
        self._cached_diags: ScalingDiagonals | None = None

    def _scale(self, std: StandardLp) -> tuple[StandardLp, ScalingDiagonals]:
        cached = self._cached_matrix
        if cached is not None and std.A.nnz == cached.nnz \
                and np.array_equal(std.A.row_starts, cached.row_starts) \
                and np.array_equal(std.A.col_indices, cached.col_indices) \
                and np.array_equal(std.A.values, cached.values):
            diags = self._cached_diags
            scaled = StandardLp(
                c=std.c / diags.col_scale,
                A=self._cached_scaled,
                b=std.b / diags.row_scale,
                transform_log=std.transform_log,
                row_tags=std.row_tags,
            )
            return scaled, diags
        scaled, diags = ruiz_scale(std, RUIZ_PASSES)
        self._cached_matrix = std.A
        self._cached_scaled = scaled.A
        self._cached_diags = diags
        return scaled, diags

    def solve(self, std: StandardLp, sense_sign: float, warm, is_root: bool,
              clock) -> _NodeEval:
        with clock("relaxation"):
            scaled, diags = self._scale(std)
            warm_pair = None
            if warm is not None and len(warm[0]) == std.num_cols \
                    and len(warm[1]) == std.num_rows:
                warm_pair = warm
            if is_root:
                sol: LpSolution = solve_lp(scaled, self.params, warm_pair)
            else:
                probe = replace(self.params,
                                max_iters=min(self.params.max_iters,
                                              NODE_PDHG_PROBE_ITERS))
                sol = solve_lp(scaled, probe, warm_pair)
                if sol.status == "iteration_limit" \
                        and sol.report.worst() <= NODE_PDHG_STALL_RESIDUAL:
                    rest = replace(self.params,
                                   max_iters=min(self.params.max_iters,
                                                 NODE_PDHG_MAX_ITERS))
                    follow = solve_lp(scaled, rest, (sol.x, sol.y))
                    follow.iterations += sol.iterations
                    sol = follow
            x_std = sol.x / diags.col_scale
            y_std = sol.y / diags.row_scale
        with clock("crossover"):
            vertex = crossover(std, x_std, y_std)
        if vertex.status == "infeasible":
            return _NodeEval(False, relax_iterations=sol.iterations,
                             cleanup_iterations=vertex.iterations, lp_log=sol.log)
        if vertex.status == "unbounded":
            raise RuntimeError("node relaxation is unbounded")
        x_orig, obj = postsolve(std, vertex.x)
        return _NodeEval(
            feasible=True, bound=sense_sign * obj, x_orig=x_orig,
            warm=(sol.x, sol.y),
            relax_iterations=sol.iterations, cleanup_iterations=vertex.iterations,
            lp_log=sol.log,
        )


class _SimplexEngine:
    def solve(self, std: StandardLp, sense_sign: float, warm, is_root: bool,
              clock) -> _NodeEval:
        with clock("relaxation"):
            start = warm if warm is not None and self._basis_fits(warm, std) else None
            sol: BasicSolution = simplex_solve(std, start_basis=start)
        if sol.status == "infeasible":
            return _NodeEval(False, relax_iterations=sol.iterations)
        if sol.status == "unbounded":
            raise RuntimeError("node relaxation is unbounded")
        x_orig, obj = postsolve(std, sol.x)
        return _NodeEval(
            feasible=True, bound=sense_sign * obj, x_orig=x_orig,
            warm=list(sol.basis), relax_iterations=sol.iterations,
        )

    @staticmethod
    def _basis_fits(basis, std: StandardLp) -> bool:
        total = std.num_cols + std.num_rows
        return len(basis) == std.num_rows and all(0 <= c < total for c in basis)


def solve_milp(p: MilpProblem, params: BnbParams = BnbParams(),
               pdhg_params: PdhgParams | None = None) -> MilpSolution:
    """Best-bound branch-and-bound with the configured relaxation engine.

    Children inherit the parent's warm-start payload (iterates for pdhg with
    the branched coordinate clamped by the child's own bound shift, the final
    basis for simplex).  An engine failure at the root propagates; at any
    other node the node is pruned with a logged warning and stays counted.
    ``pdhg_params`` tunes the first-order engine and defaults to
    PdhgParams(seed=params.seed).
    """
    t_start = time.perf_counter()
    times = StageTimes()

    class clock:
        def __init__(self, bucket):
            self.bucket = bucket

        def __enter__(self):
            self.t0 = time.perf_counter()

        def __exit__(self, *exc):
            setattr(times, self.bucket,
                    getattr(times, self.bucket) + time.perf_counter() - self.t0)

    if pdhg_params is None:
        pdhg_params = PdhgParams(seed=params.seed)
    engine = _PdhgEngine(pdhg_params) if params.relaxation_engine == ENGINE_PDHG \
        else _SimplexEngine()

    sense_sign = 1.0 if p.base.sense == "min" else -1.0
    relaxed_base = p.base.relaxed()
    state = {"relax": 0, "cleanup": 0, "warnings": 0, "root_log": None}
    is_pdhg = params.relaxation_engine == ENGINE_PDHG

    def evaluate(fixes: dict, warm, branched: int | None = None,
                 is_root=False) -> _NodeEval:
        model = relaxed_base.with_bounds(fixes) if fixes else relaxed_base
        try:
            with clock("presolve"):
                std = presolve(canonicalize(model))
        except InfeasibleModelError:
            return _NodeEval(False)
        if is_pdhg and warm is not None and branched is not None:
            warm = _clamp_branched(std, warm, branched)
        ev = engine.solve(std, sense_sign, warm, is_root, clock)
        state["relax"] += ev.relax_iterations
        state["cleanup"] += ev.cleanup_iterations
        if is_root and ev.lp_log is not None:
            state["root_log"] = ev.lp_log
        return ev

    def finish(status, incumbent_x, incumbent_min, best_bound_min, nodes):
        times.branch_and_bound = max(
            0.0, (time.perf_counter() - t_start)
            - times.presolve - times.relaxation - times.crossover
        )
        objective = None if incumbent_min is None else float(sense_sign * incumbent_min)
        if not np.isfinite(best_bound_min) and incumbent_min is not None:
            best_bound_min = incumbent_min
        return MilpSolution(
            status=status, incumbent_x=incumbent_x, objective=objective,
            best_bound=float(sense_sign * best_bound_min),
            nodes_explored=nodes, stage_times=times,
            relax_iterations=state["relax"], cleanup_iterations=state["cleanup"],
            node_warnings=state["warnings"], root_log=state["root_log"],
        )

    incumbent_min: float | None = None
    incumbent_x: np.ndarray | None = None
    nodes = 1
    root = evaluate({}, None, is_root=True)
    if not root.feasible:
        return finish(INFEASIBLE, None, None, np.inf, nodes)

    def prune_threshold():
        if incumbent_min is None:
            return np.inf
        return incumbent_min - params.rel_mip_gap * (1.0 + abs(incumbent_min))

    heap: list[tuple[float, int, dict, object, np.ndarray]] = []
    order = 0

    def consider(ev: _NodeEval, fixes: dict):
        """Route one evaluated node: incumbent update, push, or prune."""
        nonlocal incumbent_min, incumbent_x, order
        if not ev.feasible or ev.bound >= prune_threshold():
            return
        j = branch_select(ev.x_orig, p.binary_set, params.int_tol)
        if j is None:
            if incumbent_min is None or ev.bound < incumbent_min:
                incumbent_min = ev.bound
                incumbent_x = ev.x_orig
            return
        heapq.heappush(heap, (ev.bound, order, fixes, ev.warm, ev.x_orig))
        order += 1

    consider(root, {})

    while heap:
        if params.time_limit_seconds is not None \
                and time.perf_counter() - t_start > params.time_limit_seconds:
            return finish(TIME_LIMIT, incumbent_x, incumbent_min, heap[0][0], nodes)
        bound, _, fixes, warm, x_parent = heapq.heappop(heap)
        if bound >= prune_threshold():
            # Best-bound order: every remaining node is at least as bad.
            return finish(OPTIMAL, incumbent_x, incumbent_min, bound, nodes)
        j = branch_select(x_parent, p.binary_set, params.int_tol)
        if j is None:
            continue
        for value in (0.0, 1.0):
            if nodes >= params.node_limit:
                open_bound = min([bound] + [h[0] for h in heap])
                return finish(NODE_LIMIT, incumbent_x, incumbent_min, open_bound, nodes)
            child_fixes = dict(fixes)
            child_fixes[j] = (value, value)
            nodes += 1
            try:
                ev = evaluate(child_fixes, warm, branched=j)
            except Exception as exc:
                state["warnings"] += 1
                log.warning("node relaxation failed (%s); node pruned with warning", exc)
                continue
            consider(ev, child_fixes)

    best = incumbent_min if incumbent_min is not None else np.inf
    if incumbent_min is None:
        return finish(INFEASIBLE, None, None, np.inf, nodes)
    return finish(OPTIMAL, incumbent_x, incumbent_min, best, nodes)


def _std_col_of_var(std: StandardLp, j: int) -> int | None:
    """Standard-form column currently holding original variable j, following
    the canonicalize map and any presolve column removals; None if dropped or
    split."""
    from .model import CanonicalizeRecord, VarFixRecord

    record = next((r for r in std.transform_log if isinstance(r, CanonicalizeRecord)),
                  None)
    if record is None:
        return None
    vm = record.var_maps[j]
    if vm.kind == "split":
        return None
    k = vm.std_index
    for r in std.transform_log:
        if isinstance(r, VarFixRecord):
            if k in r.removed:
                return None
            k -= sum(1 for dead in r.removed if dead < k)
    return k


def _clamp_branched(std: StandardLp, warm, j: int):
    """Parent iterates with the branched coordinate clamped to the child's
    fixed value (always 0 in the child's shifted standard space)."""
    x, y = warm
    if len(x) != std.num_cols or len(y) != std.num_rows:
        return warm
    k = _std_col_of_var(std, j)
    if k is None:
        return warm
    x = np.asarray(x, dtype=np.float64).copy()
    x[k] = 0.0
    return (x, y)
