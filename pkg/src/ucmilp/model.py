"""LP/MILP model types and transformations into the solver's standard form.

The standard form used throughout the solver stack is

    minimize c.T x   subject to   A x >= b,  x >= 0.

``canonicalize`` rewrites a general model (either sense, any relation, any
bounds, optional binary marks) into that form and records every rewrite in a
transform log so ``postsolve`` can map a standard-form point back to the
original variable space and objective.  ``ruiz_scale`` and ``presolve`` stack
further reversible transforms onto the same log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sparse import CsrMatrix, from_triplets

RELATIONS = ("<=", "=", ">=")


class CanonicalizationError(ValueError):
    """Model rejected during canonicalization (bad coefficients or rhs)."""


class InfeasibleModelError(Exception):
    """Presolve proved the model infeasible; ``row`` is the witness row index."""

    def __init__(self, row: int, message: str):
        super().__init__(message)
        self.row = row


@dataclass(frozen=True)
class Row:
    """One linear constraint: sparse coefficients, relation, right-hand side."""

    cols: np.ndarray
    vals: np.ndarray
    relation: str
    rhs: float


@dataclass
class GeneralLp:
    """General-form model: any sense, <=/=/>= rows, bounds, binary marks."""

    sense: str                 # "min" or "max"
    costs: np.ndarray
    constant: float
    rows: list[Row]
    lower: np.ndarray          # -inf allowed
    upper: np.ndarray          # +inf allowed
    is_binary: np.ndarray      # bool per variable; binary implies bounds within [0, 1]

    def __post_init__(self):
        n = len(self.costs)
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if len(self.lower) != n or len(self.upper) != n or len(self.is_binary) != n:
            raise ValueError("bounds/integrality length must match costs")
        if np.any(self.lower > self.upper):
            bad = int(np.argmax(self.lower > self.upper))
            raise ValueError(f"variable {bad}: lower bound exceeds upper bound")
        binary = np.asarray(self.is_binary, dtype=bool)
        if np.any(binary & ((self.lower < 0) | (self.upper > 1))):
            bad = int(np.argmax(binary & ((self.lower < 0) | (self.upper > 1))))
            raise ValueError(f"binary variable {bad} has bounds outside [0, 1]")
        for i, row in enumerate(self.rows):
            if row.relation not in RELATIONS:
                raise ValueError(f"row {i}: unknown relation {row.relation!r}")
            if len(row.cols) and (row.cols.min() < 0 or row.cols.max() >= n):
                raise ValueError(f"row {i}: coefficient index out of range")

    @property
    def num_vars(self) -> int:
        return len(self.costs)

    def with_bounds(self, fixes: dict[int, tuple[float, float]]) -> "GeneralLp":
        """Copy with some variable bounds replaced (used by branch-and-bound)."""
        lower = self.lower.copy()
        upper = self.upper.copy()
        for j, (lo, hi) in fixes.items():
            lower[j], upper[j] = lo, hi
        return GeneralLp(self.sense, self.costs, self.constant, self.rows,
                         lower, upper, self.is_binary)

    def relaxed(self) -> "GeneralLp":
        """Copy with integrality marks cleared (LP relaxation)."""
        return GeneralLp(self.sense, self.costs, self.constant, self.rows,
                         self.lower, self.upper, np.zeros(self.num_vars, dtype=bool))


# --- transform log records -------------------------------------------------
#
# postsolve replays these in reverse.  Each record can undo its own effect on
# a standard-form point; the canonicalize record additionally evaluates the
# original objective.

SHIFT, MIRROR, SPLIT = "shift", "mirror", "split"


@dataclass(frozen=True)
class VarMap:
    kind: str
    std_index: int
    offset: float = 0.0        # shift: lower bound; mirror: upper bound
    std_index_neg: int = -1    # split only


@dataclass(frozen=True)
class CanonicalizeRecord:
    var_maps: list[VarMap]
    std_costs: np.ndarray
    obj_sign: float
    obj_constant: float


@dataclass(frozen=True)
class ScaleRecord:
    col_scale: np.ndarray


@dataclass(frozen=True)
class RowDropRecord:
    """Rows removed by presolve (audit only; no effect on the primal point)."""

    dropped: tuple[int, ...]
    reason: str


@dataclass(frozen=True)
class VarFixRecord:
    """Standard-form columns removed by presolve, all fixed to zero."""

    removed: tuple[int, ...]
    original_length: int


@dataclass(frozen=True)
class StandardLp:
    """min c.T x s.t. A x >= b, x >= 0, plus the log mapping back to the source."""

    c: np.ndarray
    A: CsrMatrix
    b: np.ndarray
    transform_log: tuple = ()
    row_tags: tuple = ()       # provenance per row: ("row", i, sign) or ("ub", j)

    @property
    def num_rows(self) -> int:
        return self.A.nrows

    @property
    def num_cols(self) -> int:
        return self.A.ncols


def canonicalize(p: GeneralLp) -> StandardLp:
    """Rewrite a GeneralLp as min c.T x, A x >= b, x >= 0.

    Maximization is negated; <= rows are negated; equalities are split into
    opposing >= pairs; finite lower bounds shift the variable; finite upper
    bounds become extra rows; variables bounded only above are mirrored; free
    variables split into a difference of nonnegatives.  Integrality marks are
    ignored (relaxation is the caller's job).
    """
    n = p.num_vars
    sign = 1.0 if p.sense == "min" else -1.0
    c_min = sign * np.asarray(p.costs, dtype=np.float64)
    if not np.all(np.isfinite(c_min)):
        raise CanonicalizationError("objective has NaN or infinite coefficients")

    var_maps: list[VarMap] = []
    std_costs: list[float] = []
    const_min = 0.0
    ub_rows: list[tuple[int, float, int]] = []  # (std col, rhs, orig var)

    for j in range(n):
        lo, hi = float(p.lower[j]), float(p.upper[j])
        if math.isnan(lo) or math.isnan(hi):
            raise CanonicalizationError(f"variable {j}: NaN bound")
        if math.isfinite(lo):
            k = len(std_costs)
            var_maps.append(VarMap(SHIFT, k, offset=lo))
            std_costs.append(c_min[j])
            const_min += c_min[j] * lo
            if math.isfinite(hi):
                ub_rows.append((k, -(hi - lo), j))
        elif math.isfinite(hi):
            k = len(std_costs)
            var_maps.append(VarMap(MIRROR, k, offset=hi))
            std_costs.append(-c_min[j])
            const_min += c_min[j] * hi
        else:
            k = len(std_costs)
            var_maps.append(VarMap(SPLIT, k, std_index_neg=k + 1))
            std_costs.append(c_min[j])
            std_costs.append(-c_min[j])

    n_std = len(std_costs)
    triplets: list[tuple[int, int, float]] = []
    b: list[float] = []
    tags: list[tuple] = []

    def emit(cols: list[int], vals: list[float], rhs: float, negate: bool, tag: tuple):
        r = len(b)
        s = -1.0 if negate else 1.0
        for cc, vv in zip(cols, vals):
            triplets.append((r, cc, s * vv))
        b.append(s * rhs)
        tags.append(tag)

    for i, row in enumerate(p.rows):
        vals = np.asarray(row.vals, dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            raise CanonicalizationError(f"row {i}: NaN or infinite coefficient")
        rhs = float(row.rhs)
        if not math.isfinite(rhs):
            raise CanonicalizationError(f"row {i}: right-hand side is not finite")
        cols: list[int] = []
        out_vals: list[float] = []
        for a, j in zip(vals, row.cols):
            vm = var_maps[int(j)]
            if vm.kind == SHIFT:
                cols.append(vm.std_index)
                out_vals.append(float(a))
                rhs -= a * vm.offset
            elif vm.kind == MIRROR:
                cols.append(vm.std_index)
                out_vals.append(float(-a))
                rhs -= a * vm.offset
            else:
                cols.append(vm.std_index)
                out_vals.append(float(a))
                cols.append(vm.std_index_neg)
                out_vals.append(float(-a))
        if row.relation == ">=":
            emit(cols, out_vals, rhs, False, ("row", i, 1))
        elif row.relation == "<=":
            emit(cols, out_vals, rhs, True, ("row", i, -1))
        else:
            emit(cols, out_vals, rhs, False, ("row", i, 1))
            emit(cols, out_vals, rhs, True, ("row", i, -1))

    for k, rhs, j in ub_rows:
        r = len(b)
        triplets.append((r, k, -1.0))
        b.append(rhs)
        tags.append(("ub", j))

    record = CanonicalizeRecord(
        var_maps=var_maps,
        std_costs=np.array(std_costs),
        obj_sign=sign,
        obj_constant=float(p.constant) + sign * const_min,
    )
    return StandardLp(
        c=np.array(std_costs),
        A=from_triplets(len(b), n_std, triplets),
        b=np.array(b),
        transform_log=(record,),
        row_tags=tuple(tags),
    )


@dataclass(frozen=True)
class ScalingDiagonals:
    """Accumulated positive row/column scale factors from Ruiz equilibration."""

    row_scale: np.ndarray
    col_scale: np.ndarray


def ruiz_scale(p: StandardLp, iterations: int) -> tuple[StandardLp, ScalingDiagonals]:
    """Ruiz equilibration: iteratively divide rows then columns by the square
    root of their max absolute entry, driving all max-magnitudes toward 1.

    Returns the equivalently rescaled problem and the accumulated diagonals.
    Zero rows/columns keep scale 1.  ``iterations=0`` returns the input with
    unit diagonals.
    """
    m, n = p.num_rows, p.num_cols
    row_scale = np.ones(m)
    col_scale = np.ones(n)
    vals = p.A.values.copy()
    row_of = np.repeat(np.arange(m), np.diff(p.A.row_starts))
    cols = p.A.col_indices

    for _ in range(iterations):
        rmax = np.zeros(m)
        np.maximum.at(rmax, row_of, np.abs(vals))
        rs = np.where(rmax > 0.0, np.sqrt(rmax), 1.0)
        vals /= rs[row_of]
        row_scale *= rs

        cmax = np.zeros(n)
        np.maximum.at(cmax, cols, np.abs(vals))
        cs = np.where(cmax > 0.0, np.sqrt(cmax), 1.0)
        vals /= cs[cols]
        col_scale *= cs

    diags = ScalingDiagonals(row_scale=row_scale, col_scale=col_scale)
    if iterations <= 0:
        return p, diags
    scaled = StandardLp(
        c=p.c / col_scale,
        A=CsrMatrix(m, n, p.A.row_starts, p.A.col_indices, vals),
        b=p.b / row_scale,
        transform_log=p.transform_log + (ScaleRecord(col_scale=col_scale),),
        row_tags=p.row_tags,
    )
    return scaled, diags


def presolve(p: StandardLp) -> StandardLp:
    """Light presolve: drop trivially satisfied empty rows, detect trivially
    infeasible ones, drop duplicate rows (keeping the largest rhs), and remove
    zero-objective zero-column variables (fixed to 0)."""
    m = p.num_rows
    counts = np.diff(p.A.row_starts)

    keep_row = np.ones(m, dtype=bool)
    dropped_empty = []
    for i in range(m):
        if counts[i] == 0:
            if p.b[i] > 0.0:
                raise InfeasibleModelError(
                    i, f"row {i} has no coefficients but requires >= {p.b[i]}"
                )
            keep_row[i] = False
            dropped_empty.append(i)

    # Duplicate detection on exact pattern and values; the kept copy carries
    # the max rhs (the binding one for >= rows).
    seen: dict[bytes, int] = {}
    b_new = p.b.copy()
    dropped_dup = []
    for i in range(m):
        if not keep_row[i]:
            continue
        cols_i, vals_i = p.A.row(i)
        key = cols_i.tobytes() + b"|" + vals_i.tobytes()
        if key in seen:
            k = seen[key]
            b_new[k] = max(b_new[k], b_new[i])
            keep_row[i] = False
            dropped_dup.append(i)
        else:
            seen[key] = i

    rows_kept = np.flatnonzero(keep_row)
    col_nnz = np.zeros(p.num_cols, dtype=np.int64)
    for i in rows_kept:
        cols_i, _ = p.A.row(i)
        col_nnz[cols_i] += 1
    removable = (col_nnz == 0) & (p.c == 0.0)
    removed_cols = tuple(int(j) for j in np.flatnonzero(removable))

    log = p.transform_log
    if dropped_empty:
        log = log + (RowDropRecord(tuple(dropped_empty), "empty row"),)
    if dropped_dup:
        log = log + (RowDropRecord(tuple(dropped_dup), "duplicate row"),)
    if removed_cols:
        log = log + (VarFixRecord(removed_cols, p.num_cols),)

    if not dropped_empty and not dropped_dup and not removed_cols:
        return p

    col_keep = ~removable
    new_index = np.cumsum(col_keep) - 1
    triplets = []
    for r, i in enumerate(rows_kept):
        cols_i, vals_i = p.A.row(i)
        for j, v in zip(cols_i, vals_i):
            triplets.append((r, int(new_index[j]), float(v)))
    return StandardLp(
        c=p.c[col_keep],
        A=from_triplets(len(rows_kept), int(col_keep.sum()), triplets),
        b=b_new[rows_kept],
        transform_log=log,
        row_tags=tuple(p.row_tags[i] for i in rows_kept) if p.row_tags else (),
    )


def postsolve(p: StandardLp, x_std: np.ndarray) -> tuple[np.ndarray, float]:
    """Map a standard-form point back through the transform log.

    Returns the point in the originating model's variable space together with
    that model's objective value at it (sense and constant included).
    """
    x = np.asarray(x_std, dtype=np.float64)
    if x.shape != (p.num_cols,):
        raise ValueError(f"postsolve: x has shape {x.shape}, expected ({p.num_cols},)")
    x = x.copy()
    # Track the cost vector alongside so the objective is available even if
    # the log holds no canonicalize record (hand-built standard problems).
    c_cur = p.c.copy()
    objective = None
    for record in reversed(p.transform_log):
        if isinstance(record, ScaleRecord):
            x = x / record.col_scale
            c_cur = c_cur * record.col_scale
        elif isinstance(record, VarFixRecord):
            full = np.zeros(record.original_length)
            keep = np.ones(record.original_length, dtype=bool)
            keep[list(record.removed)] = False
            full[keep] = x
            x = full
            c_full = np.zeros(record.original_length)
            c_full[keep] = c_cur
            c_cur = c_full
        elif isinstance(record, RowDropRecord):
            pass
        elif isinstance(record, CanonicalizeRecord):
            objective = record.obj_sign * float(np.dot(record.std_costs, x)) \
                + record.obj_constant
            orig = np.zeros(len(record.var_maps))
            for j, vm in enumerate(record.var_maps):
                if vm.kind == SHIFT:
                    orig[j] = x[vm.std_index] + vm.offset
                elif vm.kind == MIRROR:
                    orig[j] = vm.offset - x[vm.std_index]
                else:
                    orig[j] = x[vm.std_index] - x[vm.std_index_neg]
            x = orig
        else:
            raise TypeError(f"unknown transform record {type(record).__name__}")
    if objective is None:
        objective = float(np.dot(c_cur, x))
    return x, objective
