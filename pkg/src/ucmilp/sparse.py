"""Sparse CSR kernels: construction, matvec in both directions, spectral norm.

These three kernels are the entire sparse backend of the solver stack.  Only
CSR is stored; the transpose product scatters into its output rather than
keeping a second (CSC) copy.  All operations are single-threaded and use a
fixed accumulation order, so results are bit-identical from run to run.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class CsrMatrix:
    """Compressed sparse row matrix with float64 values.

    Invariants: ``row_starts`` is nondecreasing with ``row_starts[0] == 0``
    and ``row_starts[nrows] == len(values)``; column indices are strictly
    increasing within each row; no explicit zeros are stored.
    """

    nrows: int
    ncols: int
    row_starts: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    @property
    def nnz(self) -> int:
        return len(self.values)

    @cached_property
    def entry_rows(self) -> np.ndarray:
        """Row index of every stored entry (fixed; shared by the matvecs)."""
        return np.repeat(np.arange(self.nrows), np.diff(self.row_starts))

    @cached_property
    def _nonempty_rows(self) -> np.ndarray:
        return np.flatnonzero(np.diff(self.row_starts) > 0)

    @cached_property
    def _reduce_starts(self) -> np.ndarray:
        return self.row_starts[:-1][self._nonempty_rows]

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Column indices and values of row ``i`` (views, do not mutate)."""
        lo, hi = self.row_starts[i], self.row_starts[i + 1]
        return self.col_indices[lo:hi], self.values[lo:hi]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols))
        out[self.entry_rows, self.col_indices] = self.values
        return out


def from_triplets(
    nrows: int, ncols: int, entries: list[tuple[int, int, float]]
) -> CsrMatrix:
    """Build a CsrMatrix from (row, col, value) triplets.

    Duplicate (row, col) pairs are summed; entries that cancel to zero are
    dropped.  Raises ValueError naming the offending entry if an index is
    out of range.
    """
    if nrows < 0 or ncols < 0:
        raise ValueError(f"matrix shape must be nonnegative, got {nrows}x{ncols}")
    for k, (i, j, v) in enumerate(entries):
        if not (0 <= i < nrows):
            raise ValueError(
                f"entry {k} (row={i}, col={j}, value={v}): row index out of "
                f"range for {nrows}x{ncols} matrix"
            )
        if not (0 <= j < ncols):
            raise ValueError(
                f"entry {k} (row={i}, col={j}, value={v}): column index out of "
                f"range for {nrows}x{ncols} matrix"
            )

    if entries:
        rows = np.array([e[0] for e in entries], dtype=np.int64)
        cols = np.array([e[1] for e in entries], dtype=np.int64)
        vals = np.array([e[2] for e in entries], dtype=np.float64)
        # Stable sort by (row, col), then sum runs of identical coordinates.
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        boundary = np.ones(len(rows), dtype=bool)
        boundary[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        group = np.cumsum(boundary) - 1
        summed = np.zeros(group[-1] + 1)
        np.add.at(summed, group, vals)
        rows, cols = rows[boundary], cols[boundary]
        keep = summed != 0.0
        rows, cols, vals = rows[keep], cols[keep], summed[keep]
    else:
        rows = np.zeros(0, dtype=np.int64)
        cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=np.float64)

    row_starts = np.zeros(nrows + 1, dtype=np.int64)
    np.add.at(row_starts, rows + 1, 1)
    np.cumsum(row_starts, out=row_starts)
    return CsrMatrix(nrows, ncols, row_starts, cols, vals)


def spmv(a: CsrMatrix, x: np.ndarray) -> np.ndarray:
    """Row-wise product A @ x with per-row left-to-right accumulation."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.ncols,):
        raise ValueError(f"spmv: x has shape {x.shape}, expected ({a.ncols},)")
    out = np.zeros(a.nrows)
    if a.nnz == 0:
        return out
    prod = a.values * x[a.col_indices]
    # reduceat over starts of nonempty rows: consecutive starts delimit exactly
    # those rows' entries because empty rows contribute no entries in between.
    out[a._nonempty_rows] = np.add.reduceat(prod, a._reduce_starts)
    return out


def spmv_transpose(a: CsrMatrix, y: np.ndarray) -> np.ndarray:
    """Product A.T @ y without materializing the transpose.

    Scatters row contributions into the output in CSR traversal order, which
    fixes the accumulation order per output slot.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (a.nrows,):
        raise ValueError(f"spmv_transpose: y has shape {y.shape}, expected ({a.nrows},)")
    out = np.zeros(a.ncols)
    if a.nnz == 0:
        return out
    np.add.at(out, a.col_indices, a.values * y[a.entry_rows])
    return out


def spectral_norm_estimate(
    a: CsrMatrix, max_iters: int = 200, tol: float = 1e-6, seed: int = 0
) -> float:
    """Estimate ||A||_2 by power iteration on A.T A from a seeded start.

    Returns sqrt of the Rayleigh quotient after the relative change drops
    below ``tol`` or ``max_iters`` passes.  The estimate never exceeds the
    exact norm.  An all-zero matrix yields 0.
    """
    if a.nnz == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a.ncols)
    norm_v = np.linalg.norm(v)
    if norm_v == 0.0:
        return 0.0
    v /= norm_v
    estimate = 0.0
    for _ in range(max_iters):
        w = spmv_transpose(a, spmv(a, v))
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        new_estimate = np.sqrt(np.dot(v, w))
        v = w / norm_w
        if abs(new_estimate - estimate) <= tol * max(new_estimate, 1e-30):
            return float(new_estimate)
        estimate = new_estimate
    return float(estimate)
