"""Desk-scale unit-commitment MILP solver built on a first-order LP core.

The pipeline mirrors a GPU-era MILP stack at laptop size: a restarted
primal-dual hybrid gradient solver handles LP relaxations, crossover turns
its approximate solutions into exact basic feasible vertices, and a
best-bound branch-and-bound closes the integrality gap.  A deterministic
unit-commitment instance generator and a benchmark harness with stage-time
and solution-quality reporting round out the toolkit.
"""

from .bnb import (
    BnbParams,
    MilpProblem,
    MilpSolution,
    StageTimes,
    branch_select,
    score,
    solve_milp,
)
from .model import (
    GeneralLp,
    Row,
    ScalingDiagonals,
    StandardLp,
    canonicalize,
    postsolve,
    presolve,
    ruiz_scale,
)
from .mps import MpsParseError, read_mps, write_mps
from .pdlp import (
    LpSolution,
    PdhgParams,
    PdhgState,
    ResidualReport,
    format_log,
    pdhg_step,
    residuals,
    solve_lp,
)
from .simplex import BasicSolution, crossover, simplex_solve
from .sparse import CsrMatrix, from_triplets, spectral_norm_estimate, spmv, spmv_transpose
from .ucgen import UcConfig, UcInstance, count_profile, generate_instance, to_milp

__version__ = "0.1.0"
