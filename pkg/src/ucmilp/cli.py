"""Command-line interface: generate instances, solve one, bench, report.

Exit codes for ``solve``: 0 optimal, 2 node/time limit, 3 infeasible.
``bench`` exits 0 only when every run completed without an engine error.
Timing lines go to stderr so stdout stays byte-identical across repeated
invocations with the same flags.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness, plots
from .bnb import ENGINE_PDHG, ENGINE_SIMPLEX, BnbParams, MilpProblem, solve_milp
from .mps import read_mps, write_mps
from .pdlp import LpSolution, PdhgParams, format_log
from .ucgen import generate_instance, to_milp

ENGINE_FLAG = {"pdhg": ENGINE_PDHG, "simplex": ENGINE_SIMPLEX}


def cmd_generate(args) -> int:
    scenarios = harness.load_suite(args.config) if args.config \
        else harness.default_suite()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for scenario in scenarios:
        inst = generate_instance(scenario.uc_config)
        problem = to_milp(inst)
        (out / f"{scenario.name}.mps").write_text(write_mps(problem.base,
                                                            name=scenario.name))
        (out / f"{scenario.name}.json").write_text(inst.to_json())
    print(f"wrote {len(scenarios)} instances to {out}")
    return 0


def cmd_solve(args) -> int:
    text = Path(args.instance).read_text()
    model = read_mps(text)
    binary_set = [int(j) for j in np.flatnonzero(model.is_binary)]
    problem = MilpProblem(base=model, binary_set=binary_set)
    engine = ENGINE_FLAG[args.engine]
    params = BnbParams(relaxation_engine=engine, rel_mip_gap=args.mip_gap,
                       seed=args.seed)
    pdhg_params = PdhgParams(eps_rel=args.eps, log_period=args.log_period,
                             seed=args.seed)
    sol = solve_milp(problem, params, pdhg_params)

    if engine == ENGINE_PDHG and sol.root_log is not None:
        stub = LpSolution("", np.zeros(0), np.zeros(0), None, 0, 0, sol.root_log)
        print("root relaxation iteration log:")
        print(format_log(stub), end="")
    print(f"status: {sol.status}")
    if sol.objective is not None:
        print(f"objective: {sol.objective:.10e}")
    print(f"best bound: {sol.best_bound:.10e}")
    print(f"nodes explored: {sol.nodes_explored}")
    print(f"relaxation iterations: {sol.relax_iterations}")
    print(f"crossover cleanup iterations: {sol.cleanup_iterations}")

    st = sol.stage_times
    print("stage breakdown [ms]:", file=sys.stderr)
    for label, seconds in zip(
        ("presolve", "relaxation", "crossover", "branch_and_bound"), st.as_tuple()
    ):
        print(f"  {label:<18} {1000.0 * seconds:12.3f}", file=sys.stderr)

    return solve_exit_code(sol.status)


def solve_exit_code(status: str) -> int:
    """0 optimal, 2 node/time limit, 3 infeasible."""
    if status == "optimal":
        return 0
    if status in ("node_limit", "time_limit"):
        return 2
    return 3


def cmd_bench(args) -> int:
    scenarios = harness.load_suite(args.suite) if args.suite \
        else harness.default_suite()
    report = harness.run_suite(scenarios, args.out, workers=args.workers)
    print(f"executed {report.executed_runs} runs "
          f"({report.skipped_runs} resumed, {report.failed_runs} failed)")
    return 0 if report.failed_runs == 0 else 1


def cmd_report(args) -> int:
    rows = harness.read_runs(Path(args.dir) / harness.RUNS_FILE)
    aggregates = harness.aggregate(rows)
    scores = aggregates.pop("scores")
    print(harness.format_tables(aggregates), end="")
    figures = plots.render_all(rows, scores, Path(args.dir) / "figures")
    for fig in figures:
        print(f"figure: {fig}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ucmilp",
        description="Desk-scale unit-commitment MILP solver and benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="materialize suite instances (MPS + JSON)")
    p.add_argument("--config", help="suite JSON (defaults to the built-in 57-scenario suite)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve one MPS instance")
    p.add_argument("--instance", required=True, help="MPS file")
    p.add_argument("--engine", choices=sorted(ENGINE_FLAG), default="pdhg")
    p.add_argument("--eps", type=float, default=1e-6,
                   help="PDHG relative termination tolerance")
    p.add_argument("--mip-gap", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-period", type=int, default=100)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a scenario suite with both engines")
    p.add_argument("--suite", help="suite JSON (defaults to the built-in 57-scenario suite)")
    p.add_argument("--out", required=True, help="output directory for runs.csv/report.json")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="aggregate runs.csv into tables and figures")
    p.add_argument("--dir", required=True, help="directory holding runs.csv")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
