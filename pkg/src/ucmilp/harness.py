"""Benchmark harness: scenario suites, resumable runs, and report aggregation.

A suite is a list of scenarios, each naming a unit-commitment config and
branch-and-bound parameters per engine.  ``run_suite`` solves every
(scenario, engine, repetition) combination, appending one self-contained CSV
row per run as it completes; a done-marker file makes reruns resume instead
of recompute.  ``aggregate`` reduces the rows to per-division timing tables
and the score distribution, with the simplex engine as the quality baseline.

The default suite holds 57 seeded scenarios spread evenly over three fleet
sizes and three desk-scale division labels, mirroring the shape of the
study's scenario grid without claiming correspondence to it.
"""

from __future__ import annotations

import csv
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .bnb import ENGINE_PDHG, ENGINE_SIMPLEX, BnbParams, MilpSolution, solve_milp
from .pdlp import PdhgParams
from .ucgen import UcConfig, generate_instance, to_milp

ENGINES = (ENGINE_PDHG, ENGINE_SIMPLEX)
BASELINE_ENGINE = ENGINE_SIMPLEX

CSV_COLUMNS = [
    "scenario", "group", "engine", "rep", "workers", "seed", "sense", "status",
    "objective", "best_bound", "nodes", "relax_iterations", "cleanup_iterations",
    "presolve_ms", "relaxation_ms", "crossover_ms", "branch_and_bound_ms",
    "total_ms",
]

RUNS_FILE = "runs.csv"
DONE_FILE = "done.txt"
REPORT_FILE = "report.json"

# Desk-scale analogs of the study's three scheduling divisions; the real
# 18/48/42-step mapping lives in ucgen and drives the count-profile checks.
DEFAULT_DIVISION_STEPS = {"D1": 3, "D2": 6, "D3": 5}
DEFAULT_UNIT_SIZES = (2, 3, 4)


class AggregationError(ValueError):
    """Rows are missing an engine pairing for some scenario."""


@dataclass(frozen=True)
class Scenario:
    name: str
    uc_config: UcConfig
    bnb_params: dict[str, BnbParams] = field(default_factory=dict)
    repetitions: int = 3

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        for engine in self.bnb_params:
            if engine not in ENGINES:
                raise ValueError(f"unknown engine {engine!r} in scenario {self.name}")

    def params_for(self, engine: str) -> BnbParams:
        if engine in self.bnb_params:
            return self.bnb_params[engine]
        return BnbParams(relaxation_engine=engine, seed=self.uc_config.seed)

    @property
    def group(self) -> str:
        """Division group label, taken from the name prefix before '-'."""
        return self.name.split("-", 1)[0] if "-" in self.name else self.name


@dataclass
class BenchReport:
    rows: list[dict]
    scores: dict[str, float]
    aggregates: dict
    executed_runs: int
    skipped_runs: int
    failed_runs: int

    def to_json(self) -> str:
        # Only row-derived content goes to disk, so a resumed run reproduces
        # the identical report; session counters stay on the object.
        return json.dumps(
            {
                "scores": self.scores,
                "aggregates": self.aggregates,
                "failed_rows": sum(
                    1 for r in self.rows if str(r.get("status", "")).startswith("error:")
                ),
                "rows": self.rows,
            },
            indent=2, sort_keys=True,
        )


def default_suite(repetitions: int = 1) -> list[Scenario]:
    """The 57-scenario default grid: three fleet sizes x three divisions,
    seeds spread evenly (the first three cells carry one extra scenario)."""
    scenarios = []
    cells = [(units, division) for units in DEFAULT_UNIT_SIZES
             for division in ("D1", "D2", "D3")]
    seed = 0
    for idx, (units, division) in enumerate(cells):
        count = 7 if idx < 3 else 6
        for k in range(count):
            name = f"{division}-u{units}-s{seed}"
            # Amplitudes stay at or below 0.10: up there the generator's
            # demand floor (fleet minimum output) always fits under its cap,
            # which keeps every scenario's MILP feasible, not just its LP
            # relaxation.
            cfg = UcConfig(
                n_units=units,
                horizon_steps=DEFAULT_DIVISION_STEPS[division],
                demand_base=400.0 + 40.0 * (seed % 5),
                demand_amplitude=0.05 + 0.025 * (seed % 3),
                seed=seed,
            )
            scenarios.append(Scenario(name=name, uc_config=cfg,
                                      repetitions=repetitions))
            seed += 1
    assert len(scenarios) == 57
    return scenarios


def scenario_to_dict(s: Scenario) -> dict:
    cfg = {k: v for k, v in asdict(s.uc_config).items() if v is not None}
    out = {"name": s.name, "uc_config": cfg, "repetitions": s.repetitions}
    if s.bnb_params:
        out["bnb_params"] = {
            eng: {k: v for k, v in asdict(p).items()}
            for eng, p in s.bnb_params.items()
        }
    return out


def scenario_from_dict(d: dict) -> Scenario:
    params = {}
    for eng, pd in d.get("bnb_params", {}).items():
        pd = dict(pd)
        pd.setdefault("relaxation_engine", eng)
        params[eng] = BnbParams(**pd)
    return Scenario(
        name=d["name"],
        uc_config=UcConfig(**d["uc_config"]),
        bnb_params=params,
        repetitions=d.get("repetitions", 3),
    )


def load_suite(path: str | Path) -> list[Scenario]:
    payload = json.loads(Path(path).read_text())
    items = payload["scenarios"] if isinstance(payload, dict) else payload
    return [scenario_from_dict(d) for d in items]


def save_suite(scenarios: list[Scenario], path: str | Path) -> None:
    payload = {"scenarios": [scenario_to_dict(s) for s in scenarios]}
    Path(path).write_text(json.dumps(payload, indent=2))


def _run_key(scenario: str, engine: str, rep: int) -> str:
    return f"{scenario}|{engine}|{rep}"


def _solve_one(scenario: Scenario, engine: str, rep: int, workers: int) -> dict:
    params = scenario.params_for(engine)
    problem = to_milp(generate_instance(scenario.uc_config))
    t0 = time.perf_counter()
    sol: MilpSolution = solve_milp(problem, params,
                                   PdhgParams(seed=params.seed))
    total_ms = 1000.0 * (time.perf_counter() - t0)
    st = sol.stage_times
    return {
        "scenario": scenario.name,
        "group": scenario.group,
        "engine": engine,
        "rep": rep,
        "workers": workers,
        "seed": params.seed,
        "sense": problem.base.sense,
        "status": sol.status,
        "objective": "" if sol.objective is None else repr(sol.objective),
        "best_bound": repr(sol.best_bound),
        "nodes": sol.nodes_explored,
        "relax_iterations": sol.relax_iterations,
        "cleanup_iterations": sol.cleanup_iterations,
        "presolve_ms": f"{1000.0 * st.presolve:.3f}",
        "relaxation_ms": f"{1000.0 * st.relaxation:.3f}",
        "crossover_ms": f"{1000.0 * st.crossover:.3f}",
        "branch_and_bound_ms": f"{1000.0 * st.branch_and_bound:.3f}",
        "total_ms": f"{total_ms:.3f}",
    }


def run_suite(scenarios: list[Scenario], out_dir: str | Path,
              workers: int = 1) -> BenchReport:
    """Solve every (scenario, engine, rep) run, appending rows as they finish.

    Completed runs are recorded in a done-marker file next to the CSV, so a
    rerun with the same out_dir re-solves nothing and reproduces the same
    report.  The report JSON is written atomically at the end.  A failed run
    is recorded with its status and the suite continues.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs_path = out / RUNS_FILE
    done_path = out / DONE_FILE

    done: set[str] = set()
    if done_path.exists():
        done = {line.strip() for line in done_path.read_text().splitlines() if line.strip()}

    fresh_csv = not runs_path.exists()
    csv_lock = threading.Lock()
    runs_file = open(runs_path, "a", newline="")
    writer = csv.DictWriter(runs_file, fieldnames=CSV_COLUMNS)
    if fresh_csv:
        writer.writeheader()
        runs_file.flush()
    done_file = open(done_path, "a")

    todo = [
        (scenario, engine, rep)
        for scenario in scenarios
        for engine in ENGINES
        for rep in range(scenario.repetitions)
        if _run_key(scenario.name, engine, rep) not in done
    ]
    skipped = sum(len(ENGINES) * s.repetitions for s in scenarios) - len(todo)
    executed = 0
    failed = 0

    def work(item):
        scenario, engine, rep = item
        try:
            row = _solve_one(scenario, engine, rep, workers)
        except Exception as exc:  # engine failure: record and continue
            row = {col: "" for col in CSV_COLUMNS}
            row.update({
                "scenario": scenario.name, "group": scenario.group,
                "engine": engine, "rep": rep, "workers": workers,
                "seed": scenario.uc_config.seed,
                "sense": "min", "status": f"error:{type(exc).__name__}",
            })
        with csv_lock:
            writer.writerow(row)
            runs_file.flush()
            done_file.write(_run_key(scenario.name, engine, rep) + "\n")
            done_file.flush()
        return row

    try:
        if workers <= 1:
            results = [work(item) for item in todo]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(work, todo))
    finally:
        runs_file.close()
        done_file.close()

    executed = len(results)
    failed = sum(1 for r in results if str(r.get("status", "")).startswith("error:"))

    rows = read_runs(runs_path)
    scores, aggregates = ({}, {})
    if rows:
        scores, aggregates = _score_and_aggregate(rows)
    report = BenchReport(
        rows=rows, scores=scores, aggregates=aggregates,
        executed_runs=executed, skipped_runs=skipped, failed_runs=failed,
    )
    tmp = out / (REPORT_FILE + ".tmp")
    tmp.write_text(report.to_json())
    os.replace(tmp, out / REPORT_FILE)
    return report


def read_runs(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _mean(values):
    return sum(values) / len(values)


def _score_and_aggregate(rows: list[dict]):
    from .bnb import score as score_fn

    by_scenario: dict[str, dict[str, list[dict]]] = {}
    for row in rows:
        by_scenario.setdefault(row["scenario"], {}).setdefault(row["engine"], []).append(row)

    scores: dict[str, float] = {}
    for name, engines in sorted(by_scenario.items()):
        for engine in ENGINES:
            if engine not in engines:
                raise AggregationError(
                    f"scenario {name!r} has no rows for engine {engine!r}"
                )
        cand = [r for r in engines[ENGINE_PDHG] if r["objective"] != ""]
        base = [r for r in engines[BASELINE_ENGINE] if r["objective"] != ""]
        if not cand or not base:
            continue
        sense = base[0]["sense"]
        scores[name] = score_fn(
            _mean([float(r["objective"]) for r in cand]),
            _mean([float(r["objective"]) for r in base]),
            sense,
        )

    groups: dict[str, dict[str, list[float]]] = {}
    for row in rows:
        if str(row["status"]).startswith("error:"):
            continue
        groups.setdefault(row["group"], {}).setdefault(row["engine"], []).append(
            float(row["total_ms"])
        )

    per_group = {}
    for group, engines in sorted(groups.items()):
        entry = {}
        for engine, times in engines.items():
            entry[engine] = {
                "max_ms": max(times),
                "mean_ms": _mean(times),
                "runs": len(times),
            }
        if ENGINE_PDHG in entry and BASELINE_ENGINE in entry:
            entry["speedup"] = entry[BASELINE_ENGINE]["mean_ms"] \
                / entry[ENGINE_PDHG]["mean_ms"]
        per_group[group] = entry

    values = list(scores.values())
    buckets = {
        "score>=1": sum(1 for v in values if v >= 1.0),
        "0.999<score<1": sum(1 for v in values if 0.999 < v < 1.0),
        "score<=0.999": sum(1 for v in values if v <= 0.999),
    }
    aggregates = {
        "per_group": per_group,
        "score_buckets": buckets,
        "mean_score": _mean(values) if values else None,
        "score_count": len(values),
    }
    return scores, aggregates


def aggregate(rows: list[dict]) -> dict:
    """Summary tables from raw CSV rows: per-division max/mean times and the
    engine speed-up, plus score-distribution buckets against the baseline.
    Raises AggregationError if a scenario lacks rows for either engine."""
    scores, aggregates = _score_and_aggregate(rows)
    aggregates["scores"] = scores
    return aggregates


def format_tables(aggregates: dict) -> str:
    """Aligned text rendering of the aggregate tables."""
    lines = []
    lines.append("Timing per division group (milliseconds)")
    header = (f"{'group':<8} {'engine':<16} {'runs':>5} {'max':>12} {'mean':>12} "
              f"{'speedup':>9}")
    lines.append(header)
    lines.append("-" * len(header))
    for group, entry in sorted(aggregates["per_group"].items()):
        speed = entry.get("speedup")
        for engine in ENGINES:
            if engine not in entry:
                continue
            info = entry[engine]
            tail = f"{speed:>9.3f}" if (speed is not None and engine == ENGINE_PDHG) \
                else f"{'':>9}"
            lines.append(
                f"{group:<8} {engine:<16} {info['runs']:>5d} {info['max_ms']:>12.1f} "
                f"{info['mean_ms']:>12.1f} {tail}"
            )
    lines.append("")
    lines.append("Score distribution (pdhg objective vs simplex baseline)")
    for bucket, count in aggregates["score_buckets"].items():
        lines.append(f"  {bucket:<16} {count:>4d}")
    if aggregates.get("mean_score") is not None:
        lines.append(f"  {'mean score':<16} {aggregates['mean_score']:.6f}")
    return "\n".join(lines) + "\n"
