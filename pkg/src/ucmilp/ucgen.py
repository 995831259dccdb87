"""Deterministic generator of desk-scale DC unit-commitment instances.

Each instance carries per-unit capacity, ramping, minimum up/down times and
cost data plus a sinusoidal demand profile with a single-zone reserve
requirement.  ``to_milp`` encodes the scheduling MILP with on/startup/
shutdown binaries and dispatch continuous variables per unit and step;
``count_profile`` predicts the model dimensions in closed form.

Scheduling divisions map to the study horizons: D1 = 18 steps, D2 = 48,
D3 = 42, so counts scale exactly by 48/18 and 42/18 between divisions.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .bnb import MilpProblem
from .model import GeneralLp, Row

DIVISION_STEPS = {"D1": 18, "D2": 48, "D3": 42}


@dataclass(frozen=True)
class UcConfig:
    n_units: int
    horizon_steps: int | None = None
    division: str | None = None
    demand_base: float = 500.0
    demand_amplitude: float = 0.2
    reserve_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_units < 1:
            raise ValueError("n_units must be >= 1")
        if (self.horizon_steps is None) == (self.division is None):
            raise ValueError("give exactly one of horizon_steps or division")
        if self.division is not None and self.division not in DIVISION_STEPS:
            raise ValueError(f"division must be one of {sorted(DIVISION_STEPS)}")
        if self.horizon_steps is not None and self.horizon_steps < 1:
            raise ValueError("horizon_steps must be >= 1")
        if not (0.0 <= self.demand_amplitude <= 1.0):
            raise ValueError("demand_amplitude must lie in [0, 1]")
        if not (0.0 <= self.reserve_fraction <= 1.0):
            raise ValueError("reserve_fraction must lie in [0, 1]")

    @property
    def horizon(self) -> int:
        if self.horizon_steps is not None:
            return self.horizon_steps
        return DIVISION_STEPS[self.division]


@dataclass(frozen=True)
class UcUnit:
    p_min: float
    p_max: float
    ramp_up: float
    ramp_down: float
    min_up: int
    min_down: int
    cost_marginal: float
    cost_noload: float
    cost_startup: float


@dataclass(frozen=True)
class UcInstance:
    units: tuple[UcUnit, ...]
    demand: tuple[float, ...]
    reserve_fraction: float
    seed: int
    config: UcConfig

    def to_json(self) -> str:
        payload = {
            "units": [asdict(u) for u in self.units],
            "demand": list(self.demand),
            "reserve_fraction": self.reserve_fraction,
            "seed": self.seed,
            "config": asdict(self.config),
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "UcInstance":
        payload = json.loads(text)
        return UcInstance(
            units=tuple(UcUnit(**u) for u in payload["units"]),
            demand=tuple(payload["demand"]),
            reserve_fraction=payload["reserve_fraction"],
            seed=payload["seed"],
            config=UcConfig(**payload["config"]),
        )


def generate_instance(cfg: UcConfig) -> UcInstance:
    """Draw seeded unit parameters and a sinusoidal demand profile.

    The demand base is capped so the fleet can cover peak demand plus reserve
    with headroom, and so step-to-step demand swings stay within the fleet's
    aggregate ramp capability; every generated instance therefore has a
    feasible LP relaxation.  Identical configs give identical instances.
    """
    rng = np.random.default_rng(cfg.seed)
    horizon = cfg.horizon
    units = []
    for _ in range(cfg.n_units):
        p_max = float(rng.uniform(50.0, 500.0))
        units.append(UcUnit(
            p_min=float(rng.uniform(0.2, 0.5) * p_max),
            p_max=p_max,
            ramp_up=float(rng.uniform(0.2, 0.6) * p_max),
            ramp_down=float(rng.uniform(0.2, 0.6) * p_max),
            min_up=int(rng.integers(1, 4)),
            min_down=int(rng.integers(1, 4)),
            cost_marginal=float(rng.uniform(10.0, 50.0)),
            cost_noload=float(rng.uniform(100.0, 500.0)),
            cost_startup=float(rng.uniform(500.0, 5000.0)),
        ))

    total_pmax = sum(u.p_max for u in units)
    cap = 0.7 * total_pmax / ((1.0 + cfg.reserve_fraction) * (1.0 + cfg.demand_amplitude))
    shape = np.sin(2.0 * np.pi * np.arange(1, horizon + 1) / horizon)
    if cfg.demand_amplitude > 0.0 and horizon > 1:
        swing = float(np.max(np.abs(np.diff(shape)))) * cfg.demand_amplitude
        if swing > 0.0:
            total_ramp = min(sum(u.ramp_up for u in units), sum(u.ramp_down for u in units))
            cap = min(cap, 0.8 * total_ramp / swing)
    # Floor: with demand at or above the fleet's total minimum output, the
    # commit-everything schedule is feasible, so the MILP (not just its LP
    # relaxation) has a solution.  The cap wins if the two ever conflict.
    floor = sum(u.p_min for u in units) / max(1.0 - cfg.demand_amplitude, 1e-9)
    base = min(max(cfg.demand_base, floor), cap)
    demand = tuple(float(base * (1.0 + cfg.demand_amplitude * s)) for s in shape)
    return UcInstance(tuple(units), demand, cfg.reserve_fraction, cfg.seed, cfg)


# Variable layout inside the MILP, unit-major and time-minor: the block for
# unit g, step t (t = 1..T) starts at 4 * (g * T + t - 1) and holds
# [u on-state, v startup, w shutdown, p dispatch] in that order.

U_ON, V_START, W_STOP, P_OUT = 0, 1, 2, 3


def var_index(unit: int, t: int, horizon: int, which: int) -> int:
    return 4 * (unit * horizon + (t - 1)) + which


def to_milp(inst: UcInstance) -> MilpProblem:
    """Encode the instance as a MILP with binary commitment decisions.

    Constraints per unit and step: on/startup/shutdown logic (units start
    off), minimum up and down windows, dispatch capacity tied to the on
    state, and ramping with a startup allowance.  Per step: demand balance
    (equality) and a spinning-reserve floor on committed capacity.
    """
    horizon = len(inst.demand)
    n_units = len(inst.units)
    n = 4 * n_units * horizon
    costs = np.zeros(n)
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    binary = np.zeros(n, dtype=bool)

    for g, unit in enumerate(inst.units):
        for t in range(1, horizon + 1):
            iu = var_index(g, t, horizon, U_ON)
            iv = var_index(g, t, horizon, V_START)
            iw = var_index(g, t, horizon, W_STOP)
            ip = var_index(g, t, horizon, P_OUT)
            for k in (iu, iv, iw):
                binary[k] = True
                upper[k] = 1.0
            costs[iu] = unit.cost_noload
            costs[iv] = unit.cost_startup
            costs[ip] = unit.cost_marginal

    rows: list[Row] = []

    def add(cols, vals, rel, rhs):
        rows.append(Row(np.array(cols, dtype=np.int64),
                        np.array(vals, dtype=np.float64), rel, float(rhs)))

    for g, unit in enumerate(inst.units):
        for t in range(1, horizon + 1):
            iu = var_index(g, t, horizon, U_ON)
            iv = var_index(g, t, horizon, V_START)
            iw = var_index(g, t, horizon, W_STOP)
            ip = var_index(g, t, horizon, P_OUT)

            # Logic: u_t - u_{t-1} = v_t - w_t with u_0 = 0.
            if t == 1:
                add([iu, iv, iw], [1.0, -1.0, 1.0], "=", 0.0)
            else:
                iu_prev = var_index(g, t - 1, horizon, U_ON)
                add([iu, iu_prev, iv, iw], [1.0, -1.0, -1.0, 1.0], "=", 0.0)

            # Minimum up: startups within the trailing window keep the unit on.
            window = [var_index(g, s, horizon, V_START)
                      for s in range(max(1, t - unit.min_up + 1), t + 1)]
            add(window + [iu], [1.0] * len(window) + [-1.0], "<=", 0.0)

            # Minimum down: shutdowns within the window keep it off.
            window = [var_index(g, s, horizon, W_STOP)
                      for s in range(max(1, t - unit.min_down + 1), t + 1)]
            add(window + [iu], [1.0] * len(window) + [1.0], "<=", 1.0)

            # Capacity: p_min u <= p <= p_max u.
            add([ip, iu], [-1.0, unit.p_min], "<=", 0.0)
            add([ip, iu], [1.0, -unit.p_max], "<=", 0.0)

            # Ramping with a startup allowance on the way up (p_0 = 0).
            if t == 1:
                add([ip, iv], [1.0, -unit.p_max], "<=", unit.ramp_up)
                add([ip], [-1.0], "<=", unit.ramp_down)
            else:
                ip_prev = var_index(g, t - 1, horizon, P_OUT)
                add([ip, ip_prev, iv], [1.0, -1.0, -unit.p_max], "<=", unit.ramp_up)
                add([ip_prev, ip], [1.0, -1.0], "<=", unit.ramp_down)

    for t in range(1, horizon + 1):
        p_cols = [var_index(g, t, horizon, P_OUT) for g in range(n_units)]
        add(p_cols, [1.0] * n_units, "=", inst.demand[t - 1])
        u_cols = [var_index(g, t, horizon, U_ON) for g in range(n_units)]
        caps = [inst.units[g].p_max for g in range(n_units)]
        add(u_cols, caps, ">=", inst.demand[t - 1] * (1.0 + inst.reserve_fraction))

    base = GeneralLp("min", costs, 0.0, rows, lower, upper, binary)
    return MilpProblem(base=base, binary_set=[int(j) for j in np.flatnonzero(binary)])


def count_profile(cfg: UcConfig) -> tuple[int, int, int]:
    """(binaries, continuous, constraints) without building the model.

    Per unit-step: 3 binaries, 1 continuous, 7 constraints (logic, min-up,
    min-down, two capacity sides, two ramp sides); per step: demand balance
    plus reserve.  Must match the built model exactly.
    """
    ut = cfg.n_units * cfg.horizon
    return 3 * ut, ut, 7 * ut + 2 * cfg.horizon
