import numpy as np
import pytest

from lp_testkit import brute_force_uc
from ucmilp.bnb import BnbParams, MilpProblem, solve_milp
from ucmilp.model import GeneralLp, canonicalize, presolve
from ucmilp.simplex import simplex_solve
from ucmilp.ucgen import (
    DIVISION_STEPS,
    UcConfig,
    UcInstance,
    count_profile,
    generate_instance,
    to_milp,
)


class TestGenerateInstance:
    def test_identical_configs_identical_instances(self):
        cfg = UcConfig(n_units=3, horizon_steps=6, seed=0)
        a = generate_instance(cfg).to_json()
        b = generate_instance(cfg).to_json()
        assert a == b

    def test_different_seeds_differ(self):
        a = generate_instance(UcConfig(n_units=2, horizon_steps=4, seed=0)).to_json()
        b = generate_instance(UcConfig(n_units=2, horizon_steps=4, seed=1)).to_json()
        assert a != b

    def test_single_unit_single_step(self):
        # Base 150 sits between this unit's floor (its p_min, 94.6) and the
        # cap (0.7 p_max / 1.1, 214.2), so it survives the clamp unchanged.
        inst = generate_instance(
            UcConfig(n_units=1, horizon_steps=1, demand_base=150.0,
                     demand_amplitude=0.0, seed=0)
        )
        assert len(inst.units) == 1
        assert len(inst.demand) == 1
        assert inst.demand[0] == pytest.approx(150.0)

    def test_demand_clamped_into_feasible_band(self):
        unit = generate_instance(
            UcConfig(n_units=1, horizon_steps=1, demand_base=1.0,
                     demand_amplitude=0.0, seed=0)
        ).units[0]
        low = generate_instance(
            UcConfig(n_units=1, horizon_steps=1, demand_base=1.0,
                     demand_amplitude=0.0, seed=0)
        )
        assert low.demand[0] == pytest.approx(unit.p_min)  # floored
        high = generate_instance(
            UcConfig(n_units=1, horizon_steps=1, demand_base=1e9,
                     demand_amplitude=0.0, seed=0)
        )
        cap = 0.7 * unit.p_max / 1.1
        assert high.demand[0] == pytest.approx(cap)  # capped

    def test_demand_cap_guarantees_reserve_headroom(self):
        for seed in range(8):
            inst = generate_instance(
                UcConfig(n_units=2, horizon_steps=6, demand_base=1e6,
                         demand_amplitude=0.3, seed=seed)
            )
            fleet = sum(u.p_max for u in inst.units)
            assert max(inst.demand) * (1.0 + inst.reserve_fraction) <= fleet + 1e-9

    def test_unit_parameter_ranges(self):
        inst = generate_instance(UcConfig(n_units=20, horizon_steps=2, seed=3))
        for u in inst.units:
            assert 50.0 <= u.p_max <= 500.0
            assert 0.2 * u.p_max <= u.p_min <= 0.5 * u.p_max
            assert 0.2 * u.p_max <= u.ramp_up <= 0.6 * u.p_max
            assert u.min_up in (1, 2, 3) and u.min_down in (1, 2, 3)
            assert 10.0 <= u.cost_marginal <= 50.0
            assert 100.0 <= u.cost_noload <= 500.0
            assert 500.0 <= u.cost_startup <= 5000.0

    def test_json_round_trip(self):
        inst = generate_instance(UcConfig(n_units=2, division="D1", seed=4))
        again = UcInstance.from_json(inst.to_json())
        assert again == inst

    def test_lp_relaxation_feasible_across_configs(self):
        for seed in range(6):
            cfg = UcConfig(n_units=1 + seed % 3, horizon_steps=3 + seed,
                           demand_amplitude=0.05 * seed, seed=seed)
            problem = to_milp(generate_instance(cfg))
            std = presolve(canonicalize(problem.base.relaxed()))
            sol = simplex_solve(std)
            assert sol.status == "optimal", f"seed {seed}"


class TestToMilp:
    def test_smallest_case_counts(self):
        cfg = UcConfig(n_units=1, horizon_steps=1, seed=0)
        problem = to_milp(generate_instance(cfg))
        assert int(np.sum(problem.base.is_binary)) == 3
        assert int(np.sum(~problem.base.is_binary)) == 1
        binaries, continuous, constraints = count_profile(cfg)
        assert (binaries, continuous) == (3, 1)
        assert len(problem.base.rows) == constraints

    def test_binary_count_formula(self):
        cfg = UcConfig(n_units=10, division="D1", seed=0)
        assert count_profile(cfg)[0] == 3 * 10 * 18 == 540

    def test_built_counts_match_profile(self):
        for cfg in (
            UcConfig(n_units=2, horizon_steps=4, seed=1),
            UcConfig(n_units=3, division="D1", seed=2),
            UcConfig(n_units=1, horizon_steps=7, seed=3),
        ):
            problem = to_milp(generate_instance(cfg))
            binaries, continuous, constraints = count_profile(cfg)
            assert int(np.sum(problem.base.is_binary)) == binaries
            assert int(np.sum(~problem.base.is_binary)) == continuous
            assert len(problem.base.rows) == constraints
            assert sorted(problem.binary_set) == \
                [int(j) for j in np.flatnonzero(problem.base.is_binary)]

    def test_small_instance_matches_brute_force(self):
        inst = generate_instance(UcConfig(n_units=2, horizon_steps=2, seed=7))
        expected = brute_force_uc(inst)
        sol = solve_milp(to_milp(inst), BnbParams(relaxation_engine="simplex"))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(expected, rel=1e-9)

    def test_optimum_invariant_under_variable_permutation(self):
        inst = generate_instance(UcConfig(n_units=2, horizon_steps=2, seed=9))
        problem = to_milp(inst)
        base = problem.base
        rng = np.random.default_rng(0)
        perm = rng.permutation(base.num_vars)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(base.num_vars)

        from ucmilp.model import Row

        permuted = GeneralLp(
            base.sense, base.costs[perm], base.constant,
            [Row(inv[r.cols].astype(np.int64), r.vals, r.relation, r.rhs)
             for r in base.rows],
            base.lower[perm], base.upper[perm], base.is_binary[perm],
        )
        problem_perm = MilpProblem(
            permuted, [int(j) for j in np.flatnonzero(permuted.is_binary)]
        )
        a = solve_milp(problem, BnbParams(relaxation_engine="simplex"))
        b = solve_milp(problem_perm, BnbParams(relaxation_engine="simplex"))
        assert a.objective == pytest.approx(b.objective, rel=1e-9)


class TestDivisions:
    def test_division_steps(self):
        assert DIVISION_STEPS == {"D1": 18, "D2": 48, "D3": 42}

    def test_division_scaling_exact(self):
        for units in (1, 5, 10):
            d1 = count_profile(UcConfig(n_units=units, division="D1", seed=0))
            d2 = count_profile(UcConfig(n_units=units, division="D2", seed=0))
            d3 = count_profile(UcConfig(n_units=units, division="D3", seed=0))
            assert all(a * 48 == b * 18 for a, b in zip(d1, d2))
            assert all(a * 42 == b * 18 for a, b in zip(d1, d3))

    def test_config_requires_exactly_one_horizon(self):
        with pytest.raises(ValueError):
            UcConfig(n_units=1)
        with pytest.raises(ValueError):
            UcConfig(n_units=1, horizon_steps=4, division="D1")
