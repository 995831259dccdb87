import pytest

from ucmilp.cli import main
from ucmilp.harness import Scenario, save_suite
from ucmilp.ucgen import UcConfig


@pytest.fixture()
def suite_file(tmp_path):
    suite = [
        Scenario(name=f"D1-u1-s{k}",
                 uc_config=UcConfig(n_units=1, horizon_steps=2, demand_base=90.0,
                                    demand_amplitude=0.1, seed=k),
                 repetitions=1)
        for k in range(2)
    ]
    path = tmp_path / "suite.json"
    save_suite(suite, path)
    return path


class TestGenerate:
    def test_writes_mps_and_json(self, tmp_path, suite_file, capsys):
        code = main(["generate", "--config", str(suite_file),
                     "--out", str(tmp_path / "inst")])
        assert code == 0
        files = sorted(p.name for p in (tmp_path / "inst").iterdir())
        assert files == ["D1-u1-s0.json", "D1-u1-s0.mps",
                         "D1-u1-s1.json", "D1-u1-s1.mps"]


class TestSolve:
    @pytest.fixture()
    def instance(self, tmp_path, suite_file):
        main(["generate", "--config", str(suite_file), "--out", str(tmp_path / "inst")])
        return tmp_path / "inst" / "D1-u1-s0.mps"

    def test_simplex_engine_optimal_exit_zero(self, instance, capsys):
        code = main(["solve", "--instance", str(instance), "--engine", "simplex"])
        out = capsys.readouterr()
        assert code == 0
        assert "status: optimal" in out.out
        assert "objective:" in out.out
        assert "stage breakdown" in out.err

    def test_pdhg_engine_prints_iteration_log(self, instance, capsys):
        code = main(["solve", "--instance", str(instance), "--engine", "pdhg",
                     "--log-period", "50"])
        out = capsys.readouterr()
        assert code == 0
        assert "iteration log" in out.out
        assert "rel_gap" in out.out

    def test_stdout_byte_identical_across_runs(self, instance, capsys):
        main(["solve", "--instance", str(instance), "--engine", "pdhg"])
        first = capsys.readouterr().out
        main(["solve", "--instance", str(instance), "--engine", "pdhg"])
        second = capsys.readouterr().out
        assert first == second

    def test_infeasible_exit_three(self, tmp_path, capsys):
        bad = """\
NAME          BAD
ROWS
 N  OBJ
 G  R1
 L  R2
COLUMNS
    X0        OBJ       1.0
    X0        R1        1.0
    X0        R2        1.0
RHS
    RHS       R1        5.0
    RHS       R2        1.0
ENDATA
"""
        path = tmp_path / "bad.mps"
        path.write_text(bad)
        code = main(["solve", "--instance", str(path), "--engine", "simplex"])
        assert code == 3

    def test_exit_code_mapping(self):
        from ucmilp.cli import solve_exit_code

        assert solve_exit_code("optimal") == 0
        assert solve_exit_code("node_limit") == 2
        assert solve_exit_code("time_limit") == 2
        assert solve_exit_code("infeasible") == 3


class TestBenchAndReport:
    def test_bench_report_cycle(self, tmp_path, suite_file, capsys):
        out_dir = tmp_path / "bench"
        code = main(["bench", "--suite", str(suite_file), "--out", str(out_dir)])
        assert code == 0
        assert (out_dir / "runs.csv").exists()
        assert (out_dir / "report.json").exists()
        captured = capsys.readouterr()
        assert "executed 4 runs" in captured.out

        code = main(["bench", "--suite", str(suite_file), "--out", str(out_dir)])
        captured = capsys.readouterr()
        assert code == 0
        assert "executed 0 runs (4 resumed" in captured.out

        code = main(["report", "--dir", str(out_dir)])
        captured = capsys.readouterr()
        assert code == 0
        assert "Score distribution" in captured.out
        figures = out_dir / "figures"
        assert sorted(p.name for p in figures.iterdir()) == [
            "runtimes_boxplot.png", "score_distribution.png",
            "stage_breakdown.png",
        ]
