import csv

import pytest

from aucmdp.cli import main
from aucmdp.harness import CSV_COLUMNS

TINY_CONFIG = """
N = 2
M = 2
D = 1
pathway_length = 1
tau = 5
method = fcfs
trials = 2
seed = 3
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(TINY_CONFIG)
    return str(path)


class TestSimulate:
    def test_writes_results_csv(self, config_path, tmp_path, capsys):
        out = tmp_path / "results.csv"
        assert main(["simulate", "--config", config_path, "--out", str(out)]) == 0
        with open(out) as f:
            rows = list(csv.reader(f))
        assert rows[0] == list(CSV_COLUMNS)
        assert len(rows) == 3
        assert "fcfs" in capsys.readouterr().out

    def test_method_override(self, config_path, tmp_path):
        out = tmp_path / "results.csv"
        assert main(
            ["simulate", "--config", config_path, "--method", "sickest", "--out", str(out)]
        ) == 0
        with open(out) as f:
            methods = {row["method"] for row in csv.DictReader(f)}
        assert methods == {"sickest"}

    def test_all_methods_with_uct_budget(self, config_path, tmp_path):
        out = tmp_path / "results.csv"
        code = main(
            [
                "simulate", "--config", config_path, "--all-methods",
                "--uct-iterations", "50", "--out", str(out),
            ]
        )
        assert code == 0
        with open(out) as f:
            methods = {row["method"] for row in csv.DictReader(f)}
        assert len(methods) == 6

    def test_missing_config_is_config_error(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "absent.cfg")]) == 2

    def test_malformed_config_is_config_error(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("N = 2\nM = 2\nward = 7\n")
        assert main(["simulate", "--config", str(path)]) == 2


class TestSweepCommand:
    def test_sweep_outputs_rows(self, config_path, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        code = main(
            [
                "sweep", "--config", config_path, "--axis", "agents",
                "--values", "2,3", "--out", str(out),
            ]
        )
        assert code == 0
        assert "agents=2" in capsys.readouterr().out
        assert out.exists()

    def test_bad_values(self, config_path):
        assert main(["sweep", "--config", config_path, "--axis", "agents", "--values", "x"]) == 2
        assert main(["sweep", "--config", config_path, "--axis", "agents", "--values", ","]) == 2

    def test_bad_method_list(self, config_path):
        code = main(
            [
                "sweep", "--config", config_path, "--axis", "agents",
                "--values", "2", "--methods", "fcfs,mystery",
            ]
        )
        assert code == 2


class TestAuctionCommand:
    def test_prints_assignment_and_welfare(self, tmp_path, capsys):
        matrix = tmp_path / "m.csv"
        matrix.write_text("agent,resource,bid\n0,0,5\n1,0,3\n1,1,2\n")
        assert main(["auction", "--matrix", str(matrix), "--method", "iter"]) == 0
        out = capsys.readouterr().out
        assert "agent 0 <- resource 0" in out
        assert "welfare 7" in out

    def test_bad_matrix_is_config_error(self, tmp_path):
        matrix = tmp_path / "m.csv"
        matrix.write_text("foo,bar\n1,2\n")
        assert main(["auction", "--matrix", str(matrix), "--method", "optimal"]) == 2


class TestJointDpCommand:
    def test_tiny_instance(self, config_path, capsys):
        assert main(["joint-dp", "--config", config_path]) == 0
        out = capsys.readouterr().out
        assert "optimal value at the initial state" in out

    def test_size_cap_exit_code(self, tmp_path):
        path = tmp_path / "big.cfg"
        path.write_text("N = 8\nM = 4\nD = 2\npathway_length = 4\ntau = 10\n")
        assert main(["joint-dp", "--config", str(path), "--cap", "1000"]) == 3
