import json

import numpy as np
import pytest

from genfrac.cli import main


def run(args):
    return main(args)


@pytest.fixture()
def problem_file(tmp_path):
    path = tmp_path / "decay.kv"
    path.write_text("d = 1\nf0 = 1.0\nT = 1.0\nR = 2.0\nrhs = linear\nmatrix = -1.0\n")
    return path


class TestCatalog:
    def test_listing(self, capsys):
        assert run(["catalog"]) == 0
        out = capsys.readouterr().out
        assert "stable" in out and "tempered" in out and "mixture" in out

    def test_describe(self, capsys):
        assert run(["catalog", "--phi", "stable:0.5"]) == 0
        out = capsys.readouterr().out
        assert "beta" in out and "0.5" in out

    def test_unknown_kind_is_usage_error(self):
        assert run(["catalog", "--phi", "gaussian:1.0"]) == 2


class TestKernels:
    def test_writes_outputs(self, tmp_path):
        out = tmp_path / "k"
        assert run(
            ["kernels", "--phi", "stable:0.5", "--T", "1.0", "--N", "64", "--out", str(out)]
        ) == 0
        assert (out / "kernels.csv").exists()
        report = json.loads((out / "kernels_report.json").read_text())
        assert report["beta"] == 0.5
        manifest = json.loads((out / "kernels_manifest.json").read_text())
        assert manifest["command"] == "kernels"
        assert manifest["tool_version"]


class TestEigen:
    def test_series_laplace_agreement(self, tmp_path):
        out = tmp_path / "e"
        assert run(
            [
                "eigen", "--phi", "stable:0.5", "--lambda", "-1", "--T", "1.0",
                "--N", "512", "--method", "all", "--paths", "2000", "--dt", "5e-3",
                "--seed", "3", "--out", str(out),
            ]
        ) == 0
        report = json.loads((out / "eigen_report.json").read_text())
        assert report["max_abs_delta_series_laplace"] <= 1e-3
        # Monte Carlo column agrees within its own coarser allowance
        assert report["max_abs_delta_series_mc"] <= 0.05
        header = (out / "eigen.csv").read_text().splitlines()[0]
        assert header.startswith("t,series,laplace,mc")

    def test_single_method(self, tmp_path):
        out = tmp_path / "e1"
        assert run(
            [
                "eigen", "--phi", "tempered:0.5,1.0", "--lambda", "1", "--T", "1.0",
                "--N", "128", "--method", "laplace", "--out", str(out),
            ]
        ) == 0
        lines = (out / "eigen.csv").read_text().splitlines()
        assert lines[0] == "t,laplace"
        assert len(lines) == 130


class TestSolve:
    def test_constant_problem(self, tmp_path):
        path = tmp_path / "zero.kv"
        path.write_text("d = 1\nf0 = 0.7\nT = 1.0\nR = 1.0\nrhs = zero\n")
        out = tmp_path / "s"
        assert run(
            ["solve", "--phi", "stable:0.5", "--problem", str(path), "--N", "128",
             "--out", str(out)]
        ) == 0
        rows = (out / "solve.csv").read_text().splitlines()[1:]
        values = {float(r.split(",")[1]) for r in rows}
        assert values == {0.7}

    def test_decay_problem_report(self, problem_file, tmp_path):
        out = tmp_path / "s2"
        assert run(
            ["solve", "--phi", "stable:0.5", "--problem", str(problem_file),
             "--N", "256", "--out", str(out)]
        ) == 0
        report = json.loads((out / "solve_report.json").read_text())
        assert report["segments"] >= 1
        assert 0 < report["t_prime"] <= 1.0
        assert report["holder_estimate"] > 0
        assert all(r < 1.0 for seg in report["contraction_ratios"] for r in seg)
        # no silent defaults: the resolved configuration is in the report
        assert report["config"]["tol"] == 1e-10

    def test_missing_problem_file_is_usage_error(self, tmp_path):
        assert run(
            ["solve", "--phi", "stable:0.5", "--problem", str(tmp_path / "nope.kv"),
             "--N", "64", "--out", str(tmp_path)]
        ) == 2


class TestGronwall:
    def test_random_harness(self, tmp_path):
        out = tmp_path / "g"
        assert run(
            ["gronwall", "--phi", "stable:0.5", "--random", "--seeds", "10",
             "--T", "1.0", "--N", "128", "--out", str(out)]
        ) == 0
        verdict = json.loads((out / "gronwall_report.json").read_text())
        assert verdict["ok"] is True
        assert verdict["instances"] == 10

    def test_instance_file_pass(self, tmp_path):
        n = 64
        t = np.linspace(0, 1, n + 1)
        path = tmp_path / "inst.kv"
        path.write_text(
            "t = 1.0\n"
            f"x = {','.join('0.5' for _ in t)}\n"
            f"a = {','.join('1.0' for _ in t)}\n"
            f"g = {','.join('1.0' for _ in t)}\n"
        )
        out = tmp_path / "gi"
        assert run(
            ["gronwall", "--phi", "stable:0.5", "--instance", str(path), "--out", str(out)]
        ) == 0
        assert (out / "gronwall.csv").exists()

    def test_instance_violation_is_numerical_failure(self, tmp_path):
        n = 64
        t = np.linspace(0, 1, n + 1)
        path = tmp_path / "bad.kv"
        path.write_text(
            "t = 1.0\n"
            f"x = {','.join('50.0' for _ in t)}\n"
            f"a = {','.join('1.0' for _ in t)}\n"
            f"g = {','.join('1.0' for _ in t)}\n"
        )
        out = tmp_path / "gb"
        assert run(
            ["gronwall", "--phi", "stable:0.5", "--instance", str(path), "--out", str(out)]
        ) == 1


class TestMc:
    def test_estimate_kinds(self, tmp_path):
        out = tmp_path / "m"
        assert run(
            ["mc", "--phi", "stable:0.5", "--paths", "300", "--dt", "2e-3",
             "--seed", "9", "--estimate", "moments:2,0.5", "--tmax", "0.5",
             "--out", str(out)]
        ) == 0
        lines = (out / "mc.csv").read_text().splitlines()
        assert len(lines) == 4  # header + k = 0, 1, 2

    def test_laplace_estimate(self, tmp_path):
        out = tmp_path / "ml"
        assert run(
            ["mc", "--phi", "tempered:0.5,1.0", "--paths", "200", "--dt", "1e-3",
             "--seed", "9", "--estimate", "laplace:0.5,1.0", "--out", str(out)]
        ) == 0
        lines = (out / "mc.csv").read_text().splitlines()
        assert lines[0] == "quantity,value,std_error,target"

    def test_bad_estimate_kind(self, tmp_path):
        assert run(
            ["mc", "--phi", "stable:0.5", "--paths", "200", "--dt", "1e-3",
             "--estimate", "entropy:1", "--out", str(tmp_path)]
        ) == 2


class TestPhiSources:
    def test_config_file_phi(self, tmp_path):
        cfg = tmp_path / "phi.cfg"
        cfg.write_text("kind = stable\nalpha = 0.5\n")
        out = tmp_path / "k"
        assert run(
            ["kernels", "--phi", f"config:{cfg}", "--T", "1.0", "--N", "32",
             "--out", str(out)]
        ) == 0
        report = json.loads((out / "kernels_report.json").read_text())
        assert report["beta"] == 0.5

    def test_out_env_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GENFRAC_OUT", str(tmp_path / "envout"))
        assert run(["kernels", "--phi", "stable:0.5", "--T", "1.0", "--N", "32"]) == 0
        assert (tmp_path / "envout" / "kernels.csv").exists()


class TestReproducibility:
    def test_eigen_rerun_byte_identical(self, tmp_path):
        args = [
            "eigen", "--phi", "stable:0.5", "--lambda", "1", "--T", "1.0",
            "--N", "64", "--method", "all", "--paths", "500", "--dt", "5e-3",
            "--seed", "21",
        ]
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(args + ["--out", str(a)]) == 0
        assert run(args + ["--out", str(b)]) == 0
        assert (a / "eigen.csv").read_bytes() == (b / "eigen.csv").read_bytes()
        ma = json.loads((a / "eigen_manifest.json").read_text())
        mb = json.loads((b / "eigen_manifest.json").read_text())
        assert ma["config_hash"] == mb["config_hash"]

    def test_solve_rerun_byte_identical(self, problem_file, tmp_path):
        args = ["solve", "--phi", "stable:0.5", "--problem", str(problem_file), "--N", "128"]
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(args + ["--out", str(a)]) == 0
        assert run(args + ["--out", str(b)]) == 0
        assert (a / "solve.csv").read_bytes() == (b / "solve.csv").read_bytes()
