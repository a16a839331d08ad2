import json
import subprocess
import sys

import pytest

from hgl import cli


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "hgl.cli", *args],
        capture_output=True, text=True, cwd=cwd,
    )


def read_json(path):
    return json.loads(path.read_text())


class TestExitCodes:
    def test_shoot_success(self, tmp_path):
        code = cli.main(["selfsim", "shoot", "--slope", "-1",
                         "--outdir", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "traj.csv").exists()
        summary = read_json(tmp_path / "summary.json")
        assert summary["termination"] == "ReachedEnd"
        assert (tmp_path / "manifest.json").exists()

    def test_usage_error_is_2(self, tmp_path):
        proc = run_cli("selfsim", "shoot", "--no-such-flag", cwd=tmp_path)
        assert proc.returncode == 2

    def test_divergent_stationary_is_3_with_diagnostics(self, tmp_path):
        code = cli.main(["stationary", "solve", "--lambda", "1e4", "--h", "const",
                         "--bc", "navier", "--nx", "32", "--outdir", str(tmp_path)])
        assert code == 3
        summary = read_json(tmp_path / "summary.json")
        assert summary["failure"] == "DivergenceError"
        assert summary["converged"] is False

    def test_small_data_evolve_decays(self, tmp_path):
        code = cli.main(["evolve", "--ic", "sine:0.01", "--lambda", "0",
                         "--bc", "navier", "--nx", "32", "--dt", "1e-4",
                         "--t-max", "0.1", "--outdir", str(tmp_path)])
        assert code == 0
        assert read_json(tmp_path / "summary.json")["outcome"] == "Decayed"
        header = (tmp_path / "norms.csv").read_text().splitlines()[0]
        assert header == "t,sobolev22"


class TestManifest:
    def test_manifest_fields(self, tmp_path):
        cli.main(["selfsim", "shoot", "--slope", "0.5", "--outdir", str(tmp_path)])
        manifest = read_json(tmp_path / "manifest.json")
        assert manifest["subcommand"] == "selfsim shoot"
        assert manifest["tool_version"]
        assert "traj.csv" in manifest["outputs"]
        assert manifest["parameters"]["slope"] == 0.5
        assert manifest["duration_seconds"] >= 0.0

    def test_exactly_one_manifest_per_run(self, tmp_path):
        cli.main(["radial", "solve", "--lambda", "1", "--nr", "33",
                  "--outdir", str(tmp_path)])
        assert len(list(tmp_path.glob("manifest.json"))) == 1


class TestDeterminism:
    def test_identical_runs_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert cli.main(["selfsim", "shoot", "--slope", "-2.5",
                             "--eta-max", "5", "--outdir", str(out)]) == 0
        assert (a / "traj.csv").read_bytes() == (b / "traj.csv").read_bytes()
        assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()


class TestConfigFile:
    def test_config_supplies_defaults_flags_win(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("slope=-2.0\neta-max=5.0\n")
        out1 = tmp_path / "fromcfg"
        code = cli.main(["--config", str(cfg), "selfsim", "shoot",
                         "--outdir", str(out1)])
        assert code == 0
        assert read_json(out1 / "summary.json")["slope"] == -2.0
        out2 = tmp_path / "flagwins"
        code = cli.main(["--config", str(cfg), "selfsim", "shoot",
                         "--slope", "-3.0", "--outdir", str(out2)])
        assert code == 0
        assert read_json(out2 / "summary.json")["slope"] == -3.0

    def test_missing_config_is_usage_error(self, tmp_path):
        code = cli.main(["--config", str(tmp_path / "nope.cfg"),
                         "selfsim", "shoot", "--slope", "1"])
        assert code == 2


class TestSweep:
    def test_sweep_bundle(self, tmp_path):
        code = cli.main(["selfsim", "sweep", "--slopes=-1,0",
                         "--eta-max", "2.0", "--outdir", str(tmp_path)])
        assert code == 0
        summary = read_json(tmp_path / "summary.json")
        assert summary["tallies"] == {"ReachedEnd": 2}
        assert (tmp_path / "slope_-1.csv").exists()
        assert (tmp_path / "slope_0.csv").exists()


class TestVerify:
    def test_verify_reached_end(self, tmp_path):
        cli.main(["selfsim", "shoot", "--slope", "-1", "--eta-max", "8",
                  "--outdir", str(tmp_path)])
        out = tmp_path / "verify"
        code = cli.main(["selfsim", "verify", "--input",
                         str(tmp_path / "traj.csv"), "--outdir", str(out)])
        assert code == 0
        rep = read_json(out / "verify.json")
        assert rep["max_residual"] < 1.0
        assert rep["cancellation_residual"] > 0.0

    def test_verify_blowup_rejected(self, tmp_path):
        cli.main(["selfsim", "shoot", "--slope", "1", "--outdir", str(tmp_path)])
        out = tmp_path / "verify"
        code = cli.main(["selfsim", "verify", "--input",
                         str(tmp_path / "traj.csv"), "--outdir", str(out)])
        assert code == 3
        assert "ReachedEnd" in read_json(out / "verify.json")["error"]


class TestRadialCli:
    def test_radial_continue_bracket(self, tmp_path):
        code = cli.main(["radial", "continue", "--nr", "33", "--bc", "dirichlet",
                         "--lambda-min", "1", "--lambda-max", "2000",
                         "--n-steps", "10", "--outdir", str(tmp_path)])
        assert code == 0
        summary = read_json(tmp_path / "summary.json")
        br = summary["bracket"]
        assert br["lambda_ok"] is not None and br["lambda_fail"] is not None
        assert br["relative_width"] <= 1e-3
        assert (tmp_path / "continuation.csv").exists()


class TestStationaryCli:
    def test_stationary_continue_table(self, tmp_path):
        code = cli.main(["stationary", "continue", "--bc", "navier", "--nx", "24",
                         "--h", "const", "--lambda-grid", "0.1,1,10,1e4",
                         "--outdir", str(tmp_path)])
        assert code == 0
        table = (tmp_path / "bracket_table.csv").read_text().splitlines()
        assert table[0] == "lambda,converged,residual,norm_w22,iterations"
        assert len(table) == 5
        summary = read_json(tmp_path / "summary.json")
        assert summary["bracket"]["lambda_fail"] == 1e4

    def test_solve_writes_field_and_energy(self, tmp_path):
        code = cli.main(["stationary", "solve", "--lambda", "0.01", "--h", "sine",
                         "--bc", "dirichlet", "--nx", "32", "--method", "descent",
                         "--outdir", str(tmp_path)])
        assert code == 0
        summary = read_json(tmp_path / "summary.json")
        assert summary["converged"] is True
        assert set(summary["energy"]) == {"quadratic", "cubic", "linear", "total"}
        assert (tmp_path / "u.csv").exists()


class TestFigures:
    @pytest.fixture(scope="class")
    @staticmethod
    def bundle(tmp_path_factory):
        outdir = tmp_path_factory.mktemp("fig1")
        code = cli.main(["figures", "fig1", "--outdir", str(outdir)])
        return code, outdir

    def test_four_panels_written(self, bundle):
        code, outdir = bundle
        assert code == 0
        for panel in ("a", "b", "c", "d"):
            summary = read_json(outdir / f"panel_{panel}" / "summary.json")
            for entry in summary["trajectories"]:
                assert entry["termination"] == "ReachedEnd"
                assert (outdir / f"panel_{panel}" / entry["file"]).exists()

    def test_panel_slopes_match_caption(self, bundle):
        _, outdir = bundle
        summary = read_json(outdir / "panel_d" / "summary.json")
        slopes = [e["slope"] for e in summary["trajectories"]]
        assert slopes == [-1e4, -1e5, -8.5e5, -2.4e6]
        colors = [e["color"] for e in summary["trajectories"]]
        assert colors == ["yellow", "red", "green", "blue"]
