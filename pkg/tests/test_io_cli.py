import json
import subprocess
import sys

import numpy as np
import pytest

from hhlab import (
    State,
    SystemParams,
    exact_model,
    integrate,
    io,
    model_diff,
    poincare_section,
    reconstruct,
    solve_momentum_on_shell,
)


def run_cli(args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "hhlab.cli", *args],
        capture_output=True, text=True, cwd=cwd,
    )


@pytest.fixture(scope="module")
def short_traj():
    p = SystemParams(n=3)
    ic = State(0.0, 0.0, 0.15, solve_momentum_on_shell(p, 0.125, 0.0, 0.15, 0.0), 0.0)
    return integrate(p, ic, 2.0, 1e-3)


class TestTrajectoryIO:
    def test_round_trip(self, short_traj, tmp_path):
        path = tmp_path / "traj.csv"
        io.write_trajectory(path, short_traj)
        back = io.read_trajectory(path)
        np.testing.assert_array_equal(back.data, short_traj.data)
        assert back.dt == short_traj.dt
        assert back.params == short_traj.params
        assert back.energy == short_traj.energy

    def test_format(self, short_traj, tmp_path):
        path = tmp_path / "traj.csv"
        io.write_trajectory(path, short_traj)
        raw = path.read_bytes()
        assert b"\r" not in raw
        text = raw.decode("utf-8")
        lines = text.splitlines()
        assert lines[0] == "t,x,y,px,py"
        assert len(lines) == len(short_traj) + 1
        meta = json.loads((tmp_path / "traj.csv.meta.json").read_text())
        assert meta["N"] == 3
        assert meta["dt"] == 1e-3

    def test_write_is_deterministic(self, short_traj, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        io.write_trajectory(a, short_traj)
        io.write_trajectory(b, short_traj)
        assert a.read_bytes() == b.read_bytes()


class TestSectionIO:
    def test_columns_and_groups(self, tmp_path):
        p = SystemParams(n=3)
        ics = [
            State(0.0, 0.0, y, solve_momentum_on_shell(p, 0.125, 0.0, y, 0.0), 0.0)
            for y in (0.1, 0.15)
        ]
        sections = poincare_section(p, ics, 100.0, 1e-2)
        path = tmp_path / "sections.csv"
        io.write_section_set(path, sections)
        lines = path.read_text().splitlines()
        assert lines[0] == "orbit_id,t,y,py"
        ids = {line.split(",")[0] for line in lines[1:]}
        assert ids == {"0", "1"}


class TestModelIO:
    def test_sparse_model_json(self, short_traj, tmp_path):
        mdl = reconstruct(short_traj, 3)
        path = tmp_path / "model.json"
        io.write_sparse_model(path, mdl)
        payload = json.loads(path.read_text())
        assert payload["K"] == 3
        assert set(payload["columns"]) == {"xdot", "ydot", "pxdot", "pydot"}
        xdot_terms = payload["columns"]["xdot"]
        assert [t["exponents"] for t in xdot_terms] == [[0, 0, 1, 0]]

    def test_model_diff_csv(self, short_traj, tmp_path):
        p = SystemParams(n=3)
        diff = model_diff(reconstruct(short_traj, 3), exact_model(p, 3))
        path = tmp_path / "diff.csv"
        io.write_model_diff(path, diff)
        lines = path.read_text().splitlines()
        assert lines[0] == "equation,monomial,exact,reconstructed,delta_c,flag"
        assert all(line.count(",") == 5 for line in lines[1:])


class TestCLI:
    def test_simulate_outputs_and_manifest(self, tmp_path):
        out = tmp_path / "run"
        res = run_cli(
            [
                "simulate", "--n", "3", "--ic", "0,-0.21341508,0.17656123,0",
                "--t-end", "5", "--dt", "1e-3", "--out", str(out), "--no-plot",
            ]
        )
        assert res.returncode == 0, res.stderr
        assert (out / "trajectory.csv").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["n"] == 3
        assert "trajectory.csv" in manifest["outputs"]
        assert "version" in manifest and "timestamp" in manifest

    def test_plot_rendering(self, tmp_path):
        out = tmp_path / "run"
        res = run_cli(
            [
                "simulate", "--n", "3", "--ic", "0,0.1,0.3,0",
                "--t-end", "5", "--dt", "1e-3", "--out", str(out),
            ]
        )
        assert res.returncode == 0, res.stderr
        png = out / "trajectory.png"
        assert png.exists()
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_validation_error_exit_code(self, tmp_path):
        res = run_cli(["simulate", "--n", "3", "--out", str(tmp_path / "x")])
        assert res.returncode == 2
        assert res.stderr.startswith("error: validation:")

    def test_conflicting_energy_flags(self, tmp_path):
        res = run_cli(
            [
                "simulate", "--n", "3", "--ic", "0,0.1,0.3,0", "--energy",
                "0.1", "--energy-frac", "0.5", "--out", str(tmp_path / "x"),
            ]
        )
        assert res.returncode == 2

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {
                    "n": 3, "ic": "0,-0.21341508,0.17656123,0",
                    "t_end": 5.0, "dt": 1e-3, "plot": False,
                }
            )
        )
        out = tmp_path / "run"
        res = run_cli(
            ["simulate", "--config", str(cfg), "--t-end", "2", "--out", str(out)]
        )
        assert res.returncode == 0, res.stderr
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["t_end"] == 2.0  # flag wins
        assert manifest["config"]["dt"] == 1e-3    # config survives

    def test_random_grid_requires_seed(self, tmp_path):
        res = run_cli(
            [
                "poincare", "--n", "3", "--energy-frac", "0.75", "--grid",
                "5-random", "--t-end", "50", "--out", str(tmp_path / "x"),
            ]
        )
        assert res.returncode == 2

    def test_warnings_csv_for_escaping_orbit(self, tmp_path):
        out = tmp_path / "run"
        res = run_cli(
            [
                "poincare", "--n", "3", "--ic", "0,1.5,1.0,1.0", "--ic",
                "0,0.15,0.4532,0", "--t-end", "100", "--out", str(out),
                "--no-plot",
            ]
        )
        assert res.returncode == 0, res.stderr
        warnings_csv = out / "warnings.csv"
        assert warnings_csv.exists()
        body = warnings_csv.read_text().splitlines()
        assert body[0] == "task,item,reason"
        assert len(body) >= 2

    def test_ics_catalog_roundtrip(self, tmp_path):
        out = tmp_path / "run"
        res = run_cli(["ics", "--out", str(out)])
        assert res.returncode == 0
        records = json.loads((out / "catalog.json").read_text())
        keys = {r["key"] for r in records}
        assert "n3-periodic-0.25" in keys and "n4-periodic-0.25" in keys
