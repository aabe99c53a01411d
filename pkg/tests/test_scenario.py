"""Scenario parsing, orchestration, CSV emission, and the CLI."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import resilnet as rn
from resilnet import cli

SCEN = Path(rn.__file__).parent / "scenarios"


class TestParsing:
    def test_bundled_academic_full(self):
        sc = rn.parse_scenario(SCEN / "academic_full.scn")
        assert sc.network.name == "academic-full"
        assert sc.network.n_total == 3
        assert sc.loss.losses == ((3, (1,)),)
        assert sc.simulation.dt == pytest.approx(1e-3)
        assert np.array_equal(sc.simulation.X0, [1.0, 1.0, 0.0])
        assert sc.mode == "fully_actuated"

    def test_missing_file(self):
        with pytest.raises(rn.ScenarioError, match="not found"):
            rn.parse_scenario("/no/such/file.scn")

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.scn"
        p.write_text("")
        with pytest.raises(rn.ScenarioError, match="empty"):
            rn.parse_scenario(p)

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "bad.scn"
        p.write_text("subsystems: []\nloss: []\nbogus_key: 1\n")
        with pytest.raises(rn.ScenarioError, match="bogus_key"):
            rn.parse_scenario(p)

    def test_shape_mismatch_names_block(self, tmp_path):
        p = tmp_path / "mismatch.scn"
        p.write_text(
            "subsystems:\n"
            "  - {id: 1, A: [[-1.0, 0.0], [0.0, -1.0]], B: [[1.0], [0.0]],\n"
            "     couplings: {2: [[0.1, 0.2, 0.3], [0.0, 0.1, 0.2]]}}\n"
            "  - {id: 2, A: [[-1.0, 0.0], [0.0, -2.0]], B: [[1.0], [1.0]]}\n"
            "loss:\n"
            "  - {subsystem: 2, actuators: [0]}\n")
        with pytest.raises((rn.ScenarioError, rn.DimensionMismatch),
                           match=r"D\[1,2\]"):
            rn.parse_scenario(p)

    def test_placeholder_rejected(self):
        with pytest.raises(rn.ScenarioError, match="placeholder"):
            rn.parse_scenario(SCEN / "microgrid.scn")

    def test_roundtrip(self):
        sc = rn.parse_scenario(SCEN / "academic_full.scn")
        text = rn.emit_scenario(sc)
        sc2 = rn.scenario_from_dict(__import__("yaml").safe_load(text))
        assert rn.scenario_to_dict(sc) == rn.scenario_to_dict(sc2)


class TestRun:
    def test_deterministic_csvs(self, tmp_path):
        sc = rn.parse_scenario(SCEN / "academic_full.scn")
        sc.simulation.t_end = 1.0
        rn.run(sc, outdir=tmp_path / "a")
        rn.run(sc, outdir=tmp_path / "b")
        for name in ("trajectory.csv", "constants.csv", "report.json"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes(), name

    def test_report_structure(self, tmp_path):
        sc = rn.parse_scenario(SCEN / "academic_full.scn")
        sc.simulation.t_end = 1.0
        rn.run(sc, outdir=tmp_path)
        rep = json.loads((tmp_path / "report.json").read_text())
        assert rep["mode"] == "fully_actuated"
        assert rep["provenance"]["tool"] == "resilnet"
        assert rep["provenance"]["dt"] == pytest.approx(1e-3)
        assert set(rep["verdicts"]) >= {"network_stabilizable",
                                        "malfunctioning_NS"}
        assert rep["constants"]["z_max"] == pytest.approx(1.0)
        # scenario echo includes filled defaults
        assert rep["scenario"]["set_norm"] == "euclidean"

    def test_csv_column_layout(self, tmp_path):
        sc = rn.parse_scenario(SCEN / "academic_under.scn")
        sc.simulation.t_end = 0.5
        rn.run(sc, outdir=tmp_path)
        header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
        assert header == ("t,x_1,x_2,x_3,u_1,u_2,w_1,chi_Pnorm,xN_Pnorm,"
                          "env_chi,env_xN_int,env_xN_closed,K_chi_inf")

    def test_x0_dimension_check(self):
        sc = rn.parse_scenario(SCEN / "academic_full.scn")
        sc.simulation.X0 = np.array([1.0, 2.0])
        with pytest.raises(rn.ScenarioError, match="dimension"):
            rn.run(sc)


class TestCLI:
    def test_report_exit_zero(self, tmp_path):
        rc = cli.main(["report", "--scenario", str(SCEN / "academic_full.scn"),
                       "--out", str(tmp_path), "--t-end", "1.0"])
        assert rc == 0

    def test_fault_injection_exit_two(self, tmp_path):
        rc = cli.main(["report", "--scenario", str(SCEN / "academic_full.scn"),
                       "--out", str(tmp_path), "--t-end", "1.0",
                       "--envelope-scale", "0.5"])
        assert rc == 2

    def test_analyze_strict_exit_three(self, tmp_path):
        rc = cli.main(["analyze", "--scenario", str(SCEN / "academic_full.scn"),
                       "--out", str(tmp_path), "--strict"])
        assert rc == 3

    def test_error_exit_one(self, tmp_path):
        rc = cli.main(["report", "--scenario", "/no/such.scn",
                       "--out", str(tmp_path)])
        assert rc == 1

    def test_bounds_subcommand_skips_simulation(self, tmp_path):
        rc = cli.main(["bounds", "--scenario", str(SCEN / "academic_full.scn"),
                       "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "constants.csv").exists()
        assert not (tmp_path / "trajectory.csv").exists()

    def test_console_script_installed(self):
        out = subprocess.run([sys.executable, "-m", "resilnet.cli", "--help"],
                             capture_output=True, text=True)
        assert out.returncode == 0
        assert "resilnet" in out.stdout
