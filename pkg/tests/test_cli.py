"""Tests for the command-line front end: verbs, exit codes, file outputs."""

import json

import numpy as np
import pytest

from quadcone.cli import main

QUICK_SCENARIO = """\
name: quick
duration: 15.0
dt: 0.01
seed: 11
guidance: {{K: 2.0, w: 0.1, accel_limit: {limit}}}
agent:
  name: A
  position: [0.0, 0.0, 0.0]
  speed: 6.0
  azimuth_deg: 0.0
  elevation_deg: 0.0
  shape:
    kind: ellipsoid
    semi_axes: [2.0, 2.0, 2.0]
obstacles:
  - name: B1
    position: [30.0, 0.3, 0.0]
    speed: 6.0
    azimuth_deg: 180.0
    shape:
      kind: ellipsoid
      semi_axes: [2.0, 2.0, 2.0]
"""

GEOMETRY = """\
planes: 6
agent:
  position: [0.0, 0.0, 0.0]
  speed: 10.0
  azimuth_deg: 0.0
  shape:
    kind: ellipsoid
    semi_axes: [2.0, 2.0, 2.0]
obstacle:
  position: [20.0, 0.0, 0.0]
  speed: 0.0
  shape:
    kind: ellipsoid
    semi_axes: [3.0, 3.0, 3.0]
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestUsageErrors:
    def test_no_verb_exits_2_with_help_on_stderr(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == 2
        err = capsys.readouterr().err
        assert "usage:" in err
        assert "simulate" in err

    def test_unknown_verb_exits_2(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["explode"])
        assert excinfo.value.code == 2

    def test_missing_positional_exits_2(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["simulate"])
        assert excinfo.value.code == 2
        assert "scenario" in capsys.readouterr().err


class TestValidate:
    def test_good_scenario_prints_ok(self, tmp_path, capsys):
        path = _write(tmp_path, "s.yaml", QUICK_SCENARIO.format(limit=30.0))
        assert main(["validate", path]) == 0
        assert capsys.readouterr().out.strip() == "OK"

    def test_missing_file_exits_1_naming_the_error(self, tmp_path, capsys):
        assert main(["validate", str(tmp_path / "absent.yaml")]) == 1
        assert "ConfigInvalid" in capsys.readouterr().err

    def test_malformed_scenario_exits_1(self, tmp_path, capsys):
        path = _write(tmp_path, "bad.yaml", "name: x\nduration: -3.0\n")
        assert main(["validate", path]) == 1
        assert "ConfigInvalid" in capsys.readouterr().err


class TestCone:
    def test_table_and_verdict(self, tmp_path, capsys):
        path = _write(tmp_path, "g.yaml", GEOMETRY)
        assert main(["cone", path]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "plane,psi,theta_b,y,v_hat_r"
        assert len(lines) == 8  # header + 6 planes + verdict
        assert lines[-1] == "any_collision: true"
        # dead-ahead sphere pair: every plane sees the same aperture
        psis = [float(line.split(",")[1]) for line in lines[1:-1]]
        assert np.ptp(psis) < 1e-9

    def test_planes_flag_overrides_the_file(self, tmp_path, capsys):
        path = _write(tmp_path, "g.yaml", GEOMETRY)
        assert main(["cone", path, "--planes", "9"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 11

    def test_out_writes_the_table_to_a_file(self, tmp_path, capsys):
        geom = _write(tmp_path, "g.yaml", GEOMETRY)
        out = tmp_path / "table.csv"
        assert main(["cone", geom, "--out", str(out)]) == 0
        assert capsys.readouterr().out == ""
        assert out.read_text().startswith("plane,psi")

    def test_geometry_without_obstacle_exits_1(self, tmp_path, capsys):
        path = _write(tmp_path, "g.yaml", "agent: {shape: {kind: ellipsoid, "
                                          "semi_axes: [1.0, 1.0, 1.0]}}\n")
        assert main(["cone", path]) == 1
        assert "ConfigInvalid" in capsys.readouterr().err


class TestTangents:
    CASE = ("a: {center: [0.0, 0.0], semi_axes: [2.0, 1.0]}\n"
            "b: {center: [7.0, 1.0], semi_axes: [1.5, 0.8], "
            "rotation_deg: 63.0}\n")

    def test_lines_pass_through_their_touch_points(self, tmp_path, capsys):
        path = _write(tmp_path, "c.yaml", self.CASE)
        assert main(["tangents", path]) == 0
        payload = json.loads(capsys.readouterr().out)
        lines = np.asarray(payload["lines"])
        touch_a = np.asarray(payload["touch_a"])
        touch_b = np.asarray(payload["touch_b"])
        assert lines.shape == (2, 3)
        for line, ta, tb in zip(lines, touch_a, touch_b):
            assert abs(line @ np.append(ta, 1.0)) < 1e-7
            assert abs(line @ np.append(tb, 1.0)) < 1e-7

    def test_cloud_case_runs(self, tmp_path, capsys):
        case = ("a: {center: [0.0, 0.0], semi_axes: [2.0, 1.0]}\n"
                "b: {cloud: [[6.0, 0.0], [7.0, 1.0], [8.0, -0.5], "
                "[7.5, 0.5]]}\n")
        path = _write(tmp_path, "c.yaml", case)
        assert main(["tangents", path]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert np.asarray(payload["lines"]).shape == (2, 3)

    def test_overlapping_pair_exits_1_naming_the_error(self, tmp_path,
                                                       capsys):
        case = ("a: {center: [0.0, 0.0], semi_axes: [2.0, 1.0]}\n"
                "b: {center: [1.0, 0.0], semi_axes: [1.5, 0.8]}\n")
        path = _write(tmp_path, "c.yaml", case)
        assert main(["tangents", path]) == 1
        assert "NoRealIntersection" in capsys.readouterr().err


class TestMontecarlo:
    ARGS = ["montecarlo", "--trials", "2", "--planes-list", "6,12",
            "--seed", "3"]

    def test_errors_sit_under_the_bound(self, capsys):
        assert main(self.ARGS) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "n_planes,mean_err,max_err,bound"
        assert len(lines) == 3
        for line in lines[1:]:
            n, mean_err, max_err, bound = line.split(",")
            assert float(bound) == pytest.approx(2.0 / int(n))
            assert float(max_err) < 2.0 / int(n)
            assert 0.0 <= float(mean_err) <= float(max_err)

    def test_same_seed_same_table(self, capsys):
        assert main(self.ARGS) == 0
        first = capsys.readouterr().out
        assert main(self.ARGS) == 0
        assert capsys.readouterr().out == first

    def test_bad_planes_list_exits_1(self, capsys):
        assert main(["montecarlo", "--trials", "1",
                     "--planes-list", "6,twelve"]) == 1
        assert "ConfigInvalid" in capsys.readouterr().err


class TestSimulate:
    def test_writes_both_files_and_prints_the_verdict(self, tmp_path,
                                                      capsys):
        scenario = _write(tmp_path, "s.yaml",
                          QUICK_SCENARIO.format(limit=30.0))
        out = tmp_path / "run"
        assert main(["simulate", scenario, "--out", str(out)]) == 0
        assert capsys.readouterr().out.strip() == "cleared: 1/1"
        summary = json.loads((out / "summary.json").read_text())
        assert summary["verdict"] == "cleared: 1/1"
        assert (out / "telemetry.csv").exists()

    def test_flags_beat_the_file_and_are_echoed(self, tmp_path, capsys):
        scenario = _write(tmp_path, "s.yaml",
                          QUICK_SCENARIO.format(limit=30.0))
        out = tmp_path / "run"
        assert main(["simulate", scenario, "--out", str(out),
                     "--planes", "24", "--w", "0.2", "--seed", "5"]) == 0
        capsys.readouterr()
        header = {}
        for line in (out / "telemetry.csv").read_text().splitlines():
            if not line.startswith("# "):
                break
            key, _, value = line[2:].partition("=")
            header[key] = value
        assert header["planes"] == "24"
        assert header["w"] == "0.2"
        assert header["seed"] == "5"
        assert header["K"] == "2.0"  # untouched file value survives
        assert header["dt"] == "0.01"

    def test_identical_invocations_write_identical_telemetry(self, tmp_path,
                                                             capsys):
        scenario = _write(tmp_path, "s.yaml",
                          QUICK_SCENARIO.format(limit=30.0))
        assert main(["simulate", scenario,
                     "--out", str(tmp_path / "one")]) == 0
        assert main(["simulate", scenario,
                     "--out", str(tmp_path / "two")]) == 0
        capsys.readouterr()
        assert (tmp_path / "one" / "telemetry.csv").read_bytes() == \
            (tmp_path / "two" / "telemetry.csv").read_bytes()

    def test_contact_exits_1_but_keeps_the_record(self, tmp_path, capsys):
        scenario = _write(tmp_path, "s.yaml",
                          QUICK_SCENARIO.format(limit=1.0e-9))
        out = tmp_path / "run"
        assert main(["simulate", scenario, "--out", str(out)]) == 1
        assert "CollisionOccurred" in capsys.readouterr().err
        summary = json.loads((out / "summary.json").read_text())
        assert summary["collision"] is True
        assert summary["verdict"] == "cleared: 0/1"
        assert (out / "telemetry.csv").exists()
