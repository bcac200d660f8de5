"""Tests for scenario loading, the engagement runner, and the accuracy study."""

import json
import textwrap

import numpy as np
import pytest

from quadcone import (
    MorphSpec,
    load_scenario,
    monte_carlo_accuracy,
    run_scenario,
    write_summary_json,
    write_telemetry_csv,
)
from quadcone.errors import CollisionOccurred, ConfigInvalid

AGENT = """\
agent:
  name: A
  position: [0.0, 0.0, 0.0]
  speed: 6.0
  azimuth_deg: 0.0
  elevation_deg: 0.0
  shape:
    kind: ellipsoid
    semi_axes: [2.0, 2.0, 2.0]
"""

FAR_SPHERE = """\
obstacles:
  - name: S
    position: [50.0, 200.0, 0.0]
    speed: 0.0
    shape:
      kind: ellipsoid
      semi_axes: [3.0, 3.0, 3.0]
"""

HEAD_ON = """\
obstacles:
  - name: B1
    position: [30.0, 0.3, 0.0]
    speed: 6.0
    azimuth_deg: 180.0
    shape:
      kind: ellipsoid
      semi_axes: [2.0, 2.0, 2.0]
"""


def _scenario_file(tmp_path, body, name="case", duration=2.0,
                   guidance="{K: 2.0, w: 0.1, accel_limit: 30.0}",
                   extra=""):
    text = (f"name: {name}\nduration: {duration}\ndt: 0.01\nseed: 11\n"
            f"guidance: {guidance}\n{extra}{AGENT}{body}")
    path = tmp_path / f"{name}.yaml"
    path.write_text(text)
    return path


def _col(result, column):
    index = result.telemetry.columns.index(column)
    return [row[index] for row in result.telemetry.rows]


class TestLoadScenario:
    def test_overrides_beat_file_beat_defaults(self, tmp_path):
        path = _scenario_file(tmp_path, FAR_SPHERE,
                              guidance="{K: 3.0, w: 0.2}")
        scn = load_scenario(path, overrides={"K": 5.0, "planes": 12,
                                             "dt": None})
        assert scn.guidance.k_gain == 5.0      # override wins
        assert scn.guidance.w_ref == 0.2       # file wins
        assert scn.guidance.mu == 1.0          # default survives
        assert scn.planes == 12
        assert scn.dt == 0.01                  # None override is ignored

    def test_missing_file_reports_config_error(self, tmp_path):
        with pytest.raises(ConfigInvalid):
            load_scenario(tmp_path / "nope.yaml")

    @pytest.mark.parametrize("mangle", [
        lambda s: s.replace("kind: ellipsoid", "kind: torus"),
        lambda s: s.replace("agent:", "agent_gone:"),
        lambda s: s.replace("dt: 0.01", "dt: -1"),
        lambda s: s.replace("duration: 2.0", "duration: 0"),
        lambda s: s.replace("guidance: {K: 2.0, w: 0.1, accel_limit: 30.0}",
                            "guidance: {K: 2.0, plane_rule: sideways}"),
        lambda s: s.replace("semi_axes: [2.0, 2.0, 2.0]",
                            "semi_axes: [2.0, 2.0]", 1),
    ])
    def test_rejects_malformed_files(self, tmp_path, mangle):
        good = _scenario_file(tmp_path, FAR_SPHERE).read_text()
        bad = tmp_path / "bad.yaml"
        bad.write_text(mangle(good))
        with pytest.raises(ConfigInvalid):
            load_scenario(bad)

    def test_rejects_decreasing_activations(self, tmp_path):
        body = textwrap.dedent("""\
        obstacles:
          - name: P
            position: [50.0, 200.0, 0.0]
            activation: 3.0
            shape: {kind: ellipsoid, semi_axes: [3.0, 3.0, 3.0]}
          - name: Q
            position: [90.0, 200.0, 0.0]
            activation: 1.0
            shape: {kind: ellipsoid, semi_axes: [3.0, 3.0, 3.0]}
        """)
        with pytest.raises(ConfigInvalid):
            load_scenario(_scenario_file(tmp_path, body))

    def test_biconcave_requires_delimiter(self, tmp_path):
        body = textwrap.dedent("""\
        obstacles:
          - name: P
            position: [50.0, 200.0, 0.0]
            shape: {kind: biconcave, semi_axes: [5.0, 5.0, 4.0]}
        """)
        with pytest.raises(ConfigInvalid):
            load_scenario(_scenario_file(tmp_path, body))

    def test_pointcloud_resolves_next_to_scenario(self, tmp_path):
        rng = np.random.default_rng(0)
        pts = rng.normal(scale=2.0, size=(40, 3))
        lines = ["x,y,z"] + [",".join(f"{v:.4f}" for v in p) for p in pts]
        (tmp_path / "cloud.csv").write_text("\n".join(lines) + "\n")
        body = textwrap.dedent("""\
        obstacles:
          - name: P
            position: [50.0, 200.0, 0.0]
            shape: {kind: pointcloud, path: cloud.csv}
        """)
        scn = load_scenario(_scenario_file(tmp_path, body))
        assert scn.obstacles[0].shape.cloud.shape == (40, 3)

    def test_shipped_scenario_files_load(self):
        sim1 = load_scenario("scenarios/sim1.yaml")
        coop = load_scenario("scenarios/cooperative.yaml")
        assert [o.name for o in sim1.obstacles] == ["B", "C", "D", "E"]
        assert sim1.mode == "noncooperative"
        assert coop.mode == "cooperative"
        assert len(coop.obstacles) == 2


class TestRunScenario:
    def test_far_obstacle_never_disturbs_flight(self, tmp_path):
        scn = load_scenario(_scenario_file(tmp_path, FAR_SPHERE))
        res = run_scenario(scn)
        assert set(_col(res, "engaged")) == {0}
        assert all(a == 0.0 for a in _col(res, "accel_a") if a == a)
        assert set(_col(res, "vel_a_x")) == {6.0}
        assert set(_col(res, "vel_a_y")) == {0.0}
        final_x = _col(res, "pos_a_x")[-1]
        assert final_x == pytest.approx(6.0 * (scn.duration - scn.dt),
                                        abs=1e-9)
        assert not res.collision

    def test_identical_runs_are_identical(self, tmp_path):
        path = _scenario_file(tmp_path, HEAD_ON, duration=3.0)
        first = run_scenario(load_scenario(path))
        second = run_scenario(load_scenario(path))
        assert json.dumps(first.telemetry.rows) == \
            json.dumps(second.telemetry.rows)
        assert first.summary == second.summary

    def test_head_on_dodge_clears_and_ends_early(self, tmp_path):
        scn = load_scenario(_scenario_file(tmp_path, HEAD_ON, duration=15.0))
        res = run_scenario(scn)
        status = res.summary["obstacles"][0]
        assert status["engaged_at"] == 0.0
        assert status["cleared_at"] is not None
        assert status["min_separation"] > 0.0
        assert res.summary["verdict"] == "cleared: 1/1"
        # a real dodge was flown, and the run stopped soon after clearance
        accels = [a for a in _col(res, "accel_a") if a == a]
        assert any(a != 0.0 for a in accels)
        assert res.summary["end_time"] == pytest.approx(
            status["cleared_at"] + 1.0, abs=scn.dt)

    def test_uncleared_obstacle_blocks_the_queue(self, tmp_path):
        # A overtakes a slow leader with barely any steering authority, so
        # the run ends mid-engagement and the later obstacle must never
        # become active.
        body = textwrap.dedent("""\
        obstacles:
          - name: B1
            position: [20.0, 0.3, 0.0]
            speed: 2.0
            azimuth_deg: 0.0
            shape:
              kind: ellipsoid
              semi_axes: [2.0, 2.0, 2.0]
          - name: B2
            position: [60.0, -5.0, 0.0]
            speed: 0.0
            activation: 1.0
            shape:
              kind: ellipsoid
              semi_axes: [2.0, 2.0, 2.0]
        """)
        scn = load_scenario(_scenario_file(
            tmp_path, body, duration=2.0,
            guidance="{K: 2.0, w: 0.3, accel_limit: 1.0}"))
        res = run_scenario(scn)
        names = [n for n in _col(res, "obstacle") if n]
        assert set(names) == {"B1"}
        first, second = res.summary["obstacles"]
        assert first["engaged_at"] is not None
        assert first["cleared_at"] is None
        assert second["engaged_at"] is None
        assert res.summary["end_time"] == pytest.approx(2.0)
        assert res.summary["verdict"] == "cleared: 0/2"

    def test_contact_raises_and_carries_the_record(self, tmp_path):
        path = _scenario_file(
            tmp_path, HEAD_ON, duration=6.0,
            guidance="{K: 2.0, w: 0.05, accel_limit: 1.0e-9}")
        with pytest.raises(CollisionOccurred) as excinfo:
            run_scenario(load_scenario(path))
        res = excinfo.value.result
        assert res.collision
        assert res.summary["collision"] is True
        assert res.summary["verdict"] == "cleared: 0/1"
        assert res.telemetry.rows[-1][
            res.telemetry.columns.index("surface_sep")] <= 0.0

    def test_cooperative_run_shares_the_load(self, tmp_path):
        path = _scenario_file(
            tmp_path, HEAD_ON, duration=5.0, extra="mode: cooperative\n",
            guidance="{K: 2.0, w: 0.15, mu: 1.0, accel_limit: 3.0}")
        res = run_scenario(load_scenario(path))
        acc_a = _col(res, "accel_a")
        acc_b = _col(res, "accel_b")
        driven = [(a, b) for a, b in zip(acc_a, acc_b)
                  if a == a and a != 0.0]
        assert driven
        for a, b in driven:
            assert b == pytest.approx(1.0 * a, abs=1e-12)
        assert res.summary["obstacles"][0]["cleared_at"] is not None
        assert not res.collision

    def test_telemetry_files_round_trip(self, tmp_path):
        scn = load_scenario(_scenario_file(tmp_path, FAR_SPHERE))
        res = run_scenario(scn)
        csv_path = tmp_path / "telemetry.csv"
        json_path = tmp_path / "summary.json"
        write_telemetry_csv(res.telemetry, csv_path)
        write_summary_json(res.summary, json_path)
        lines = csv_path.read_text().splitlines()
        header = [ln for ln in lines if ln.startswith("# ")]
        assert any(ln.startswith("# K=") for ln in header)
        assert any(ln.startswith("# seed=") for ln in header)
        table = [ln for ln in lines if not ln.startswith("# ")]
        assert table[0].split(",")[:4] == ["t", "obstacle", "engaged",
                                           "predicts"]
        assert len(table) == 1 + len(res.telemetry.rows)
        summary = json.loads(json_path.read_text())
        assert summary["verdict"] == res.summary["verdict"]
        assert "summary_schema" in summary


class TestMorphSpec:
    def test_vertex_schedule_interpolates_and_holds(self):
        morph = MorphSpec(vertex_start=7.5, vertex_end=3.0, duration=2.5)
        assert morph.vertex_at(0.0) == 7.5
        assert morph.vertex_at(1.25) == pytest.approx(5.25)
        assert morph.vertex_at(2.5) == 3.0
        assert morph.vertex_at(99.0) == 3.0
        assert MorphSpec(7.5, 3.0, 0.0).vertex_at(0.0) == 3.0


class TestMonteCarloAccuracy:
    def test_table_is_deterministic_and_ordered(self):
        first = monte_carlo_accuracy(trials=3, n_values=(36, 6), seed=5)
        second = monte_carlo_accuracy(trials=3, n_values=(36, 6), seed=5)
        assert first == second
        assert [row.n_planes for row in first.rows] == [6, 36]
        assert all(row.max_error >= row.mean_error >= 0.0
                   for row in first.rows)

    def test_denser_fans_are_more_accurate(self):
        table = monte_carlo_accuracy(trials=6, n_values=(6, 90), seed=2)
        sparse, dense = table.rows
        assert dense.mean_error <= sparse.mean_error
        assert all(row.max_error <= 2.0 / row.n_planes
                   for row in table.rows)

    def test_rejects_bad_study_parameters(self):
        with pytest.raises(ConfigInvalid):
            monte_carlo_accuracy(trials=0, n_values=(6,), seed=0)
        with pytest.raises(ConfigInvalid):
            monte_carlo_accuracy(trials=1, n_values=(), seed=0)
        with pytest.raises(ConfigInvalid):
            monte_carlo_accuracy(trials=1, n_values=(360,), seed=0)
