"""Scenario orchestration: multi-obstacle runs and plane-count accuracy study.

A scenario steps one agent through an ordered series of obstacles.  At every
step the cone to the single active obstacle is evaluated, an avoidance plane
is selected, and the inversion law commands lateral acceleration while the
activation gate holds; an obstacle counts as cleared when the gate releases
after having engaged.  Everything observable lands in a telemetry table
(strictly increasing time, full config echo in the header) plus a run
summary.

The Monte-Carlo accuracy study redraws random ellipsoid pairs and compares
polygonal cross-section areas at small plane counts against a dense
reference fan, reporting per-count error statistics.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .cone import cone_3d, cross_section_area
from .errors import (
    BodiesOverlap,
    CollisionOccurred,
    ConfigInvalid,
    NoValidPlane,
    QuadconeError,
    SingularInversion,
)
from .guidance import (
    ActivationGate,
    GuidanceConfig,
    PlaneRule,
    RateTracker,
    coop_accels,
    noncoop_accel,
    select_plane,
)
from .kinematics import (
    ControlInput,
    EngagementState,
    GimbalSingularity,
    accel_direction_3d,
    accel_vector,
    advance_turning,
)
from .shapes import (
    CompositeKind,
    Membership,
    QuadricClass,
    build_quadric,
    composite,
    composite_membership,
    surface_samples,
)

__all__ = [
    "AccuracyRow",
    "AccuracyTable",
    "BodySpec",
    "MorphSpec",
    "RunResult",
    "Scenario",
    "ShapeSpec",
    "Telemetry",
    "load_scenario",
    "monte_carlo_accuracy",
    "run_scenario",
    "write_summary_json",
    "write_telemetry_csv",
]

logger = logging.getLogger(__name__)

TELEMETRY_SCHEMA = 1
SUMMARY_SCHEMA = 1

_SEPARATION_SAMPLES = 800   # surface points per body for distance estimates
_TAIL_SECONDS = 1.0         # recorded settle time after the last clearance
_RAIL_RELEASE = 0.05        # crest rail drops at v_r above this times speed


def _rotation_ypr(yaw_deg: float, pitch_deg: float, roll_deg: float) -> np.ndarray:
    """Rotation matrix for intrinsic yaw (z), pitch (y), roll (x) in degrees."""
    cy, sy = np.cos(np.radians(yaw_deg)), np.sin(np.radians(yaw_deg))
    cp, sp = np.cos(np.radians(pitch_deg)), np.sin(np.radians(pitch_deg))
    cr, sr = np.cos(np.radians(roll_deg)), np.sin(np.radians(roll_deg))
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


# ---------------------------------------------------------------------------
# scenario description


@dataclass(frozen=True)
class MorphSpec:
    """Linear schedule for the delimiter vertex of a shape-changing body.

    The delimiter's vertex distance along its carving axis moves from
    vertex_start to vertex_end over `duration` seconds after the body's
    activation and holds there; a start at or beyond the body's extent
    means it begins effectively convex and grows its concavity.
    """

    vertex_start: float
    vertex_end: float
    duration: float

    def vertex_at(self, elapsed: float) -> float:
        if self.duration <= 0:
            return self.vertex_end
        frac = min(max(elapsed / self.duration, 0.0), 1.0)
        return self.vertex_start + (self.vertex_end - self.vertex_start) * frac


@dataclass(frozen=True)
class _QuadricBlock:
    """One quadric in a shape definition: local center, axes, orientation."""

    semi_axes: tuple[float, float, float]
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation_deg: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def rotation(self) -> np.ndarray:
        return _rotation_ypr(*self.orientation_deg)


@dataclass(frozen=True)
class ShapeSpec:
    """Geometry of one body; the runner positions it at the body's center.

    Centers inside the blocks are offsets from the body position, so a
    delimiter can sit askew of its primary.  Point clouds are given in the
    body frame and translate rigidly.
    """

    kind: str                              # ellipsoid | biconcave | pointcloud
    primary: _QuadricBlock | None = None
    delimiter: _QuadricBlock | None = None
    morph: MorphSpec | None = None
    cloud: np.ndarray | None = None

    def outer_radius(self) -> float:
        if self.kind == "pointcloud":
            return float(np.max(np.linalg.norm(self.cloud, axis=1)))
        reach = max(self.primary.semi_axes)
        return float(reach + np.linalg.norm(self.primary.center))


@dataclass(frozen=True)
class BodySpec:
    """One body's anchor state: position holds at the activation instant."""

    name: str
    shape: ShapeSpec
    position: tuple[float, float, float]
    speed: float
    azimuth_deg: float
    elevation_deg: float
    activation: float = 0.0

    def velocity(self) -> np.ndarray:
        return accel_vector(self.speed, math.radians(self.azimuth_deg),
                            math.radians(self.elevation_deg))


@dataclass(frozen=True)
class Scenario:
    """Fully resolved run description (file values merged with overrides)."""

    name: str
    agent: BodySpec
    obstacles: tuple[BodySpec, ...]
    guidance: GuidanceConfig
    planes: int = 36
    dt: float = 0.01
    duration: float = 20.0
    mode: str = "noncooperative"
    seed: int = 0

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigInvalid("duration must be positive")
        if self.dt <= 0:
            raise ConfigInvalid("dt must be positive")
        if self.planes < 1:
            raise ConfigInvalid("planes must be at least 1")
        if self.mode not in ("noncooperative", "cooperative"):
            raise ConfigInvalid(f"unknown mode {self.mode!r}")
        if not self.obstacles:
            raise ConfigInvalid("scenario needs at least one obstacle")
        acts = [ob.activation for ob in self.obstacles]
        if any(b < a for a, b in zip(acts, acts[1:])):
            raise ConfigInvalid("obstacle activation times must be non-decreasing")


_RULE_NAMES = {
    "max_aperture": PlaneRule.MAX_APERTURE,
    "min_deviation": PlaneRule.MIN_DEVIATION,
}


def _triple(value, what: str) -> tuple[float, float, float]:
    try:
        x, y, z = (float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{what} must be three numbers") from exc
    return (x, y, z)


def _quadric_block(entry: dict, what: str) -> _QuadricBlock:
    if "semi_axes" not in entry:
        raise ConfigInvalid(f"{what} needs semi_axes")
    return _QuadricBlock(
        semi_axes=_triple(entry["semi_axes"], f"{what} semi_axes"),
        center=_triple(entry.get("center", (0.0, 0.0, 0.0)), f"{what} center"),
        orientation_deg=_triple(entry.get("orientation_deg", (0.0, 0.0, 0.0)),
                                f"{what} orientation_deg"),
    )


def _shape_spec_from(entry: dict, base_dir: Path) -> ShapeSpec:
    kind = entry.get("kind")
    if kind == "ellipsoid":
        return ShapeSpec(kind=kind, primary=_quadric_block(entry, "ellipsoid"))
    if kind == "biconcave":
        if "delimiter" not in entry:
            raise ConfigInvalid("biconcave shape needs a delimiter block")
        morph = None
        if "morph" in entry:
            m = entry["morph"]
            try:
                morph = MorphSpec(vertex_start=float(m["vertex_start"]),
                                  vertex_end=float(m["vertex_end"]),
                                  duration=float(m["duration"]))
            except (KeyError, TypeError) as exc:
                raise ConfigInvalid(f"bad morph block: {exc}") from exc
        return ShapeSpec(kind=kind,
                         primary=_quadric_block(entry, "biconcave"),
                         delimiter=_quadric_block(entry["delimiter"],
                                                  "delimiter"),
                         morph=morph)
    if kind == "pointcloud":
        if "path" not in entry:
            raise ConfigInvalid("pointcloud shape needs a path")
        path = base_dir / entry["path"]
        try:
            pts = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        except OSError as exc:
            raise ConfigInvalid(f"cannot read point cloud {path}") from exc
        if pts.shape[1] != 3 or pts.shape[0] < 4:
            raise ConfigInvalid(f"point cloud {path} is not an (n>=4, 3) table")
        return ShapeSpec(kind=kind, cloud=pts)
    raise ConfigInvalid(f"unknown shape kind {kind!r}")


def _body_from(entry: dict, base_dir: Path, default_name: str) -> BodySpec:
    if "shape" not in entry:
        raise ConfigInvalid(f"body {default_name!r} needs a shape block")
    return BodySpec(
        name=str(entry.get("name", default_name)),
        shape=_shape_spec_from(entry["shape"], base_dir),
        position=_triple(entry.get("position", (0.0, 0.0, 0.0)), "position"),
        speed=float(entry.get("speed", 0.0)),
        azimuth_deg=float(entry.get("azimuth_deg", 0.0)),
        elevation_deg=float(entry.get("elevation_deg", 0.0)),
        activation=float(entry.get("activation", 0.0)),
    )


def load_scenario(path, overrides: dict | None = None) -> Scenario:
    """Parse a scenario file and merge command-line overrides over it.

    Precedence is overrides > file > defaults.  Every shape is instantiated
    once here (morphing ones at both schedule endpoints) so malformed
    geometry fails at load time, not mid-run.

    Args:
        path: Scenario file location; point-cloud paths resolve relative to
            its directory.
        overrides: Optional {planes, dt, seed, K, w, mu} replacements; None
            values are ignored.

    Raises:
        ConfigInvalid: On any schema or value problem.
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigInvalid(f"cannot read scenario file: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigInvalid(f"cannot parse scenario file: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigInvalid("scenario file must be a mapping at top level")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    def pick(key, fallback):
        return overrides.get(key, raw.get(key, fallback))

    gd = raw.get("guidance") or {}
    if not isinstance(gd, dict):
        raise ConfigInvalid("guidance block must be a mapping")

    def pick_g(key, fallback):
        return overrides.get(key, gd.get(key, fallback))

    rule_name = str(pick_g("plane_rule", "max_aperture"))
    if rule_name not in _RULE_NAMES:
        raise ConfigInvalid(f"unknown plane_rule {rule_name!r}")
    try:
        guidance = GuidanceConfig(
            k_gain=float(pick_g("K", 2.0)),
            w_ref=float(pick_g("w", 0.05)),
            mu=float(pick_g("mu", 1.0)),
            plane_rule=_RULE_NAMES[rule_name],
            rate_window=int(pick_g("rate_window", 2)),
            accel_limit=float(pick_g("accel_limit", 30.0)),
        )
        if "agent" not in raw:
            raise ConfigInvalid("scenario needs an agent block")
        agent = _body_from(raw["agent"], path.parent, "A")
        obstacles = tuple(
            _body_from(entry, path.parent, f"obstacle{i}")
            for i, entry in enumerate(raw.get("obstacles") or ()))
        scenario = Scenario(
            name=str(raw.get("name", path.stem)),
            agent=agent,
            obstacles=obstacles,
            guidance=guidance,
            planes=int(pick("planes", 36)),
            dt=float(pick("dt", 0.01)),
            duration=float(pick("duration", 20.0)),
            mode=str(pick("mode", "noncooperative")),
            seed=int(pick("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"bad scenario value: {exc}") from exc
    for body in (scenario.agent, *scenario.obstacles):
        pos = np.asarray(body.position, dtype=float)
        _built_shape(body.shape, pos, 0.0)
        if body.shape.morph is not None:
            _built_shape(body.shape, pos, body.shape.morph.duration)
    return scenario


def _built_shape(spec: ShapeSpec, center: np.ndarray, elapsed: float):
    """Realize a shape at a body center; morphing bodies vary with elapsed."""
    if spec.kind == "pointcloud":
        return spec.cloud + center
    prim = spec.primary
    primary = build_quadric(center + np.asarray(prim.center), prim.semi_axes,
                            prim.rotation(), QuadricClass.ELLIPSOID)
    if spec.kind == "ellipsoid":
        return composite(CompositeKind.PURE, primary)
    dl = spec.delimiter
    axes = np.asarray(dl.semi_axes, dtype=float)
    if spec.morph is not None:
        axes = axes.copy()
        axes[2] = spec.morph.vertex_at(elapsed)
    delimiter = build_quadric(center + np.asarray(dl.center), axes,
                              dl.rotation(), QuadricClass.TWO_SHEET_HYPERBOLOID)
    return composite(CompositeKind.BICONCAVE, primary, delimiter)


# ---------------------------------------------------------------------------
# telemetry


@dataclass
class Telemetry:
    """Per-step rows plus a header echoing the full effective config."""

    header: dict[str, str]
    columns: list[str]
    rows: list[list] = field(default_factory=list)


def _closest_plane(cone, normal: np.ndarray) -> int:
    """Index of the cone plane whose normal best matches ``normal``."""
    best, best_dot = 0, -1.0
    for i, frame in enumerate(cone.frames):
        n = np.cross(frame.r_x, frame.r_y)
        dot = abs(float(np.dot(n, normal)))
        if dot > best_dot:
            best, best_dot = i, dot
    return best


def _columns(n_planes: int) -> list[str]:
    cols = ["t", "obstacle", "engaged", "predicts",
            "pos_a_x", "pos_a_y", "pos_a_z", "vel_a_x", "vel_a_y", "vel_a_z",
            "pos_b_x", "pos_b_y", "pos_b_z", "vel_b_x", "vel_b_y", "vel_b_z",
            "r", "v_r", "v_theta", "v_phi", "surface_sep",
            "plane_index", "y_sel", "psi_sel",
            "accel_a", "accel_delta", "accel_gamma", "accel_b",
            "n1", "n2", "n3", "d1", "d2", "psi_rate", "theta_b_rate"]
    cols += [f"y_p{i}" for i in range(n_planes)]
    cols += [f"psi_p{i}" for i in range(n_planes)]
    return cols


def write_telemetry_csv(telemetry: Telemetry, path) -> None:
    """Write the run table; header lines are '#'-prefixed key=value pairs."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        for key, value in telemetry.header.items():
            handle.write(f"# {key}={value}\n")
        writer = csv.writer(handle)
        writer.writerow(telemetry.columns)
        writer.writerows(telemetry.rows)


def write_summary_json(summary: dict, path) -> None:
    Path(path).write_text(json.dumps(summary, indent=2) + "\n")


# ---------------------------------------------------------------------------
# scenario runner


@dataclass
class RunResult:
    """Everything a caller needs after a run; collision marks failure."""

    telemetry: Telemetry
    summary: dict
    collision: bool


class _ObstacleStatus:
    """Mutable per-obstacle bookkeeping while a scenario runs."""

    def __init__(self, spec: BodySpec):
        self.spec = spec
        self.engaged_at: float | None = None
        self.cleared_at: float | None = None
        self.min_separation = math.inf
        self.pos: np.ndarray | None = None
        self.vel: np.ndarray | None = None

    def ensure_live(self, t: float) -> None:
        """Anchor at the activation pose, extrapolated to the current time."""
        if self.pos is None:
            self.vel = self.spec.velocity()
            self.pos = (np.asarray(self.spec.position, dtype=float)
                        + self.vel * max(t - self.spec.activation, 0.0))


def _surface_gap(shape_a, body_b, rng) -> float:
    """Sampled surface-to-surface distance; negative once samples penetrate."""
    pts_a = surface_samples(shape_a, _SEPARATION_SAMPLES, rng)
    if isinstance(body_b, np.ndarray):
        pts_b = body_b
        penetrated = np.any(
            composite_membership(shape_a, pts_b) == Membership.INTERIOR)
    else:
        pts_b = surface_samples(body_b, _SEPARATION_SAMPLES, rng)
        penetrated = (
            np.any(composite_membership(body_b, pts_a) == Membership.INTERIOR)
            or np.any(
                composite_membership(shape_a, pts_b) == Membership.INTERIOR))
    diff = pts_a[:, None, :] - pts_b[None, :, :]
    dist = float(np.sqrt(np.min(np.einsum("ijk,ijk->ij", diff, diff))))
    return -dist if penetrated else dist


def run_scenario(scenario: Scenario) -> RunResult:
    """Step the full engagement and record telemetry plus a summary.

    The active obstacle is always the earliest not-yet-cleared one past its
    activation time; an obstacle is cleared when the activation gate
    releases after having engaged.  Obstacles go live at their anchored
    pose the moment they first become active and fly ballistically (or
    under the cooperative command) afterwards.  The run ends at `duration`
    or one second after the last obstacle clears.

    Returns:
        RunResult with telemetry, summary, and the collision flag (False on
        this path; contact raises instead).

    Raises:
        CollisionOccurred: When the surfaces touch.  The exception carries
            the fully recorded RunResult (collision True) as `.result`.
    """
    cfg = scenario.guidance
    rng = np.random.default_rng(scenario.seed)
    agent_pos = np.asarray(scenario.agent.position, dtype=float)
    agent_vel = scenario.agent.velocity()
    status = [_ObstacleStatus(ob) for ob in scenario.obstacles]

    header = {
        "telemetry_schema": str(TELEMETRY_SCHEMA),
        "code_version": __version__,
        "scenario": scenario.name,
        "mode": scenario.mode,
        "planes": str(scenario.planes),
        "dt": repr(scenario.dt),
        "duration": repr(scenario.duration),
        "seed": str(scenario.seed),
        "K": repr(cfg.k_gain),
        "w": repr(cfg.w_ref),
        "mu": repr(cfg.mu),
        "plane_rule": cfg.plane_rule.value,
        "rate_window": str(cfg.rate_window),
        "accel_limit": repr(cfg.accel_limit),
    }
    columns = _columns(scenario.planes)
    telemetry = Telemetry(header=header, columns=columns)

    collision = False
    collision_time = None
    min_sep_overall = math.inf
    end_time = scenario.duration
    active_index: int | None = None
    gate: ActivationGate | None = None
    tracker: RateTracker | None = None
    held_control = ControlInput()
    held_sign = 1.0
    rail_active = False
    post_crest = False
    recede_streak = 0
    locked_normal: np.ndarray | None = None
    t = 0.0
    step = 0

    while t < end_time - 1e-9:
        index = next((i for i, st in enumerate(status)
                      if st.cleared_at is None
                      and st.spec.activation <= t + 1e-9), None)
        if index != active_index:
            active_index = index
            gate = ActivationGate(cfg)
            tracker = RateTracker(cfg.rate_window)
            held_control = ControlInput()
            held_sign = 1.0
            rail_active = False
            post_crest = False
            recede_streak = 0
            locked_normal = None
            if index is not None:
                status[index].ensure_live(t)

        row = dict.fromkeys(columns, math.nan)
        row["t"] = t
        row["obstacle"] = ""
        row["engaged"] = 0
        row["predicts"] = 0
        row["pos_a_x"], row["pos_a_y"], row["pos_a_z"] = agent_pos
        row["vel_a_x"], row["vel_a_y"], row["vel_a_z"] = agent_vel
        control = ControlInput()
        shape_a = _built_shape(scenario.agent.shape, agent_pos, 0.0)

        if index is not None:
            st = status[index]
            row["obstacle"] = st.spec.name
            row["pos_b_x"], row["pos_b_y"], row["pos_b_z"] = st.pos
            row["vel_b_x"], row["vel_b_y"], row["vel_b_z"] = st.vel
            elapsed = t - st.spec.activation
            body_b = _built_shape(st.spec.shape, st.pos, elapsed)

            # Far from any possible contact a bounding-sphere bound is
            # enough for the log and the collision check; the sampled
            # surface distance only earns its cost near the pass.
            rough = (float(np.linalg.norm(agent_pos - st.pos))
                     - scenario.agent.shape.outer_radius()
                     - st.spec.shape.outer_radius())
            gap = rough if rough >= 2.0 else _surface_gap(shape_a, body_b, rng)
            st.min_separation = min(st.min_separation, gap)
            min_sep_overall = min(min_sep_overall, gap)
            row["surface_sep"] = gap
            if gap <= 0.0:
                collision = True

            cone = None
            if not collision:
                try:
                    cone = cone_3d(shape_a, body_b, agent_vel, st.vel,
                                   n_planes=scenario.planes)
                except BodiesOverlap:
                    collision = True
            if collision:
                collision_time = t
                telemetry.rows.append([row[c] for c in columns])
                break

            try:
                sph = EngagementState.from_cartesian(
                    agent_pos, agent_vel, st.pos, st.vel)
                row["r"], row["v_r"] = sph.r, sph.v_r
                row["v_theta"], row["v_phi"] = sph.v_theta, sph.v_phi
            except GimbalSingularity:
                pass

            for i, plane in enumerate(cone.planes):
                row[f"y_p{i}"] = plane.y
                row[f"psi_p{i}"] = plane.psi

            # The configured rule picks the avoidance plane when an
            # engagement begins, and that plane is then held for the
            # whole engagement (matched across steps by its normal,
            # since the fan is rebuilt around the moving sightline).
            # The deactivation hysteresis needs one continuous margin
            # signal: once the pass is made, the rule's instantaneous
            # winner hops to whichever plane currently looks worst,
            # and that freshly pessimistic reading would hold the
            # engagement open long after the original threat is gone.
            try:
                ruled = select_plane(cone, cfg.plane_rule)
            except NoValidPlane:
                ruled = None
            if locked_normal is None:
                selected = ruled
            else:
                selected = _closest_plane(cone, locked_normal)

            if selected is not None:
                plane = cone.planes[selected]
                psi_rate, theta_b_rate = tracker.update(t, selected, plane)
                y_gate = plane.y
                row["plane_index"] = selected
                row["y_sel"], row["psi_sel"] = plane.y, plane.psi
            else:
                psi_rate = theta_b_rate = 0.0
                y_gate = math.inf

            engaged = gate.update(cone.any_collision, y_gate)
            row["engaged"] = int(engaged)
            row["predicts"] = int(cone.any_collision)
            if not engaged:
                held_sign = 1.0
                rail_active = False
                post_crest = False
                recede_streak = 0
                locked_normal = None

            if engaged and selected is not None:
                plane = cone.planes[selected]
                frame = cone.frames[selected]
                if locked_normal is None:
                    locked_normal = np.cross(frame.r_x, frame.r_y)
                s_plane = plane.v_r ** 2 + plane.v_theta ** 2
                d1_now = 2.0 * plane.v_hat_r * plane.v_hat_theta
                gap_now = plane.heading_a - plane.theta_p
                d2_now = 2.0 * (plane.v_r * math.cos(gap_now)
                                - plane.v_theta * math.sin(gap_now))
                recede_streak = (recede_streak + 1
                                 if plane.v_r > 0.35 * math.sqrt(s_plane)
                                 else 0)
                # The denominators of the inversion vanish when either
                # rotated velocity component does, which happens exactly
                # as the maneuver crests the widest point of the pass, and
                # whenever the requested margin exceeds the attainable
                # ceiling cos^2(psi/2) that manifold is attractive from
                # both sides, so regulating across it just flips the sign
                # of a saturated command every step.  From the first step
                # inside the crest band the command therefore holds the
                # saturation rail with the sign the regulator was already
                # pushing, which keeps adding real clearance through the
                # crest, and drops to a coast at the first sign flip of
                # the radial rate: past that point the bodies separate on
                # their own, resumed tracking would only pull the path
                # back inward (the error has changed sign), and coasting
                # preserves the heading the maneuver has already paid
                # for while the gate's hysteresis watches the margin
                # rise and releases.
                banded = (abs(d1_now) < 0.05 * s_plane
                          or abs(d2_now) < 0.1 * math.sqrt(s_plane))
                if (rail_active
                        and plane.v_r >= _RAIL_RELEASE * math.sqrt(s_plane)):
                    rail_active = False
                    post_crest = True
                # Tracking the margin reference from above would steer
                # back toward the obstacle: whenever free drift already
                # holds the margin at or past w the command is simply
                # zero, so the margin can keep rising through the
                # release threshold instead of being trimmed onto w,
                # a hair under it, forever.
                coast = (post_crest
                         or recede_streak >= 10
                         or (plane.v_r > 0.0 and plane.y >= 0.0)
                         or (not rail_active and plane.y >= cfg.w_ref))
                acc_a = acc_b = None
                terms = None
                if not coast:
                    if not rail_active and banded:
                        rail_active = True
                    if not rail_active:
                        try:
                            if scenario.mode == "cooperative":
                                (acc_a, acc_b), terms = coop_accels(
                                    plane, cone.separation, psi_rate,
                                    theta_b_rate, cfg)
                            else:
                                acc_a, terms = noncoop_accel(
                                    plane, cone.separation, psi_rate,
                                    theta_b_rate, cfg)
                                acc_b = 0.0
                            if acc_a != 0.0:
                                held_sign = math.copysign(1.0, acc_a)
                        except SingularInversion:
                            rail_active = True
                    if rail_active:
                        acc_a = held_sign * cfg.accel_limit
                        if scenario.mode == "cooperative":
                            acc_b = float(np.clip(cfg.mu * acc_a,
                                                  -cfg.accel_limit,
                                                  cfg.accel_limit))
                        else:
                            acc_b = 0.0
                if acc_a is None:
                    held_control = control
                    row["accel_a"] = row["accel_b"] = 0.0
                else:
                    mag_a, del_a, gam_a = accel_direction_3d(
                        frame, plane.heading_a, acc_a)
                    if scenario.mode == "cooperative":
                        mag_b, del_b, gam_b = accel_direction_3d(
                            frame, plane.heading_b, acc_b)
                    else:
                        mag_b = del_b = gam_b = 0.0
                    control = ControlInput(accel_a=mag_a, delta_a=del_a,
                                           gamma_a=gam_a, accel_b=mag_b,
                                           delta_b=del_b, gamma_b=gam_b)
                    held_control = control
                    row["accel_a"], row["accel_b"] = acc_a, acc_b
                    row["accel_delta"], row["accel_gamma"] = del_a, gam_a
                    if terms is not None:
                        row["n1"], row["n2"] = terms.n1, terms.n2
                        row["n3"] = terms.n3
                row["d1"], row["d2"] = d1_now, d2_now
                row["psi_rate"] = psi_rate
                row["theta_b_rate"] = theta_b_rate
            elif engaged:
                control = held_control

            if engaged and st.engaged_at is None:
                st.engaged_at = t
            if st.engaged_at is not None and not gate.active:
                st.cleared_at = t
                logger.debug("obstacle %s cleared at t=%.3f", st.spec.name, t)
                if all(s.cleared_at is not None for s in status):
                    end_time = min(scenario.duration, t + _TAIL_SECONDS)

        # Bodies do not vanish when their engagement ends: cleared and
        # not-yet-engaged obstacles keep flying, and contact with them
        # still aborts the run.  A bounding-sphere test keeps the
        # detailed sampling off the common far-apart case.
        agent_reach = scenario.agent.shape.outer_radius()
        for j, other in enumerate(status):
            if j == index or other.spec.activation > t + 1e-9:
                continue
            other.ensure_live(t)
            rough = (float(np.linalg.norm(agent_pos - other.pos))
                     - agent_reach - other.spec.shape.outer_radius())
            if rough >= 1.0:
                continue
            other_shape = _built_shape(other.spec.shape, other.pos,
                                       t - other.spec.activation)
            gap = _surface_gap(shape_a, other_shape, rng)
            other.min_separation = min(other.min_separation, gap)
            min_sep_overall = min(min_sep_overall, gap)
            if gap <= 0.0:
                collision = True
                collision_time = t
                break
        if collision and collision_time == t:
            telemetry.rows.append([row[c] for c in columns])
            break

        telemetry.rows.append([row[c] for c in columns])

        acc_vec_a = accel_vector(control.accel_a, control.delta_a,
                                 control.gamma_a)
        agent_pos, agent_vel = advance_turning(agent_pos, agent_vel,
                                               acc_vec_a, scenario.dt)
        if index is not None:
            st = status[index]
            acc_vec_b = accel_vector(control.accel_b, control.delta_b,
                                     control.gamma_b)
            st.pos, st.vel = advance_turning(st.pos, st.vel, acc_vec_b,
                                             scenario.dt)
        for j, other in enumerate(status):
            if j != index and other.pos is not None:
                other.pos = other.pos + other.vel * scenario.dt
        step += 1
        t = step * scenario.dt

    cleared = sum(1 for st in status if st.cleared_at is not None)
    summary = {
        "summary_schema": SUMMARY_SCHEMA,
        "code_version": __version__,
        "scenario": scenario.name,
        "mode": scenario.mode,
        "verdict": f"cleared: {cleared}/{len(status)}",
        "collision": collision,
        "end_time": round(t, 9),
        "min_separation": None if math.isinf(min_sep_overall)
                          else min_sep_overall,
        "obstacles": [
            {
                "name": st.spec.name,
                "activation": st.spec.activation,
                "engaged_at": st.engaged_at,
                "cleared_at": st.cleared_at,
                "min_separation": None if math.isinf(st.min_separation)
                                  else st.min_separation,
            }
            for st in status
        ],
        "config": {key: header[key] for key in
                   ("mode", "planes", "dt", "duration", "seed", "K", "w",
                    "mu", "plane_rule", "rate_window", "accel_limit")},
    }
    result = RunResult(telemetry=telemetry, summary=summary,
                       collision=collision)
    if collision:
        error = CollisionOccurred(
            f"surfaces touched at t={collision_time:.3f} s")
        error.result = result
        raise error
    return result


# ---------------------------------------------------------------------------
# Monte-Carlo plane-count accuracy


@dataclass(frozen=True)
class AccuracyRow:
    """Error statistics for one plane count."""

    n_planes: int
    mean_error: float
    max_error: float


@dataclass(frozen=True)
class AccuracyTable:
    """Per-count error rows plus how many draws had to be replaced."""

    rows: tuple[AccuracyRow, ...]
    trials: int
    resampled: int


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def _random_pair(rng: np.random.Generator):
    axes_a = rng.uniform(1.0, 10.0, size=3)
    axes_b = rng.uniform(1.0, 10.0, size=3)
    reach = axes_a.max() + axes_b.max()
    distance = rng.uniform(1.2, 5.0) * reach
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    qa = build_quadric(np.zeros(3), axes_a, _random_rotation(rng),
                       QuadricClass.ELLIPSOID)
    qb = build_quadric(distance * direction, axes_b, _random_rotation(rng),
                       QuadricClass.ELLIPSOID)
    return (composite(CompositeKind.PURE, qa),
            composite(CompositeKind.PURE, qb))


def monte_carlo_accuracy(trials: int = 200,
                         n_values: tuple[int, ...] = (6, 12, 36, 90),
                         seed: int = 0) -> AccuracyTable:
    """Relative cross-section-area error of sparse fans vs a dense reference.

    Each trial draws a random non-overlapping ellipsoid pair (axes uniform
    in [1, 10] m, center distance 1.2-5 times the summed longest axes,
    random orientations), evaluates the section area at every requested
    plane count and at the 360-plane reference, and accumulates relative
    errors.  Draws that fail geometrically are redrawn and counted; trial
    seeds derive independently from the master seed, so the table is
    reproducible.

    Args:
        trials: Number of pair geometries, >= 1.
        n_values: Plane counts to study; each must lie in [1, 360).
        seed: Master seed for the geometry stream.

    Returns:
        AccuracyTable with per-count mean and max relative error, sorted by
        plane count.
    """
    if trials < 1:
        raise ConfigInvalid("trials must be at least 1")
    if not n_values:
        raise ConfigInvalid("n_values must not be empty")
    if any(n < 1 or n >= 360 for n in n_values):
        raise ConfigInvalid("plane counts must lie in [1, 360)")
    master = np.random.SeedSequence(seed)
    errors: dict[int, list[float]] = {n: [] for n in n_values}
    resampled = 0
    done = 0
    while done < trials:
        rng = np.random.default_rng(master.spawn(1)[0])
        try:
            shape_a, shape_b = _random_pair(rng)
            reference = cross_section_area(
                cone_3d(shape_a, shape_b, (1.0, 0.0, 0.0), (0.0, 0.0, 0.0),
                        n_planes=360))
            trial_errors = {}
            for n in n_values:
                area = cross_section_area(
                    cone_3d(shape_a, shape_b, (1.0, 0.0, 0.0),
                            (0.0, 0.0, 0.0), n_planes=n))
                trial_errors[n] = abs(area - reference) / reference
        except QuadconeError:
            resampled += 1
            continue
        for n, err in trial_errors.items():
            errors[n].append(err)
        done += 1
    if resampled:
        logger.info("accuracy study: %d degenerate draws resampled", resampled)
    rows = tuple(AccuracyRow(n_planes=n,
                             mean_error=float(np.mean(errors[n])),
                             max_error=float(np.max(errors[n])))
                 for n in sorted(n_values))
    return AccuracyTable(rows=rows, trials=trials, resampled=resampled)
