"""Command-line front end for the cone, tangent, and simulation pipeline.

Five verbs: ``simulate`` runs a scenario file and writes telemetry + summary,
``cone`` evaluates a static two-body geometry, ``tangents`` exposes the
planar tangent solvers for spot checks, ``montecarlo`` tabulates the
cross-section accuracy study, and ``validate`` checks a scenario file
without running it.  Exit status: 0 on success, 1 on a domain error (the
message names the error type), 2 on a usage error (help text on stderr).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from .cone import cone_3d
from .errors import CollisionOccurred, ConfigInvalid, QuadconeError
from .sim import (
    _body_from,
    _built_shape,
    load_scenario,
    monte_carlo_accuracy,
    run_scenario,
    write_summary_json,
    write_telemetry_csv,
)
from .tangents import (
    inner_common_tangents,
    tangents_ellipse_vs_clipped,
    tangents_ellipse_vs_pointcloud,
)


class _Parser(argparse.ArgumentParser):
    """Argument parser that treats usage problems per the CLI contract."""

    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(2, f"\n{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="quadcone",
        description="Collision cones and avoidance guidance for quadric bodies.",
    )
    sub = parser.add_subparsers(dest="verb", required=True,
                                parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a scenario file")
    sim.add_argument("scenario", help="scenario file to run")
    sim.add_argument("--out", default=".",
                     help="directory for telemetry.csv and summary.json")
    sim.add_argument("--planes", type=int, default=None,
                     help="engagement plane count (default 36)")
    sim.add_argument("--dt", type=float, default=None,
                     help="integration step, seconds (default 0.01)")
    sim.add_argument("--seed", type=int, default=None, help="run seed")
    sim.add_argument("--K", type=float, default=None,
                     help="guidance gain override")
    sim.add_argument("--w", type=float, default=None,
                     help="margin reference override")
    sim.add_argument("--mu", type=float, default=None,
                     help="cooperative split ratio override")

    cone = sub.add_parser("cone", help="evaluate one static geometry")
    cone.add_argument("geometry", help="two-body geometry file")
    cone.add_argument("--planes", type=int, default=None,
                      help="plane count (overrides the file, default 36)")
    cone.add_argument("--out", default=None,
                      help="write the table here instead of stdout")

    tan = sub.add_parser("tangents", help="solve one planar tangent case")
    tan.add_argument("case", help="2-D case file")
    tan.add_argument("--out", default=None,
                     help="write the JSON here instead of stdout")

    mc = sub.add_parser("montecarlo", help="run the section-accuracy study")
    mc.add_argument("--trials", type=int, default=200,
                    help="random pair count (default 200)")
    mc.add_argument("--planes-list", default="6,12,36,90",
                    help="comma-separated plane counts (default 6,12,36,90)")
    mc.add_argument("--seed", type=int, default=0, help="study seed")
    mc.add_argument("--out", default=None,
                    help="write the CSV here instead of stdout")

    val = sub.add_parser("validate", help="check a scenario file")
    val.add_argument("scenario", help="scenario file to check")

    return parser


# ---------------------------------------------------------------------------
# input helpers


def _load_yaml(path_str: str, what: str) -> tuple[dict, Path]:
    path = Path(path_str)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read {what} {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigInvalid(f"{what} {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"{what} {path} must be a mapping")
    return raw, path.parent


def _conic_from(entry, what: str) -> np.ndarray:
    """3x3 conic from an ellipse block or an explicit matrix.

    Blocks carry {center: [x, y], semi_axes: [a, b], rotation_deg}; a
    ``matrix`` key supplies any symmetric conic directly (the delimiter
    curve of a clipped section is usually a hyperbola).
    """
    if not isinstance(entry, dict):
        raise ConfigInvalid(f"{what} must be a mapping")
    if "matrix" in entry:
        m = np.asarray(entry["matrix"], dtype=float)
        if m.shape != (3, 3):
            raise ConfigInvalid(f"{what} matrix must be 3x3")
        return 0.5 * (m + m.T)
    try:
        cx, cy = (float(v) for v in entry["center"])
        ax, ay = (float(v) for v in entry["semi_axes"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(
            f"{what} needs center [x, y] and semi_axes [a, b]") from exc
    if ax <= 0 or ay <= 0:
        raise ConfigInvalid(f"{what} semi_axes must be positive")
    ang = math.radians(float(entry.get("rotation_deg", 0.0)))
    c, s = math.cos(ang), math.sin(ang)
    rot = np.array([[c, -s], [s, c]])
    quad = rot @ np.diag([ax ** -2, ay ** -2]) @ rot.T
    center = np.array([cx, cy])
    m = np.zeros((3, 3))
    m[:2, :2] = quad
    m[:2, 2] = m[2, :2] = -quad @ center
    m[2, 2] = center @ quad @ center - 1.0
    return m


# ---------------------------------------------------------------------------
# verbs


def _cmd_simulate(args) -> int:
    overrides = {key: getattr(args, key)
                 for key in ("planes", "dt", "seed", "K", "w", "mu")}
    scenario = load_scenario(args.scenario, overrides)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = run_scenario(scenario)
    except CollisionOccurred as exc:
        # The partial record is still worth keeping for inspection.
        write_telemetry_csv(exc.result.telemetry, out / "telemetry.csv")
        write_summary_json(exc.result.summary, out / "summary.json")
        raise
    write_telemetry_csv(result.telemetry, out / "telemetry.csv")
    write_summary_json(result.summary, out / "summary.json")
    print(result.summary["verdict"])
    return 0


def _cmd_cone(args) -> int:
    raw, base = _load_yaml(args.geometry, "geometry file")
    if "agent" not in raw or "obstacle" not in raw:
        raise ConfigInvalid("geometry file needs agent and obstacle blocks")
    agent = _body_from(raw["agent"], base, "A")
    obstacle = _body_from(raw["obstacle"], base, "B")
    planes = args.planes if args.planes is not None \
        else int(raw.get("planes", 36))
    shape_a = _built_shape(agent.shape, np.asarray(agent.position, float), 0.0)
    body_b = _built_shape(obstacle.shape,
                          np.asarray(obstacle.position, float), 0.0)
    cone = cone_3d(shape_a, body_b, agent.velocity(), obstacle.velocity(),
                   n_planes=planes)
    lines = ["plane,psi,theta_b,y,v_hat_r"]
    for i, p in enumerate(cone.planes):
        lines.append(f"{i},{p.psi:.9g},{p.theta_b:.9g},"
                     f"{p.y:.9g},{p.v_hat_r:.9g}")
    lines.append(f"any_collision: {'true' if cone.any_collision else 'false'}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_tangents(args) -> int:
    raw, _ = _load_yaml(args.case, "case file")
    if "a" not in raw or "b" not in raw:
        raise ConfigInvalid("case file needs blocks a and b")
    m_a = _conic_from(raw["a"], "block a")
    b = raw["b"]
    if isinstance(b, dict) and "cloud" in b:
        cloud = np.asarray(b["cloud"], dtype=float)
        if cloud.ndim != 2 or cloud.shape[1] != 2:
            raise ConfigInvalid("b.cloud must be a list of [x, y] points")
        pair = tangents_ellipse_vs_pointcloud(m_a, cloud)
    elif isinstance(b, dict) and "delimiter" in b:
        pair = tangents_ellipse_vs_clipped(
            m_a, _conic_from(b, "block b"),
            _conic_from(b["delimiter"], "b.delimiter"))
    else:
        pair = inner_common_tangents(m_a, _conic_from(b, "block b"))
    payload = {
        "lines": pair.lines.tolist(),
        "touch_a": pair.touch_a.tolist(),
        "touch_b": pair.touch_b.tolist(),
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


def _cmd_montecarlo(args) -> int:
    try:
        n_values = tuple(int(tok) for tok in args.planes_list.split(","))
    except ValueError as exc:
        raise ConfigInvalid(
            "planes-list must be comma-separated integers") from exc
    table = monte_carlo_accuracy(trials=args.trials, n_values=n_values,
                                 seed=args.seed)
    buf = ["n_planes,mean_err,max_err,bound"]
    for row in table.rows:
        buf.append(f"{row.n_planes},{row.mean_error:.9g},"
                   f"{row.max_error:.9g},{2.0 / row.n_planes:.9g}")
    _emit("\n".join(buf) + "\n", args.out)
    return 0


def _cmd_validate(args) -> int:
    load_scenario(args.scenario)
    print("OK")
    return 0


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


_COMMANDS = {
    "simulate": _cmd_simulate,
    "cone": _cmd_cone,
    "tangents": _cmd_tangents,
    "montecarlo": _cmd_montecarlo,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except QuadconeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
