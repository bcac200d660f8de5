"""3-D collision cones assembled from planar slices.

The cone between two moving bodies is evaluated on a family of planes through
both centers.  Each plane contributes an aperture angle, a bisector, and a
value y whose sign (together with the rotated radial closing speed) flags a
predicted collision in that plane; the 3-D verdict and the avoidance guidance
both draw on the per-plane records.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BodiesOverlap,
    CloudIntersectsEllipse,
    ConfigInvalid,
    CornerFilterEmpty,
    NoRealIntersection,
    ParallelTangents,
    PointInsideEllipse,
    SearchExhausted,
    ZeroRelativeSpeed,
)
from .planes import PlaneFrame, build_plane_frames, section_conic
from .shapes import (
    CompositeKind,
    CompositeShape,
    Membership,
    QuadricClass,
    carve_oriented_delimiter,
    classify_quadric,
    composite_membership,
    surface_samples,
)
from .tangents import TangentPair, inner_common_tangents, \
    tangents_ellipse_vs_clipped, tangents_ellipse_vs_pointcloud

__all__ = [
    "Cone3D",
    "PlanarCone",
    "cone_3d",
    "cross_section_area",
    "planar_cone_angles",
    "project_states",
    "y_components",
]

_MIN_RELATIVE_SPEED = 1e-9
_SLAB_FRACTION = 0.06
_MIN_SLAB_POINTS = 6
_BOUNDARY_BAND = 1e-3


@dataclass(frozen=True)
class PlanarCone:
    """Collision-cone data for a single engagement plane.

    Attributes:
        azimuth: Plane rotation about the center line, radians.
        theta_p: In-plane bearing of the other body (pi/2 by construction).
        psi: Cone aperture angle.
        theta_b: In-plane bearing of the cone bisector.
        v_r: Relative closing-line velocity component (negative = closing).
        v_theta: In-plane transverse relative velocity component.
        v_hat_r: v_r after rotating the frame from the bearing onto the
            bisector.
        v_hat_theta: v_theta after the same rotation.
        y: Avoidance margin; negative together with v_hat_r < 0 flags a
            predicted collision in this plane.
        heading_a: In-plane direction angle of the own body's velocity.
        heading_b: In-plane direction angle of the other body's velocity.
        intersecting: True when the sections overlap or engulf, forcing the
            full-aperture cone.
        tangents: The bounding tangent pair, or None when intersecting.
    """

    azimuth: float
    theta_p: float
    psi: float
    theta_b: float
    v_r: float
    v_theta: float
    v_hat_r: float
    v_hat_theta: float
    y: float
    heading_a: float
    heading_b: float
    intersecting: bool
    tangents: TangentPair | None

    @property
    def predicts_collision(self) -> bool:
        return self.y < 0 and self.v_hat_r < 0


@dataclass(frozen=True)
class Cone3D:
    """Full collision-cone evaluation over a family of engagement planes.

    Two aggregate views serve two different consumers.  The assembled solid
    cone of relative-velocity directions is the intersection of the per-plane
    wedges, so membership of the velocity in the cone — the prediction that
    straight-line motion produces contact — is the conjunction of the plane
    tests (``inside_cone``).  A planar wedge, however, only sees the
    projection of the relative velocity, and a single plane reporting the
    projected velocity inside its wedge is already grounds for evasive
    action even when the full 3-D track slips past; the activation trigger
    is therefore the union of the plane tests (``any_collision``).
    """

    frames: tuple[PlaneFrame, ...]
    planes: tuple[PlanarCone, ...]
    separation: float

    @property
    def inside_cone(self) -> bool:
        return all(p.predicts_collision for p in self.planes)

    @property
    def any_collision(self) -> bool:
        # The trigger ignores planes whose margin sits inside the boundary
        # noise band: a fan aligned with the engagement plane of a coplanar
        # geometry always contains one plane that sees the transverse
        # motion exactly edge-on, and that plane reads y as a vanishingly
        # small negative number for any closing pass, however wide.
        return any(p.y < -_BOUNDARY_BAND and p.v_hat_r < 0.0
                   for p in self.planes)


def planar_cone_angles(pair: TangentPair, center_a_uv, center_b_uv):
    """Aperture and bisector angles of a planar cone from its tangent pair.

    Each tangent line's direction is oriented from the own body toward the
    other; the aperture is the angle between the two directions and the
    bisector is their angular mean.

    Returns:
        (psi, theta_b) in radians, psi in [0, pi].
    """
    los = np.asarray(center_b_uv, dtype=float) - np.asarray(center_a_uv, dtype=float)
    dirs = []
    for line, ta, tb in zip(pair.lines, pair.touch_a, pair.touch_b):
        d = np.array([-line[1], line[0]])
        # Orient along the line from the own-body contact toward the other
        # body's contact; both points lie on the line, so this stays
        # well-conditioned for every line orientation.  The line of sight
        # only breaks the tie when the two contacts coincide.
        along = np.asarray(tb, dtype=float) - np.asarray(ta, dtype=float)
        sign = d @ along
        if abs(sign) < 1e-12 * (1.0 + np.linalg.norm(along)):
            sign = d @ los
        if sign < 0:
            d = -d
        dirs.append(d / np.linalg.norm(d))
    psi = float(np.arccos(np.clip(dirs[0] @ dirs[1], -1.0, 1.0)))
    mean = dirs[0] + dirs[1]
    if np.linalg.norm(mean) < 1e-12:
        theta_b = float(np.arctan2(los[1], los[0]))
    else:
        theta_b = float(np.arctan2(mean[1], mean[0]))
    return psi, theta_b


def project_states(frame: PlaneFrame, pos_a, pos_b, vel_a, vel_b):
    """In-plane engagement state seen from one plane frame.

    Args:
        frame: Engagement plane through both centers.
        pos_a: Own-body center.
        pos_b: Other-body center.
        vel_a: Own-body velocity.
        vel_b: Other-body velocity.

    Returns:
        Dict with theta_p (bearing of B), v_r (range rate), v_theta
        (in-plane transverse relative speed), heading_a, heading_b
        (in-plane velocity direction angles).
    """
    pos_a = np.asarray(pos_a, dtype=float)
    pos_b = np.asarray(pos_b, dtype=float)
    vel_a = np.asarray(vel_a, dtype=float)
    vel_b = np.asarray(vel_b, dtype=float)
    rel = pos_b - pos_a
    rel_v = vel_b - vel_a
    r_hat = rel / np.linalg.norm(rel)
    theta_p = float(np.arctan2(rel @ frame.r_y, rel @ frame.r_x))
    v_r = float(rel_v @ r_hat)
    v_theta = float(rel_v @ frame.r_x)
    heading_a = float(np.arctan2(vel_a @ frame.r_y, vel_a @ frame.r_x))
    heading_b = float(np.arctan2(vel_b @ frame.r_y, vel_b @ frame.r_x))
    return {
        "theta_p": theta_p,
        "v_r": v_r,
        "v_theta": v_theta,
        "heading_a": heading_a,
        "heading_b": heading_b,
    }


def y_components(psi, theta_b, theta_p, v_r, v_theta):
    """Avoidance margin y and the bisector-rotated velocity components.

    The relative velocity, expressed in polar components about the bearing
    line, is rotated by the offset between bearing and bisector; a collision
    in the plane is predicted when the rotated transverse share of the speed
    falls inside the half-aperture sine and the rotated radial component
    closes.

    Returns:
        (y, v_hat_r, v_hat_theta).

    Raises:
        ZeroRelativeSpeed: If the planar relative speed vanishes.
    """
    s = v_r * v_r + v_theta * v_theta
    if s < _MIN_RELATIVE_SPEED**2:
        raise ZeroRelativeSpeed(f"planar relative speed^2 = {s:.3e}")
    delta = theta_p - theta_b
    c, sn = np.cos(delta), np.sin(delta)
    v_hat_r = c * v_r - sn * v_theta
    v_hat_theta = sn * v_r + c * v_theta
    y = v_hat_theta * v_hat_theta / s - np.sin(psi / 2.0) ** 2
    return float(y), float(v_hat_r), float(v_hat_theta)


def _cloud_slab(points: np.ndarray, frame: PlaneFrame) -> np.ndarray:
    """In-plane coordinates of the cloud points near one engagement plane.

    Starts from a slab a few percent of the cloud radius thick and doubles
    it until enough points fall inside, so sparse clouds still contribute a
    section everywhere.
    """
    normal = np.cross(frame.r_x, frame.r_y)
    centroid = points.mean(axis=0)
    radius = float(np.linalg.norm(points - centroid, axis=1).max())
    dist = np.abs((points - frame.origin) @ normal)
    width = _SLAB_FRACTION * max(radius, 1e-12)
    want = min(_MIN_SLAB_POINTS, points.shape[0])
    sel = dist <= width
    while sel.sum() < want:
        width *= 2.0
        sel = dist <= width
    return frame.to_plane(points[sel])


def _section_tangents(shape_a: CompositeShape, body_b, frame: PlaneFrame) -> TangentPair:
    """Tangent pair for one plane, dispatching on the other body's kind."""
    m_a = section_conic(shape_a.primary, frame)
    if isinstance(body_b, np.ndarray):
        return tangents_ellipse_vs_pointcloud(m_a, _cloud_slab(body_b, frame))
    if body_b.kind is CompositeKind.PURE:
        return inner_common_tangents(m_a, section_conic(body_b.primary, frame))
    m_b = section_conic(body_b.primary, frame)
    m_d = section_conic(carve_oriented_delimiter(body_b), frame)
    return tangents_ellipse_vs_clipped(m_a, m_b, m_d)


def _check_disjoint(shape_a: CompositeShape, body_b, samples: int) -> None:
    rng = np.random.default_rng(1618)
    if isinstance(body_b, np.ndarray):
        pts_b = body_b
    else:
        pts_b = surface_samples(body_b, samples, rng)
    mem = composite_membership(shape_a, pts_b)
    if np.any(mem != Membership.EXTERIOR):
        raise BodiesOverlap("other body reaches the own body's volume")
    if not isinstance(body_b, np.ndarray):
        pts_a = surface_samples(shape_a, samples, rng)
        mem = composite_membership(body_b, pts_a)
        if np.any(mem != Membership.EXTERIOR):
            raise BodiesOverlap("own body reaches the other body's volume")


def _body_center(body) -> np.ndarray:
    if isinstance(body, np.ndarray):
        return body.mean(axis=0)
    return np.asarray(body.center, dtype=float)


def cone_3d(
    shape_a: CompositeShape,
    body_b,
    vel_a,
    vel_b,
    n_planes: int = 6,
    overlap_samples: int = 1000,
) -> Cone3D:
    """Evaluate the 3-D collision cone between two bodies.

    Args:
        shape_a: Own body; its primary quadric must be an ellipsoid.
        body_b: Other body -- a CompositeShape, or an (n, 3) array treated as
            a surface point cloud.
        vel_a: Own-body velocity, shape (3,).
        vel_b: Other-body velocity, shape (3,).
        n_planes: Number of engagement planes over the half turn.
        overlap_samples: Surface sample count for the disjointness check.

    Returns:
        Cone3D with one PlanarCone per plane.

    Raises:
        BodiesOverlap: If the bodies already interpenetrate.
        ConfigInvalid: If the own body's section cannot be an ellipse.
    """
    if classify_quadric(shape_a.primary) is not QuadricClass.ELLIPSOID:
        raise ConfigInvalid("own body must have an ellipsoidal primary surface")
    if isinstance(body_b, CompositeShape) and body_b.kind is CompositeKind.PURE \
            and classify_quadric(body_b.primary) is not QuadricClass.ELLIPSOID:
        raise ConfigInvalid("a pure other body must be an ellipsoid")
    if isinstance(body_b, np.ndarray):
        body_b = np.atleast_2d(np.asarray(body_b, dtype=float))

    vel_a = np.asarray(vel_a, dtype=float)
    vel_b = np.asarray(vel_b, dtype=float)

    _check_disjoint(shape_a, body_b, overlap_samples)

    pos_a = np.asarray(shape_a.center, dtype=float)
    pos_b = _body_center(body_b)
    frames = build_plane_frames(pos_a, pos_b, n_planes)
    separation = float(np.linalg.norm(pos_b - pos_a))

    planes = []
    for frame in frames:
        states = project_states(frame, pos_a, pos_b, vel_a, vel_b)
        try:
            pair = _section_tangents(shape_a, body_b, frame)
            center_a_uv = frame.to_plane(pos_a)
            center_b_uv = frame.to_plane(pos_b)
            psi, theta_b = planar_cone_angles(pair, center_a_uv, center_b_uv)
            intersecting = False
        except (NoRealIntersection, PointInsideEllipse, CloudIntersectsEllipse,
                SearchExhausted, CornerFilterEmpty):
            # overlapping, engulfing, or unboundable sections: the whole
            # direction set is blocked in this plane
            pair = None
            psi = np.pi
            theta_b = states["theta_p"]
            intersecting = True
        try:
            y, v_hat_r, v_hat_theta = y_components(psi, theta_b, states["theta_p"],
                                                   states["v_r"], states["v_theta"])
        except ZeroRelativeSpeed:
            # relative geometry frozen in this plane: disjoint bodies stay
            # disjoint, so the plane cannot flag a collision
            y, v_hat_r, v_hat_theta = float("inf"), 0.0, 0.0
        planes.append(PlanarCone(
            azimuth=frame.azimuth,
            theta_p=states["theta_p"],
            psi=psi,
            theta_b=theta_b,
            v_r=states["v_r"],
            v_theta=states["v_theta"],
            v_hat_r=v_hat_r,
            v_hat_theta=v_hat_theta,
            y=y,
            heading_a=states["heading_a"],
            heading_b=states["heading_b"],
            intersecting=intersecting,
            tangents=pair,
        ))
    return Cone3D(frames=tuple(frames), planes=tuple(planes), separation=separation)


def _probe_crossing(line: np.ndarray, depth: float) -> float:
    """u-coordinate where a tangent line crosses the transverse probe v=depth."""
    if abs(line[0]) < 1e-12 * (abs(line[1]) + abs(line[2]) / (1.0 + depth)):
        raise ParallelTangents("tangent parallel to the probe line")
    return float(-(line[1] * depth + line[2]) / line[0])


def cross_section_area(cone: Cone3D, depth: float | None = None) -> float:
    """Area of the cone's transverse cross-section at a given depth.

    In each plane the two tangent lines are cut with the transverse probe
    line at the requested depth along the center line, giving a chord of the
    section; the chords' half-extents at each plane azimuth (and its
    opposite) become the radii of a polygon whose area approximates the true
    section.  An intersecting plane, or a tangent running parallel to the
    probe, makes the section unbounded.

    Args:
        cone: Evaluated 3-D cone.
        depth: Distance along the center line; defaults to the body
            separation.

    Returns:
        Polygon area, or inf for unbounded sections.
    """
    if depth is None:
        depth = cone.separation
    n = len(cone.planes)
    radii_pos = np.empty(n)
    radii_neg = np.empty(n)
    for i, plane in enumerate(cone.planes):
        if plane.intersecting or plane.tangents is None:
            return float("inf")
        try:
            u1 = _probe_crossing(plane.tangents.lines[0], depth)
            u2 = _probe_crossing(plane.tangents.lines[1], depth)
        except ParallelTangents:
            return float("inf")
        lo, hi = sorted((u1, u2))
        radii_pos[i] = hi
        radii_neg[i] = -lo
    radii = np.concatenate([radii_pos, radii_neg])
    step = np.pi / n
    area = 0.0
    for k in range(2 * n):
        area += 0.5 * radii[k] * radii[(k + 1) % (2 * n)] * np.sin(step)
    return float(area)
