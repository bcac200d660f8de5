"""Common-tangent and intersection machinery for planar conics.

All functions work on 3x3 homogeneous conic matrices in a shared plane frame.
Lines are homogeneous triples (l1, l2, l3) with l . (x, y, 1) = 0; every
returned line is normalized to a unit (l1, l2) normal with the first body's
center on its positive side, and the pair is ordered [left, right] as seen
looking from the first body's center toward the second's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CloudIntersectsEllipse,
    CornerFilterEmpty,
    NoRealIntersection,
    NumericalBreakdown,
    PointInsideEllipse,
    SearchExhausted,
)
from .planes import dual_conic

__all__ = [
    "TangentPair",
    "conic_center",
    "corner_points",
    "inner_common_tangents",
    "point_tangents_to_ellipse",
    "tangents_ellipse_vs_clipped",
    "tangents_ellipse_vs_pointcloud",
]

_EIG_IMAG_RTOL = 1e-9
_DIAG_RTOL = 1e-7
_SOLVE_RTOL = 1e-7
_SIDE_ATOL = 1e-7


@dataclass(frozen=True)
class TangentPair:
    """Two tangent lines bounding a planar collision cone.

    Attributes:
        lines: (2, 3) normalized homogeneous lines, rows ordered [left, right].
        touch_a: (2, 2) contact points on the first body's section.
        touch_b: (2, 2) contact points on the second body (surface touch
            points, rim corners, or cloud points depending on the body kind).
    """

    lines: np.ndarray
    touch_a: np.ndarray
    touch_b: np.ndarray


def conic_center(m: np.ndarray) -> np.ndarray:
    """Center of a central conic: the pole of the line at infinity."""
    m = np.asarray(m, dtype=float)
    return np.linalg.solve(m[:2, :2], -m[:2, 2])


def _homog(points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return np.hstack([points, np.ones((points.shape[0], 1))])


def _normalize_line(line: np.ndarray) -> np.ndarray:
    n = np.hypot(line[0], line[1])
    if n < 1e-300:
        raise NumericalBreakdown("line with vanishing normal")
    return line / n


def _signed_angle(reference: np.ndarray, vec: np.ndarray) -> float:
    """Angle of `vec` relative to `reference`, positive counterclockwise."""
    return float(np.arctan2(reference[0] * vec[1] - reference[1] * vec[0],
                            reference @ vec))


def _orient_and_order(lines, touch_a, touch_b, center_a, center_b) -> TangentPair:
    """Canonicalize signs and sort a tangent pair into [left, right]."""
    los = center_b - center_a
    out_lines, angles = [], []
    for line in lines:
        line = _normalize_line(np.asarray(line, dtype=float))
        if line @ np.append(center_a, 1.0) < 0:
            line = -line
        out_lines.append(line)
    for line, ta, tb in zip(out_lines, touch_a, touch_b):
        angles.append(_signed_angle(los, np.asarray(tb) - np.asarray(ta)))
    order = np.argsort(angles)[::-1]  # most counterclockwise (left) first
    return TangentPair(
        lines=np.array([out_lines[i] for i in order]),
        touch_a=np.asarray(touch_a, dtype=float)[order],
        touch_b=np.asarray(touch_b, dtype=float)[order],
    )


def _simultaneous_diagonalization(m1: np.ndarray, m2: np.ndarray):
    """Basis U with U^T m1 U and U^T m2 U both diagonal, plus the diagonals.

    Raises:
        NoRealIntersection: If the pencil's eigenvalues are complex, which
            happens when the underlying tangency/intersection problem has no
            full real solution.
        NumericalBreakdown: If the eigenbasis fails to diagonalize both forms
            (near-defective pencil).
    """
    t, u = np.linalg.eig(np.linalg.solve(m2, m1))
    if np.any(np.abs(t.imag) > _EIG_IMAG_RTOL * (1.0 + np.abs(t))):
        raise NoRealIntersection("conic pencil has complex eigenvalues")
    if np.any(np.abs(u.imag) > 1e-6):
        raise NoRealIntersection("conic pencil eigenbasis is not real")
    u = u.real / np.linalg.norm(u.real, axis=0)
    b1 = u.T @ m1 @ u
    b2 = u.T @ m2 @ u
    scale = np.abs(np.diag(b1)).max() + np.abs(np.diag(b2)).max()
    off = max(np.abs(b1 - np.diag(np.diag(b1))).max(),
              np.abs(b2 - np.diag(np.diag(b2))).max())
    if off > _DIAG_RTOL * scale:
        raise NumericalBreakdown(f"pencil not diagonalized: off/scale = {off / scale:.2e}")
    return u, np.diag(b1).copy(), np.diag(b2).copy()


def _null_combinations(u, d1, d2) -> np.ndarray:
    """All real triples l = U (x, y, 1) with l^T M1 l = l^T M2 l = 0.

    In the diagonalizing basis both forms reduce to weighted sums of squares,
    so the two conditions are a 2x2 linear system in (x^2, y^2); each choice
    of which coordinate carries the inhomogeneous term yields the same
    solution set, so the first choice with a nonnegative solution wins.
    """
    for k in range(3):
        i, j = [m for m in range(3) if m != k]
        a = np.array([[d1[i], d1[j]], [d2[i], d2[j]]])
        rhs = -np.array([d1[k], d2[k]])
        det = np.linalg.det(a)
        if abs(det) < 1e-12 * (np.abs(a).max() ** 2 + 1e-300):
            continue
        xx, yy = np.linalg.solve(a, rhs)
        tol = _SOLVE_RTOL * (1.0 + abs(xx) + abs(yy))
        if xx < -tol or yy < -tol:
            continue
        x = np.sqrt(max(xx, 0.0))
        y = np.sqrt(max(yy, 0.0))
        combos = [(x, y), (x, -y), (-x, y), (-x, -y)]
        sols = np.array([u[:, i] * cx + u[:, j] * cy + u[:, k] for cx, cy in combos])
        # drop duplicates arising from x = 0 or y = 0
        keep = []
        for s in sols:
            if not any(np.linalg.norm(s - s2) < 1e-9 * np.linalg.norm(s) for s2 in keep):
                keep.append(s)
        return np.array(keep)
    raise NoRealIntersection("no real solution for any coordinate split")


def inner_common_tangents(m_a: np.ndarray, m_b: np.ndarray) -> TangentPair:
    """Inner common tangents of two disjoint ellipses.

    Works in the dual: common tangents are the shared null lines of both dual
    forms, found by simultaneous diagonalization of the dual pencil.  The two
    inner tangents are the ones separating the section centers.

    Args:
        m_a: 3x3 conic matrix of the first (own-body) ellipse.
        m_b: 3x3 conic matrix of the second ellipse.

    Returns:
        TangentPair with touch points on both ellipses (poles of the lines).

    Raises:
        NoRealIntersection: If the ellipses overlap or one contains the
            other, so no separating tangent pair exists.
    """
    m_a = np.asarray(m_a, dtype=float)
    m_b = np.asarray(m_b, dtype=float)
    dual_a = dual_conic(m_a)
    dual_b = dual_conic(m_b)
    u, d1, d2 = _simultaneous_diagonalization(dual_a, dual_b)
    lines = _null_combinations(u, d1, d2)

    for line in lines:
        for dual in (dual_a, dual_b):
            res = abs(line @ dual @ line)
            if res > 1e-6 * np.linalg.norm(dual) * (line @ line):
                raise NumericalBreakdown(f"tangency residual {res:.2e}")

    center_a = conic_center(m_a)
    center_b = conic_center(m_b)
    ha = np.append(center_a, 1.0)
    hb = np.append(center_b, 1.0)
    inner = [line for line in lines if (line @ ha) * (line @ hb) < 0]
    if len(inner) != 2:
        raise NoRealIntersection(f"{len(inner)} separating tangents, need 2")

    touch_a, touch_b = [], []
    for line in inner:
        pa = dual_a @ line
        pb = dual_b @ line
        touch_a.append(pa[:2] / pa[2])
        touch_b.append(pb[:2] / pb[2])
    return _orient_and_order(inner, touch_a, touch_b, center_a, center_b)


def _split_line_pair(d: np.ndarray):
    """Split a rank-2 conic (a crossing line pair) into its two lines."""
    # adjugate via cofactors: d is near-singular here by construction, so
    # det * inv would amplify noise
    b = np.array([[d[1, 1] * d[2, 2] - d[1, 2] * d[2, 1],
                   d[0, 2] * d[2, 1] - d[0, 1] * d[2, 2],
                   d[0, 1] * d[1, 2] - d[0, 2] * d[1, 1]],
                  [d[1, 2] * d[2, 0] - d[1, 0] * d[2, 2],
                   d[0, 0] * d[2, 2] - d[0, 2] * d[2, 0],
                   d[0, 2] * d[1, 0] - d[0, 0] * d[1, 2]],
                  [d[1, 0] * d[2, 1] - d[1, 1] * d[2, 0],
                   d[0, 1] * d[2, 0] - d[0, 0] * d[2, 1],
                   d[0, 0] * d[1, 1] - d[0, 1] * d[1, 0]]]).T
    b = 0.5 * (b + b.T)
    i = int(np.argmax(np.abs(np.diag(b))))
    if b[i, i] > -1e-14 * (np.abs(d).max() ** 2 + 1e-300):
        return None  # complex line pair
    p = b[:, i] / np.sqrt(-b[i, i])
    cross = np.array([[0.0, p[2], -p[1]], [-p[2], 0.0, p[0]], [p[1], -p[0], 0.0]])
    c = d + cross
    idx = np.unravel_index(np.argmax(np.abs(c)), c.shape)
    if abs(c[idx]) < 1e-12 * (np.abs(d).max() + 1e-300):
        return None
    return c[idx[0], :].copy(), c[:, idx[1]].copy()


def _line_conic_points(line: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Real intersection points of a homogeneous line with a conic."""
    line = _normalize_line(line)
    n = line[:2]
    p0 = -line[2] * n
    d = np.array([-n[1], n[0]])
    a = d @ m[:2, :2] @ d
    bcoef = d @ (m[:2, :2] @ p0 + m[:2, 2])
    c = np.append(p0, 1.0) @ m @ np.append(p0, 1.0)
    if abs(a) < 1e-14 * (np.abs(m).max() + 1e-300):
        if abs(bcoef) < 1e-300:
            return np.empty((0, 2))
        return (p0 + (-c / (2 * bcoef)) * d)[None, :]
    disc = bcoef * bcoef - a * c
    if disc < 0:
        return np.empty((0, 2))
    root = np.sqrt(disc)
    return np.array([p0 + ((-bcoef + root) / a) * d,
                     p0 + ((-bcoef - root) / a) * d])


def corner_points(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Real intersection points of two conics, shape (k, 2) with k <= 4.

    Every degenerate member of the pencil m1 - t*m2 is a line pair through
    the intersection points, so splitting one real such member and cutting
    its lines with either conic recovers all real intersections -- including
    the configurations with only two real points, where the pure
    eigenvector-combination route fails.
    """
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    s1 = np.abs(m1).max()
    s2 = np.abs(m2).max()
    # cubic det(m1 - t m2) via four-point interpolation
    ts = np.array([0.0, 1.0, -1.0, 2.0])
    vals = np.array([np.linalg.det(m1 - t * m2) for t in ts])
    poly = np.polyfit(ts, vals, 3)
    roots = np.roots(poly)
    found: list[np.ndarray] = []
    for t in roots:
        if abs(t.imag) > 1e-8 * (1.0 + abs(t)):
            continue
        d = m1 - t.real * m2
        split = _split_line_pair(d)
        if split is None:
            continue
        for line in split:
            if np.hypot(line[0], line[1]) < 1e-12 * (np.abs(line).max() + 1e-300):
                continue  # line at infinity
            for p in _line_conic_points(line, m2):
                h = np.append(p, 1.0)
                scale = 1.0 + p @ p
                if abs(h @ m1 @ h) > 1e-7 * s1 * scale:
                    continue
                if abs(h @ m2 @ h) > 1e-7 * s2 * scale:
                    continue
                if not any(np.linalg.norm(p - q) < 1e-7 * np.sqrt(scale) for q in found):
                    found.append(p)
    return np.array(found) if found else np.empty((0, 2))


def point_tangents_to_ellipse(m: np.ndarray, point) -> tuple[np.ndarray, np.ndarray]:
    """Both tangent lines to an ellipse through an exterior point.

    The lines through the point form a pencil l(s) = l1 + s*l2; tangency is a
    quadratic in s via the dual form.

    Args:
        m: 3x3 conic matrix of the ellipse.
        point: (2,) exterior point.

    Returns:
        (lines, touches): (2, 3) normalized lines and (2, 2) contact points.

    Raises:
        PointInsideEllipse: If the point lies strictly inside, where no real
            tangent exists.
    """
    m = np.asarray(m, dtype=float)
    p = np.asarray(point, dtype=float)
    dual = dual_conic(m)
    l1 = np.array([1.0, 0.0, -p[0]])
    l2 = np.array([0.0, 1.0, -p[1]])
    a = l2 @ dual @ l2
    b = l1 @ dual @ l2
    c = l1 @ dual @ l1
    scale = np.linalg.norm(dual) * (1.0 + p @ p)
    if abs(a) < 1e-13 * scale:
        # the horizontal line through p is itself one of the tangents
        lines = [l2, l1 + (-c / (2 * b)) * l2]
    else:
        disc = b * b - a * c
        if disc < -1e-13 * scale * scale:
            raise PointInsideEllipse(f"no real tangent from {p}")
        root = np.sqrt(max(disc, 0.0))
        lines = [l1 + ((-b + root) / a) * l2, l1 + ((-b - root) / a) * l2]
    out_lines, touches = [], []
    for line in lines:
        line = _normalize_line(line)
        pole = dual @ line
        out_lines.append(line)
        touches.append(pole[:2] / pole[2])
    return np.array(out_lines), np.array(touches)


def _one_side_of(line: np.ndarray, points: np.ndarray, atol: float):
    """Whether all points lie on a single closed side of a normalized line."""
    vals = _homog(points) @ line
    return bool(vals.min() >= -atol or vals.max() <= atol)


def tangents_ellipse_vs_clipped(
    m_a: np.ndarray,
    m_b: np.ndarray,
    m_delim: np.ndarray,
) -> TangentPair:
    """Cone tangents against a body whose section is clipped by a delimiter.

    Starts from the inner common tangents with the unclipped section.  A
    tangent whose contact point was carved away (the delimiter form is
    negative there) no longer touches real surface; it is replaced by a line
    through a rim corner -- an intersection of the section with the delimiter
    curve -- tangent to the own-body ellipse, chosen so the section centers
    stay separated, every rim corner sits on one side, and the replacement is
    the angular extreme for its side.

    Args:
        m_a: Own-body section ellipse.
        m_b: Other body's primary section ellipse (unclipped).
        m_delim: Delimiter section conic, oriented negative inside the
            carved-away region.

    Returns:
        TangentPair; replaced rows carry the rim corner as touch_b.

    Raises:
        CornerFilterEmpty: If a carved tangent has no acceptable rim
            replacement in this plane.
    """
    base = inner_common_tangents(m_a, m_b)
    hb = _homog(base.touch_b)
    m_delim = np.asarray(m_delim, dtype=float)
    dvals = np.einsum("ni,ij,nj->n", hb, m_delim, hb)
    tol = 1e-9 * np.abs(m_delim).max() * (1.0 + np.einsum("ni,ni->n", base.touch_b, base.touch_b))
    valid = dvals >= -tol
    if valid.all():
        return base

    corners = corner_points(m_b, m_delim)
    if corners.shape[0] == 0:
        raise CornerFilterEmpty("carved tangent but no rim corners in this plane")

    center_a = conic_center(m_a)
    center_b = conic_center(m_b)
    ha = np.append(center_a, 1.0)
    hcb = np.append(center_b, 1.0)
    los = center_b - center_a
    point_scale = 1.0 + float(np.abs(corners).max())

    candidates = []  # (angle, line, touch_a, corner)
    for corner in corners:
        lines, touches = point_tangents_to_ellipse(m_a, corner)
        for line, touch in zip(lines, touches):
            if (line @ ha) * (line @ hcb) >= 0:
                continue
            if not _one_side_of(line, corners, _SIDE_ATOL * point_scale):
                continue
            ang = _signed_angle(los, corner - touch)
            candidates.append((ang, line, touch, corner))
    if not candidates:
        raise CornerFilterEmpty("no rim tangent separates the centers cleanly")

    lines = base.lines.copy()
    touch_a = base.touch_a.copy()
    touch_b = base.touch_b.copy()
    for row in range(2):
        if valid[row]:
            continue
        # row 0 is the left tangent: replace with the most counterclockwise
        # surviving candidate; row 1 (right) with the most clockwise
        pick = max(candidates, key=lambda c: c[0]) if row == 0 else \
            min(candidates, key=lambda c: c[0])
        lines[row] = pick[1]
        touch_a[row] = pick[2]
        touch_b[row] = pick[3]
    return _orient_and_order(lines, touch_a, touch_b, center_a, center_b)


def tangents_ellipse_vs_pointcloud(
    m_a: np.ndarray,
    points: np.ndarray,
    max_points: int = 256,
) -> TangentPair:
    """Cone tangents between an ellipse and a planar point cloud.

    Candidate lines are tangents to the ellipse through individual cloud
    points.  Points are ordered by bearing about the ellipse center and the
    search runs from each angular extreme inward, accepting the first line
    that separates the ellipse center from the cloud centroid while leaving
    the whole cloud on one side.

    Args:
        m_a: Own-body section ellipse.
        points: (n, 2) cloud points in the same plane frame, n >= 2.
        max_points: Evenly thinned search cap; the angular extremes are
            always retained.

    Returns:
        TangentPair with the defining cloud points as touch_b.

    Raises:
        CloudIntersectsEllipse: If any cloud point is inside the ellipse.
        SearchExhausted: If no cloud point yields an acceptable tangent for
            one of the sides.
    """
    m_a = np.asarray(m_a, dtype=float)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] < 2:
        raise SearchExhausted(f"need at least 2 cloud points, got {pts.shape[0]}")
    if np.trace(m_a[:2, :2]) < 0:
        m_a = -m_a
    h = _homog(pts)
    vals = np.einsum("ni,ij,nj->n", h, m_a, h)
    scale = np.abs(m_a).max() * (1.0 + np.einsum("ni,ni->n", pts, pts))
    if np.any(vals < 1e-9 * scale):
        raise CloudIntersectsEllipse("cloud reaches the own-body section")

    center_a = conic_center(m_a)
    centroid = pts.mean(axis=0)
    ref = centroid - center_a
    rel = pts - center_a
    bearings = np.arctan2(ref[0] * rel[:, 1] - ref[1] * rel[:, 0],
                          rel @ ref)
    order = np.argsort(bearings)
    pts = pts[order]
    if pts.shape[0] > max_points:
        idx = np.unique(np.round(np.linspace(0, pts.shape[0] - 1, max_points)).astype(int))
        pts = pts[idx]

    ha = np.append(center_a, 1.0)
    hc = np.append(centroid, 1.0)
    point_scale = 1.0 + float(np.abs(pts).max())

    def search(from_left: bool):
        indices = range(pts.shape[0] - 1, -1, -1) if from_left else range(pts.shape[0])
        for i in indices:
            p = pts[i]
            try:
                lines, touches = point_tangents_to_ellipse(m_a, p)
            except PointInsideEllipse:
                continue
            best = None
            for line, touch in zip(lines, touches):
                if (line @ ha) * (line @ hc) >= 0:
                    continue
                if not _one_side_of(line, pts, _SIDE_ATOL * point_scale):
                    continue
                ang = _signed_angle(centroid - center_a, p - touch)
                if best is None or (from_left and ang > best[0]) or \
                        (not from_left and ang < best[0]):
                    best = (ang, line, touch, p)
            if best is not None:
                return best
        side = "left" if from_left else "right"
        raise SearchExhausted(f"no {side}-side tangent over {pts.shape[0]} cloud points")

    left = search(True)
    right = search(False)
    return _orient_and_order([left[1], right[1]], [left[2], right[2]],
                             [left[3], right[3]], center_a, centroid)
