"""Quadric surfaces in homogeneous coordinates and composite solids built from them.

A quadric is represented by a symmetric 4x4 matrix Q acting on homogeneous
points x = (px, py, pz, 1): the surface is {x : x^T Q x = 0}.  Sign conventions
produced by build_quadric:

  * ellipsoid / one-sheet hyperboloid: the form is negative at the center
    (negative inside the bounded region / tube),
  * two-sheet hyperboloid: the form is positive at the center and negative
    inside the two lobes.

Composites pair an ellipsoid with a delimiting hyperboloid: a biconcave solid
is an ellipsoid with the two-sheet lobes carved out of it, a biconvex solid is
the intersection of an ellipsoid with a one-sheet tube.  Membership is always
reported relative to the occupied solid.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BadRotation, MalformedComposite, NonPositiveAxis

SURFACE_RTOL = 1e-9
SYMMETRY_RTOL = 1e-12


class QuadricClass(Enum):
    ELLIPSOID = "ellipsoid"
    ONE_SHEET_HYPERBOLOID = "one_sheet_hyperboloid"
    TWO_SHEET_HYPERBOLOID = "two_sheet_hyperboloid"
    DEGENERATE = "degenerate"


class CompositeKind(Enum):
    PURE = "pure"
    CLIPPED_ELLIPSOID = "clipped_ellipsoid"      # ellipsoid surface outside the lobes
    CLIPPED_HYPERBOLOID = "clipped_hyperboloid"  # two-sheet caps inside the ellipsoid
    BICONCAVE = "biconcave"
    BICONVEX = "biconvex"


class Membership(Enum):
    INTERIOR = "interior"
    SURFACE = "surface"
    EXTERIOR = "exterior"


@dataclass(frozen=True, eq=False)
class QuadricMatrix:
    """Symmetric homogeneous quadric matrix."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"quadric matrix must be 4x4, got {m.shape}")
        scale = np.linalg.norm(m)
        if scale == 0.0:
            raise ValueError("quadric matrix is zero")
        if np.linalg.norm(m - m.T) > SYMMETRY_RTOL * scale:
            raise ValueError("quadric matrix is not symmetric")
        object.__setattr__(self, "m", 0.5 * (m + m.T))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.m))


@dataclass(frozen=True, eq=False)
class CompositeShape:
    """A solid body: a primary quadric plus an optional delimiting quadric.

    center is the nominal body center (the primary quadric's center for pure
    shapes); it anchors the line-of-sight used by the plane family.
    """

    kind: CompositeKind
    primary: QuadricMatrix
    delimiter: QuadricMatrix | None
    center: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))


def evaluate(q: QuadricMatrix, point: np.ndarray) -> float | np.ndarray:
    """Evaluate the quadratic form at one point (3,) or many points (N, 3)."""
    p = np.asarray(point, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    h = np.hstack([p, np.ones((p.shape[0], 1))])
    vals = np.einsum("ni,ij,nj->n", h, q.m, h)
    return float(vals[0]) if single else vals


def quadric_center(q: QuadricMatrix) -> np.ndarray:
    """Center of a central quadric: the solution of Q3 c = -q."""
    return np.linalg.solve(q.m[:3, :3], -q.m[:3, 3])


def build_quadric(
    center: np.ndarray,
    semi_axes: np.ndarray,
    rotation: np.ndarray,
    kind: QuadricClass,
) -> QuadricMatrix:
    """Build a quadric matrix from geometric parameters.

    Args:
        center: 3-vector position of the quadric center.
        semi_axes: (a, b, c) > 0.  For hyperboloids the third entry is the
            parameter of the local z axis (vertex distance for a two-sheet,
            transverse scale for a one-sheet); the surface is canonical in the
            local frame and mapped through rotation/center.
        rotation: 3x3 proper rotation, local frame -> world.
        kind: ELLIPSOID, ONE_SHEET_HYPERBOLOID or TWO_SHEET_HYPERBOLOID.

    Returns:
        QuadricMatrix with the module's sign conventions.
    """
    center = np.asarray(center, dtype=float).reshape(3)
    axes = np.asarray(semi_axes, dtype=float).reshape(3)
    rot = np.asarray(rotation, dtype=float).reshape(3, 3)
    if np.any(axes <= 0.0):
        raise NonPositiveAxis(f"semi-axes must be positive, got {axes}")
    if np.linalg.norm(rot @ rot.T - np.eye(3)) > 1e-9 or np.linalg.det(rot) < 0.0:
        raise BadRotation("orientation must be a proper rotation matrix")

    inv2 = 1.0 / axes**2
    if kind is QuadricClass.ELLIPSOID:
        diag, const = np.array([inv2[0], inv2[1], inv2[2]]), -1.0
    elif kind is QuadricClass.ONE_SHEET_HYPERBOLOID:
        diag, const = np.array([inv2[0], inv2[1], -inv2[2]]), -1.0
    elif kind is QuadricClass.TWO_SHEET_HYPERBOLOID:
        diag, const = np.array([inv2[0], inv2[1], -inv2[2]]), 1.0
    else:
        raise ValueError(f"cannot build a quadric of kind {kind}")

    q3 = rot @ np.diag(diag) @ rot.T
    q = np.empty((4, 4))
    q[:3, :3] = q3
    q[:3, 3] = -q3 @ center
    q[3, :3] = q[:3, 3]
    q[3, 3] = center @ q3 @ center + const
    return QuadricMatrix(q)


def classify_quadric(q: QuadricMatrix) -> QuadricClass:
    """Classify a central quadric by the eigenvalue signature of its 3x3 block.

    The matrix is first flipped in sign, if needed, so the leading block has at
    least two positive eigenvalues; the sign of the form at the center then
    separates the remaining classes.  Testing the center value rather than
    det(Q) directly uses the factorization det(Q) = det(Q3) * center_val, whose
    two factors stay well scaled even for quadrics far from the origin (where
    the raw 4x4 determinant drowns in the norm of the translation terms).
    """
    m = q.m
    eigvals = np.linalg.eigvalsh(m[:3, :3])
    block_scale = np.max(np.abs(eigvals))
    if block_scale == 0 or np.min(np.abs(eigvals)) < 1e-10 * block_scale:
        return QuadricClass.DEGENERATE  # paraboloid / cylinder family
    if np.sum(eigvals > 0) < 2:
        m = -m
        eigvals = -eigvals

    n_neg = int(np.sum(eigvals < 0))
    center = np.linalg.solve(m[:3, :3], -m[:3, 3])
    h = np.append(center, 1.0)
    center_val = h @ m @ h
    tol = 1e-10 * block_scale * (1.0 + center @ center)
    if n_neg == 0:
        # real ellipsoid only if the form is negative at the center
        return QuadricClass.ELLIPSOID if center_val < -tol else QuadricClass.DEGENERATE
    if abs(center_val) <= tol:
        return QuadricClass.DEGENERATE  # cone
    if center_val < 0:
        return QuadricClass.ONE_SHEET_HYPERBOLOID  # det(Q) > 0 branch
    return QuadricClass.TWO_SHEET_HYPERBOLOID      # det(Q) < 0 branch


def _oriented(q: QuadricMatrix, center_sign: float) -> QuadricMatrix:
    """Return q scaled so the form at its own center has the requested sign."""
    c = quadric_center(q)
    h = np.append(c, 1.0)
    val = h @ q.m @ h
    if val * center_sign < 0:
        return QuadricMatrix(-q.m)
    return q


_KIND_CLASSES = {
    CompositeKind.CLIPPED_ELLIPSOID: QuadricClass.TWO_SHEET_HYPERBOLOID,
    CompositeKind.BICONCAVE: QuadricClass.TWO_SHEET_HYPERBOLOID,
    CompositeKind.BICONVEX: QuadricClass.ONE_SHEET_HYPERBOLOID,
    CompositeKind.CLIPPED_HYPERBOLOID: QuadricClass.TWO_SHEET_HYPERBOLOID,
}


def carve_oriented_delimiter(shape: CompositeShape) -> QuadricMatrix:
    """A composite's delimiter, signed negative inside the carved-away region.

    For the two-sheet kinds the carve is the lobes (center side positive);
    for the biconvex kind the carve is everything outside the waist tube, so
    the one-sheet form is likewise flipped center-positive.
    """
    if shape.delimiter is None:
        raise MalformedComposite(f"{shape.kind.value} shape has no delimiter")
    return _oriented(shape.delimiter, +1.0)


def composite(
    kind: CompositeKind,
    primary: QuadricMatrix,
    delimiter: QuadricMatrix | None = None,
    center: np.ndarray | None = None,
) -> CompositeShape:
    """Assemble a CompositeShape, validating class consistency for the kind.

    For CLIPPED_HYPERBOLOID the primary is still the ellipsoid and the
    delimiter the two-sheet hyperboloid; the kind controls which surface
    portions count as boundary.
    """
    pc = classify_quadric(primary)
    if kind is CompositeKind.PURE:
        if delimiter is not None:
            raise MalformedComposite("pure shapes take no delimiter")
        if pc is QuadricClass.DEGENERATE:
            raise MalformedComposite("primary quadric is degenerate")
    else:
        if delimiter is None:
            raise MalformedComposite(f"{kind.value} requires a delimiter quadric")
        if pc is not QuadricClass.ELLIPSOID:
            raise MalformedComposite(f"{kind.value} primary must be an ellipsoid, got {pc.value}")
        dc = classify_quadric(delimiter)
        want = _KIND_CLASSES[kind]
        if dc is not want:
            raise MalformedComposite(f"{kind.value} delimiter must be {want.value}, got {dc.value}")
    if center is None:
        center = quadric_center(primary)
    return CompositeShape(kind=kind, primary=primary, delimiter=delimiter, center=center)


def _surface_tol(q: QuadricMatrix, points: np.ndarray) -> np.ndarray:
    p = np.atleast_2d(points)
    return SURFACE_RTOL * q.norm * (1.0 + np.einsum("ni,ni->n", p, p))


def composite_membership(shape: CompositeShape, point: np.ndarray) -> Membership | np.ndarray:
    """Classify a point (or (N,3) points) against the composite solid.

    INTERIOR means strictly inside the occupied material; SURFACE is within
    the scaled tolerance of the bounding surface; everything else (including
    the carved-out dimples of a biconcave solid) is EXTERIOR.
    """
    p = np.asarray(point, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)

    if shape.kind is CompositeKind.PURE:
        two_sheet = classify_quadric(shape.primary) is QuadricClass.TWO_SHEET_HYPERBOLOID
        # orient so the occupied material is where the form is negative
        # (bounded region / tube interior / the two lobes respectively)
        q = _oriented(shape.primary, +1.0 if two_sheet else -1.0)
        v = evaluate(q, p)
        tol = _surface_tol(q, p)
        out = np.where(np.abs(v) <= tol, Membership.SURFACE,
                       np.where(v < 0, Membership.INTERIOR, Membership.EXTERIOR))
        return out[0] if single else out

    qe = _oriented(shape.primary, -1.0)
    e = evaluate(qe, p)
    te = _surface_tol(qe, p)

    if shape.kind is CompositeKind.BICONVEX:
        qd = _oriented(shape.delimiter, -1.0)
        d = evaluate(qd, p)  # negative inside the tube = material side
        td = _surface_tol(qd, p)
        interior = (e < -te) & (d < -td)
        on_e = (np.abs(e) <= te) & (d <= td)
        on_d = (np.abs(d) <= td) & (e <= te)
        surface = on_e | on_d
    else:
        qd = _oriented(shape.delimiter, +1.0)
        d = evaluate(qd, p)  # negative inside the lobes = carved side
        td = _surface_tol(qd, p)
        interior = (e < -te) & (d > td)
        on_e = (np.abs(e) <= te) & (d >= -td)
        on_d = (np.abs(d) <= td) & (e <= te)
        if shape.kind is CompositeKind.CLIPPED_ELLIPSOID:
            surface = on_e
        elif shape.kind is CompositeKind.CLIPPED_HYPERBOLOID:
            surface = on_d
        else:
            surface = on_e | on_d

    out = np.where(surface, Membership.SURFACE,
                   np.where(interior, Membership.INTERIOR, Membership.EXTERIOR))
    return out[0] if single else out


def _principal_frame(q: QuadricMatrix, center_sign: float):
    """Decompose an oriented quadric into (center, eigvecs, eigvals, center value)."""
    q = _oriented(q, center_sign)
    c = quadric_center(q)
    lam, vec = np.linalg.eigh(q.m[:3, :3])
    h = np.append(c, 1.0)
    f0 = h @ q.m @ h
    return c, vec, lam, f0


def surface_samples(shape: CompositeShape, count: int, rng: np.random.Generator) -> np.ndarray:
    """Sample approximately uniform points on the composite's bounding surface.

    Used for disjointness / contact checks; coverage matters more than exact
    uniformity.  Returns (count, 3).
    """
    if shape.kind is CompositeKind.PURE:
        return _sample_ellipsoid(shape.primary, count, rng)

    samples = []
    want_e = count if shape.kind is CompositeKind.CLIPPED_ELLIPSOID else max(count // 2, 1)
    cap_kind = shape.kind is not CompositeKind.BICONVEX

    ce, ve, lame, f0e = _principal_frame(shape.primary, -1.0)
    e_axes = np.sqrt(-f0e / lame)
    reach = np.linalg.norm(quadric_center(shape.delimiter) - ce) + e_axes.max()

    guard = 0
    while sum(len(s) for s in samples) < count and guard < 200:
        guard += 1
        # ellipsoid portion, keeping points outside (biconcave) / inside (biconvex)
        # the delimiting region
        pts = _sample_ellipsoid(shape.primary, max(want_e, 64), rng)
        keep = _outside_delimiter(shape, pts) if cap_kind else ~_outside_delimiter(shape, pts)
        if shape.kind is CompositeKind.CLIPPED_HYPERBOLOID:
            keep = np.zeros(len(pts), dtype=bool)
        samples.append(pts[keep])
        # delimiter portion clipped to the ellipsoid
        if shape.kind is not CompositeKind.CLIPPED_ELLIPSOID:
            dpts = _sample_delimiter_patch(shape, max(count // 2, 64), reach, rng)
            if len(dpts):
                inside_e = evaluate(_oriented(shape.primary, -1.0), dpts) < 0
                samples.append(dpts[inside_e])
    allpts = np.vstack([s for s in samples if len(s)]) if samples else np.empty((0, 3))
    if len(allpts) == 0:
        raise MalformedComposite("composite surface sampling produced no points")
    if len(allpts) >= count:
        return allpts[:count]
    # pad by repeating (coverage already achieved; exact count keeps callers simple)
    idx = rng.integers(0, len(allpts), size=count - len(allpts))
    return np.vstack([allpts, allpts[idx]])


def _sample_ellipsoid(q: QuadricMatrix, count: int, rng: np.random.Generator) -> np.ndarray:
    c, vec, lam, f0 = _principal_frame(q, -1.0)
    axes = np.sqrt(-f0 / lam)
    u = rng.normal(size=(count, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return c + (u * axes) @ vec.T


def _outside_delimiter(shape: CompositeShape, pts: np.ndarray) -> np.ndarray:
    """True where a point is outside the delimiting region (not carved)."""
    if shape.kind is CompositeKind.BICONVEX:
        qd = _oriented(shape.delimiter, -1.0)
        return evaluate(qd, pts) > 0  # outside the tube
    qd = _oriented(shape.delimiter, +1.0)
    return evaluate(qd, pts) > 0      # outside the lobes


def _sample_delimiter_patch(
    shape: CompositeShape, count: int, reach: float, rng: np.random.Generator
) -> np.ndarray:
    """Sample the delimiter surface over the span that can reach the ellipsoid."""
    sign = -1.0 if shape.kind is CompositeKind.BICONVEX else +1.0
    c, vec, lam, f0 = _principal_frame(shape.delimiter, sign)
    order = np.argsort(lam)
    neg_i = order[0]
    if lam[neg_i] >= 0:
        return np.empty((0, 3))
    pos_i = [i for i in range(3) if i != neg_i]
    axis = vec[:, neg_i]
    e1, e2 = vec[:, pos_i[0]], vec[:, pos_i[1]]
    l1, l2, l3 = lam[pos_i[0]], lam[pos_i[1]], lam[neg_i]

    if sign > 0:
        # two-sheet lobes: |z| >= vertex, ring radius^2 factor g = -l3 z^2 - f0
        vertex = np.sqrt(f0 / -l3)
        if vertex >= reach:
            return np.empty((0, 3))
        z = rng.uniform(vertex, reach, size=count)
        z *= rng.choice([-1.0, 1.0], size=count)
    else:
        z = rng.uniform(-reach, reach, size=count)
    g = -l3 * z**2 - f0
    g = np.maximum(g, 0.0)
    t = rng.uniform(0.0, 2.0 * np.pi, size=count)
    x1 = np.sqrt(g / l1) * np.cos(t)
    x2 = np.sqrt(g / l2) * np.sin(t)
    return c + np.outer(x1, e1) + np.outer(x2, e2) + np.outer(z, axis)
