"""Engagement-plane frames and planar sections of quadric surfaces.

A collision cone in 3-D is assembled from planar slices: every plane contains
both body centers, and the family of planes is generated by rotating a seed
plane about the center line.  Restricting a quadric to one such plane yields a
conic in the plane's (u, v) coordinates; all downstream tangent work happens on
those conics and on their duals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import CoincidentCenters, DegenerateConic
from .shapes import QuadricMatrix

__all__ = [
    "ConicClass",
    "PlaneFrame",
    "build_plane_frames",
    "classify_conic",
    "dual_conic",
    "section_conic",
]

_MIN_SEPARATION = 1e-9


class ConicClass(Enum):
    ELLIPSE = "ellipse"
    HYPERBOLA = "hyperbola"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class PlaneFrame:
    """Orthonormal in-plane frame: world point = origin + u*r_x + v*r_y.

    Attributes:
        r_x: In-plane unit vector transverse to the center line.
        r_y: In-plane unit vector along the center line (A toward B).
        origin: World-space anchor of the (u, v) coordinates.
        azimuth: Rotation angle of this plane about r_y, radians.
    """

    r_x: np.ndarray
    r_y: np.ndarray
    origin: np.ndarray
    azimuth: float
    embedding: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("r_x", "r_y", "origin"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        p = np.zeros((4, 3))
        p[:3, 0] = self.r_x
        p[:3, 1] = self.r_y
        p[:3, 2] = self.origin
        p[3, 2] = 1.0
        object.__setattr__(self, "embedding", p)

    def to_world(self, uv: np.ndarray) -> np.ndarray:
        """Map (..., 2) plane coordinates to (..., 3) world points."""
        uv = np.asarray(uv, dtype=float)
        return self.origin + np.multiply.outer(uv[..., 0], self.r_x) \
            + np.multiply.outer(uv[..., 1], self.r_y)

    def to_plane(self, points: np.ndarray) -> np.ndarray:
        """Project (..., 3) world points into (..., 2) plane coordinates."""
        rel = np.asarray(points, dtype=float) - self.origin
        return np.stack([rel @ self.r_x, rel @ self.r_y], axis=-1)


def build_plane_frames(a_pos, b_pos, count: int) -> list[PlaneFrame]:
    """Build `count` equally spaced plane frames containing both centers.

    The shared axis r_y points from A to B.  The seed transverse direction is
    the global coordinate axis least aligned with r_y (lowest index on ties),
    orthogonalized against it; successive frames rotate the transverse
    direction about r_y in steps of pi/count, covering a half turn -- a full
    turn would revisit each plane with the transverse axis negated.

    Args:
        a_pos: Own-body center, shape (3,).
        b_pos: Other-body center, shape (3,).
        count: Number of planes, >= 1.

    Returns:
        List of PlaneFrame anchored at a_pos, azimuths (j-1)*pi/count.

    Raises:
        CoincidentCenters: If the centers are too close to define a line.
    """
    a_pos = np.asarray(a_pos, dtype=float)
    b_pos = np.asarray(b_pos, dtype=float)
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    sep = b_pos - a_pos
    dist = np.linalg.norm(sep)
    if dist < _MIN_SEPARATION:
        raise CoincidentCenters(f"center separation {dist:.3e} below {_MIN_SEPARATION:.0e}")
    r_y = sep / dist

    seed_index = int(np.argmin(np.abs(r_y)))
    seed = np.zeros(3)
    seed[seed_index] = 1.0
    r_x0 = seed - (seed @ r_y) * r_y
    r_x0 /= np.linalg.norm(r_x0)
    r_z0 = np.cross(r_y, r_x0)

    frames = []
    for j in range(count):
        phi = j * np.pi / count
        r_x = np.cos(phi) * r_x0 + np.sin(phi) * r_z0
        frames.append(PlaneFrame(r_x=r_x, r_y=r_y, origin=a_pos, azimuth=phi))
    return frames


def section_conic(q: QuadricMatrix, frame: PlaneFrame) -> np.ndarray:
    """Restrict a quadric to a plane, as a 3x3 conic matrix in (u, v, 1).

    The congruence M = P^T Q P with the frame's 4x3 embedding P makes
    [u, v, 1] M [u, v, 1]^T equal the quadric form at the embedded point, so
    sign conventions carry over from 3-D unchanged.
    """
    p = frame.embedding
    m = p.T @ q.m @ p
    return 0.5 * (m + m.T)


def classify_conic(m: np.ndarray) -> ConicClass:
    """Classify a 3x3 conic matrix as ellipse, hyperbola, or degenerate.

    Mirrors the quadric rule one dimension down: the sign pattern of the 2x2
    block picks the family and the form's value at the conic center separates
    real curves from degenerate ones (det M = det M2 * center_val).
    """
    m = np.asarray(m, dtype=float)
    eigvals = np.linalg.eigvalsh(m[:2, :2])
    block_scale = np.max(np.abs(eigvals))
    if block_scale == 0 or np.min(np.abs(eigvals)) < 1e-10 * block_scale:
        return ConicClass.DEGENERATE  # parabola / parallel-line family
    if np.all(eigvals < 0):
        m = -m
        eigvals = -eigvals[::-1]

    center = np.linalg.solve(m[:2, :2], -m[:2, 2])
    h = np.append(center, 1.0)
    center_val = h @ m @ h
    tol = 1e-10 * block_scale * (1.0 + center @ center)
    if np.all(eigvals > 0):
        return ConicClass.ELLIPSE if center_val < -tol else ConicClass.DEGENERATE
    if abs(center_val) <= tol:
        return ConicClass.DEGENERATE  # crossing line pair
    return ConicClass.HYPERBOLA


def dual_conic(m: np.ndarray) -> np.ndarray:
    """Adjugate of a conic matrix: lines l with l^T M* l = 0 are tangents.

    Degeneracy is tested through det M = det M2 * center_val rather than the
    raw determinant, which keeps the thresholds meaningful for sections far
    from the plane origin (where the matrix norm is dominated by translation
    terms).

    Raises:
        DegenerateConic: If the conic is too close to singular for its dual
            to mean anything.
    """
    m = np.asarray(m, dtype=float)
    eigvals = np.linalg.eigvalsh(m[:2, :2])
    block_scale = np.max(np.abs(eigvals))
    if block_scale == 0 or np.min(np.abs(eigvals)) < 1e-10 * block_scale:
        raise DegenerateConic("singular leading block")
    center = np.linalg.solve(m[:2, :2], -m[:2, 2])
    h = np.append(center, 1.0)
    center_val = h @ m @ h
    if abs(center_val) <= 1e-10 * block_scale * (1.0 + center @ center):
        raise DegenerateConic(f"center value {center_val:.3e} too close to zero")
    adj = np.linalg.det(m) * np.linalg.inv(m)
    return 0.5 * (adj + adj.T)
