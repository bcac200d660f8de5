"""Generate the ten-faced polyhedron point cloud used by the sim1 scenario.

The body is a pentagonal bipyramid with equilateral faces: a pentagon ring
of circumradius R in the z = 0 plane plus apexes at z = +/-h, where
h = R * sqrt(4 sin^2(36 deg) - 1) makes every edge the same length.  Each
of the ten triangular faces receives an equal share of uniformly sampled
surface points (the faces are congruent, so per-face equal counts are
area-proportional).  Output is a body-frame x,y,z CSV.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

RING_RADIUS = 8.0
POINTS = 1000


def bipyramid_vertices(radius: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ring vertices plus the two apexes of the equilateral bipyramid."""
    angles = 2.0 * np.pi * np.arange(5) / 5.0
    ring = np.stack([radius * np.cos(angles),
                     radius * np.sin(angles),
                     np.zeros(5)], axis=1)
    height = radius * np.sqrt(4.0 * np.sin(np.pi / 5.0) ** 2 - 1.0)
    top = np.array([0.0, 0.0, height])
    bottom = np.array([0.0, 0.0, -height])
    return ring, top, bottom


def sample_faces(radius: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform surface samples over the ten triangular faces."""
    ring, top, bottom = bipyramid_vertices(radius)
    faces = []
    for k in range(5):
        a, b = ring[k], ring[(k + 1) % 5]
        faces.append((top, a, b))
        faces.append((bottom, a, b))
    per_face = np.full(len(faces), count // len(faces))
    per_face[: count - per_face.sum()] += 1
    points = []
    for (p0, p1, p2), m in zip(faces, per_face):
        u = rng.uniform(size=m)
        v = rng.uniform(size=m)
        flip = u + v > 1.0
        u[flip], v[flip] = 1.0 - u[flip], 1.0 - v[flip]
        points.append(p0 + u[:, None] * (p1 - p0) + v[:, None] * (p2 - p0))
    return np.vstack(points)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--radius", type=float, default=RING_RADIUS,
                        help="pentagon circumradius in metres")
    parser.add_argument("--points", type=int, default=POINTS)
    parser.add_argument("--seed", type=int, default=20)
    parser.add_argument("--out", type=Path,
                        default=Path(__file__).resolve().parent.parent
                        / "scenarios" / "obstacle_e.csv")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    cloud = sample_faces(args.radius, args.points, rng)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    header = "x,y,z"
    np.savetxt(args.out, cloud, delimiter=",", header=header, comments="",
               fmt="%.6f")
    print(f"wrote {len(cloud)} points to {args.out}")


if __name__ == "__main__":
    main()
