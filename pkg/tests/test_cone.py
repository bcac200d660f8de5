"""Tests for the 3-D collision cone assembled from planar slices."""

import numpy as np
import numpy.testing as npt
import pytest

from quadcone import (
    CompositeKind,
    QuadricClass,
    build_plane_frames,
    build_quadric,
    composite,
    cone_3d,
    cross_section_area,
    planar_cone_angles,
    project_states,
    y_components,
)
from quadcone.errors import BodiesOverlap, ConfigInvalid, ZeroRelativeSpeed
from quadcone.tangents import TangentPair


def _sphere(center, radius):
    q = build_quadric(center, (radius,) * 3, np.eye(3), QuadricClass.ELLIPSOID)
    return composite(CompositeKind.PURE, q)


def _ellipsoid(center, axes, rotation=None):
    q = build_quadric(center, axes, np.eye(3) if rotation is None else rotation,
                      QuadricClass.ELLIPSOID)
    return composite(CompositeKind.PURE, q)


def _fibonacci_sphere(count, radius, center):
    i = np.arange(count)
    polar = np.arccos(1.0 - 2.0 * (i + 0.5) / count)
    azim = np.pi * (1.0 + np.sqrt(5.0)) * i
    pts = np.stack([
        np.sin(polar) * np.cos(azim),
        np.sin(polar) * np.sin(azim),
        np.cos(polar),
    ], axis=1)
    return radius * pts + np.asarray(center, dtype=float)


class TestProjectStates:
    def test_bearing_is_half_pi(self):
        frames = build_plane_frames((0, 0, 0), (3, -2, 5), 4)
        for frame in frames:
            states = project_states(frame, (0, 0, 0), (3, -2, 5), (1, 1, 1), (0, 2, 0))
            npt.assert_allclose(states["theta_p"], np.pi / 2, atol=1e-12)

    def test_radial_component_is_range_rate(self):
        frames = build_plane_frames((0, 0, 0), (10, 0, 0), 3)
        states = project_states(frames[0], (0, 0, 0), (10, 0, 0), (2, 0, 0), (-1, 0, 0))
        # closing at 3: B toward A at 1, A toward B at 2
        npt.assert_allclose(states["v_r"], -3.0, atol=1e-12)
        npt.assert_allclose(states["v_theta"], 0.0, atol=1e-12)

    def test_transverse_reads_in_plane_component(self):
        frames = build_plane_frames((0, 0, 0), (10, 0, 0), 4)
        rel_v = np.array([0.0, 4.0, 0.0])
        for frame in frames:
            states = project_states(frame, (0, 0, 0), (10, 0, 0), (0, 0, 0), rel_v)
            npt.assert_allclose(states["v_r"], 0.0, atol=1e-12)
            npt.assert_allclose(states["v_theta"], rel_v @ frame.r_x, atol=1e-12)

    def test_out_of_plane_motion_invisible(self):
        frames = build_plane_frames((0, 0, 0), (10, 0, 0), 1)
        frame = frames[0]
        normal = np.cross(frame.r_x, frame.r_y)
        base = project_states(frame, (0, 0, 0), (10, 0, 0), (1, 0, 0), (0, 1, 1))
        # v_r picks up the line-of-sight part of the normal motion: none here
        lifted = project_states(frame, (0, 0, 0), (10, 0, 0), (1, 0, 0),
                                np.array([0, 1, 1]) + 2.5 * normal)
        npt.assert_allclose(lifted["v_theta"], base["v_theta"], atol=1e-12)
        npt.assert_allclose(lifted["v_r"], base["v_r"], atol=1e-12)


class TestYComponents:
    def test_head_on_frozen_value(self):
        # bearing on the bisector, pure closing speed, aperture pi/3
        y, v_hat_r, v_hat_theta = y_components(np.pi / 3, np.pi / 2, np.pi / 2, -1.0, 0.0)
        npt.assert_allclose(y, -0.25, atol=1e-15)
        npt.assert_allclose(v_hat_r, -1.0, atol=1e-15)
        npt.assert_allclose(v_hat_theta, 0.0, atol=1e-15)

    def test_boundary_value_is_zero(self):
        # |transverse| / speed equals sin(aperture / 2) exactly
        y, _, _ = y_components(np.pi / 2, np.pi / 2, np.pi / 2, -1.0, 1.0)
        npt.assert_allclose(y, 0.0, atol=1e-15)

    def test_pure_transverse_outside_narrow_cone(self):
        y, v_hat_r, _ = y_components(0.2, np.pi / 2, np.pi / 2, 0.0, 2.0)
        assert y > 0
        npt.assert_allclose(v_hat_r, 0.0, atol=1e-15)

    def test_rotation_mixes_components(self):
        psi, theta_b, theta_p = 0.8, np.pi / 2 - 0.3, np.pi / 2
        y, v_hat_r, v_hat_theta = y_components(psi, theta_b, theta_p, -2.0, 0.5)
        c, s = np.cos(0.3), np.sin(0.3)
        npt.assert_allclose(v_hat_r, c * -2.0 - s * 0.5, atol=1e-12)
        npt.assert_allclose(v_hat_theta, s * -2.0 + c * 0.5, atol=1e-12)
        npt.assert_allclose(y, v_hat_theta**2 / 4.25 - np.sin(psi / 2) ** 2, atol=1e-12)

    def test_zero_planar_speed_raises(self):
        with pytest.raises(ZeroRelativeSpeed):
            y_components(np.pi / 3, 0.0, 0.0, 0.0, 0.0)


class TestPlanarConeAngles:
    def test_unit_circle_pair_frozen(self):
        # unit circles 4 apart along u: aperture pi/3, bisector along the
        # center line
        root3 = np.sqrt(3.0)
        pair = TangentPair(
            lines=np.array([[-0.5, root3 / 2, 1.0], [-0.5, -root3 / 2, 1.0]]),
            touch_a=np.array([[0.5, -root3 / 2], [0.5, root3 / 2]]),
            touch_b=np.array([[3.5, root3 / 2], [3.5, -root3 / 2]]),
        )
        psi, theta_b = planar_cone_angles(pair, (0.0, 0.0), (4.0, 0.0))
        npt.assert_allclose(psi, np.pi / 3, atol=1e-12)
        npt.assert_allclose(theta_b, 0.0, atol=1e-12)


class TestCone3D:
    def test_head_on_spheres(self):
        a = _sphere((0, 0, 0), 1.0)
        b = _sphere((4, 0, 0), 1.0)
        cone = cone_3d(a, b, (2, 0, 0), (-1, 0, 0))
        psis = np.array([p.psi for p in cone.planes])
        npt.assert_allclose(psis, np.pi / 3, atol=1e-9)
        assert np.ptp(psis) < 1e-9
        for plane in cone.planes:
            npt.assert_allclose(plane.y, -0.25, atol=1e-9)
            npt.assert_allclose(plane.theta_b, plane.theta_p, atol=1e-9)
            assert plane.v_hat_r < 0
            assert plane.predicts_collision
        assert cone.any_collision
        npt.assert_allclose(cone.separation, 4.0, atol=1e-12)

    def test_fast_transverse_is_miss(self):
        a = _sphere((0, 0, 0), 1.0)
        b = _sphere((4, 0, 0), 1.0)
        cone = cone_3d(a, b, (0, 0, 0), (0, 5, 0))
        # pure transverse motion never closes the range
        for plane in cone.planes:
            assert plane.v_hat_r >= 0
            assert not plane.predicts_collision
        assert not cone.any_collision

    def test_plane_with_frozen_geometry_cannot_flag(self):
        # transverse velocity perpendicular to one plane of the family: that
        # plane sees no in-plane relative motion at all
        a = _sphere((0, 0, 0), 1.0)
        b = _sphere((4, 0, 0), 1.0)
        cone = cone_3d(a, b, (0, 0, 0), (0, 5, 0))
        frozen = [p for p in cone.planes if np.isinf(p.y)]
        assert len(frozen) == 1
        assert frozen[0].v_hat_r == 0.0
        assert not frozen[0].predicts_collision

    def test_identical_velocities_report_no_collision(self):
        a = _sphere((0, 0, 0), 1.0)
        b = _sphere((4, 0, 0), 1.0)
        cone = cone_3d(a, b, (1, 2, 3), (1, 2, 3))
        assert all(np.isinf(p.y) for p in cone.planes)
        assert not cone.any_collision

    def test_climbing_ellipsoid_pair_flags(self):
        # aligned triaxial bodies on crossing tracks: the diagonal closing
        # speed puts the relative velocity inside every planar wedge
        elev = np.deg2rad(69.0)
        vel_a = 8.5 * np.array([np.cos(elev), 0.0, np.sin(elev)])
        a = _ellipsoid((10, 0, 0), (10, 5, 3))
        b = _ellipsoid((0, 0, 20), (10, 5, 3))
        cone = cone_3d(a, b, vel_a, (5.0, 0, 0))
        psis = np.array([p.psi for p in cone.planes])
        for plane in cone.planes:
            assert plane.y < 0
            assert plane.v_hat_r < 0
        assert cone.any_collision
        # both bodies axis-aligned with the line of sight in the x-z plane:
        # the family is mirror-symmetric about it
        npt.assert_allclose(psis[1], psis[5], atol=1e-9)
        npt.assert_allclose(psis[2], psis[4], atol=1e-9)
        assert np.argmax(psis) == 3

    def test_point_cloud_target(self):
        a = _sphere((0, 0, 0), 1.0)
        cloud = _fibonacci_sphere(200, 1.0, (4, 0, 0))
        cone = cone_3d(a, cloud, (2, 0, 0), (-1, 0, 0))
        for plane in cone.planes:
            # sampled hull sits inside the sphere: never wider than pi/3
            assert plane.psi <= np.pi / 3 + 1e-6
            assert plane.psi >= np.pi / 3 - 0.12
            assert not plane.intersecting
        assert cone.any_collision

    def test_engulfing_body_forces_full_aperture(self):
        # own body parked in the carved dimple of a biconcave shell: disjoint
        # in 3-D, but every planar section of the shell swallows the own
        # section
        prim = build_quadric((0, 0, 0), (10, 10, 10), np.eye(3), QuadricClass.ELLIPSOID)
        delim = build_quadric((0, 0, 0), (5, 5, 4), np.eye(3),
                              QuadricClass.TWO_SHEET_HYPERBOLOID)
        shell = composite(CompositeKind.BICONCAVE, prim, delim)
        a = _sphere((0, 0, 8), 0.5)
        cone = cone_3d(a, shell, (0, 0, -1.0), (0, 0, 0))
        for plane in cone.planes:
            assert plane.intersecting
            npt.assert_allclose(plane.psi, np.pi, atol=1e-12)
            assert plane.theta_b == plane.theta_p
            npt.assert_allclose(plane.y, -1.0, atol=1e-12)
        assert cone.any_collision
        assert np.isinf(cross_section_area(cone))

    def test_overlapping_bodies_raise(self):
        a = _sphere((0, 0, 0), 1.0)
        b = _sphere((1.5, 0, 0), 1.0)
        with pytest.raises(BodiesOverlap):
            cone_3d(a, b, (1, 0, 0), (0, 0, 0))

    def test_own_body_must_be_ellipsoid(self):
        q = build_quadric((0, 0, 0), (1, 1, 1), np.eye(3),
                          QuadricClass.TWO_SHEET_HYPERBOLOID)
        a = composite(CompositeKind.PURE, q)
        b = _sphere((6, 0, 0), 1.0)
        with pytest.raises(ConfigInvalid):
            cone_3d(a, b, (1, 0, 0), (0, 0, 0))

    def test_pure_other_body_must_be_ellipsoid(self):
        a = _sphere((0, 0, 0), 1.0)
        q = build_quadric((8, 0, 0), (1, 1, 1), np.eye(3),
                          QuadricClass.ONE_SHEET_HYPERBOLOID)
        b = composite(CompositeKind.PURE, q)
        with pytest.raises(ConfigInvalid):
            cone_3d(a, b, (1, 0, 0), (0, 0, 0))


class TestInvariants:
    def test_deterministic_reruns(self):
        rng = np.random.default_rng(31)
        a = _ellipsoid((0, 0, 0), (2, 1, 1.5))
        b = _ellipsoid((9, 2, -3), (1, 3, 2))
        for _ in range(5):
            va, vb = rng.normal(size=3), rng.normal(size=3)
            c1 = cone_3d(a, b, va, vb)
            c2 = cone_3d(a, b, va, vb)
            for p1, p2 in zip(c1.planes, c2.planes):
                assert p1.psi == p2.psi
                assert p1.theta_b == p2.theta_b
                assert p1.y == p2.y

    def test_y_invariant_under_velocity_scaling(self):
        rng = np.random.default_rng(32)
        a = _sphere((0, 0, 0), 1.0)
        b = _ellipsoid((7, 1, 2), (2, 1, 1))
        for _ in range(8):
            va, vb = rng.normal(size=3), rng.normal(size=3)
            scale = float(rng.uniform(0.1, 40.0))
            c1 = cone_3d(a, b, va, vb)
            c2 = cone_3d(a, b, scale * va, scale * vb)
            for p1, p2 in zip(c1.planes, c2.planes):
                if np.isfinite(p1.y):
                    npt.assert_allclose(p2.y, p1.y, rtol=1e-9, atol=1e-12)

    def test_sphere_pair_aperture_uniform_across_planes(self):
        rng = np.random.default_rng(33)
        for _ in range(10):
            ra, rb = rng.uniform(0.5, 3.0, size=2)
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            d = (ra + rb) * rng.uniform(1.3, 4.0)
            a = _sphere((0, 0, 0), ra)
            b = _sphere(d * direction, rb)
            cone = cone_3d(a, b, rng.normal(size=3), rng.normal(size=3),
                           n_planes=9)
            psis = np.array([p.psi for p in cone.planes])
            assert np.ptp(psis) < 1e-9


class TestCrossSectionArea:
    def test_sphere_pair_frozen_values(self):
        a = _sphere((0, 0, 0), 1.0)
        b = _sphere((4, 0, 0), 1.0)
        cone = cone_3d(a, b, (2, 0, 0), (-1, 0, 0))
        # tangent-line cone: vertex at 2 along the center line, slope
        # tan(asin(1/2)); the 12-gon over 6 planes has area
        # n sin(pi/n) R^2
        npt.assert_allclose(cross_section_area(cone, 4.0), 4.0, atol=1e-9)
        npt.assert_allclose(cross_section_area(cone, 6.0), 16.0, atol=1e-9)

    def test_sphere_pair_tracks_analytic_disc(self):
        a = _sphere((0, 0, 0), 1.0)
        b = _sphere((4, 0, 0), 1.0)
        for n in (6, 12, 36):
            cone = cone_3d(a, b, (2, 0, 0), (-1, 0, 0), n_planes=n)
            radius = np.tan(np.arcsin(0.5)) * (4.0 - 2.0)
            exact = np.pi * radius**2
            area = cross_section_area(cone, 4.0)
            assert abs(area - exact) / exact <= 2.0 / n

    def test_default_depth_is_separation(self):
        a = _sphere((0, 0, 0), 1.0)
        b = _sphere((5, 1, 0), 1.5)
        cone = cone_3d(a, b, (1, 0, 0), (0, 0, 0))
        npt.assert_allclose(cross_section_area(cone),
                            cross_section_area(cone, cone.separation), atol=1e-12)

    def test_plane_count_convergence(self):
        rng = np.random.default_rng(34)
        a = _ellipsoid((0, 0, 0), (1.5, 1.0, 0.8))
        for _ in range(3):
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            center = (3.0 + 3.0 * rng.uniform()) * direction
            axes = rng.uniform(0.5, 1.5, size=3)
            b = _ellipsoid(center, axes)
            va, vb = rng.normal(size=3), rng.normal(size=3)
            coarse = cross_section_area(cone_3d(a, b, va, vb, n_planes=36))
            fine = cross_section_area(cone_3d(a, b, va, vb, n_planes=360))
            assert abs(coarse - fine) / fine <= 2.0 / 36.0
