import math

import numpy as np
import pytest

from lidarcam.errors import BehindCamera, EmptyInput
from lidarcam.geometry import (BEHIND_CAMERA_PENALTY_PX, Calibration,
                               ExtrinsicParams, FisheyeIntrinsics,
                               PinholeIntrinsics, error_by_angle,
                               extrinsic_transform, project, project_fisheye,
                               project_pinhole, project_points,
                               reprojection_error, rotation_matrix)


# -- independent quaternion oracle for rotation composition ------------------

def quat_axis(angle, axis):
    q = np.zeros(4)
    q[0] = math.cos(angle / 2)
    q[1 + axis] = math.sin(angle / 2)
    return q


def quat_mul(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2])


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)]])


def rotation_oracle(alpha, beta, gamma):
    q = quat_mul(quat_mul(quat_axis(alpha, 0), quat_axis(beta, 1)),
                 quat_axis(gamma, 2))
    return quat_to_matrix(q)


class TestRotationMatrix:
    def test_zero_angles_identity(self):
        r = rotation_matrix(ExtrinsicParams(0, 0, 0, 0, 0, 0))
        assert np.array_equal(r, np.eye(3))

    def test_pure_yaw_quarter_turn(self):
        r = rotation_matrix(ExtrinsicParams(0, 0, math.pi / 2, 0, 0, 0))
        assert np.allclose(r @ [1, 0, 0], [0, 1, 0], atol=1e-15)

    def test_matches_quaternion_oracle(self):
        r = rotation_matrix(ExtrinsicParams(0.3, -0.5, 1.2, 0, 0, 0))
        assert np.max(np.abs(r - rotation_oracle(0.3, -0.5, 1.2))) < 1e-12

    def test_orthonormal_and_proper(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            a, b, g = rng.uniform(-math.pi, math.pi, 3)
            r = rotation_matrix(ExtrinsicParams(a, b, g, 0, 0, 0))
            assert np.max(np.abs(r.T @ r - np.eye(3))) < 1e-9
            assert abs(np.linalg.det(r) - 1) < 1e-9

    def test_single_axis_additivity(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            g1, g2 = rng.uniform(-2, 2, 2)
            r1 = rotation_matrix(ExtrinsicParams(0, 0, g1, 0, 0, 0))
            r2 = rotation_matrix(ExtrinsicParams(0, 0, g2, 0, 0, 0))
            r12 = rotation_matrix(ExtrinsicParams(0, 0, g1 + g2, 0, 0, 0))
            assert np.max(np.abs(r1 @ r2 - r12)) < 1e-9


class TestExtrinsicTransform:
    def test_identity(self):
        e = ExtrinsicParams(0, 0, 0, 0, 0, 0)
        assert np.allclose(extrinsic_transform([1, 2, 3], e), [1, 2, 3])

    def test_translation_only(self):
        e = ExtrinsicParams(0, 0, 0, 1, 2, 3)
        assert np.allclose(extrinsic_transform([0, 0, 0], e), [1, 2, 3])

    def test_yaw_of_x_axis(self):
        e = ExtrinsicParams(0, 0, math.pi / 2, 0, 0, 0)
        assert np.allclose(extrinsic_transform([1, 0, 0], e), [0, 1, 0],
                           atol=1e-15)

    def test_rigidity(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            e = ExtrinsicParams(*rng.uniform(-3, 3, 3), *rng.uniform(-5, 5, 3))
            p, q = rng.uniform(-10, 10, (2, 3))
            d0 = np.linalg.norm(p - q)
            d1 = np.linalg.norm(extrinsic_transform(p, e) - extrinsic_transform(q, e))
            assert abs(d0 - d1) < 1e-9


class TestPinhole:
    def test_optical_axis_maps_to_principal_point(self):
        k = PinholeIntrinsics(500, 500, 400, 400)
        assert np.allclose(project_pinhole([0, 0, 5], k), [400, 400])

    def test_direct_arithmetic(self):
        k = PinholeIntrinsics(400, 400, 300, 300)
        assert np.allclose(project_pinhole([1, 0, 2], k), [500, 300])

    def test_zero_depth_rejected(self):
        with pytest.raises(BehindCamera):
            project_pinhole([1, 1, 0], PinholeIntrinsics(400, 400, 300, 300))


class TestFisheye:
    def test_distortion_free_reduction(self):
        k = FisheyeIntrinsics(600, 580, 310, 250)
        kp = PinholeIntrinsics(600, 580, 310, 250)
        rng = np.random.default_rng(3)
        pts = np.column_stack([rng.uniform(-3, 3, (200, 2)),
                               rng.uniform(0.5, 20, 200)])
        assert np.max(np.abs(project_fisheye(pts, k) - project_pinhole(pts, kp))) < 1e-12

    def test_axis_point_hits_principal_point(self):
        k = FisheyeIntrinsics(600, 600, 400, 380, alpha_c=0.1, k1=0.3, k2=-0.2,
                              k3=0.05, k4=0.02, k5=0.1)
        assert np.allclose(project_fisheye([0, 0, 7.5], k), [400, 380])

    def test_frozen_transcription_oracle(self):
        # Straight-line transcription: un=0.3, vn=0.2, r2=0.13,
        # radial=1.013, dx=(0.0012, 0.0021) -> pixel (583.06, 522.82).
        k = FisheyeIntrinsics(600, 600, 400, 400, k1=0.1, k3=0.01)
        pix = project_fisheye([0.6, 0.4, 2.0], k)
        assert abs(pix[0] - 583.06) < 1e-9
        assert abs(pix[1] - 522.82) < 1e-9

    def test_behind_camera(self):
        with pytest.raises(BehindCamera):
            project_fisheye([0.1, 0.1, -1.0], FisheyeIntrinsics(600, 600, 0, 0))


class TestProject:
    def test_identity_pinhole(self):
        cal = Calibration(ExtrinsicParams(0, 0, 0, 0, 0, 0),
                          PinholeIntrinsics(1, 1, 0, 0))
        assert np.allclose(project([0, 0, 1], cal), [0, 0])

    def test_equals_two_step_composition(self):
        rng = np.random.default_rng(4)
        for _ in range(300):
            e = ExtrinsicParams(rng.uniform(0.2, 0.8) * math.pi,
                                rng.uniform(-0.8, -0.2) * math.pi,
                                rng.uniform(-0.3, 0.3) * math.pi,
                                *rng.uniform(-1, 1, 3))
            k = PinholeIntrinsics(*rng.uniform(300, 900, 4))
            cal = Calibration(e, k)
            p = rng.uniform(-5, 5, 3)
            cam = extrinsic_transform(p, e)
            if cam[2] <= 1e-6:
                continue
            assert np.array_equal(project(p, cal), project_pinhole(cam, k))

    def test_deterministic(self):
        cal = Calibration(ExtrinsicParams(0.3, -0.7, 0.1, 0.2, -0.1, 0.4),
                          FisheyeIntrinsics(640, 620, 615, 590, k1=-0.2))
        p = np.array([1.3, 5.7, 0.4])
        assert np.array_equal(project(p, cal), project(p, cal))


def _simple_cal():
    return Calibration(ExtrinsicParams(0, 0, 0, 0, 0, 0),
                       PinholeIntrinsics(500, 500, 400, 400))


class TestReprojectionError:
    def test_zero_on_self_generated_pairs(self):
        cal = _simple_cal()
        rng = np.random.default_rng(5)
        pts = np.column_stack([rng.uniform(-2, 2, (50, 2)),
                               rng.uniform(1, 10, 50)])
        pix, _ = project_points(pts, cal)
        assert reprojection_error(pts, pix, cal) < 1e-9

    def test_three_four_offset_is_five(self):
        cal = _simple_cal()
        pts = np.array([[0.5, -0.3, 4.0]])
        pix, _ = project_points(pts, cal)
        assert reprojection_error(pts, pix + [3, 4], cal) == pytest.approx(5.0)

    def test_rayleigh_mean_under_gaussian_noise(self):
        cal = _simple_cal()
        rng = np.random.default_rng(6)
        pts = np.column_stack([rng.uniform(-2, 2, (100, 2)),
                               rng.uniform(1, 10, 100)])
        pix, _ = project_points(pts, cal)
        noisy = pix + rng.normal(0, 2.0, pix.shape)
        expected = 2.0 * math.sqrt(math.pi / 2)
        assert reprojection_error(pts, noisy, cal) == pytest.approx(expected, abs=0.2)

    def test_permutation_invariant(self):
        cal = _simple_cal()
        rng = np.random.default_rng(7)
        pts = np.column_stack([rng.uniform(-2, 2, (40, 2)),
                               rng.uniform(1, 10, 40)])
        pix, _ = project_points(pts, cal)
        pix = pix + rng.normal(0, 1, pix.shape)
        order = rng.permutation(40)
        assert reprojection_error(pts, pix, cal) == pytest.approx(
            reprojection_error(pts[order], pix[order], cal), abs=1e-12)

    def test_behind_camera_penalty(self):
        cal = _simple_cal()
        pts = np.array([[0, 0, -5.0]])
        assert reprojection_error(pts, [[0, 0]], cal) == BEHIND_CAMERA_PENALTY_PX

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            reprojection_error(np.empty((0, 3)), np.empty((0, 2)), _simple_cal())


class TestErrorByAngle:
    def test_on_axis_points_fill_single_bin(self):
        cal = _simple_cal()
        pts = np.array([[0, 0, z] for z in (1.0, 2.0, 5.0)])
        pix, _ = project_points(pts, cal)
        bins = error_by_angle(pts, pix, cal, 4)
        assert bins[0].count == 3
        assert all(b.count == 0 and b.mean_error is None for b in bins[1:])

    def test_perfect_calibration_zero_means(self):
        cal = _simple_cal()
        rng = np.random.default_rng(8)
        pts = np.column_stack([rng.uniform(-2, 2, (60, 2)),
                               rng.uniform(1, 10, 60)])
        pix, _ = project_points(pts, cal)
        for b in error_by_angle(pts, pix, cal, 5):
            assert b.mean_error is None or b.mean_error < 1e-9

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            error_by_angle(np.empty((0, 3)), np.empty((0, 2)), _simple_cal(), 4)
