import math

import numpy as np
import pytest

from skillbo.geometry import (
    orientation_error,
    pose_from_xy_yaw,
    quat_angle,
    quat_conjugate,
    quat_multiply,
    quat_normalize,
    quat_rotate,
    quat_slerp,
    quat_to_axis_angle,
    validate_pose,
    wrap_angle,
    yaw_of_quat,
)


def random_quat(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def test_validate_pose_checks_shape_and_norm():
    with pytest.raises(ValueError):
        validate_pose([0, 0, 0, 0, 0, 1])
    with pytest.raises(ValueError):
        validate_pose([0, 0, 0, 0, 0, 0, 1.001])
    p = validate_pose([1, 2, 3, 0, 0, 0, 1 + 1e-12])
    assert np.linalg.norm(p[3:]) == pytest.approx(1.0, abs=1e-15)


def test_multiply_conjugate_is_identity():
    rng = np.random.default_rng(0)
    for _ in range(20):
        q = random_quat(rng)
        r = quat_multiply(q, quat_conjugate(q))
        assert np.allclose(r, [0, 0, 0, 1], atol=1e-12)


def test_rotate_matches_matrix_form():
    rng = np.random.default_rng(1)
    for _ in range(20):
        q = random_quat(rng)
        v = rng.normal(size=3)
        got = quat_rotate(q, v)
        # rotation via the quaternion sandwich product as an oracle
        qv = np.array([v[0], v[1], v[2], 0.0])
        want = quat_multiply(quat_multiply(q, qv), quat_conjugate(q))[:3]
        assert np.allclose(got, want, atol=1e-12)
        assert np.linalg.norm(got) == pytest.approx(np.linalg.norm(v))


def test_axis_angle_round_trip():
    rng = np.random.default_rng(2)
    for _ in range(20):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = rng.uniform(-3.0, 3.0)
        q = np.concatenate([axis * math.sin(angle / 2), [math.cos(angle / 2)]])
        rotvec = quat_to_axis_angle(q)
        assert np.allclose(rotvec, axis * angle, atol=1e-9) or np.allclose(
            rotvec, -axis * -angle, atol=1e-9
        )


def test_orientation_error_zero_for_equal_quats():
    rng = np.random.default_rng(3)
    q = random_quat(rng)
    assert np.allclose(orientation_error(q, q), 0.0, atol=1e-12)
    # and antipodal quaternions represent the same rotation
    assert np.allclose(orientation_error(q, -q), 0.0, atol=1e-12)


def test_slerp_endpoints_and_midpoint():
    a = pose_from_xy_yaw(0, 0, 0, 0.0)[3:]
    b = pose_from_xy_yaw(0, 0, 0, 1.0)[3:]
    assert np.allclose(quat_slerp(a, b, 0.0), a)
    assert np.allclose(quat_slerp(a, b, 1.0), b)
    mid = quat_slerp(a, b, 0.5)
    assert yaw_of_quat(mid) == pytest.approx(0.5, abs=1e-12)


def test_quat_angle_symmetric():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a, b = random_quat(rng), random_quat(rng)
        assert quat_angle(a, b) == pytest.approx(quat_angle(b, a))
        assert 0.0 <= quat_angle(a, b) <= math.pi + 1e-12


def test_wrap_angle():
    assert wrap_angle(math.pi + 0.1) == pytest.approx(-math.pi + 0.1)
    assert wrap_angle(-4 * math.pi + 0.3) == pytest.approx(0.3)


def test_yaw_round_trip():
    for yaw in (-2.5, -0.3, 0.0, 1.2, 3.0):
        assert yaw_of_quat(pose_from_xy_yaw(0, 0, 0, yaw)[3:]) == pytest.approx(yaw)


def test_normalize():
    q = quat_normalize([3.0, 0.0, 0.0, 4.0])
    assert np.allclose(q, [0.6, 0, 0, 0.8])
