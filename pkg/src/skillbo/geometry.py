"""Pose and quaternion helpers.

Poses are length-7 arrays ``[x, y, z, qx, qy, qz, qw]`` (scalar-last
quaternions), matching the scene-file convention.
"""
from __future__ import annotations

import math

import numpy as np

QUAT_NORM_TOL = 1e-9


def identity_pose() -> np.ndarray:
    return np.array([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0])


def pose(x=0.0, y=0.0, z=0.0, qx=0.0, qy=0.0, qz=0.0, qw=1.0) -> np.ndarray:
    return np.array([x, y, z, qx, qy, qz, qw], dtype=float)


def pose_from_xy_yaw(x: float, y: float, z: float = 0.0, yaw: float = 0.0) -> np.ndarray:
    h = 0.5 * yaw
    return np.array([x, y, z, 0.0, 0.0, math.sin(h), math.cos(h)])


def validate_pose(p, tol: float = QUAT_NORM_TOL) -> np.ndarray:
    """Check shape/finiteness and quaternion unit norm, renormalize exactly."""
    p = np.asarray(p, dtype=float)
    if p.shape != (7,):
        raise ValueError(f"pose must have 7 components, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("pose has non-finite components")
    n = math.sqrt(float(p[3] ** 2 + p[4] ** 2 + p[5] ** 2 + p[6] ** 2))
    if abs(n - 1.0) > tol:
        raise ValueError(f"quaternion norm {n} deviates from 1 by more than {tol}")
    out = p.copy()
    out[3:] /= n
    return out


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / math.sqrt(float(np.dot(q, q)))


def quat_multiply(a, b) -> np.ndarray:
    ax, ay, az, aw = a
    bx, by, bz, bw = b
    return np.array(
        [
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
            aw * bw - ax * bx - ay * by - az * bz,
        ]
    )


def quat_conjugate(q) -> np.ndarray:
    return np.array([-q[0], -q[1], -q[2], q[3]])


def quat_rotate(q, v) -> np.ndarray:
    """Rotate a 3-vector by a unit quaternion."""
    qx, qy, qz, qw = q
    vx, vy, vz = v
    # t = 2 q_vec x v
    tx = 2.0 * (qy * vz - qz * vy)
    ty = 2.0 * (qz * vx - qx * vz)
    tz = 2.0 * (qx * vy - qy * vx)
    return np.array(
        [
            vx + qw * tx + qy * tz - qz * ty,
            vy + qw * ty + qz * tx - qx * tz,
            vz + qw * tz + qx * ty - qy * tx,
        ]
    )


def quat_to_axis_angle(q) -> np.ndarray:
    """Rotation vector (axis * angle) of a unit quaternion, angle in [0, pi]."""
    qx, qy, qz, qw = q
    if qw < 0.0:
        qx, qy, qz, qw = -qx, -qy, -qz, -qw
    s = math.sqrt(qx * qx + qy * qy + qz * qz)
    if s < 1e-12:
        return np.array([2.0 * qx, 2.0 * qy, 2.0 * qz])
    angle = 2.0 * math.atan2(s, qw)
    k = angle / s
    return np.array([qx * k, qy * k, qz * k])


def orientation_error(q_current, q_desired) -> np.ndarray:
    """Axis-angle of the relative rotation taking desired onto current."""
    rel = quat_multiply(q_current, quat_conjugate(q_desired))
    return quat_to_axis_angle(rel)


def quat_angle(q_a, q_b) -> float:
    """Absolute rotation angle between two unit quaternions, in radians."""
    d = abs(float(np.dot(np.asarray(q_a), np.asarray(q_b))))
    return 2.0 * math.acos(min(1.0, d))


def quat_slerp(q0, q1, t: float) -> np.ndarray:
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    d = float(np.dot(q0, q1))
    if d < 0.0:
        q1 = -q1
        d = -d
    if d > 1.0 - 1e-10:
        return quat_normalize(q0 + t * (q1 - q0))
    theta = math.acos(min(1.0, d))
    s = math.sin(theta)
    return (math.sin((1.0 - t) * theta) / s) * q0 + (math.sin(t * theta) / s) * q1


def yaw_of_quat(q) -> float:
    qx, qy, qz, qw = q
    return math.atan2(2.0 * (qw * qz + qx * qy), 1.0 - 2.0 * (qy * qy + qz * qz))


def wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi
