"""Planar N-link chain: analytic kinematics plus a joint-space integrator.

This fidelity mode exercises the torque-level control formulas literally.
The chain lives in the world x/y plane, so its task coordinates (x, y, yaw)
embed into the 6-dim task space as rows (0, 1, 5) of the Jacobian.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import pose_from_xy_yaw
from .controller import ControllerConfig, external_wrench_torque, impedance_torque


@dataclass
class PlanarChain:
    link_lengths: np.ndarray = field(default_factory=lambda: np.full(7, 0.15))

    def __post_init__(self):
        self.link_lengths = np.asarray(self.link_lengths, dtype=float)
        if np.any(self.link_lengths <= 0):
            raise ValueError("link lengths must be positive")

    @property
    def n_joints(self) -> int:
        return len(self.link_lengths)

    def forward(self, q) -> np.ndarray:
        """End-effector (x, y, yaw)."""
        x = y = 0.0
        acc = 0.0
        for qi, li in zip(q, self.link_lengths):
            acc += qi
            x += li * math.cos(acc)
            y += li * math.sin(acc)
        return np.array([x, y, acc])

    def jacobian(self, q) -> np.ndarray:
        """3xN analytic Jacobian of (x, y, yaw) w.r.t. joint angles."""
        n = self.n_joints
        cum = np.cumsum(np.asarray(q, dtype=float))
        J = np.zeros((3, n))
        # joint j moves every link k >= j
        for j in range(n):
            dx = dy = 0.0
            for k in range(j, n):
                dx -= self.link_lengths[k] * math.sin(cum[k])
                dy += self.link_lengths[k] * math.cos(cum[k])
            J[0, j] = dx
            J[1, j] = dy
            J[2, j] = 1.0
        return J

    def jacobian6(self, q) -> np.ndarray:
        """Embedding into the 6-dim task space (zero z / roll / pitch rows)."""
        J3 = self.jacobian(q)
        J = np.zeros((6, self.n_joints))
        J[0] = J3[0]
        J[1] = J3[1]
        J[5] = J3[2]
        return J

    def ee_pose(self, q) -> np.ndarray:
        x, y, yaw = self.forward(q)
        return pose_from_xy_yaw(x, y, 0.0, yaw)


class ArmSimulator:
    """Joint-space dynamics q'' = M^-1 (tau_c + tau_ext), free space only.

    The state vector is (q, qdot), 14-dim for the default 7-joint chain.
    """

    def __init__(
        self,
        chain: PlanarChain | None = None,
        config: ControllerConfig | None = None,
        q0=None,
        joint_inertia: float = 1.0,
        dt: float = 0.002,
    ):
        self.chain = chain or PlanarChain()
        self.config = config or ControllerConfig()
        self.q = np.array(q0, dtype=float) if q0 is not None else np.full(self.chain.n_joints, 0.3)
        self.qdot = np.zeros(self.chain.n_joints)
        self.joint_inertia = float(joint_inertia)
        self.dt = float(dt)
        self.t = 0.0
        self._stiff = self.config.stiffness.copy()
        self._wrench = np.zeros(6)

    def robot_state_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.qdot])

    def step(self, reference_pose: np.ndarray, stiffness=None, wrench=None) -> None:
        cfg = self.config
        target_k = cfg.stiffness if stiffness is None else np.asarray(stiffness, dtype=float)
        target_w = np.zeros(6) if wrench is None else np.asarray(wrench, dtype=float)
        dk = cfg.stiffness_ramp * self.dt
        dw = cfg.wrench_ramp * self.dt
        self._stiff += np.clip(target_k - self._stiff, -dk, dk)
        self._wrench += np.clip(target_w - self._wrench, -dw, dw)

        x, y, yaw = self.chain.forward(self.q)
        ref = np.asarray(reference_pose, dtype=float)
        ref_yaw = 2.0 * math.atan2(ref[5], ref[6])
        err_yaw = (yaw - ref_yaw + math.pi) % (2.0 * math.pi) - math.pi
        x_e = np.array([x - ref[0], y - ref[1], 0.0, 0.0, 0.0, err_yaw])

        J = self.chain.jacobian6(self.q)
        K = np.diag(self._stiff)
        D = np.diag(cfg.damping_for(self._stiff))
        tau = impedance_torque(self.q, self.qdot, x_e, K, D, J)
        tau = tau + external_wrench_torque(self.q, self._wrench, J)

        self.qdot += (self.dt / self.joint_inertia) * tau
        self.q += self.dt * self.qdot
        self.t += self.dt
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qdot))):
            raise FloatingPointError("arm state diverged")
