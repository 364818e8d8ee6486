"""Cartesian impedance control law and its configuration."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def impedance_torque(q, qdot, x_e, K_d, D_d, jacobian) -> np.ndarray:
    """Joint torques of the task-space impedance law.

    tau = J(q)^T (-K_d x_e - D_d J(q) qdot), with x_e the 6-dim pose error
    (position error stacked over axis-angle orientation error).
    """
    J = np.asarray(jacobian, dtype=float)
    K_d = np.asarray(K_d, dtype=float)
    D_d = np.asarray(D_d, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    x_e = np.asarray(x_e, dtype=float)
    return J.T @ (-K_d @ x_e - D_d @ (J @ qdot))


def external_wrench_torque(q, F_ext, jacobian) -> np.ndarray:
    """Joint torques that realize a commanded end-effector wrench."""
    J = np.asarray(jacobian, dtype=float)
    return J.T @ np.asarray(F_ext, dtype=float)


def critical_damping(stiffness, inertia, ratio: float = 1.0, floor=None) -> np.ndarray:
    """Per-axis damping 2*ratio*sqrt(K*M), with an optional floor so axes
    whose stiffness is commanded to zero stay damped."""
    k = np.asarray(stiffness, dtype=float)
    m = np.asarray(inertia, dtype=float)
    d = 2.0 * ratio * np.sqrt(np.maximum(k, 0.0) * m)
    if floor is not None:
        d = np.maximum(d, np.asarray(floor, dtype=float))
    return d


@dataclass
class ControllerConfig:
    """Impedance gains, ramp limits and the simplified end-effector inertia."""

    stiffness: np.ndarray = field(
        default_factory=lambda: np.array([700.0, 700.0, 700.0, 50.0, 50.0, 50.0])
    )
    damping_ratio: float = 1.0
    damping_floor: np.ndarray = field(
        default_factory=lambda: np.array([20.0, 20.0, 20.0, 1.0, 1.0, 1.0])
    )
    stiffness_ramp: float = 2000.0  # (N/m)/s, per axis
    wrench_ramp: float = 50.0  # N/s resp. Nm/s, per axis
    mass: float = 2.0  # kg, translational
    rot_inertia: float = 0.02  # kg m^2, per rotational axis

    def __post_init__(self):
        self.stiffness = np.asarray(self.stiffness, dtype=float)
        self.damping_floor = np.asarray(self.damping_floor, dtype=float)
        if np.any(self.stiffness < 0):
            raise ValueError("stiffness must be componentwise >= 0")

    def inertia_diag(self) -> np.ndarray:
        return np.array([self.mass] * 3 + [self.rot_inertia] * 3)

    def damping_for(self, stiffness) -> np.ndarray:
        return critical_damping(
            stiffness, self.inertia_diag(), self.damping_ratio, self.damping_floor
        )
