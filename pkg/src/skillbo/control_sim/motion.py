"""Motion generator: linear reference trajectories plus search overlays.

The generator advances a base reference pose toward a goal at constant path
speed and adds an optional overlay displacement (circle or Archimedes spiral
in the horizontal plane) on top. Overlays are arc-length parameterized, so
the traced path length equals path_velocity * time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import quat_angle, quat_slerp

DEFAULT_LINEAR_SPEED = 0.10  # m/s
DEFAULT_ANGULAR_SPEED = 0.5  # rad/s
DEFAULT_SPIRAL_PITCH = 0.005  # m per turn


@dataclass(frozen=True)
class Overlay:
    kind: str  # "circular" | "archimedes-spiral"
    radius: float
    path_velocity: float
    pitch: float = DEFAULT_SPIRAL_PITCH

    def __post_init__(self):
        if self.kind not in ("circular", "archimedes-spiral"):
            raise ValueError(f"unknown overlay kind {self.kind!r}")
        if self.radius < 0.0:
            raise ValueError("overlay radius must be >= 0")
        if self.path_velocity < 0.0:
            raise ValueError("overlay path velocity must be >= 0")


@dataclass
class MotionCommand:
    """One controller command emitted by a skill tick."""

    goal_pose: np.ndarray
    stiffness: np.ndarray
    wrench: np.ndarray = field(default_factory=lambda: np.zeros(6))
    overlay: Overlay | None = None
    linear_speed: float | None = None
    angular_speed: float | None = None

    def __post_init__(self):
        self.goal_pose = np.asarray(self.goal_pose, dtype=float)
        self.stiffness = np.asarray(self.stiffness, dtype=float)
        self.wrench = np.asarray(self.wrench, dtype=float)
        if self.goal_pose.shape != (7,):
            raise ValueError("goal pose must have 7 components")
        if not np.all(np.isfinite(self.goal_pose)):
            raise ValueError("goal pose must be finite")
        if self.stiffness.shape != (6,) or np.any(self.stiffness < 0):
            raise ValueError("stiffness must be 6 non-negative values")
        if self.wrench.shape != (6,):
            raise ValueError("wrench must have 6 components")
        if self.linear_speed is not None and self.linear_speed < 0:
            raise ValueError("linear speed must be >= 0")


@dataclass
class OverlayState:
    arc_length: float = 0.0

    def copy(self) -> "OverlayState":
        return OverlayState(self.arc_length)


def overlay_offset(overlay: Overlay, state: OverlayState) -> tuple[float, float]:
    """Horizontal displacement at the given accumulated arc length."""
    s = state.arc_length
    if overlay.kind == "circular":
        if overlay.radius <= 0.0:
            return 0.0, 0.0
        phi = s / overlay.radius
        return overlay.radius * math.cos(phi), overlay.radius * math.sin(phi)
    # Archimedes spiral rho = b*phi with s = b*phi^2/2, capped at the radius
    b = overlay.pitch / (2.0 * math.pi)
    if overlay.radius <= 0.0 or b <= 0.0:
        return 0.0, 0.0
    s_cap = 0.5 * overlay.radius**2 / b
    if s <= s_cap:
        phi = math.sqrt(2.0 * s / b)
        rho = b * phi
    else:
        phi = overlay.radius / b + (s - s_cap) / overlay.radius
        rho = overlay.radius
    return rho * math.cos(phi), rho * math.sin(phi)


def motion_generator_step(
    current_ref: np.ndarray, command: MotionCommand, dt: float, state: OverlayState | None = None
) -> tuple[np.ndarray, OverlayState]:
    """Advance the base reference one step and apply the overlay.

    Returns (reference pose to control against, updated overlay state). The
    base reference (without overlay) can be recovered because the overlay
    displacement is pure x/y; callers that need it keep their own copy.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    state = state or OverlayState()
    ref = np.asarray(current_ref, dtype=float).copy()
    goal = command.goal_pose
    speed = command.linear_speed if command.linear_speed is not None else DEFAULT_LINEAR_SPEED
    ang_speed = (
        command.angular_speed if command.angular_speed is not None else DEFAULT_ANGULAR_SPEED
    )

    delta = goal[:3] - ref[:3]
    dist = math.sqrt(float(delta @ delta))
    if dist <= speed * dt or dist == 0.0:
        ref[:3] = goal[:3]
    else:
        ref[:3] += (speed * dt / dist) * delta

    angle = quat_angle(ref[3:], goal[3:])
    if angle <= ang_speed * dt or angle < 1e-12:
        ref[3:] = goal[3:]
    else:
        ref[3:] = quat_slerp(ref[3:], goal[3:], ang_speed * dt / angle)

    new_state = state.copy()
    out = ref.copy()
    if command.overlay is not None and command.overlay.path_velocity > 0.0:
        new_state.arc_length += command.overlay.path_velocity * dt
        ox, oy = overlay_offset(command.overlay, new_state)
        out[0] += ox
        out[1] += oy
    return out, new_state


class MotionGenerator:
    """Stateful wrapper used by the simulator harness (one per episode)."""

    def __init__(self, initial_pose: np.ndarray):
        self.base_ref = np.asarray(initial_pose, dtype=float).copy()
        self.overlay_state = OverlayState()
        self._overlay_key: tuple | None = None

    def step(self, command: MotionCommand, dt: float) -> np.ndarray:
        key = None
        if command.overlay is not None:
            key = (command.overlay.kind, command.overlay.radius, command.overlay.path_velocity)
        if key != self._overlay_key:
            self.overlay_state = OverlayState()  # new overlay starts from scratch
            self._overlay_key = key
        ref, self.overlay_state = motion_generator_step(
            self.base_ref, command, dt, self.overlay_state
        )
        if command.overlay is not None:
            ox, oy = overlay_offset(command.overlay, self.overlay_state)
            self.base_ref = ref.copy()
            self.base_ref[0] -= ox
            self.base_ref[1] -= oy
        else:
            self.base_ref = ref.copy()
        return ref
