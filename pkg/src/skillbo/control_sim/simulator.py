"""Simplified end-effector dynamics and the two contact environments.

The default fidelity treats the end effector as a 6-DOF impedance-controlled
rigid body with diagonal inertia, integrated with semi-implicit Euler at
500 Hz. Commanded stiffness and wrench are rate-limited at every inner step.
The inner loop is written in scalar Python on purpose; numpy round trips per
2 ms step dominate the runtime of a learning session otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import validate_pose
from .contact import ContactParams, barycentric_weights, closest_point_on_polygon, penalty_contact
from .controller import ControllerConfig

INNER_DT = 0.002  # s, 500 Hz control loop
SUBSTEPS_PER_ACTION = 10  # 50 Hz action / behavior tree tick rate

ACTION_DIM = 19
ARM_STATE_DIM = 14


class SimulationAbort(RuntimeError):
    """Raised when the integrator produces a non-finite state."""


@dataclass
class Action:
    """One controller setpoint: reference pose, stiffness diagonal, wrench."""

    reference: np.ndarray
    stiffness: np.ndarray
    wrench: np.ndarray

    def __post_init__(self):
        self.reference = validate_pose(self.reference)
        self.stiffness = np.asarray(self.stiffness, dtype=float)
        self.wrench = np.asarray(self.wrench, dtype=float)
        if self.stiffness.shape != (6,) or np.any(self.stiffness < 0):
            raise ValueError("stiffness must be 6 non-negative values")
        if self.wrench.shape != (6,):
            raise ValueError("wrench must have 6 components")

    def to_vector(self) -> np.ndarray:
        v = np.concatenate([self.reference, self.stiffness, self.wrench])
        assert v.shape == (ACTION_DIM,)
        return v

    @classmethod
    def from_vector(cls, v) -> "Action":
        v = np.asarray(v, dtype=float)
        if v.shape != (ACTION_DIM,):
            raise ValueError(f"action vector must have {ACTION_DIM} components")
        return cls(v[:7], v[7:13], v[13:19])


@dataclass
class RandomizationSpec:
    """Domain randomization: pose noise plus a set of start configurations.

    ``seed`` may be an int or a tuple of ints (hierarchical entropy from the
    harness seed fan-out); each world gets its own spec and generator.
    """

    sigma: float = 0.0
    start_poses: list = field(default_factory=list)
    seed: int | tuple = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("pose-noise sigma must be >= 0")
        if not self.start_poses:
            raise ValueError("at least one start configuration is required")
        self.start_poses = [validate_pose(p) for p in self.start_poses]

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed))


@dataclass
class SimState:
    """Snapshot handed to the behavior tree / reward layer each action step."""

    mode: str
    ee_pose: np.ndarray
    ee_twist: np.ndarray
    objects: dict
    t: float
    contact_force: float = 0.0
    insertion_depth: float = 0.0
    reference: np.ndarray | None = None
    q: np.ndarray | None = None
    qdot: np.ndarray | None = None

    def robot_vector(self) -> np.ndarray:
        if self.mode == "arm":
            v = np.concatenate([self.q, self.qdot])
            assert v.shape == (ARM_STATE_DIM,)
            return v
        return np.concatenate([self.ee_pose, self.ee_twist])


class CartesianSimulator:
    """End effector as an impedance-controlled rigid body plus an optional
    contact environment (push or peg)."""

    def __init__(
        self,
        config: ControllerConfig | None = None,
        environment=None,
        start_pose=None,
        dt: float = INNER_DT,
    ):
        self.config = config or ControllerConfig()
        self.env = environment
        p = validate_pose(start_pose) if start_pose is not None else np.array([0, 0, 0, 0, 0, 0, 1.0])
        self.px, self.py, self.pz = float(p[0]), float(p[1]), float(p[2])
        self.qx, self.qy, self.qz, self.qw = float(p[3]), float(p[4]), float(p[5]), float(p[6])
        self.vx = self.vy = self.vz = 0.0
        self.wx = self.wy = self.wz = 0.0
        self.k_exec = [float(v) for v in self.config.stiffness]
        self.w_exec = [0.0] * 6
        self.dt = float(dt)
        self.t = 0.0
        self.last_contact = 0.0

    # -- state access ------------------------------------------------------

    def ee_pose(self) -> np.ndarray:
        return np.array([self.px, self.py, self.pz, self.qx, self.qy, self.qz, self.qw])

    def snapshot(self) -> SimState:
        objects = self.env.object_poses() if self.env is not None else {}
        return SimState(
            mode="cartesian",
            ee_pose=self.ee_pose(),
            ee_twist=np.array([self.vx, self.vy, self.vz, self.wx, self.wy, self.wz]),
            objects=objects,
            t=self.t,
            contact_force=self.last_contact,
            insertion_depth=self.env.insertion_depth() if self.env is not None else 0.0,
        )

    def mechanical_energy(self, action: Action) -> float:
        """Kinetic plus impedance-spring energy w.r.t. the action reference
        (uses the executed stiffness)."""
        m = self.config.mass
        inert = self.config.rot_inertia
        ke = 0.5 * m * (self.vx**2 + self.vy**2 + self.vz**2)
        ke += 0.5 * inert * (self.wx**2 + self.wy**2 + self.wz**2)
        ex, ey, ez, rx, ry, rz = self._pose_error(action.reference)
        k = self.k_exec
        pe = 0.5 * (
            k[0] * ex**2 + k[1] * ey**2 + k[2] * ez**2
            + k[3] * rx**2 + k[4] * ry**2 + k[5] * rz**2
        )
        return ke + pe

    def _pose_error(self, ref) -> tuple[float, float, float, float, float, float]:
        # orientation error: axis-angle of q * conj(q_d), scalar part kept positive
        dx, dy, dz, dw = float(ref[3]), float(ref[4]), float(ref[5]), float(ref[6])
        qx, qy, qz, qw = self.qx, self.qy, self.qz, self.qw
        rx = qw * -dx + qx * dw + qy * -dz - qz * -dy
        ry = qw * -dy - qx * -dz + qy * dw + qz * -dx
        rz = qw * -dz + qx * -dy - qy * -dx + qz * dw
        rw = qw * dw - qx * -dx - qy * -dy - qz * -dz
        if rw < 0.0:
            rx, ry, rz, rw = -rx, -ry, -rz, -rw
        s = math.sqrt(rx * rx + ry * ry + rz * rz)
        if s < 1e-12:
            ax, ay, az = 2.0 * rx, 2.0 * ry, 2.0 * rz
        else:
            k = 2.0 * math.atan2(s, rw) / s
            ax, ay, az = rx * k, ry * k, rz * k
        return (
            self.px - float(ref[0]),
            self.py - float(ref[1]),
            self.pz - float(ref[2]),
            ax,
            ay,
            az,
        )

    # -- integration -------------------------------------------------------

    def step(self, action: Action) -> None:
        """One 2 ms inner step with the action held constant."""
        cfg = self.config
        dt = self.dt
        dk = cfg.stiffness_ramp * dt
        dw = cfg.wrench_ramp * dt
        k = self.k_exec
        w = self.w_exec
        tk = action.stiffness
        tw = action.wrench
        for i in range(6):
            dki = tk[i] - k[i]
            if dki > dk:
                dki = dk
            elif dki < -dk:
                dki = -dk
            k[i] += dki
            dwi = tw[i] - w[i]
            if dwi > dw:
                dwi = dw
            elif dwi < -dw:
                dwi = -dw
            w[i] += dwi

        ex, ey, ez, rx, ry, rz = self._pose_error(action.reference)
        m = cfg.mass
        inert = cfg.rot_inertia
        zeta = cfg.damping_ratio
        dfl = cfg.damping_floor
        d0 = max(2.0 * zeta * math.sqrt(k[0] * m), dfl[0])
        d1 = max(2.0 * zeta * math.sqrt(k[1] * m), dfl[1])
        d2 = max(2.0 * zeta * math.sqrt(k[2] * m), dfl[2])
        d3 = max(2.0 * zeta * math.sqrt(k[3] * inert), dfl[3])
        d4 = max(2.0 * zeta * math.sqrt(k[4] * inert), dfl[4])
        d5 = max(2.0 * zeta * math.sqrt(k[5] * inert), dfl[5])

        fx = -k[0] * ex - d0 * self.vx + w[0]
        fy = -k[1] * ey - d1 * self.vy + w[1]
        fz = -k[2] * ez - d2 * self.vz + w[2]
        tx = -k[3] * rx - d3 * self.wx + w[3]
        ty = -k[4] * ry - d4 * self.wy + w[4]
        tz = -k[5] * rz - d5 * self.wz + w[5]

        if self.env is not None:
            cfx, cfy, cfz, ctx, cty, ctz = self.env.apply(self, dt)
            fx += cfx
            fy += cfy
            fz += cfz
            tx += ctx
            ty += cty
            tz += ctz
            self.last_contact = math.sqrt(cfx * cfx + cfy * cfy + cfz * cfz)
        else:
            self.last_contact = 0.0

        self.vx += dt * fx / m
        self.vy += dt * fy / m
        self.vz += dt * fz / m
        self.wx += dt * tx / inert
        self.wy += dt * ty / inert
        self.wz += dt * tz / inert

        self.px += dt * self.vx
        self.py += dt * self.vy
        self.pz += dt * self.vz

        # quaternion integration q' = q + dt/2 * omega (x) q, renormalized
        hx, hy, hz = 0.5 * dt * self.wx, 0.5 * dt * self.wy, 0.5 * dt * self.wz
        qx, qy, qz, qw = self.qx, self.qy, self.qz, self.qw
        nqx = qx + (hx * qw + hy * qz - hz * qy)
        nqy = qy + (-hx * qz + hy * qw + hz * qx)
        nqz = qz + (hx * qy - hy * qx + hz * qw)
        nqw = qw + (-hx * qx - hy * qy - hz * qz)
        n = math.sqrt(nqx * nqx + nqy * nqy + nqz * nqz + nqw * nqw)
        self.qx, self.qy, self.qz, self.qw = nqx / n, nqy / n, nqz / n, nqw / n

        self.t += dt
        if not (
            math.isfinite(self.px)
            and math.isfinite(self.py)
            and math.isfinite(self.pz)
            and math.isfinite(self.vx)
            and math.isfinite(self.vy)
            and math.isfinite(self.vz)
        ):
            raise SimulationAbort(f"state diverged at t={self.t:.3f}")

    def run_action(self, action: Action, substeps: int = SUBSTEPS_PER_ACTION) -> None:
        for _ in range(substeps):
            self.step(action)


class PegEnvironment:
    """Plane with a circular bore; the peg is a vertical disc rigidly
    attached to the end effector, whose z position is the peg bottom.

    Descent below the surface requires the peg disc to lie fully inside the
    hole disc (offset <= radial clearance). While the peg is pressed and its
    center is over the hole disc, the unsupported load line tilts it against
    the rim, which acts as a funnel: a lateral force proportional to the
    pressing force guides the peg toward the hole center.
    """

    def __init__(
        self,
        hole_xy: tuple[float, float],
        surface_z: float,
        hole_radius: float,
        peg_radius: float,
        bore_depth: float = 0.05,
        funnel_gain: float = 1.0,
        params: ContactParams | None = None,
        box_id: str = "BoxWithHole-1",
        box_pose=None,
    ):
        if hole_radius <= peg_radius:
            raise ValueError("hole radius must exceed peg radius")
        self.hx, self.hy = float(hole_xy[0]), float(hole_xy[1])
        self.surface_z = float(surface_z)
        self.hole_radius = float(hole_radius)
        self.peg_radius = float(peg_radius)
        self.clearance = self.hole_radius - self.peg_radius
        self.bore_depth = float(bore_depth)
        self.funnel_gain = float(funnel_gain)
        self.params = params or ContactParams()
        self.deep_limit = 0.005  # m, deeper than any penalty penetration
        self.box_id = box_id
        self.box_pose = np.asarray(box_pose, dtype=float) if box_pose is not None else None
        self._depth = 0.0

    def object_poses(self) -> dict:
        out = {}
        if self.box_pose is not None:
            out[self.box_id] = self.box_pose.copy()
        return out

    def insertion_depth(self) -> float:
        return self._depth

    def apply(self, sim: CartesianSimulator, dt: float):
        p = self.params
        dx = sim.px - self.hx
        dy = sim.py - self.hy
        off = math.sqrt(dx * dx + dy * dy)
        pen = self.surface_z - sim.pz
        fx = fy = fz = 0.0
        if pen <= 0.0:
            self._depth = 0.0
            return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
        on_surface = off > self.clearance and pen < self.deep_limit
        if on_surface:
            v_lat = math.sqrt(sim.vx * sim.vx + sim.vy * sim.vy)
            normal, tangential = penalty_contact(pen, -sim.vz, v_lat, p)
            fz += normal
            if v_lat > 1e-12 and tangential > 0.0:
                fx -= tangential * sim.vx / v_lat
                fy -= tangential * sim.vy / v_lat
            if off < self.hole_radius and normal > 0.0:
                g = self.funnel_gain * normal / off
                fx -= g * dx
                fy -= g * dy
            self._depth = 0.0
        else:
            # in the bore: side wall plus bottom, frictionless
            if off > self.clearance:
                wall_pen = off - self.clearance
                radial_v = (sim.vx * dx + sim.vy * dy) / off
                wall_n = p.k_c * wall_pen + p.c_c * radial_v
                if wall_n > 0.0:
                    fx -= wall_n * dx / off
                    fy -= wall_n * dy / off
            floor_pen = pen - self.bore_depth
            if floor_pen > 0.0:
                floor_n = p.k_c * floor_pen - p.c_c * sim.vz
                if floor_n > 0.0:
                    fz += floor_n
            self._depth = pen if off < self.hole_radius else 0.0
        return fx, fy, fz, 0.0, 0.0, 0.0


class PushEnvironment:
    """Planar (x, y, yaw) rigid object pushed by a square tool.

    Tool/object coupling is a penalty contact at penetrating vertices (both
    directions), so flat-on-flat pushes make two-corner line contacts that
    stabilize the object against the knife-edge spin of a point contact.
    Ground Coulomb friction acts at the three footprint vertices with loads
    from the barycentric split of the (possibly offset) center of mass, so
    off-center pushes rotate the object and an uneven weight distribution
    changes how it rotates.
    """

    GRAVITY = 9.81

    def __init__(
        self,
        object_id: str,
        vertices,  # CCW footprint vertices in the object frame (centroid origin)
        pose_xyyaw: tuple[float, float, float],
        mass: float,
        com_offset: tuple[float, float] = (0.0, 0.0),
        mu_ground: float = 0.4,
        pusher_radius: float = 0.035,  # half the side length of the square tool
        params: ContactParams | None = None,
        object_z: float = 0.0,
        object_height: float = 0.07,
    ):
        self.object_id = object_id
        self.verts = [(float(x), float(y)) for x, y in vertices]
        if len(self.verts) != 3:
            raise ValueError("footprint must be a triangle (three support points)")
        self.ox, self.oy, self.oyaw = (float(v) for v in pose_xyyaw)
        self.ovx = self.ovy = self.ow = 0.0
        self.mass = float(mass)
        self.com = (float(com_offset[0]), float(com_offset[1]))
        self.mu_ground = float(mu_ground)
        self.pusher_half = float(pusher_radius)
        self.params = params or ContactParams()
        self.object_z = float(object_z)
        self.object_height = float(object_height)

        # support loads from the barycentric coordinates of the COM
        lam = barycentric_weights(self.com, *self.verts)
        if min(lam) <= 0.0:
            raise ValueError("center of mass must lie strictly inside the support triangle")
        self.loads = [l * self.mass * self.GRAVITY for l in lam]
        # inertia of a uniform right triangle about its centroid, shifted to the COM
        xs = [v[0] for v in self.verts]
        ys = [v[1] for v in self.verts]
        a = max(xs) - min(xs)
        b = max(ys) - min(ys)
        inertia_centroid = self.mass * (a * a + b * b) / 18.0
        d2 = self.com[0] ** 2 + self.com[1] ** 2
        self.inertia = inertia_centroid + self.mass * d2
        self.stick_torque = self.mu_ground * sum(
            load * math.hypot(v[0] - self.com[0], v[1] - self.com[1])
            for load, v in zip(self.loads, self.verts)
        )
        self.v_stick = 1e-4
        self.v_reg = 2e-2
        self._contact_normal = 0.0

    def object_poses(self) -> dict:
        h = 0.5 * self.oyaw
        return {
            self.object_id: np.array(
                [self.ox, self.oy, self.object_z, 0.0, 0.0, math.sin(h), math.cos(h)]
            )
        }

    def insertion_depth(self) -> float:
        return 0.0

    def pose_xyyaw(self) -> tuple[float, float, float]:
        return self.ox, self.oy, self.oyaw

    def _pusher_corners_local(self) -> list[tuple[float, float]]:
        h = self.pusher_half
        return [(-h, -h), (h, -h), (h, h), (-h, h)]

    def apply(self, sim: CartesianSimulator, dt: float):
        fx_obj = fy_obj = torque = 0.0
        fx_ee = fy_ee = tz_ee = 0.0
        self._contact_normal = 0.0
        if sim.pz < self.object_z + self.object_height:
            c = math.cos(self.oyaw)
            s = math.sin(self.oyaw)
            pyaw = 2.0 * math.atan2(sim.qz, sim.qw)
            cp_ = math.cos(pyaw)
            sp_ = math.sin(pyaw)
            h = self.pusher_half
            comx = self.ox + c * self.com[0] - s * self.com[1]
            comy = self.oy + s * self.com[0] + c * self.com[1]

            contacts = []  # (point x, point y, normal-on-object x, y, penetration)
            # pusher corners into the object footprint
            for gx, gy in self._pusher_corners_local():
                wx = sim.px + cp_ * gx - sp_ * gy
                wy = sim.py + sp_ * gx + cp_ * gy
                lx = c * (wx - self.ox) + s * (wy - self.oy)
                ly = -s * (wx - self.ox) + c * (wy - self.oy)
                bx, by, inside = closest_point_on_polygon(lx, ly, self.verts)
                if not inside:
                    continue
                d = math.hypot(lx - bx, ly - by)
                if d < 1e-12:
                    continue
                nlx, nly = (lx - bx) / d, (ly - by) / d  # into the object
                contacts.append((wx, wy, c * nlx - s * nly, s * nlx + c * nly, d))
            # object vertices into the pusher square
            for vx_, vy_ in self.verts:
                wx = self.ox + c * vx_ - s * vy_
                wy = self.oy + s * vx_ + c * vy_
                lx = cp_ * (wx - sim.px) + sp_ * (wy - sim.py)
                ly = -sp_ * (wx - sim.px) + cp_ * (wy - sim.py)
                if abs(lx) >= h or abs(ly) >= h:
                    continue
                # shallowest exit direction out of the square
                exit_x = h - abs(lx)
                exit_y = h - abs(ly)
                if exit_x <= exit_y:
                    nlx, nly = (1.0 if lx >= 0 else -1.0), 0.0
                    d = exit_x
                else:
                    nlx, nly = 0.0, (1.0 if ly >= 0 else -1.0)
                    d = exit_y
                contacts.append((wx, wy, cp_ * nlx - sp_ * nly, sp_ * nlx + cp_ * nly, d))

            p = self.params
            for wx, wy, nx, ny, pen in contacts:
                rx_ = wx - comx
                ry_ = wy - comy
                vcx = self.ovx - self.ow * ry_
                vcy = self.ovy + self.ow * rx_
                relx = sim.vx - vcx
                rely = sim.vy - vcy
                approach = relx * nx + rely * ny
                tx_ = relx - approach * nx
                ty_ = rely - approach * ny
                slip = math.hypot(tx_, ty_)
                normal, tangential = penalty_contact(pen, approach, slip, p)
                if normal <= 0.0:
                    continue
                fcx = normal * nx
                fcy = normal * ny
                if slip > 1e-12 and tangential > 0.0:
                    fcx += tangential * tx_ / slip
                    fcy += tangential * ty_ / slip
                fx_obj += fcx
                fy_obj += fcy
                torque += rx_ * fcy - ry_ * fcx
                fx_ee -= fcx
                fy_ee -= fcy
                tz_ee -= (wx - sim.px) * fcy - (wy - sim.py) * fcx
                self._contact_normal += normal

        self._advance_object(fx_obj, fy_obj, torque, dt)
        return fx_ee, fy_ee, 0.0, 0.0, 0.0, tz_ee

    def _advance_object(self, fx: float, fy: float, torque: float, dt: float) -> None:
        speed = math.hypot(self.ovx, self.ovy)
        at_rest = speed < self.v_stick and abs(self.ow) < self.v_stick
        if at_rest:
            f_applied = math.hypot(fx, fy)
            limit = self.mu_ground * self.mass * self.GRAVITY
            if f_applied <= limit and abs(torque) <= self.stick_torque:
                self.ovx = self.ovy = self.ow = 0.0
                return
        c = math.cos(self.oyaw)
        s = math.sin(self.oyaw)
        for load, (vx_, vy_) in zip(self.loads, self.verts):
            rx_ = c * (vx_ - self.com[0]) - s * (vy_ - self.com[1])
            ry_ = s * (vx_ - self.com[0]) + c * (vy_ - self.com[1])
            vix = self.ovx - self.ow * ry_
            viy = self.ovy + self.ow * rx_
            vn = math.hypot(vix, viy)
            if vn < 1e-12:
                continue
            # Coulomb friction with a viscous region below v_reg: full mu*N
            # during real slip, linear (and stable at dt = 2 ms) near rest so
            # the integrator neither limit-cycles nor creeps
            f_mag = self.mu_ground * load * min(1.0, vn / self.v_reg)
            fix = -f_mag * vix / vn
            fiy = -f_mag * viy / vn
            fx += fix
            fy += fiy
            torque += rx_ * fiy - ry_ * fix
        self.ovx += dt * fx / self.mass
        self.ovy += dt * fy / self.mass
        self.ow += dt * torque / self.inertia
        comx_off_x = self.com[0]
        # integrate the COM, then recover the frame origin from yaw
        comx = self.ox + c * comx_off_x - s * self.com[1]
        comy = self.oy + s * comx_off_x + c * self.com[1]
        comx += dt * self.ovx
        comy += dt * self.ovy
        self.oyaw += dt * self.ow
        c2 = math.cos(self.oyaw)
        s2 = math.sin(self.oyaw)
        self.ox = comx - (c2 * self.com[0] - s2 * self.com[1])
        self.oy = comy - (s2 * self.com[0] + c2 * self.com[1])
