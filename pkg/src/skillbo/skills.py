"""Skill library: behavior-tree expansions for the motion skills.

Each skill template from the scene expands into a memory-sequence subtree:
runtime precondition guards, then the skill body (primitives under a
parallel-first-success processor), then postcondition checks. Primitives
communicate with the controller through well-known blackboard keys:

    state        SimState snapshot of the current action step
    model        episode world-model view (poses possibly perturbed)
    cmd.goal     reference goal pose (7,)
    cmd.stiffness / cmd.wrench   controller setpoints (6,)
    cmd.overlay  Overlay or None
    cmd.speed    linear path speed for the motion generator
    success      dict of task thresholds (trans, rot_deg, depth)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .behavior_tree import (
    ActionLeaf,
    ConditionLeaf,
    ParallelFirstSuccess,
    SequenceStar,
    TickResult,
)
from .control_sim.motion import Overlay
from .geometry import quat_angle
from .world_model import SkillTemplate, WorldModel, collect_learnables

GOTO_TOLERANCE = 0.005  # m

DEFAULT_SUCCESS = {"trans": 0.01, "rot_deg": 5.0, "depth": 0.01}


class SkillError(Exception):
    pass


@dataclass
class SkillInstance:
    """A grounded skill: template plus bound objects and numeric values."""

    template: SkillTemplate
    args: dict[str, str]
    values: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for p in self.template.numeric_parameters():
            v = self.values.get(p.name, p.default)
            if v is None:
                raise SkillError(f"{self.template.name}: parameter {p.name!r} has no value")
            v = float(v)
            if p.learnable and p.bounds is not None:
                lo, hi = p.bounds
                if not (lo <= v <= hi):
                    raise SkillError(
                        f"{self.template.name}.{p.name}={v} outside bounds [{lo}, {hi}]"
                    )
            self.values[p.name] = v
        for p in self.template.object_parameters():
            if p.name not in self.args:
                raise SkillError(f"{self.template.name}: unbound object parameter {p.name!r}")

    @property
    def name(self) -> str:
        return self.template.name

    def resolve(self, term: str) -> str:
        """Map a ?parameter reference to its bound object id."""
        if term.startswith("?"):
            return self.args[term[1:]]
        return term


# --- condition evaluation ----------------------------------------------------


def _model_pose(blackboard: dict, object_id: str) -> np.ndarray:
    """Pose as the policy knows it (the episode world-model view). Hidden
    randomization must not leak into skill targets through the simulator."""
    return blackboard["model"].get(object_id).pose


def _current_pose(blackboard: dict, object_id: str) -> np.ndarray:
    """True current pose: simulator state for moving objects, model otherwise.
    Used by condition checks, which judge the real world."""
    state = blackboard["state"]
    if object_id in state.objects:
        return state.objects[object_id]
    return blackboard["model"].get(object_id).pose


def evaluate_relation(blackboard: dict, subject: str, predicate: str, obj: str) -> bool:
    model: WorldModel = blackboard["model"]
    if predicate != "at":
        return model.has_relation(subject, predicate, obj)
    success = blackboard.get("success", DEFAULT_SUCCESS)
    subj_kind = model.get(subject).kind
    obj_kind = model.get(obj).kind
    state = blackboard["state"]
    if subj_kind in ("gripper", "robot-arm"):
        target = _current_pose(blackboard, obj)
        d = float(np.linalg.norm(state.ee_pose[:3] - target[:3]))
        return d <= blackboard.get("goto_tolerance", GOTO_TOLERANCE)
    if subj_kind == "peg" and obj_kind == "box-with-hole":
        return state.insertion_depth > success.get("depth", 0.01)
    # movable object at a goal pose: task success thresholds
    current = _current_pose(blackboard, subject)
    target = _current_pose(blackboard, obj)
    trans = float(np.linalg.norm(current[:2] - target[:2]))
    rot = quat_angle(current[3:], target[3:])
    return trans <= success.get("trans", 0.01) and rot <= math.radians(
        success.get("rot_deg", 5.0)
    )


def condition_node(instance: SkillInstance, pattern) -> ConditionLeaf:
    subject = instance.resolve(pattern.subject)
    obj = instance.resolve(pattern.object)
    name = f"{pattern.predicate}({subject},{obj})"
    return ConditionLeaf(
        lambda bb, s=subject, p=pattern.predicate, o=obj: evaluate_relation(bb, s, p, o), name
    )


# --- primitive leaves ----------------------------------------------------------


class GoToLinearOffset(ActionLeaf):
    """Drive the reference on a straight segment to a target pose (plus an
    optional horizontal offset), succeed within the position tolerance."""

    def __init__(
        self,
        target_id: str,
        offset_xy: tuple[float, float] = (0.0, 0.0),
        speed: float | None = None,
        z_override: float | None = None,
        tolerance: float = GOTO_TOLERANCE,
        name: str = "",
    ):
        super().__init__(name or f"go-to({target_id})")
        self.target_id = target_id
        self.offset_xy = offset_xy
        self.speed = speed
        self.z_override = z_override
        self.tolerance = tolerance
        self._target: np.ndarray | None = None

    def on_tick(self, blackboard):
        if self._target is None:
            target = _model_pose(blackboard, self.target_id).copy()
            target[0] += self.offset_xy[0]
            target[1] += self.offset_xy[1]
            if self.z_override is not None:
                target[2] = self.z_override
            self._target = target
        blackboard["cmd.goal"] = self._target
        blackboard["cmd.overlay"] = None
        if self.speed is not None:
            blackboard["cmd.speed"] = self.speed
        state = blackboard["state"]
        d = float(np.linalg.norm(state.ee_pose[:3] - self._target[:3]))
        if d <= self.tolerance:
            self._target = None
            return TickResult.SUCCESS
        return TickResult.RUNNING

    def on_halt(self, blackboard):
        self._target = None


class ChangeStiffness(ActionLeaf):
    """Command a stiffness diagonal; keeps running (the motion primitive in
    the same parallel decides completion)."""

    def __init__(self, stiffness, name: str = "change-stiffness"):
        super().__init__(name)
        self.stiffness = np.asarray(stiffness, dtype=float)

    def on_tick(self, blackboard):
        blackboard["cmd.stiffness"] = self.stiffness
        return TickResult.RUNNING


class ApplyForce(ActionLeaf):
    """Command a constant end-effector wrench; keeps running."""

    def __init__(self, wrench, name: str = "apply-force"):
        super().__init__(name)
        self.wrench = np.asarray(wrench, dtype=float)

    def on_tick(self, blackboard):
        blackboard["cmd.wrench"] = self.wrench
        return TickResult.RUNNING


class SetGoal(ActionLeaf):
    """Point the reference at a world-model pose; keeps running."""

    def __init__(self, target_id: str, z_override: float | None = None, name: str = ""):
        super().__init__(name or f"set-goal({target_id})")
        self.target_id = target_id
        self.z_override = z_override

    def on_tick(self, blackboard):
        target = _model_pose(blackboard, self.target_id).copy()
        if self.z_override is not None:
            target[2] = self.z_override
        blackboard["cmd.goal"] = target
        return TickResult.RUNNING


class ApplyOverlay(ActionLeaf):
    """Attach a search overlay to the reference; keeps running.

    With ``on_contact`` the overlay engages only once the end effector feels
    contact, so a search starts from the pressed-down nominal center instead
    of sweeping in mid-air during the descent.
    """

    def __init__(
        self,
        overlay: Overlay,
        on_contact: bool = False,
        contact_threshold: float = 0.5,
        name: str = "overlay",
    ):
        super().__init__(name)
        self.overlay = overlay
        self.on_contact = on_contact
        self.contact_threshold = contact_threshold
        self._engaged = False

    def on_tick(self, blackboard):
        if self.on_contact and not self._engaged:
            if blackboard["state"].contact_force < self.contact_threshold:
                blackboard["cmd.overlay"] = None
                return TickResult.RUNNING
            self._engaged = True
        blackboard["cmd.overlay"] = self.overlay
        return TickResult.RUNNING

    def on_halt(self, blackboard):
        self._engaged = False


class InsertionDepthMonitor(ActionLeaf):
    """Succeeds once the peg is inserted deeper than the threshold."""

    def __init__(self, threshold: float = 0.01, name: str = "insertion-depth"):
        super().__init__(name)
        self.threshold = threshold

    def on_tick(self, blackboard):
        if blackboard["state"].insertion_depth > self.threshold:
            return TickResult.SUCCESS
        return TickResult.RUNNING


class ObjectAtGoalMonitor(ActionLeaf):
    """Succeeds once the object pose is within the success thresholds;
    checked continuously so mid-stroke success latches."""

    def __init__(self, object_id: str, goal_id: str, name: str = ""):
        super().__init__(name or f"object-at-goal({object_id})")
        self.object_id = object_id
        self.goal_id = goal_id

    def on_tick(self, blackboard):
        if evaluate_relation(blackboard, self.object_id, "at", self.goal_id):
            return TickResult.SUCCESS
        return TickResult.RUNNING


# --- skill expansions -----------------------------------------------------------

SKILL_REGISTRY: dict[str, callable] = {}


def register_skill(name: str):
    def wrap(fn):
        SKILL_REGISTRY[name] = fn
        return fn

    return wrap


def _skill_subtree(instance: SkillInstance, body) -> SequenceStar:
    """Guards, body, postcondition checks under a memory sequence, so guards
    are checked once when the skill starts."""
    nodes = [
        condition_node(instance, pat)
        for pat in instance.template.preconditions
        if pat.runtime and not pat.negated
    ]
    nodes.append(body)
    nodes += [
        condition_node(instance, pat)
        for pat in instance.template.postconditions
        if pat.runtime and not pat.negated
    ]
    return SequenceStar(nodes, name=instance.name)


@register_skill("go-to-linear")
def expand_go_to_linear(instance: SkillInstance, model: WorldModel, success: dict):
    to_id = instance.args["to"]
    speed = instance.values.get("path-speed", 0.1)
    body = ParallelFirstSuccess(
        [GoToLinearOffset(to_id, speed=speed)], name="go-to-linear-body"
    )
    return _skill_subtree(instance, body)


@register_skill("push")
def expand_push(instance: SkillInstance, model: WorldModel, success: dict):
    obj_id = instance.args["obj"]
    goal_id = instance.args["goal"]
    push_z = model.get(obj_id).pose[2] + instance.values.get("push-height", 0.035)
    speed = instance.values.get("push-speed", 0.08)
    stiffness = np.array([700.0, 700.0, 700.0, 50.0, 50.0, 50.0])
    phase1 = ParallelFirstSuccess(
        [
            GoToLinearOffset(
                obj_id,
                offset_xy=(instance.values["start-offset-x"], instance.values["start-offset-y"]),
                speed=instance.values.get("approach-speed", 0.1),
                z_override=push_z,
                name="to-start-point",
            ),
            ChangeStiffness(stiffness),
        ],
        name="push-start",
    )
    phase2 = ParallelFirstSuccess(
        [
            GoToLinearOffset(
                goal_id,
                offset_xy=(instance.values["goal-offset-x"], instance.values["goal-offset-y"]),
                speed=speed,
                z_override=push_z,
                name="push-stroke",
            ),
            ChangeStiffness(stiffness),
            ObjectAtGoalMonitor(obj_id, goal_id),
        ],
        name="push-stroke",
    )
    body = SequenceStar([phase1, phase2], name="push-body")
    return _skill_subtree(instance, body)


@register_skill("peg-insertion")
def expand_peg_insertion(instance: SkillInstance, model: WorldModel, success: dict):
    box_id = instance.args["box"]
    box = model.get(box_id)
    surface_z = box.pose[2] + box.prop("size-z", 0.05)
    force = instance.values["downward-force"]
    radius = instance.values["search-radius"]
    velocity = instance.values["path-velocity"]
    body = ParallelFirstSuccess(
        [
            ChangeStiffness(np.array([700.0, 700.0, 0.0, 50.0, 50.0, 50.0])),
            ApplyForce(np.array([0.0, 0.0, -force, 0.0, 0.0, 0.0])),
            SetGoal(box_id, z_override=surface_z, name="goal-hole-center"),
            ApplyOverlay(
                Overlay("circular", radius=radius, path_velocity=velocity), on_contact=True
            ),
            InsertionDepthMonitor(success.get("depth", 0.01)),
        ],
        name="peg-insertion-body",
    )
    return _skill_subtree(instance, body)


def expand_plan_step(
    step,
    index: int,
    model: WorldModel,
    registry,
    step_values: dict | None = None,
    success: dict | None = None,
):
    name = step.skill
    if name not in model.skills:
        raise SkillError(f"plan step {name!r} has no skill template")
    if name not in registry:
        raise SkillError(f"skill {name!r} has no registered BT expansion")
    template = model.skills[name]
    object_params = template.object_parameters()
    if len(step.args) != len(object_params):
        raise SkillError(
            f"{name}: plan binds {len(step.args)} objects, template declares {len(object_params)}"
        )
    args = {p.name: a for p, a in zip(object_params, step.args)}
    numeric = {p.name: p.default for p in template.numeric_parameters()}
    numeric.update(step_values or {})
    instance = SkillInstance(template=template, args=args, values=numeric)
    return registry[name](instance, model, success or DEFAULT_SUCCESS)


def plan_values_by_step(model: WorldModel, plan, configuration: dict) -> dict:
    """Split a flat learned-configuration dict into per-plan-step value dicts,
    using the same naming as collect_learnables."""
    per_step: dict[int, dict[str, float]] = {}
    for lp in collect_learnables(model, plan):
        if lp.name in configuration:
            per_step.setdefault(lp.plan_index, {})[lp.param] = float(configuration[lp.name])
    return per_step
