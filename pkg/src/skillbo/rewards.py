"""Reward functions and per-objective return accumulation.

Six reward kinds are supported; the metric-based ones (goal distance,
reference distance, pose divergence) either pass through an exponential
shaping or accumulate the raw metric, selected per reward. Objectives are
accumulated in a uniform maximization frame: objectives declared with
sense "min" (the applied-force style costs) enter negated, so dominance and
hypervolume work in one max-max frame downstream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import quat_angle


class RewardConfigError(Exception):
    pass


REWARD_KINDS = (
    "task-completion",
    "ee-box-distance",
    "applied-wrench",
    "ee-goal-distance",
    "ee-reference-distance",
    "object-pose-divergence",
)


@dataclass
class RewardSpec:
    kind: str
    objective: str
    weight: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in REWARD_KINDS:
            raise RewardConfigError(f"unknown reward kind {self.kind!r}")
        if not math.isfinite(self.weight):
            raise RewardConfigError("reward weight must be finite")
        if self.params.get("sigma", 1.0) <= 0:
            raise RewardConfigError("reward width sigma must be > 0")
        if self.params.get("offset", 0.0) < 0:
            raise RewardConfigError("distance offset must be >= 0")


@dataclass
class Objective:
    name: str
    sense: str = "max"  # "max" | "min"

    def __post_init__(self):
        if self.sense not in ("max", "min"):
            raise RewardConfigError(f"objective sense must be max or min, got {self.sense!r}")


@dataclass
class ObjectiveVector:
    """Accumulated return per declared objective, maximization frame."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if len(self.names) != len(self.values):
            raise RewardConfigError("one value per declared objective required")
        if not np.all(np.isfinite(self.values)):
            raise RewardConfigError("objective values must be finite")

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.values)}

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])


# --- elementary reward functions ---------------------------------------------


def reward_ee_box(distance: float, offset: float) -> float:
    """Localized attraction reward 1 / (2 (d + d_o))."""
    denom = 2.0 * (distance + offset)
    if denom <= 0.0:
        raise RewardConfigError("ee-box reward needs distance + offset > 0")
    return 1.0 / denom


def reward_exp(metric: float, sigma: float, offset: float = 0.0) -> float:
    """Exponential shaping exp(-(d_m + d_o) / (2 sigma^2))."""
    if sigma <= 0.0:
        raise RewardConfigError("sigma must be > 0")
    return math.exp(-(metric + offset) / (2.0 * sigma * sigma))


def reward_task_completion(success: bool, fixed: float) -> float:
    return fixed if success else 0.0


def box_surface_distance(point, box_pose, half_extents) -> float:
    """Distance from a point to an axis-aligned box surface (0 inside)."""
    d = np.abs(np.asarray(point, dtype=float) - np.asarray(box_pose, dtype=float)[:3])
    outside = np.maximum(d - np.asarray(half_extents, dtype=float), 0.0)
    return float(np.linalg.norm(outside))


def applied_wrench_integral(force_norms, dt: float) -> float:
    """Trapezoidal time integral of the contact-force magnitude."""
    f = np.asarray(force_norms, dtype=float)
    if f.size == 0:
        raise RewardConfigError("empty episode trace")
    if f.size == 1:
        return 0.0
    return float(np.trapezoid(f, dx=dt))


# --- episode trace -------------------------------------------------------------


@dataclass
class StepRecord:
    """Per-action-step data the reward layer consumes."""

    t: float
    ee_pos: np.ndarray
    ref_pos: np.ndarray
    contact_force: float
    objects: dict
    insertion_depth: float = 0.0


@dataclass
class EpisodeTrace:
    steps: list[StepRecord]
    dt: float
    success: bool
    bt_result: str = "running"
    aborted: bool = False


def _step_metric(spec: RewardSpec, step: StepRecord, context: dict) -> float:
    kind = spec.kind
    p = spec.params
    if kind == "ee-goal-distance":
        target = context["poses"][p["target"]]
        return float(np.linalg.norm(step.ee_pos - target[:3]))
    if kind == "ee-reference-distance":
        return float(np.linalg.norm(step.ee_pos - step.ref_pos))
    if kind == "object-pose-divergence":
        current = step.objects.get(p["object"])
        if current is None:
            current = context["poses"][p["object"]]
        target = context["poses"][p["target"]]
        trans = float(np.linalg.norm(current[:2] - target[:2]))
        ang = quat_angle(current[3:], target[3:])
        return p.get("trans-weight", 1.0) * trans + p.get("angle-weight", 0.0) * ang
    raise RewardConfigError(f"{kind} is not a metric reward")


def _step_reward(spec: RewardSpec, step: StepRecord, context: dict) -> float:
    if spec.kind == "ee-box-distance":
        box_pose = step.objects.get(spec.params["box"])
        if box_pose is None:
            box_pose = context["poses"][spec.params["box"]]
        d = box_surface_distance(step.ee_pos, box_pose, context["half_extents"][spec.params["box"]])
        return reward_ee_box(d, spec.params.get("offset", 0.0))
    metric = _step_metric(spec, step, context)
    if spec.params.get("transform", "exp") == "identity":
        return metric
    return reward_exp(metric, spec.params.get("sigma", 0.05), spec.params.get("offset", 0.0))


def accumulate(
    trace: EpisodeTrace, specs: list[RewardSpec], objectives: list[Objective], context: dict
) -> ObjectiveVector:
    """Sum the weighted rewards per objective over the episode.

    ``context`` provides the scene lookup the rewards need: realized object
    poses under "poses" (goal poses, hole center, box) and per-box half
    extents under "half_extents".
    """
    names = tuple(o.name for o in objectives)
    senses = {o.name: o.sense for o in objectives}
    totals = dict.fromkeys(names, 0.0)
    for spec in specs:
        if spec.objective not in totals:
            raise RewardConfigError(f"reward references undeclared objective {spec.objective!r}")
        if spec.kind == "task-completion":
            value = reward_task_completion(trace.success, spec.params.get("value", 100.0))
        elif spec.kind == "applied-wrench":
            value = applied_wrench_integral([s.contact_force for s in trace.steps], trace.dt)
        else:
            value = sum(_step_reward(spec, step, context) for step in trace.steps)
        totals[spec.objective] += spec.weight * value
    values = np.array(
        [totals[n] if senses[n] == "max" else -totals[n] for n in names], dtype=float
    )
    return ObjectiveVector(names=names, values=values)


def parse_reward_specs(entries: list[dict]) -> list[RewardSpec]:
    specs = []
    for e in entries:
        params = {k: v for k, v in e.items() if k not in ("kind", "objective", "weight")}
        specs.append(
            RewardSpec(
                kind=e["kind"],
                objective=e["objective"],
                weight=float(e.get("weight", 1.0)),
                params=params,
            )
        )
    return specs
