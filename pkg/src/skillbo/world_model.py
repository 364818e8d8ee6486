"""Semantic scene model: objects, relations and skill templates.

The model is the digital twin the planner and the skills read from. It is
loaded once per scenario from a YAML scene file and treated as immutable
while a learning run is going; episode-local copies are made where poses
need to be perturbed.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .geometry import validate_pose


class WorldModelError(Exception):
    pass


class DuplicateObjectError(WorldModelError):
    pass


@dataclass
class WmObject:
    """A named, typed scene object with a pose and numeric properties."""

    id: str
    kind: str
    pose: np.ndarray = field(default_factory=lambda: np.array([0, 0, 0, 0, 0, 0, 1.0]))
    properties: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.pose = validate_pose(self.pose)
        for key, value in self.properties.items():
            self.properties[key] = float(value)
            if _is_geometric(key) and self.properties[key] <= 0.0:
                raise WorldModelError(f"{self.id}: geometric property {key!r} must be positive")

    def prop(self, key: str, default: float | None = None) -> float:
        if key in self.properties:
            return self.properties[key]
        if default is None:
            raise KeyError(f"{self.id} has no property {key!r}")
        return default


_GEOMETRIC_PREFIXES = ("size", "radius", "hole-radius", "height", "side", "mass")


def _is_geometric(key: str) -> bool:
    return any(key == p or key.startswith(p + "-") for p in _GEOMETRIC_PREFIXES)


@dataclass(frozen=True)
class Relation:
    """A ground literal ``predicate(subject, object)``."""

    subject: str
    predicate: str
    object: str

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.predicate, self.subject, self.object)


@dataclass(frozen=True)
class RelationPattern:
    """A pre/postcondition literal over template parameters or constants.

    Terms starting with ``?`` refer to template parameters. ``negated`` only
    makes sense in postconditions (STRIPS delete effect). ``runtime`` marks
    whether the literal is checked as a guard while executing the behavior
    tree (planning always uses it).
    """

    subject: str
    predicate: str
    object: str
    negated: bool = False
    runtime: bool = True

    def terms(self) -> tuple[str, str]:
        return (self.subject, self.object)


@dataclass(frozen=True)
class SkillParameter:
    name: str
    semantic_type: str  # an object kind, or "real" for numeric parameters
    default: object = None
    learnable: bool = False
    bounds: tuple[float, float] | None = None

    @property
    def is_object(self) -> bool:
        return self.semantic_type != "real"


@dataclass
class SkillTemplate:
    name: str
    parameters: list[SkillParameter]
    preconditions: list[RelationPattern] = field(default_factory=list)
    postconditions: list[RelationPattern] = field(default_factory=list)

    def __post_init__(self):
        names = {p.name for p in self.parameters}
        if len(names) != len(self.parameters):
            raise WorldModelError(f"skill {self.name}: duplicate parameter names")
        for p in self.parameters:
            if p.learnable:
                if p.bounds is None or not np.all(np.isfinite(p.bounds)):
                    raise WorldModelError(
                        f"skill {self.name}: learnable parameter {p.name!r} needs finite bounds"
                    )
                if p.bounds[0] >= p.bounds[1]:
                    raise WorldModelError(
                        f"skill {self.name}: bounds for {p.name!r} must satisfy lower < upper"
                    )
        for pat in list(self.preconditions) + list(self.postconditions):
            for term in pat.terms():
                if term.startswith("?") and term[1:] not in names:
                    raise WorldModelError(
                        f"skill {self.name}: condition references unknown parameter {term!r}"
                    )

    def object_parameters(self) -> list[SkillParameter]:
        return [p for p in self.parameters if p.is_object]

    def numeric_parameters(self) -> list[SkillParameter]:
        return [p for p in self.parameters if not p.is_object]


class WorldModel:
    """Container for objects, relations and skill templates."""

    def __init__(self):
        self.objects: dict[str, WmObject] = {}
        self.relations: list[Relation] = []
        self.skills: dict[str, SkillTemplate] = {}

    def add_object(self, obj: WmObject) -> None:
        if obj.id in self.objects:
            raise DuplicateObjectError(f"object id {obj.id!r} already present")
        self.objects[obj.id] = obj

    def get(self, object_id: str) -> WmObject:
        try:
            return self.objects[object_id]
        except KeyError:
            raise WorldModelError(f"unknown object {object_id!r}") from None

    def add_relation(self, rel: Relation) -> None:
        for term in (rel.subject, rel.object):
            if term not in self.objects:
                raise WorldModelError(f"relation references unknown object {term!r}")
        self.relations.append(rel)

    def add_skill(self, template: SkillTemplate) -> None:
        if template.name in self.skills:
            raise WorldModelError(f"skill {template.name!r} already registered")
        self.skills[template.name] = template

    def objects_of_kind(self, kind: str) -> list[WmObject]:
        return [o for o in self.objects.values() if o.kind == kind]

    def has_relation(self, subject: str, predicate: str, obj: str) -> bool:
        return any(
            r.subject == subject and r.predicate == predicate and r.object == obj
            for r in self.relations
        )

    def copy(self) -> "WorldModel":
        clone = WorldModel()
        for obj in self.objects.values():
            clone.objects[obj.id] = replace(obj, pose=obj.pose.copy(), properties=dict(obj.properties))
        clone.relations = list(self.relations)
        clone.skills = dict(self.skills)
        return clone

    def __eq__(self, other):
        if not isinstance(other, WorldModel):
            return NotImplemented
        if set(self.objects) != set(other.objects):
            return False
        for oid, obj in self.objects.items():
            o2 = other.objects[oid]
            if obj.kind != o2.kind or obj.properties != o2.properties:
                return False
            if not np.allclose(obj.pose, o2.pose, atol=0.0, rtol=0.0):
                return False
        return self.relations == other.relations and self.skills == other.skills


# --- learnable-parameter discovery -----------------------------------------


@dataclass(frozen=True)
class LearnableParam:
    """One learnable entry of the search space, tied to a plan step."""

    name: str  # unique, e.g. "push.start-offset-x"
    skill: str
    plan_index: int
    param: str
    bounds: tuple[float, float]
    param_type: str = "real"


def collect_learnables(model: WorldModel, plan_steps) -> list[LearnableParam]:
    """Collect the learnable parameters of a skill sequence, in plan order
    then declaration order. Names are prefixed with the plan index only when
    the same skill occurs more than once."""
    names = [getattr(step, "skill", step if isinstance(step, str) else None) for step in plan_steps]
    names = [n if isinstance(n, str) else str(n) for n in names]
    counts: dict[str, int] = {}
    for n in names:
        counts[n] = counts.get(n, 0) + 1

    out: list[LearnableParam] = []
    seen_idx: dict[str, int] = {}
    for plan_index, skill_name in enumerate(names):
        if skill_name not in model.skills:
            raise WorldModelError(f"plan step {plan_index} references unknown skill {skill_name!r}")
        template = model.skills[skill_name]
        seen_idx[skill_name] = seen_idx.get(skill_name, -1) + 1
        for p in template.numeric_parameters():
            if not p.learnable:
                continue
            if p.bounds is None:
                raise WorldModelError(f"{skill_name}.{p.name}: learnable parameter missing bounds")
            if counts[skill_name] > 1:
                name = f"{skill_name}#{seen_idx[skill_name]}.{p.name}"
            else:
                name = f"{skill_name}.{p.name}"
            out.append(
                LearnableParam(
                    name=name,
                    skill=skill_name,
                    plan_index=plan_index,
                    param=p.name,
                    bounds=(float(p.bounds[0]), float(p.bounds[1])),
                )
            )
    return out


# --- scene file (de)serialization -------------------------------------------


def _pattern_from_dict(d: dict) -> RelationPattern:
    return RelationPattern(
        subject=d["subject"],
        predicate=d["predicate"],
        object=d["object"],
        negated=bool(d.get("negated", False)),
        runtime=bool(d.get("runtime", True)),
    )


def _pattern_to_dict(p: RelationPattern) -> dict:
    d = {"subject": p.subject, "predicate": p.predicate, "object": p.object}
    if p.negated:
        d["negated"] = True
    if not p.runtime:
        d["runtime"] = False
    return d


def model_from_dict(data: dict) -> WorldModel:
    model = WorldModel()
    for entry in data.get("objects", []):
        model.add_object(
            WmObject(
                id=entry["id"],
                kind=entry["kind"],
                pose=np.asarray(entry.get("pose", [0, 0, 0, 0, 0, 0, 1]), dtype=float),
                properties={k: float(v) for k, v in (entry.get("properties") or {}).items()},
            )
        )
    for entry in data.get("relations", []):
        model.add_relation(Relation(entry["subject"], entry["predicate"], entry["object"]))
    for entry in data.get("skills", []):
        params = []
        for p in entry.get("parameters", []):
            bounds = p.get("bounds")
            params.append(
                SkillParameter(
                    name=p["name"],
                    semantic_type=p.get("type", "real"),
                    default=p.get("default"),
                    learnable=bool(p.get("learnable", False)),
                    bounds=tuple(float(b) for b in bounds) if bounds else None,
                )
            )
        model.add_skill(
            SkillTemplate(
                name=entry["name"],
                parameters=params,
                preconditions=[_pattern_from_dict(x) for x in entry.get("preconditions", [])],
                postconditions=[_pattern_from_dict(x) for x in entry.get("postconditions", [])],
            )
        )
    return model


def model_to_dict(model: WorldModel) -> dict:
    objects = []
    for obj in model.objects.values():
        entry: dict = {"id": obj.id, "kind": obj.kind, "pose": [float(v) for v in obj.pose]}
        if obj.properties:
            entry["properties"] = dict(obj.properties)
        objects.append(entry)
    skills = []
    for tpl in model.skills.values():
        params = []
        for p in tpl.parameters:
            d: dict = {"name": p.name, "type": p.semantic_type}
            if p.default is not None:
                d["default"] = p.default
            if p.learnable:
                d["learnable"] = True
                d["bounds"] = [p.bounds[0], p.bounds[1]]
            params.append(d)
        skills.append(
            {
                "name": tpl.name,
                "parameters": params,
                "preconditions": [_pattern_to_dict(x) for x in tpl.preconditions],
                "postconditions": [_pattern_to_dict(x) for x in tpl.postconditions],
            }
        )
    return {
        "objects": objects,
        "relations": [
            {"subject": r.subject, "predicate": r.predicate, "object": r.object}
            for r in model.relations
        ],
        "skills": skills,
    }


def load_scene(path) -> tuple[WorldModel, dict]:
    """Load a scene file; returns (model, full document) so callers can read
    the scenario sections (goal, rewards, ...) from the same file."""
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise WorldModelError(f"{path}: scene file must be a mapping")
    return model_from_dict(data), data


def save_scene(model: WorldModel, path, extra: dict | None = None) -> None:
    doc = dict(extra or {})
    doc.update(model_to_dict(model))
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
