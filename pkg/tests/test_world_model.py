import numpy as np
import pytest

from skillbo.world_model import (
    DuplicateObjectError,
    Relation,
    RelationPattern,
    SkillParameter,
    SkillTemplate,
    WmObject,
    WorldModel,
    WorldModelError,
    collect_learnables,
    load_scene,
    model_from_dict,
    model_to_dict,
    save_scene,
)

from conftest import scenario_path


def make_obj(oid="Peg-1", kind="peg", **props):
    return WmObject(id=oid, kind=kind, pose=np.array([0, 0, 0, 0, 0, 0, 1.0]), properties=props)


def test_add_then_lookup_identity():
    m = WorldModel()
    obj = make_obj(radius=0.005)
    m.add_object(obj)
    assert m.get("Peg-1") is obj


def test_duplicate_id_rejected():
    m = WorldModel()
    m.add_object(make_obj())
    with pytest.raises(DuplicateObjectError):
        m.add_object(make_obj())


def test_hole_radius_property_stored():
    peg_radius = 0.005
    m = WorldModel()
    m.add_object(
        make_obj("BoxWithHole-1", "box-with-hole", **{"hole-radius": peg_radius + 0.0015})
    )
    assert m.get("BoxWithHole-1").prop("hole-radius") == pytest.approx(0.0065)


def test_quaternion_norm_validated():
    with pytest.raises(ValueError):
        WmObject(id="x", kind="pose", pose=np.array([0, 0, 0, 0, 0, 0, 1.5]))


def test_geometric_properties_positive():
    with pytest.raises(WorldModelError):
        make_obj("Box-1", "box", **{"size-x": -0.1})


def test_com_offset_may_be_negative():
    obj = make_obj("Box-1", "box", **{"com-offset-x": -0.02})
    assert obj.prop("com-offset-x") == -0.02


def test_relation_requires_known_objects():
    m = WorldModel()
    m.add_object(make_obj())
    with pytest.raises(WorldModelError):
        m.add_relation(Relation("Peg-1", "at", "Nowhere-1"))


def test_learnable_requires_bounds():
    with pytest.raises(WorldModelError):
        SkillTemplate(
            name="s",
            parameters=[SkillParameter("p", "real", default=0.0, learnable=True, bounds=None)],
        )


def test_collect_learnables_push(push_scenario, push_plan):
    learnables = collect_learnables(push_scenario.model, list(push_plan))
    assert [lp.name for lp in learnables] == [
        "push.start-offset-x",
        "push.start-offset-y",
        "push.goal-offset-x",
        "push.goal-offset-y",
    ]
    for lp in learnables:
        lo, hi = lp.bounds
        assert np.isfinite(lo) and np.isfinite(hi) and lo < hi


def test_collect_learnables_peg(peg_scenario, peg_plan):
    learnables = collect_learnables(peg_scenario.model, list(peg_plan))
    assert [lp.name for lp in learnables] == [
        "peg-insertion.downward-force",
        "peg-insertion.search-radius",
        "peg-insertion.path-velocity",
    ]


def test_collect_learnables_empty_plan(peg_scenario):
    assert collect_learnables(peg_scenario.model, []) == []


def test_collect_learnables_idempotent(peg_scenario, peg_plan):
    a = collect_learnables(peg_scenario.model, list(peg_plan))
    b = collect_learnables(peg_scenario.model, list(peg_plan))
    assert a == b


def test_collect_learnables_duplicate_skill_names(peg_scenario, peg_plan):
    doubled = list(peg_plan) + list(peg_plan)
    names = [lp.name for lp in collect_learnables(peg_scenario.model, doubled)]
    assert "peg-insertion#0.downward-force" in names
    assert "peg-insertion#1.downward-force" in names
    assert len(names) == 6


def test_unknown_skill_in_plan(peg_scenario):
    class FakeStep:
        skill = "unknown-skill"

    with pytest.raises(WorldModelError):
        collect_learnables(peg_scenario.model, [FakeStep()])


@pytest.mark.parametrize("name", ["push", "peg"])
def test_scene_round_trip(tmp_path, name):
    model, _ = load_scene(scenario_path(name))
    out = tmp_path / "scene.yaml"
    save_scene(model, out)
    reloaded, _ = load_scene(out)
    assert reloaded == model


def test_dict_round_trip_preserves_patterns():
    doc = {
        "objects": [
            {"id": "A-1", "kind": "box", "pose": [1, 2, 3, 0, 0, 0, 1], "properties": {"mass": 1.0}},
            {"id": "P-1", "kind": "pose", "pose": [0, 0, 0, 0, 0, 0, 1]},
        ],
        "relations": [{"subject": "A-1", "predicate": "at", "object": "P-1"}],
        "skills": [
            {
                "name": "move",
                "parameters": [
                    {"name": "obj", "type": "box"},
                    {"name": "to", "type": "pose"},
                    {"name": "speed", "type": "real", "default": 0.1},
                    {
                        "name": "off",
                        "type": "real",
                        "default": 0.0,
                        "learnable": True,
                        "bounds": [-1.0, 1.0],
                    },
                ],
                "preconditions": [
                    {"subject": "?obj", "predicate": "at", "object": "?to", "runtime": False}
                ],
                "postconditions": [
                    {"subject": "?obj", "predicate": "at", "object": "?to", "negated": True}
                ],
            }
        ],
    }
    model = model_from_dict(doc)
    again = model_from_dict(model_to_dict(model))
    assert again == model
    tpl = again.skills["move"]
    assert tpl.preconditions[0].runtime is False
    assert tpl.postconditions[0].negated is True
    assert tpl.parameters[3].bounds == (-1.0, 1.0)


def test_pattern_references_declared_parameters_only():
    with pytest.raises(WorldModelError):
        SkillTemplate(
            name="s",
            parameters=[SkillParameter("a", "pose")],
            preconditions=[RelationPattern("?missing", "at", "?a")],
        )


def test_copy_isolates_poses(peg_scenario):
    clone = peg_scenario.model.copy()
    clone.objects["BoxWithHole-1"].pose[0] += 1.0
    assert peg_scenario.model.objects["BoxWithHole-1"].pose[0] != clone.objects[
        "BoxWithHole-1"
    ].pose[0]
