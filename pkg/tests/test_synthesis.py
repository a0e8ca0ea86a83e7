"""Question generation, disambiguation, compound, navigation, template baseline."""

from __future__ import annotations

import json
import math

import pytest

from spatialsynth import task_oracle
from spatialsynth.gateway import ScriptedGateway
from spatialsynth.geometry import GeometryError
from spatialsynth.mock_llm import MockGateway
from spatialsynth.sampling import ImageCandidate, uniform_sample
from spatialsynth.scene_model import CameraPose, UnitQuaternion, Vec3
from spatialsynth.synthesis import (
    AliasMap,
    DisambiguationError,
    QuestionRecord,
    UnsatisfiableTaskError,
    ZeroParseError,
    apply_aliases,
    compound_synthesize,
    disambiguate,
    generate_questions,
    infer_params,
    navigation_describe,
    normalize_object_order,
    template_generate,
)
from spatialsynth.testing import yaw_quaternion


def _record(instruction, objects, category, categories=None, qid="s:q000"):
    return QuestionRecord(
        question_id=qid,
        instruction=instruction,
        objects=tuple(objects),
        objects_category=tuple(categories or [""] * len(objects)),
        category=category,
        scene_id="s",
    )


# --- generation ------------------------------------------------------------------------------


def test_generate_questions_with_mock(studio_scene):
    diags = []
    records = generate_questions(
        studio_scene, ImageCandidate(frame_indices=(0,)), MockGateway(seed=2), diagnostics=diags
    )
    assert len(records) >= 20
    assert not diags
    for rec in records:
        assert rec.provenance == "llm"
        assert all(studio_scene.has_object(o) for o in rec.objects)
        assert rec.category in {t.name for t in task_oracle.supported_tasks(studio_scene.kind)}


def test_generate_drops_unknown_object_and_task(studio_scene):
    canned = json.dumps(
        [
            {"instruction": "Where is the ghost_lamp?", "objects": ["ghost_lamp"], "objects_category": ["lamp"], "category": "object_volume_estimation"},
            {"instruction": "Levitate the column?", "objects": ["column"], "objects_category": ["column"], "category": "object_levitation"},
            {"instruction": "What is the volume of the column in cubic meters?", "objects": ["column"], "objects_category": ["column"], "category": "object_volume_estimation"},
        ]
    )
    gw = ScriptedGateway({"image_questions": [canned]})
    diags = []
    records = generate_questions(studio_scene, ImageCandidate(frame_indices=(0,)), gw, diagnostics=diags)
    assert len(records) == 1
    rules = [d.rule for d in diags]
    assert "unknown_object" in rules and "unknown_task" in rules
    assert any(d.object_id == "ghost_lamp" for d in diags)


def test_generate_zero_parse_raises(studio_scene):
    gw = ScriptedGateway({"image_questions": ["I cannot answer that."]})
    with pytest.raises(ZeroParseError):
        generate_questions(studio_scene, ImageCandidate(frame_indices=(0,)), gw)


def test_malformed_entries_dropped_not_repaired(studio_scene):
    canned = json.dumps(
        [
            {"instruction": "missing fields", "objects": ["column"]},
            {"instruction": "What is the volume of the mirror in cubic meters?", "objects": ["mirror"], "objects_category": ["mirror"], "category": "object_volume_estimation"},
        ]
    )
    gw = ScriptedGateway({"image_questions": [canned]})
    diags = []
    records = generate_questions(studio_scene, ImageCandidate(frame_indices=(0,)), gw, diagnostics=diags)
    assert [r.objects for r in records] == [("mirror",)]
    assert any(d.rule == "malformed_entry" for d in diags)


# --- parameter inference ----------------------------------------------------------------------


@pytest.mark.parametrize(
    "category,instruction,want",
    [
        ("object_size_estimation", "What is the height of the column in meters?", {"dimension": "height"}),
        ("object_size_comparison", "Determine which is the tallest: the a, the b, or the c.", {"dimension": "height", "extreme": "largest"}),
        ("object_size_comparison", "Among the a or the b, which one is the narrowest?", {"dimension": "width", "extreme": "smallest"}),
        ("object_volume_comparison", "Which object has the smallest volume: the a or the b?", {"extreme": "smallest"}),
        ("object_distance_camera_relative", "From the current view, which is farther from the camera: the a or the b?", {"extreme": "farther"}),
        ("object_nearby", "Are there any objects within 5 meters of the lamp?", {"radius": 5.0}),
        ("object_nearby", "Which objects are within 2.5 meters in front of the desk?", {"radius": 2.5, "front": True}),
        ("object_in_frame", "Which objects are visible at frame 7 of the video? List them by category.", {"frame": 7}),
    ],
)
def test_infer_params(category, instruction, want):
    got = infer_params(category, instruction)
    for key, value in want.items():
        assert got.get(key) == value


def test_infer_counting_category_from_entry():
    got = infer_params("object_counting", "How many objects of the chair category are in the video?", ("chair",))
    assert got["category"] == "chair"


def test_normalize_order_facing_and_relative():
    objs = ("mirror", "armchair", "column")
    text = "If you stand at the armchair and face the column, is the mirror on your left or right?"
    assert normalize_object_order("object_direction_facing_simple", text, objs) == ("armchair", "column", "mirror")
    objs = ("armchair", "column", "blanket")
    text = "Which of the armchair or the column is closest to the blanket?"
    assert normalize_object_order("object_relative_distance", text, objs) == ("blanket", "armchair", "column")
    objs = ("b", "a")
    assert normalize_object_order("object_above", "Is the a positioned above the b?", objs) == ("a", "b")


# --- disambiguation ----------------------------------------------------------------------------


def test_disambiguate_all_unique_categories_makes_no_call(studio_scene):
    gw = ScriptedGateway({})  # would raise on any call
    amap = disambiguate(studio_scene, [], [], gw)
    assert len(amap) == 0


def test_disambiguate_with_mock(office_scene):
    legend = [("red", "chair_1"), ("blue", "chair_2")]
    amap = disambiguate(office_scene, ["img0.jpg"], legend, MockGateway(seed=0))
    assert set(amap.mapping) == {"chair_1", "chair_2"}
    assert len(set(amap.mapping.values())) == 2
    renamed = apply_aliases(office_scene, amap)
    assert renamed.has_object("red chair") and renamed.has_object("blue chair")


def test_disambiguate_missing_color_errors(office_scene):
    legend = [("red", "chair_1"), ("blue", "chair_2")]
    gw = ScriptedGateway({"disambiguate": ["red: the window chair", "red: the window chair"]})
    with pytest.raises(DisambiguationError) as err:
        disambiguate(office_scene, [], legend, gw)
    assert "blue" in str(err.value)


def test_disambiguate_duplicate_alias_retries_then_fails(office_scene):
    legend = [("red", "chair_1"), ("blue", "chair_2")]
    same = "red: the chair\nblue: the chair"
    gw = ScriptedGateway({"disambiguate": [same, same]})
    with pytest.raises(DisambiguationError):
        disambiguate(office_scene, [], legend, gw)
    assert len(gw.requests) == 2  # retried once


# --- compound -----------------------------------------------------------------------------------


def test_compound_requires_shared_object():
    a = (_record("q1", ["a"], "object_volume_estimation", qid="s:q000"), "answer a")
    b = (_record("q2", ["b"], "object_volume_estimation", qid="s:q001"), "answer b")
    with pytest.raises(ValueError):
        compound_synthesize(a, b, MockGateway())


def test_compound_with_mock_names_shared_object(studio_scene):
    a = (
        _record("Determine which is the tallest: the cat tree, the column, or the mirror.", ["cat tree", "column", "mirror"], "object_size_comparison", qid="s:q000"),
        "The tallest object among the cat tree, column, and mirror is the column, with a height of 2.4 meters.",
    )
    b = (
        _record("Which of the armchair or the column is closest to the blanket?", ["blanket", "armchair", "column"], "object_relative_distance", qid="s:q001"),
        "The column is closest to the blanket.",
    )
    record, answer = compound_synthesize(a, b, MockGateway(seed=0), question_id="s:c000")
    assert record.category == "compound"
    assert record.parents == ("s:q000", "s:q001")
    assert set(record.objects) >= {"column", "blanket"}
    assert "column" in answer


def test_compound_malformed_response_errors():
    a = (_record("q1", ["x"], "object_volume_estimation", qid="s:q000"), "The x is big.")
    b = (_record("q2", ["x"], "object_absolute_distance", qid="s:q001"), "The x is near.")
    gw = ScriptedGateway({"compound": [json.dumps({"instruction": "no answer field"})]})
    from spatialsynth.synthesis import SynthesisError

    with pytest.raises(SynthesisError):
        compound_synthesize(a, b, gw)


# --- navigation ----------------------------------------------------------------------------------


def _pose(x, z, yaw_deg):
    return CameraPose(position=Vec3(x, 1.0, z), rotation=yaw_quaternion(yaw_deg))


def test_navigation_straight_line():
    poses = [_pose(0, -i * 0.5, 0) for i in range(7)]  # 3 m forward
    nav = navigation_describe(poses)
    assert len(nav.segments) == 1
    seg = nav.segments[0]
    assert seg.kind == "move_forward" and seg.distance_m == pytest.approx(3.0)
    assert nav.text == "Move forward 3 meters."


def test_navigation_forward_turn_forward():
    # 2 m forward, a 90-degree left turn in place, then 1 m forward
    poses = [_pose(0, 0, 0), _pose(0, -1, 0), _pose(0, -2, 0), _pose(0, -2, 90), _pose(-0.5, -2, 90), _pose(-1, -2, 90)]
    nav = navigation_describe(poses)
    kinds = [s.kind for s in nav.segments]
    assert kinds == ["move_forward", "turn", "move_forward"]
    assert nav.segments[0].distance_m == pytest.approx(2.0)
    assert nav.segments[1].angle_deg == pytest.approx(90.0)
    assert nav.segments[2].distance_m == pytest.approx(1.0)
    assert "turn left 90 degrees" in nav.text


def test_navigation_degenerate_trajectory():
    poses = [_pose(0, 0, 0)] * 5
    with pytest.raises(GeometryError):
        navigation_describe(poses)
    with pytest.raises(ValueError):
        navigation_describe(poses[:1])


def test_navigation_distance_conservation(loft_scene):
    nav = navigation_describe(list(loft_scene.trajectory))
    total = 0.0
    for a, b in zip(loft_scene.trajectory, loft_scene.trajectory[1:]):
        total += math.dist(a.position.as_list(), b.position.as_list())
    moved = sum(s.distance_m for s in nav.segments if s.kind == "move_forward")
    assert moved == pytest.approx(total, rel=0.01)


# --- template baseline ------------------------------------------------------------------------------


def test_template_distance_question(studio_scene):
    record, result = template_generate(studio_scene, "object_absolute_distance", rng_seed=4)
    assert record.provenance == "template"
    assert record.instruction.startswith("What is the distance in meters between the ")
    assert result.text and not result.ambiguous


def test_template_answers_match_oracle_exactly(loft_scene):
    record, result = template_generate(loft_scene, "object_relative_distance", rng_seed=9)
    again = task_oracle.answer(record.category, loft_scene, list(record.objects), record.params)
    assert again.text == result.text


def test_template_deterministic(loft_scene):
    a = template_generate(loft_scene, "object_counting", rng_seed=11)
    b = template_generate(loft_scene, "object_counting", rng_seed=11)
    assert a[0] == b[0] and a[1].text == b[1].text


def test_template_unsatisfiable_arity(tmp_path, studio_scene):
    import dataclasses

    small = dataclasses.replace(studio_scene, objects=studio_scene.objects[:2])
    with pytest.raises(UnsatisfiableTaskError):
        template_generate(small, "object_direction_facing_simple", rng_seed=0)


def test_template_rejects_wrong_modality(studio_scene):
    with pytest.raises(UnsatisfiableTaskError):
        template_generate(studio_scene, "object_appearance_order", rng_seed=0)
