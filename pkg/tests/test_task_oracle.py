"""Task oracle answers against pinned values and brute-force re-derivation."""

from __future__ import annotations

import random

import pytest

from spatialsynth import task_oracle
from spatialsynth.scene_model import (
    CameraPose,
    Obb,
    ObjectRecord,
    SceneKind,
    SceneMeta,
    UnitQuaternion,
    Vec3,
)
from spatialsynth.task_oracle import (
    ArityError,
    MissingCameraError,
    ModalityMismatchError,
    OracleError,
    UnknownObjectError,
    answer,
    supported_tasks,
)
from spatialsynth.testing import random_scene

import bruteforce as bf


def make_obj(oid, category, center, sizes, appear=()):
    return ObjectRecord(
        id=oid,
        category=category,
        obb=Obb(
            center=Vec3(*center),
            half_extent=Vec3(sizes[0] / 2, sizes[1] / 2, sizes[2] / 2),
            rotation=UnitQuaternion(1, 0, 0, 0),
            sizes=Vec3(*sizes),
            volume=sizes[0] * sizes[1] * sizes[2],
        ),
        appear=tuple(appear),
    )


def make_scene(objects, kind=SceneKind.VIDEO, frame_count=16, camera=None):
    trajectory = ()
    if kind is SceneKind.VIDEO:
        cam = camera or CameraPose(Vec3(0, 1, 2), UnitQuaternion(1, 0, 0, 0))
        trajectory = tuple(cam for _ in range(frame_count))
        media = ("v.mp4",)
    else:
        trajectory = (camera,) if camera else ()
        media = ("i.jpg",)
        frame_count = 1
    return SceneMeta(
        scene_id="t", kind=kind, objects=tuple(objects), trajectory=trajectory, media=media, frame_count=frame_count
    )


def test_supported_task_counts():
    image = supported_tasks("single_image")
    video = supported_tasks("video")
    assert len(image) == 17
    assert len(video) == 16
    assert len({t.name for t in image}) == 17
    with pytest.raises(OracleError):
        supported_tasks("hologram")


def test_volume_estimation_renders_two_decimals():
    scene = make_scene([make_obj("crate", "crate", (0, 0, 0), (1.0, 2.0, 3.0), appear=(0,))])
    got = answer("object_volume_estimation", scene, ["crate"])
    assert "6.00 cubic meters" in got.text
    assert got.value == pytest.approx(6.0)


def test_size_comparison_reproduces_figure_values(studio_scene):
    got = answer(
        "object_size_comparison",
        studio_scene,
        ["cat tree", "column", "mirror"],
        {"dimension": "height", "extreme": "largest"},
    )
    assert "column" in got.text
    assert "2.4 meters" in got.text
    assert got.selected_ids == ("column",)


def test_appearance_order_sorted_firsts():
    objs = [
        make_obj("a", "a", (0, 0, 0), (1, 1, 1), appear=(3, 9)),
        make_obj("b", "b", (2, 0, 0), (1, 1, 1), appear=(0, 4)),
        make_obj("c", "c", (4, 0, 0), (1, 1, 1), appear=(7,)),
    ]
    scene = make_scene(objs)
    got = answer("object_appearance_order", scene, ["a", "b", "c"])
    assert got.selected_ids == ("b", "a", "c")
    assert got.text == "The order of appearance is: b, a, c."
    tie = make_scene(
        [
            make_obj("a", "a", (0, 0, 0), (1, 1, 1), appear=(3,)),
            make_obj("b", "b", (2, 0, 0), (1, 1, 1), appear=(3,)),
        ]
    )
    assert answer("object_appearance_order", tie, ["a", "b"]).ambiguous


def test_relative_distance_matches_bruteforce():
    rng = random.Random(21)
    for seed in range(40):
        scene = random_scene(seed, n_objects=rng.randint(4, 10))
        ids = [o.id for o in scene.objects]
        target, *cands = rng.sample(ids, 4)
        got = answer("object_relative_distance", scene, [target, *cands])
        want = bf.closest_candidate(
            scene.object_by_id(target), [scene.object_by_id(c) for c in cands]
        )
        if want is None:
            assert got.ambiguous
        else:
            assert got.selected_ids == (want.id,)


def test_counting_and_frame_restriction():
    objs = [
        make_obj("chair_1", "chair", (0, 0, 0), (1, 1, 1), appear=(0, 2)),
        make_obj("chair_2", "chair", (3, 0, 0), (1, 1, 1), appear=(5,)),
        make_obj("lamp_1", "lamp", (6, 0, 0), (1, 1, 1), appear=(1,)),
    ]
    scene = make_scene(objs)
    got = answer("object_counting", scene, [], {"category": "chair"})
    assert got.value == 2 and "2 objects of the chair category" in got.text
    got = answer("object_counting", scene, [], {"category": "chair", "frame": 2})
    assert got.value == 1
    with pytest.raises(ArityError):
        answer("object_counting", scene, [], {})


def test_in_frame_grouped_by_category():
    objs = [
        make_obj("chair_1", "chair", (0, 0, 0), (1, 1, 1), appear=(2,)),
        make_obj("chair_2", "chair", (3, 0, 0), (1, 1, 1), appear=(2, 3)),
        make_obj("lamp_1", "lamp", (6, 0, 0), (1, 1, 1), appear=(1,)),
    ]
    scene = make_scene(objs)
    got = answer("object_in_frame", scene, [], {"frame": 2})
    assert got.text == "At that moment, the visible objects are chair: chair_1, chair_2."
    empty = answer("object_in_frame", scene, [], {"frame": 9})
    assert empty.text == "No objects are visible at that moment."
    assert empty.value == 0


def test_nearby_radius_and_sorting():
    objs = [
        make_obj("hub", "hub", (0, 0, 0), (1, 1, 1)),
        make_obj("near", "near", (1, 0, 0), (1, 1, 1)),
        make_obj("mid", "mid", (0, 0, 3), (1, 1, 1)),
        make_obj("far", "far", (20, 0, 0), (1, 1, 1)),
    ]
    scene = make_scene(objs)
    got = answer("object_nearby", scene, ["hub"], {"radius": 5.0})
    assert got.selected_ids == ("near", "mid")
    assert "within 5 meters" in got.text
    none = answer("object_nearby", scene, ["far"], {"radius": 1.0})
    assert none.selected_ids == ()
    assert none.text.startswith("No, there are no objects within 1 meter")


def test_height_determination_uses_box_top():
    # lower center but taller box wins
    objs = [
        make_obj("tall", "tall", (0, 1.0, 0), (0.4, 2.4, 0.4)),
        make_obj("high", "high", (3, 1.5, 0), (0.4, 0.4, 0.4)),
    ]
    scene = make_scene(objs)
    got = answer("object_height_determination", scene, ["tall", "high"])
    assert got.selected_ids == ("tall",)
    assert got.value == pytest.approx(2.2)


def test_camera_tasks_need_camera():
    scene = make_scene([make_obj("a", "a", (0, 0, -2), (1, 1, 1))], kind=SceneKind.SINGLE_IMAGE, camera=None)
    with pytest.raises(MissingCameraError):
        answer("object_distance_camera_absolute", scene, ["a"])


def test_camera_distance_relative_and_tie():
    cam = CameraPose(Vec3(0, 0, 0), UnitQuaternion(1, 0, 0, 0))
    objs = [make_obj("near", "n", (0, 0, -1), (0.5, 0.5, 0.5)), make_obj("far", "f", (0, 0, -4), (0.5, 0.5, 0.5))]
    scene = make_scene(objs, kind=SceneKind.SINGLE_IMAGE, camera=cam)
    got = answer("object_distance_camera_relative", scene, ["near", "far"], {"extreme": "closer"})
    assert got.selected_ids == ("near",)
    got = answer("object_distance_camera_relative", scene, ["near", "far"], {"extreme": "farther"})
    assert got.selected_ids == ("far",)
    tie_objs = [make_obj("a", "a", (1, 0, -1), (0.5, 0.5, 0.5)), make_obj("b", "b", (-1, 0, -1), (0.5, 0.5, 0.5))]
    tie_scene = make_scene(tie_objs, kind=SceneKind.SINGLE_IMAGE, camera=cam)
    assert answer("object_distance_camera_relative", tie_scene, ["a", "b"]).ambiguous


def test_unknown_object_and_modality_errors(studio_scene, loft_scene):
    with pytest.raises(UnknownObjectError) as err:
        answer("object_volume_estimation", studio_scene, ["ghost_lamp"])
    assert "ghost_lamp" in str(err.value)
    with pytest.raises(ModalityMismatchError):
        answer("object_appearance_order", studio_scene, ["column", "mirror"])
    with pytest.raises(ModalityMismatchError):
        answer("object_direction_camera_simple", loft_scene, ["sofa_1", "table_1"])
    with pytest.raises(ArityError):
        answer("object_direction_facing_simple", studio_scene, ["column", "mirror"])


def test_answers_are_deterministic(studio_scene):
    a = answer("object_absolute_distance", studio_scene, ["column", "mirror"])
    b = answer("object_absolute_distance", studio_scene, ["column", "mirror"])
    assert a.text == b.text


def test_no_answer_names_foreign_ids():
    for seed in range(10):
        scene = random_scene(seed, n_objects=6)
        ids = {o.id for o in scene.objects}
        got = answer("object_relative_distance", scene, [o.id for o in scene.objects[:4]])
        if got.selected_ids:
            assert set(got.selected_ids) <= ids


def test_register_custom_task():
    from spatialsynth.task_oracle import Modality, OracleAnswer, TaskType, register_task

    def handler(scene, objs, params):
        return OracleAnswer(text="custom", value=None)

    register_task(TaskType("custom_probe", Modality.BOTH, 0), handler)
    try:
        scene = random_scene(1, n_objects=5)
        assert answer("custom_probe", scene, []).text == "custom"
    finally:
        task_oracle.TASKS.pop("custom_probe")
        task_oracle._HANDLERS.pop("custom_probe")
