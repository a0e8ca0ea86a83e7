"""Scene schema loading, validation diagnostics, and save/load round-trips."""

from __future__ import annotations

import json
import math

import pytest

from spatialsynth.scene_model import (
    Diagnostic,
    Obb,
    ObjectRecord,
    SceneKind,
    SceneMeta,
    SceneParseError,
    SceneValidationError,
    UnitQuaternion,
    Vec3,
    load_scene,
    save_scene,
    validate_scene,
)


def _unit_cube_obj(oid="box_1", center=(0.0, 0.0, 0.0)):
    return {
        "id": oid,
        "category": "box",
        "obb": {
            "center": list(center),
            "half_extent": [0.5, 0.5, 0.5],
            "rotation": [1.0, 0.0, 0.0, 0.0],
            "sizes": [1.0, 1.0, 1.0],
            "volume": 1.0,
        },
        "appear": [0],
    }


def _scene_doc(objects, kind="single_image", frame_count=1, media=None, trajectory=None):
    return {
        "scene_id": "t",
        "kind": kind,
        "frame_count": frame_count,
        "media": media if media is not None else ["img.jpg"],
        "trajectory": trajectory or [],
        "objects": objects,
    }


def _write(tmp_path, doc, name="scene.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_unit_cube_loads(tmp_path):
    scene = load_scene(_write(tmp_path, _scene_doc([_unit_cube_obj()])))
    assert scene.objects[0].obb.volume == 1.0
    assert validate_scene(scene) == []


def test_duplicate_id_names_offender(tmp_path):
    doc = _scene_doc([_unit_cube_obj("chair_1"), _unit_cube_obj("chair_1", (2, 0, 0))])
    with pytest.raises(SceneValidationError) as err:
        load_scene(_write(tmp_path, doc))
    assert "chair_1" in str(err.value)
    assert err.value.diagnostics[0].rule == "duplicate_id"


def test_documented_camera_position_round_trips_exactly(tmp_path):
    doc = _scene_doc(
        [_unit_cube_obj()],
        trajectory=[{"position": [-1.703, 0.985824, 0.922993], "rotation": [1.0, 0.0, 0.0, 0.0]}],
    )
    path = _write(tmp_path, doc)
    scene = load_scene(path)
    out = tmp_path / "rt.json"
    save_scene(scene, out)
    text = out.read_text()
    assert "-1.703" in text and "0.985824" in text and "0.922993" in text
    again = load_scene(out)
    assert again.trajectory[0].position == scene.trajectory[0].position


def test_save_load_identity(tmp_path, loft_scene):
    out = tmp_path / "loft.json"
    save_scene(loft_scene, out)
    again = load_scene(out)
    assert again.objects == loft_scene.objects
    assert again.trajectory == loft_scene.trajectory
    assert again.media == loft_scene.media
    assert validate_scene(again) == []


def test_malformed_file_is_parse_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(SceneParseError):
        load_scene(path)


def test_volume_mismatch_diagnostic():
    bad = Obb(
        center=Vec3(0, 0, 0),
        half_extent=Vec3(0.5, 0.5, 0.5),
        rotation=UnitQuaternion(1, 0, 0, 0),
        sizes=Vec3(1, 1, 1),
        volume=2.0,
    )
    scene = SceneMeta(
        scene_id="t",
        kind=SceneKind.SINGLE_IMAGE,
        objects=(ObjectRecord(id="a", category="box", obb=bad, appear=(0,)),),
        trajectory=(),
        media=("img.jpg",),
        frame_count=1,
    )
    rules = [d.rule for d in validate_scene(scene)]
    assert rules == ["volume_mismatch"]


def test_appear_out_of_range_diagnostic(tmp_path):
    obj = _unit_cube_obj()
    obj["appear"] = [5]
    doc = _scene_doc([obj], kind="single_image", frame_count=4, media=["img.jpg"])
    with pytest.raises(SceneValidationError) as err:
        load_scene(_write(tmp_path, doc))
    assert err.value.diagnostics[0].rule == "appear_out_of_range"


def test_quaternion_normalized_and_appear_deduped(tmp_path):
    obj = _unit_cube_obj()
    obj["obb"]["rotation"] = [2.0, 0.0, 0.0, 0.0]
    obj["appear"] = [0, 0, 0]
    scene = load_scene(_write(tmp_path, _scene_doc([obj])))
    assert math.isclose(scene.objects[0].obb.rotation.norm(), 1.0, abs_tol=1e-12)
    assert scene.objects[0].appear == (0,)


def test_missing_sizes_and_volume_repaired(tmp_path):
    obj = _unit_cube_obj()
    del obj["obb"]["sizes"]
    del obj["obb"]["volume"]
    diags: list[Diagnostic] = []
    scene = load_scene(_write(tmp_path, _scene_doc([obj])), diags)
    assert scene.objects[0].obb.sizes == Vec3(1.0, 1.0, 1.0)
    assert scene.objects[0].obb.volume == 1.0
    assert {d.rule for d in diags} == {"repaired_sizes", "repaired_volume"}


def test_video_needs_full_trajectory(tmp_path):
    doc = _scene_doc([_unit_cube_obj()], kind="video", frame_count=3, media=["v.mp4"], trajectory=[])
    with pytest.raises(SceneValidationError) as err:
        load_scene(_write(tmp_path, doc))
    assert err.value.diagnostics[0].rule == "trajectory_length"


def test_multi_image_media_count(tmp_path):
    doc = _scene_doc([_unit_cube_obj()], kind="multi_image", frame_count=1, media=["a.jpg"])
    with pytest.raises(SceneValidationError) as err:
        load_scene(_write(tmp_path, doc))
    assert any(d.rule == "media_count" for d in err.value.diagnostics)


def test_fixture_scenes_validate(fixture_scene_dir):
    for path in sorted(fixture_scene_dir.glob("*.json")):
        assert validate_scene(load_scene(path)) == []
