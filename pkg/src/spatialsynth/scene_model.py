"""Scene meta-information model: types, loading, validation and serialization.

A scene file is a single JSON document:

    {
      "scene_id": "loft_video",
      "kind": "video" | "single_image" | "multi_image",
      "frame_count": 48,
      "media": ["media/loft_video.mp4"],
      "trajectory": [{"position": [x, y, z], "rotation": [w, x, y, z]}, ...],
      "objects": [
        {"id": "chair_1", "category": "chair",
         "obb": {"center": [x, y, z], "half_extent": [x, y, z],
                 "rotation": [w, x, y, z], "sizes": [x, y, z], "volume": v},
         "appear": [0, 3, 5]}
      ]
    }

Conventions (shared by every consumer):
  * world frame is right-handed, +Y up; coordinates are meters (0.1 unit = 0.1 m);
  * quaternions are scalar-first (w, x, y, z) and rotate local -> world;
  * for video scenes `appear` and `trajectory` are indexed by frame; for image
    scenes `appear` indexes the pictures in `media` and `frame_count` equals
    the number of pictures.

All types are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SIZES_RTOL = 1e-6
VOLUME_RTOL = 1e-4
QUAT_NORM_TOL = 1e-6


class SceneParseError(ValueError):
    """The file is not syntactically valid against the scene schema."""


class SceneValidationError(ValueError):
    """A structurally valid file violates a scene invariant."""

    def __init__(self, message: str, diagnostics: list["Diagnostic"]):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    object_id: str | None
    message: str

    def as_dict(self) -> dict:
        return {"rule": self.rule, "object_id": self.object_id, "message": self.message}


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.z]

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)


@dataclass(frozen=True)
class UnitQuaternion:
    w: float
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def normalized(self) -> "UnitQuaternion":
        n = self.norm()
        if n < 1e-12:
            raise ValueError("cannot normalize a zero quaternion")
        return UnitQuaternion(self.w / n, self.x / n, self.y / n, self.z / n)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z], dtype=np.float64)

    def as_list(self) -> list[float]:
        return [self.w, self.x, self.y, self.z]


IDENTITY_ROTATION = UnitQuaternion(1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Obb:
    center: Vec3
    half_extent: Vec3
    rotation: UnitQuaternion
    sizes: Vec3
    volume: float


@dataclass(frozen=True)
class ObjectRecord:
    id: str
    category: str
    obb: Obb
    appear: tuple[int, ...] = ()


@dataclass(frozen=True)
class CameraPose:
    position: Vec3
    rotation: UnitQuaternion


class SceneKind(str, Enum):
    VIDEO = "video"
    SINGLE_IMAGE = "single_image"
    MULTI_IMAGE = "multi_image"

    @property
    def is_image(self) -> bool:
        return self is not SceneKind.VIDEO


@dataclass(frozen=True)
class SceneMeta:
    scene_id: str
    kind: SceneKind
    objects: tuple[ObjectRecord, ...]
    trajectory: tuple[CameraPose, ...]
    media: tuple[str, ...]
    frame_count: int
    source_path: str | None = field(default=None, compare=False)

    def object_by_id(self, object_id: str) -> ObjectRecord:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)

    def has_object(self, object_id: str) -> bool:
        return any(o.id == object_id for o in self.objects)

    def camera_at(self, index: int = 0) -> CameraPose | None:
        if not self.trajectory:
            return None
        if 0 <= index < len(self.trajectory):
            return self.trajectory[index]
        return None

    def categories(self) -> dict[str, list[str]]:
        """category -> ids, in object order."""
        out: dict[str, list[str]] = {}
        for obj in self.objects:
            out.setdefault(obj.category, []).append(obj.id)
        return out


def _vec3(raw, where: str) -> Vec3:
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        raise SceneParseError(f"{where}: expected a 3-element list")
    try:
        return Vec3(float(raw[0]), float(raw[1]), float(raw[2]))
    except (TypeError, ValueError) as exc:
        raise SceneParseError(f"{where}: non-numeric component ({exc})") from exc


def _quat(raw, where: str) -> UnitQuaternion:
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise SceneParseError(f"{where}: expected a 4-element [w, x, y, z] list")
    try:
        return UnitQuaternion(float(raw[0]), float(raw[1]), float(raw[2]), float(raw[3]))
    except (TypeError, ValueError) as exc:
        raise SceneParseError(f"{where}: non-numeric component ({exc})") from exc


def _parse_object(raw: dict, diagnostics: list[Diagnostic]) -> ObjectRecord:
    if not isinstance(raw, dict) or "id" not in raw or "obb" not in raw:
        raise SceneParseError("object entries need at least 'id' and 'obb'")
    oid = str(raw["id"])
    where = f"object '{oid}'"
    obb_raw = raw["obb"]
    if not isinstance(obb_raw, dict):
        raise SceneParseError(f"{where}: 'obb' must be an object")

    center = _vec3(obb_raw.get("center"), f"{where}.center")
    half = _vec3(obb_raw.get("half_extent"), f"{where}.half_extent")
    rotation = _quat(obb_raw.get("rotation", [1.0, 0.0, 0.0, 0.0]), f"{where}.rotation")
    try:
        rotation = rotation.normalized()
    except ValueError as exc:
        raise SceneParseError(f"{where}: {exc}") from exc

    if "sizes" in obb_raw:
        sizes = _vec3(obb_raw["sizes"], f"{where}.sizes")
    else:
        sizes = Vec3(2 * half.x, 2 * half.y, 2 * half.z)
        diagnostics.append(Diagnostic("repaired_sizes", oid, "sizes derived from half_extent"))
    if "volume" in obb_raw:
        try:
            volume = float(obb_raw["volume"])
        except (TypeError, ValueError) as exc:
            raise SceneParseError(f"{where}.volume: non-numeric") from exc
    else:
        volume = sizes.x * sizes.y * sizes.z
        diagnostics.append(Diagnostic("repaired_volume", oid, "volume derived from sizes"))

    appear_raw = raw.get("appear", [])
    if not isinstance(appear_raw, (list, tuple)):
        raise SceneParseError(f"{where}.appear: expected a list of frame indices")
    try:
        appear = tuple(sorted({int(i) for i in appear_raw}))
    except (TypeError, ValueError) as exc:
        raise SceneParseError(f"{where}.appear: non-integer index") from exc

    return ObjectRecord(
        id=oid,
        category=str(raw.get("category", "")),
        obb=Obb(center=center, half_extent=half, rotation=rotation, sizes=sizes, volume=volume),
        appear=appear,
    )


def load_scene(path: str | Path, diagnostics: list[Diagnostic] | None = None) -> SceneMeta:
    """Load, normalize and validate one scene file.

    Quaternions are normalized, appear lists sorted and deduplicated, and
    missing sizes/volume repaired from half_extent (a repair diagnostic is
    appended to `diagnostics` when given). Raises SceneParseError on malformed
    files and SceneValidationError naming the first violated invariant.
    """
    path = Path(path)
    repair_diags: list[Diagnostic] = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SceneParseError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise SceneParseError(f"{path}: top level must be an object")

    try:
        kind = SceneKind(str(raw.get("kind", "")))
    except ValueError:
        raise SceneParseError(f"{path}: unknown kind {raw.get('kind')!r}") from None

    objects = tuple(_parse_object(o, repair_diags) for o in raw.get("objects", []))
    trajectory = []
    for i, pose in enumerate(raw.get("trajectory") or []):
        if not isinstance(pose, dict):
            raise SceneParseError(f"{path}: trajectory[{i}] must be an object")
        rot = _quat(pose.get("rotation"), f"trajectory[{i}].rotation")
        try:
            rot = rot.normalized()
        except ValueError as exc:
            raise SceneParseError(f"trajectory[{i}]: {exc}") from exc
        trajectory.append(CameraPose(position=_vec3(pose.get("position"), f"trajectory[{i}].position"), rotation=rot))

    try:
        frame_count = int(raw.get("frame_count", len(raw.get("media", []) or [])))
    except (TypeError, ValueError):
        raise SceneParseError(f"{path}: frame_count must be an integer") from None

    scene = SceneMeta(
        scene_id=str(raw.get("scene_id", path.stem)),
        kind=kind,
        objects=objects,
        trajectory=tuple(trajectory),
        media=tuple(str(m) for m in raw.get("media", [])),
        frame_count=frame_count,
        source_path=str(path),
    )

    problems = validate_scene(scene)
    if problems:
        first = problems[0]
        raise SceneValidationError(
            f"{path}: invariant '{first.rule}' violated"
            + (f" by object '{first.object_id}'" if first.object_id else "")
            + f": {first.message}",
            problems,
        )
    if diagnostics is not None:
        diagnostics.extend(repair_diags)
    return scene


def validate_scene(scene: SceneMeta) -> list[Diagnostic]:
    """All invariant violations as diagnostics; empty iff the scene is consistent."""
    out: list[Diagnostic] = []

    seen: set[str] = set()
    for obj in scene.objects:
        if obj.id in seen:
            out.append(Diagnostic("duplicate_id", obj.id, f"object id '{obj.id}' is not unique"))
        seen.add(obj.id)

    for obj in scene.objects:
        obb = obj.obb
        if not (obb.center.is_finite() and obb.half_extent.is_finite() and obb.sizes.is_finite() and math.isfinite(obb.volume)):
            out.append(Diagnostic("nonfinite_value", obj.id, "non-finite component"))
            continue
        if abs(obb.rotation.norm() - 1.0) > QUAT_NORM_TOL:
            out.append(Diagnostic("quaternion_norm", obj.id, f"|q| = {obb.rotation.norm():.6f}"))
        if min(obb.half_extent.x, obb.half_extent.y, obb.half_extent.z) <= 0:
            out.append(Diagnostic("half_extent_nonpositive", obj.id, "half_extent components must be > 0"))
            continue
        for axis, h, s in (("x", obb.half_extent.x, obb.sizes.x), ("y", obb.half_extent.y, obb.sizes.y), ("z", obb.half_extent.z, obb.sizes.z)):
            if abs(s - 2 * h) > SIZES_RTOL * max(abs(s), 2 * h, 1e-12):
                out.append(Diagnostic("sizes_mismatch", obj.id, f"sizes.{axis} = {s} but 2*half_extent.{axis} = {2*h}"))
                break
        expected = obb.sizes.x * obb.sizes.y * obb.sizes.z
        if abs(obb.volume - expected) > VOLUME_RTOL * max(abs(obb.volume), abs(expected), 1e-12):
            out.append(Diagnostic("volume_mismatch", obj.id, f"volume {obb.volume} vs sizes product {expected}"))
        if any(b < a for a, b in zip(obj.appear, obj.appear[1:])):
            out.append(Diagnostic("appear_not_increasing", obj.id, "appear must be strictly increasing"))
        if obj.appear and (obj.appear[0] < 0 or obj.appear[-1] >= scene.frame_count):
            out.append(Diagnostic("appear_out_of_range", obj.id, f"appear {list(obj.appear)} outside [0, {scene.frame_count})"))

    if scene.frame_count < 1:
        out.append(Diagnostic("frame_count_nonpositive", None, f"frame_count = {scene.frame_count}"))
    if scene.kind is SceneKind.VIDEO and len(scene.trajectory) != scene.frame_count:
        out.append(Diagnostic("trajectory_length", None, f"{len(scene.trajectory)} poses for {scene.frame_count} frames"))
    if scene.kind is SceneKind.MULTI_IMAGE and not (2 <= len(scene.media) <= 5):
        out.append(Diagnostic("media_count", None, f"multi_image scenes need 2-5 media entries, got {len(scene.media)}"))
    if scene.kind is SceneKind.SINGLE_IMAGE and len(scene.media) != 1:
        out.append(Diagnostic("media_count", None, f"single_image scenes need exactly 1 media entry, got {len(scene.media)}"))
    for pose in scene.trajectory:
        if abs(pose.rotation.norm() - 1.0) > QUAT_NORM_TOL or not pose.position.is_finite():
            out.append(Diagnostic("camera_pose_invalid", None, "camera pose not normalized/finite"))
            break
    return out


def scene_to_dict(scene: SceneMeta) -> dict:
    return {
        "scene_id": scene.scene_id,
        "kind": scene.kind.value,
        "frame_count": scene.frame_count,
        "media": list(scene.media),
        "trajectory": [
            {"position": p.position.as_list(), "rotation": p.rotation.as_list()} for p in scene.trajectory
        ],
        "objects": [object_to_dict(o) for o in scene.objects],
    }


def object_to_dict(obj: ObjectRecord) -> dict:
    """One object in the scene-schema shape (also the program metadata shape)."""
    out = {
        "id": obj.id,
        "obb": {
            "center": obj.obb.center.as_list(),
            "half_extent": obj.obb.half_extent.as_list(),
            "rotation": obj.obb.rotation.as_list(),
            "sizes": obj.obb.sizes.as_list(),
            "volume": obj.obb.volume,
        },
        "category": obj.category,
    }
    if obj.appear:
        out["appear"] = list(obj.appear)
    return out


def save_scene(scene: SceneMeta, path: str | Path) -> None:
    """Write the scene back out; floats keep their shortest round-trip form."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene_to_dict(scene), fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def rename_objects(scene: SceneMeta, mapping: dict[str, str]) -> SceneMeta:
    """New scene with object ids substituted (used after alias disambiguation)."""
    objects = tuple(replace(o, id=mapping.get(o.id, o.id)) for o in scene.objects)
    ids = [o.id for o in objects]
    if len(set(ids)) != len(ids):
        raise ValueError("alias mapping collapses two object ids")
    return replace(scene, objects=objects)


def load_scene_dir(directory: str | Path) -> list[SceneMeta]:
    """All *.json scenes in a directory, sorted by filename for determinism."""
    directory = Path(directory)
    scenes = []
    for p in sorted(directory.glob("*.json")):
        scenes.append(load_scene(p))
    return scenes
