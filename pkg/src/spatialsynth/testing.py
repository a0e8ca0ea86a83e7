"""Seeded random scene builders for tests and benchmarks."""

from __future__ import annotations

import math
import random

from .scene_model import (
    CameraPose,
    Obb,
    ObjectRecord,
    SceneKind,
    SceneMeta,
    UnitQuaternion,
    Vec3,
)

CATEGORY_POOL = (
    "chair", "table", "lamp", "sofa", "shelf", "plant", "monitor", "rug",
    "cabinet", "mirror", "bin", "stool",
)


def random_unit_quaternion(rng: random.Random) -> UnitQuaternion:
    while True:
        w, x, y, z = (rng.gauss(0, 1) for _ in range(4))
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if n > 1e-6:
            return UnitQuaternion(w / n, x / n, y / n, z / n)


def yaw_quaternion(angle_deg: float) -> UnitQuaternion:
    half = math.radians(angle_deg) / 2.0
    return UnitQuaternion(math.cos(half), 0.0, math.sin(half), 0.0)


def random_obb(rng: random.Random, rotated: bool = True) -> Obb:
    center = Vec3(rng.uniform(-8, 8), rng.uniform(0.1, 3.0), rng.uniform(-8, 8))
    half = Vec3(rng.uniform(0.05, 1.5), rng.uniform(0.05, 1.5), rng.uniform(0.05, 1.5))
    rotation = random_unit_quaternion(rng) if rotated else UnitQuaternion(1.0, 0.0, 0.0, 0.0)
    sizes = Vec3(2 * half.x, 2 * half.y, 2 * half.z)
    return Obb(center=center, half_extent=half, rotation=rotation, sizes=sizes, volume=sizes.x * sizes.y * sizes.z)


def random_camera(rng: random.Random) -> CameraPose:
    return CameraPose(
        position=Vec3(rng.uniform(-6, 6), rng.uniform(0.5, 2.0), rng.uniform(-6, 6)),
        rotation=yaw_quaternion(rng.uniform(-180, 180)),
    )


def random_scene(
    seed: int,
    kind: SceneKind | str = SceneKind.VIDEO,
    n_objects: int | None = None,
    frame_count: int | None = None,
    duplicate_categories: bool = True,
) -> SceneMeta:
    """A structurally valid random scene; appearance data spans all frames."""
    kind = SceneKind(kind) if isinstance(kind, str) else kind
    rng = random.Random(seed)
    n = n_objects if n_objects is not None else rng.randint(5, 20)
    if frame_count is None:
        if kind is SceneKind.VIDEO:
            frame_count = rng.randint(16, 64)
        elif kind is SceneKind.MULTI_IMAGE:
            frame_count = rng.randint(2, 5)
        else:
            frame_count = 1

    objects = []
    used_categories: list[str] = []
    for i in range(n):
        if duplicate_categories and used_categories and rng.random() < 0.25:
            category = rng.choice(used_categories)
        else:
            category = rng.choice(CATEGORY_POOL)
        used_categories.append(category)
        n_appear = rng.randint(1, max(1, min(6, frame_count)))
        appear = tuple(sorted(rng.sample(range(frame_count), n_appear)))
        objects.append(
            ObjectRecord(id=f"{category}_{i}", category=category, obb=random_obb(rng), appear=appear)
        )

    trajectory = []
    if kind is SceneKind.VIDEO:
        pose = random_camera(rng)
        heading = rng.uniform(-180, 180)
        x, z = pose.position.x, pose.position.z
        for _ in range(frame_count):
            trajectory.append(CameraPose(position=Vec3(x, pose.position.y, z), rotation=yaw_quaternion(heading)))
            heading += rng.uniform(-8, 8)
            step = rng.uniform(0.05, 0.3)
            x += -math.sin(math.radians(heading)) * step
            z += -math.cos(math.radians(heading)) * step
        media = [f"media/scene_{seed}.mp4"]
    else:
        trajectory = [random_camera(rng) for _ in range(frame_count)]
        media = [f"media/scene_{seed}_{i}.jpg" for i in range(frame_count)]

    return SceneMeta(
        scene_id=f"scene_{seed}",
        kind=kind,
        objects=tuple(objects),
        trajectory=tuple(trajectory),
        media=tuple(media),
        frame_count=frame_count,
    )
