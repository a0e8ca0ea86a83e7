"""Regenerate the bundled fixture scenes and placeholder media files."""

from __future__ import annotations

import json
import math
from pathlib import Path

FIXTURES = Path(__file__).resolve().parents[1] / "src/spatialsynth/data/fixtures"


def yaw_quat(angle_deg: float) -> list[float]:
    half = math.radians(angle_deg) / 2.0
    return [math.cos(half), 0.0, math.sin(half), 0.0]


def obj(oid, category, center, sizes, rotation=None, appear=None):
    half = [s / 2.0 for s in sizes]
    out = {
        "id": oid,
        "category": category,
        "obb": {
            "center": center,
            "half_extent": half,
            "rotation": rotation or [1.0, 0.0, 0.0, 0.0],
            "sizes": sizes,
            "volume": sizes[0] * sizes[1] * sizes[2],
        },
    }
    if appear is not None:
        out["appear"] = appear
    return out


def loft_video() -> dict:
    trajectory = []
    for i in range(20):  # straight run: 2 m along -Z
        trajectory.append({"position": [0.0, 1.0, -2.0 * i / 19.0], "rotation": yaw_quat(0.0)})
    trajectory.append({"position": [0.0, 1.0, -2.0], "rotation": yaw_quat(90.0)})  # turn left in place
    for i in range(1, 28):  # 1 m along -X (the new forward)
        trajectory.append({"position": [-i / 27.0, 1.0, -2.0], "rotation": yaw_quat(90.0)})
    assert len(trajectory) == 48

    objects = [
        obj("sofa_1", "sofa", [-2.0, 0.45, -1.5], [2.0, 0.9, 0.9], yaw_quat(30.0), [0, 5, 12]),
        obj("table_1", "table", [1.5, 0.4, -1.0], [1.2, 0.8, 0.8], None, [2, 8, 30]),
        obj("lamp_1", "lamp", [1.5, 1.05, -1.0], [0.2, 0.5, 0.2], None, [2, 9, 31]),
        obj("shelf_1", "shelf", [2.5, 1.0, -3.0], [0.4, 2.0, 1.2], None, [14, 40]),
        obj("plant_1", "plant", [-1.0, 0.5, -3.5], [0.5, 1.0, 0.5], yaw_quat(-15.0), [20, 26]),
        obj("rug_1", "rug", [0.0, 0.01, -1.5], [2.0, 0.02, 3.0], None, [0, 1, 2, 3]),
        obj("monitor_1", "monitor", [2.5, 2.1, -3.0], [0.6, 0.4, 0.1], None, [15, 41]),
    ]
    return {
        "scene_id": "loft_video",
        "kind": "video",
        "frame_count": 48,
        "media": ["../media/loft_video.mp4"],
        "trajectory": trajectory,
        "objects": objects,
    }


def studio_image() -> dict:
    objects = [
        obj("column", "column", [2.0, 1.2, -2.0], [0.4, 2.4, 0.4], None, [0]),
        obj("cat tree", "cat tree", [-1.5, 0.75, -2.5], [0.5, 1.5, 0.5], None, [0]),
        obj("mirror", "mirror", [0.5, 0.6, -3.0], [0.8, 1.2, 0.1], None, [0]),
        obj("blanket", "blanket", [1.5, 0.05, -1.5], [1.0, 0.1, 0.8], None, [0]),
        obj("armchair", "armchair", [-1.0, 0.5, -0.5], [0.9, 1.0, 0.9], yaw_quat(45.0), [0]),
    ]
    return {
        "scene_id": "studio_image",
        "kind": "single_image",
        "frame_count": 1,
        "media": ["../media/studio_image.jpg"],
        "trajectory": [{"position": [-1.703, 0.985824, 0.922993], "rotation": [1.0, 0.0, 0.0, 0.0]}],
        "objects": objects,
    }


def office_multi() -> dict:
    objects = [
        obj("chair_1", "chair", [-0.5, 0.45, -1.2], [0.5, 0.9, 0.5], yaw_quat(20.0), [0, 1]),
        obj("chair_2", "chair", [1.6, 0.45, -1.1], [0.5, 0.9, 0.5], yaw_quat(-40.0), [1, 2]),
        obj("desk_1", "desk", [0.5, 0.37, -2.0], [1.4, 0.74, 0.7], None, [0, 1, 2]),
        obj("lamp_2", "lamp", [-1.8, 0.8, -2.4], [0.3, 1.6, 0.3], None, [0, 2]),
        obj("monitor_2", "monitor", [0.5, 0.95, -2.1], [0.55, 0.35, 0.08], None, [1]),
        obj("bin_1", "bin", [2.2, 0.15, -2.3], [0.3, 0.3, 0.3], None, [2]),
    ]
    return {
        "scene_id": "office_multi",
        "kind": "multi_image",
        "frame_count": 3,
        "media": ["../media/office_multi_0.jpg", "../media/office_multi_1.jpg", "../media/office_multi_2.jpg"],
        "trajectory": [
            {"position": [0.0, 1.2, 1.0], "rotation": [1.0, 0.0, 0.0, 0.0]},
            {"position": [0.3, 1.2, 0.6], "rotation": [1.0, 0.0, 0.0, 0.0]},
            {"position": [0.6, 1.2, 0.2], "rotation": [1.0, 0.0, 0.0, 0.0]},
        ],
        "objects": objects,
    }


def main() -> None:
    scenes_dir = FIXTURES / "scenes"
    media_dir = FIXTURES / "media"
    scenes_dir.mkdir(parents=True, exist_ok=True)
    media_dir.mkdir(parents=True, exist_ok=True)

    for scene in (loft_video(), studio_image(), office_multi()):
        with open(scenes_dir / f"{scene['scene_id']}.json", "w", encoding="utf-8") as fh:
            json.dump(scene, fh, indent=2, ensure_ascii=False)
            fh.write("\n")

    with open(scenes_dir / "office_multi.legend.tsv", "w", encoding="utf-8") as fh:
        fh.write("red\tchair_1\nblue\tchair_2\n")

    from PIL import Image

    for name in ("studio_image", "office_multi_0", "office_multi_1", "office_multi_2"):
        Image.new("RGB", (8, 8), (120, 130, 140)).save(media_dir / f"{name}.jpg")
    (media_dir / "loft_video.mp4").write_bytes(b"\x00\x00\x00\x18ftypisom" + b"\x00" * 24)

    print(f"fixtures written under {FIXTURES}")


if __name__ == "__main__":
    main()
