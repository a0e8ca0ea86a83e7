"""Frame and image-candidate selection from video scenes."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field

from .scene_model import SceneKind, SceneMeta

FRAME_PLAN_LENGTH = 32


@dataclass(frozen=True)
class FramePlan:
    indices: tuple[int, ...]
    source_frame_count: int

    @property
    def padded(self) -> bool:
        """True for short videos whose plan repeats the last frame."""
        return self.source_frame_count < FRAME_PLAN_LENGTH


@dataclass(frozen=True)
class ImageCandidate:
    frame_indices: tuple[int, ...]
    object_count: tuple[int, ...] = ()


def uniform_sample(frame_count: int) -> FramePlan:
    """Fixed-length uniform plan of 32 frame indices spanning the whole video.

    indices[i] = round(i * (L-1) / 31) with both endpoints pinned; videos shorter
    than 32 frames keep every frame and repeat the last index to fill the plan.
    """
    if frame_count < 1:
        raise ValueError(f"frame_count must be >= 1, got {frame_count}")
    if frame_count >= FRAME_PLAN_LENGTH:
        step = (frame_count - 1) / (FRAME_PLAN_LENGTH - 1)
        indices = tuple(round(i * step) for i in range(FRAME_PLAN_LENGTH))
    else:
        indices = tuple(range(frame_count)) + (frame_count - 1,) * (FRAME_PLAN_LENGTH - frame_count)
    return FramePlan(indices=indices, source_frame_count=frame_count)


def frame_object_counts(scene: SceneMeta) -> list[int]:
    counts = [0] * scene.frame_count
    for obj in scene.objects:
        for t in obj.appear:
            counts[t] += 1
    return counts


def top_k_frames(scene: SceneMeta, k: int = 3) -> list[ImageCandidate]:
    """The k frames with the highest visible-object count; ties pick lower indices."""
    if scene.kind is not SceneKind.VIDEO:
        raise ValueError("top_k_frames requires a video scene")
    if k < 1:
        raise ValueError("k must be >= 1")
    counts = frame_object_counts(scene)
    ranked = sorted(range(scene.frame_count), key=lambda t: (-counts[t], t))
    return [ImageCandidate(frame_indices=(t,), object_count=(counts[t],)) for t in ranked[:k]]


def _derive_rng(seed: int, scene_id: str, purpose: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{scene_id}:{purpose}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def multi_image_candidates(scene: SceneMeta, k: int = 3, rng_seed: int = 0) -> list[ImageCandidate]:
    """k chronologically ordered 2-5 frame selections with non-uniform gaps.

    Candidates of length >= 3 whose gaps are all equal are rejected and redrawn
    (a 2-frame candidate has a single gap, so the rule cannot apply to it).
    Deterministic for a given (scene, k, seed).
    """
    if scene.kind is not SceneKind.VIDEO:
        raise ValueError("multi_image_candidates requires a video scene")
    if scene.frame_count < 5:
        raise ValueError(f"video too short for multi-image sampling ({scene.frame_count} frames)")
    rng = _derive_rng(rng_seed, scene.scene_id, "multi_image")
    counts = frame_object_counts(scene)
    out: list[ImageCandidate] = []
    for _ in range(k):
        for _attempt in range(1000):
            n = rng.randint(2, 5)
            if n > scene.frame_count:
                continue
            frames = tuple(sorted(rng.sample(range(scene.frame_count), n)))
            if len(frames) >= 3:
                gaps = {frames[i + 1] - frames[i] for i in range(len(frames) - 1)}
                if len(gaps) == 1:
                    continue
            out.append(ImageCandidate(frame_indices=frames, object_count=tuple(counts[t] for t in frames)))
            break
        else:
            raise RuntimeError("could not draw a non-uniform candidate")
    return out
