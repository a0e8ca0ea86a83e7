"""Frame-plan and image-candidate selection contracts."""

from __future__ import annotations

import pytest

from spatialsynth.sampling import multi_image_candidates, top_k_frames, uniform_sample
from spatialsynth.testing import random_scene


def formula(i: int, frame_count: int) -> int:
    return round(i * (frame_count - 1) / 31)


def test_uniform_sample_identity_at_32():
    plan = uniform_sample(32)
    assert list(plan.indices) == list(range(32))
    assert not plan.padded


@pytest.mark.parametrize("frame_count", [33, 63, 100, 320, 1000])
def test_uniform_sample_matches_rounding_formula(frame_count):
    plan = uniform_sample(frame_count)
    assert len(plan.indices) == 32
    assert plan.indices[0] == 0
    assert plan.indices[-1] == frame_count - 1
    assert list(plan.indices) == [formula(i, frame_count) for i in range(32)]
    assert all(b > a for a, b in zip(plan.indices, plan.indices[1:]))


def test_uniform_sample_63_step_two():
    plan = uniform_sample(63)
    steps = {b - a for a, b in zip(plan.indices, plan.indices[1:])}
    assert steps == {2}


def test_uniform_sample_short_video_pads():
    plan = uniform_sample(5)
    assert len(plan.indices) == 32
    assert list(plan.indices[:5]) == [0, 1, 2, 3, 4]
    assert set(plan.indices[5:]) == {4}
    assert plan.padded
    assert all(b >= a for a, b in zip(plan.indices, plan.indices[1:]))


def test_uniform_sample_rejects_nonpositive():
    with pytest.raises(ValueError):
        uniform_sample(0)


def test_top_k_single_peak(loft_scene):
    # frame 2 holds table+lamp+rug = 3 objects, the max for this fixture
    best = top_k_frames(loft_scene, 1)
    assert best[0].frame_indices == (2,)
    assert best[0].object_count == (3,)


def test_top_k_tie_breaks_to_lower_index():
    scene = random_scene(1, n_objects=6, frame_count=20)
    counts = [0] * scene.frame_count
    for o in scene.objects:
        for t in o.appear:
            counts[t] += 1
    got = top_k_frames(scene, 5)
    want = sorted(range(scene.frame_count), key=lambda t: (-counts[t], t))[:5]
    assert [c.frame_indices[0] for c in got] == want
    assert all(a.object_count[0] >= b.object_count[0] for a, b in zip(got, got[1:]))


def test_top_k_requires_video(studio_scene):
    with pytest.raises(ValueError):
        top_k_frames(studio_scene, 1)


def test_multi_image_deterministic_and_well_formed():
    scene = random_scene(2, frame_count=100)
    a = multi_image_candidates(scene, k=5, rng_seed=77)
    b = multi_image_candidates(scene, k=5, rng_seed=77)
    assert a == b
    for cand in a:
        idx = cand.frame_indices
        assert 2 <= len(idx) <= 5
        assert all(y > x for x, y in zip(idx, idx[1:]))
        if len(idx) >= 3:
            gaps = {y - x for x, y in zip(idx, idx[1:])}
            assert len(gaps) > 1  # non-uniform temporal spacing


def test_multi_image_rejects_short_video():
    scene = random_scene(3, frame_count=4)
    with pytest.raises(ValueError):
        multi_image_candidates(scene, k=1)
