"""Prompt rendering and HTTP gateway behavior (retries, limits, transcripts)."""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path

import pytest

from spatialsynth.gateway import (
    AuthError,
    ChatMessage,
    ChatRequest,
    GatewayError,
    HttpGateway,
    MissingPlaceholderError,
    PayloadTooLargeError,
    RetriesExhaustedError,
    ScriptedGateway,
    Transcript,
    render_prompt,
)
from spatialsynth.programs import reference_snippet

GOLDEN = Path(__file__).parent / "golden"


def _req(text="hello", tag="t"):
    return ChatRequest(model_id="m", messages=(ChatMessage(role="user", text=text),), tag=tag)


def _ok_body(text="fine"):
    return json.dumps({"choices": [{"message": {"content": text}}], "usage": {"total_tokens": 3}})


# --- render_prompt ---------------------------------------------------------------------------


def test_rendered_video_code_prompt_matches_golden_transcription():
    context = {
        "meta_info": json.dumps(
            [
                {
                    "id": "bed_1",
                    "obb": {
                        "center": [1.2, 0.45, -2.3],
                        "half_extent": [0.95, 0.45, 1.05],
                        "rotation": [1.0, 0.0, 0.0, 0.0],
                        "sizes": [1.9, 0.9, 2.1],
                        "volume": 3.591,
                    },
                    "category": "bed",
                    "appear": [0, 1, 3],
                }
            ],
            indent=2,
        ),
        "reference_code": reference_snippet("video", 0),
        "question": json.dumps(
            {
                "instruction": "What is the distance in meters between the bed_1 and the desk_1?",
                "objects": ["bed_1", "desk_1"],
                "objects_category": ["bed", "desk"],
                "category": "object_absolute_distance",
                "params": {},
                "scene_kind": "video",
            },
            indent=2,
        ),
        "objects": json.dumps(["bed_1", "desk_1"]),
        "categories": json.dumps(["bed", "desk"]),
    }
    rendered = render_prompt("video_code", context)[0].text
    assert rendered == (GOLDEN / "video_code_prompt.txt").read_text()


def test_image_question_prompt_contains_object_names(studio_scene):
    from spatialsynth.synthesis import question_prompt_context

    rendered = render_prompt("image_questions", question_prompt_context(studio_scene))[0].text
    for obj in studio_scene.objects:
        assert obj.id in rendered
    # the documented camera position example is part of the fixed template text
    assert "camera_position = [-1.703, 0.985824, 0.922993]" in rendered


def test_unbound_placeholder_raises():
    with pytest.raises(MissingPlaceholderError) as err:
        render_prompt("video_code", {"question": "q", "objects": "[]", "categories": "[]", "meta_info": "[]"})
    assert "reference_code" in str(err.value)


def test_unknown_template_raises():
    with pytest.raises(KeyError):
        render_prompt("no_such_template", {})


# --- HTTP gateway ----------------------------------------------------------------------------


def test_empty_messages_is_precondition_error(monkeypatch):
    monkeypatch.setenv("SPRITE_API_KEY", "k")
    gw = HttpGateway("http://x", transport=lambda *a: (200, _ok_body()))
    with pytest.raises(ValueError):
        gw.complete(ChatRequest(model_id="m", messages=()))


def test_two_transient_failures_then_success(monkeypatch):
    monkeypatch.setenv("SPRITE_API_KEY", "k")
    calls = {"n": 0}

    def transport(url, headers, payload, timeout):
        calls["n"] += 1
        if calls["n"] <= 2:
            return 503, "busy"
        return 200, _ok_body("done")

    gw = HttpGateway("http://x", transport=transport, sleep=lambda s: None)
    resp = gw.complete(_req())
    assert resp.text == "done"
    assert resp.attempt == 3


def test_retries_exhausted(monkeypatch):
    monkeypatch.setenv("SPRITE_API_KEY", "k")
    gw = HttpGateway("http://x", transport=lambda *a: (503, "busy"), sleep=lambda s: None, max_attempts=3)
    with pytest.raises(RetriesExhaustedError):
        gw.complete(_req())


def test_auth_and_payload_errors(monkeypatch):
    monkeypatch.setenv("SPRITE_API_KEY", "k")
    gw = HttpGateway("http://x", transport=lambda *a: (401, "no"))
    with pytest.raises(AuthError):
        gw.complete(_req())
    gw = HttpGateway("http://x", transport=lambda *a: (413, "big"))
    with pytest.raises(PayloadTooLargeError):
        gw.complete(_req())


def test_missing_api_key_is_auth_error(monkeypatch):
    monkeypatch.delenv("SPRITE_API_KEY", raising=False)
    gw = HttpGateway("http://x", transport=lambda *a: (200, _ok_body()))
    with pytest.raises(AuthError):
        gw.complete(_req())


def test_concurrent_in_flight_bounded(monkeypatch):
    monkeypatch.setenv("SPRITE_API_KEY", "k")
    live = {"now": 0, "peak": 0}
    lock = threading.Lock()

    def transport(url, headers, payload, timeout):
        with lock:
            live["now"] += 1
            live["peak"] = max(live["peak"], live["now"])
        time.sleep(0.01)
        with lock:
            live["now"] -= 1
        return 200, _ok_body()

    gw = HttpGateway("http://x", transport=transport, max_concurrent=2)
    threads = [threading.Thread(target=lambda: gw.complete(_req())) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert live["peak"] <= 2


def test_response_persisted_before_return(tmp_path, monkeypatch):
    monkeypatch.setenv("SPRITE_API_KEY", "k")
    log = tmp_path / "transcript.jsonl"
    gw = HttpGateway("http://x", transport=lambda *a: (200, _ok_body("kept")), transcript=Transcript(log))
    resp = gw.complete(_req(tag="step"))
    lines = log.read_text().strip().splitlines()
    assert len(lines) == 1
    record = json.loads(lines[0])
    assert record["response_text"] == "kept" == resp.text
    assert record["tag"] == "step"
    assert record["request_sha256"]


def test_scripted_gateway_replays_in_order():
    gw = ScriptedGateway({"x": ["one", "two"]})
    assert gw.complete(_req(tag="x")).text == "one"
    assert gw.complete(_req(tag="x")).text == "two"
    with pytest.raises(GatewayError):
        gw.complete(_req(tag="x"))
