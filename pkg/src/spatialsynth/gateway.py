"""Chat-completion access for every model-dependent pipeline step.

One provider-agnostic HTTP contract (OpenAI-style chat completions), with
retries, a concurrency bound, and crash-safe transcript logging. Offline runs
swap in the deterministic mock (`mock_llm.MockGateway`); tests use
`ScriptedGateway`. Prompt templates live as text assets under `prompts/` and
are rendered by simple placeholder substitution so their surrounding text
stays byte-stable.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .jsonl import JsonlWriter


class GatewayError(RuntimeError):
    pass


class AuthError(GatewayError):
    pass


class PayloadTooLargeError(GatewayError):
    pass


class RetriesExhaustedError(GatewayError):
    pass


class MissingPlaceholderError(ValueError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str
    text: str
    images: tuple[str, ...] = ()


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.7
    max_tokens: int = 4096
    tag: str = ""

    def prompt_text(self) -> str:
        return "\n".join(m.text for m in self.messages)

    def fingerprint(self) -> str:
        payload = json.dumps(
            [self.model_id, self.temperature, [(m.role, m.text, list(m.images)) for m in self.messages]],
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass(frozen=True)
class ChatResponse:
    text: str
    usage: dict = field(default_factory=dict)
    latency_ms: int = 0
    attempt: int = 1


def _validate_request(req: ChatRequest) -> None:
    if not req.messages:
        raise ValueError("chat request needs at least one message")
    if req.temperature < 0:
        raise ValueError("temperature must be >= 0")


# --- prompt templates -----------------------------------------------------------------------

PLACEHOLDER_NAMES = (
    "objects_info",
    "meta_example",
    "meta_info",
    "question_type_all",
    "output_example",
    "reference_code",
    "question",
    "objects",
    "categories",
    "compound_example",
    "question_a",
    "answer_a",
    "question_b",
    "answer_b",
    "compound_answer",
    "legend_colors",
    "segments",
    "answer",
)
_PLACEHOLDER_RE = re.compile(r"\{(" + "|".join(PLACEHOLDER_NAMES) + r")\}")


def template_text(template_name: str) -> str:
    ref = resources.files("spatialsynth").joinpath(f"prompts/{template_name}.txt")
    try:
        return ref.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise KeyError(f"unknown prompt template '{template_name}'") from None


def render_prompt(template_name: str, context: dict) -> list[ChatMessage]:
    """Substitute placeholders into the named template.

    Only the declared placeholder names are substituted; any of them left
    unbound raises MissingPlaceholderError. Literal braces elsewhere in the
    template (JSON examples, code) pass through untouched. Image attachments
    ride in context["images"].
    """
    text = template_text(template_name)
    for key, value in context.items():
        if key == "images":
            continue
        text = text.replace("{" + key + "}", str(value))
    leftover = _PLACEHOLDER_RE.search(text)
    if leftover:
        raise MissingPlaceholderError(
            f"template '{template_name}': placeholder {{{leftover.group(1)}}} not bound"
        )
    return [ChatMessage(role="user", text=text, images=tuple(context.get("images", ())))]


# --- transcript -----------------------------------------------------------------------------


class Transcript:
    """Append-only exchange log; every record is flushed before the response is used."""

    def __init__(self, path: str | Path):
        self._writer = JsonlWriter(path)

    def record(self, req: ChatRequest, resp: ChatResponse) -> None:
        self._writer.append(
            {
                "tag": req.tag,
                "model": req.model_id,
                "request_sha256": req.fingerprint(),
                "response_text": resp.text,
                "usage": resp.usage,
                "latency_ms": resp.latency_ms,
                "attempt": resp.attempt,
            }
        )

    def close(self) -> None:
        self._writer.close()


# --- HTTP gateway ---------------------------------------------------------------------------

TRANSIENT_STATUSES = (429, 500, 502, 503, 504)


def _requests_transport(url: str, headers: dict, payload: dict, timeout: float):
    import requests

    try:
        resp = requests.post(url, headers=headers, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise ConnectionError(str(exc)) from exc
    return resp.status_code, resp.text


def _encode_image(path: str) -> dict:
    data = base64.b64encode(Path(path).read_bytes()).decode("ascii")
    return {"type": "image_url", "image_url": {"url": f"data:image/jpeg;base64,{data}"}}


class HttpGateway:
    """Chat-completions client with retries, backoff and a concurrency bound."""

    def __init__(
        self,
        base_url: str,
        model_id: str = "",
        api_key_env: str = "SPRITE_API_KEY",
        max_attempts: int = 3,
        backoff_s: float = 0.5,
        max_concurrent: int = 4,
        request_timeout_s: float = 60.0,
        transcript: Transcript | None = None,
        transport=None,
        sleep=time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.api_key_env = api_key_env
        self.max_attempts = max_attempts
        self.backoff_s = backoff_s
        self.request_timeout_s = request_timeout_s
        self.transcript = transcript
        self._transport = transport or _requests_transport
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max_concurrent)

    def _headers(self) -> dict:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise AuthError(f"environment variable {self.api_key_env} is not set")
        return {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    def _payload(self, req: ChatRequest) -> dict:
        messages = []
        for m in req.messages:
            if m.images:
                content = [{"type": "text", "text": m.text}]
                content.extend(_encode_image(p) for p in m.images)
                messages.append({"role": m.role, "content": content})
            else:
                messages.append({"role": m.role, "content": m.text})
        return {
            "model": req.model_id or self.model_id,
            "messages": messages,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }

    def complete(self, req: ChatRequest) -> ChatResponse:
        _validate_request(req)
        headers = self._headers()
        payload = self._payload(req)
        url = f"{self.base_url}/chat/completions"
        last_error = "no attempt made"
        for attempt in range(1, self.max_attempts + 1):
            start = time.perf_counter()
            try:
                with self._slots:
                    status, body = self._transport(url, headers, payload, self.request_timeout_s)
            except ConnectionError as exc:
                last_error = str(exc)
                if attempt < self.max_attempts:
                    self._sleep(self.backoff_s * 2 ** (attempt - 1))
                continue
            latency_ms = int((time.perf_counter() - start) * 1000)
            if status in (401, 403):
                raise AuthError(f"provider rejected credentials (HTTP {status})")
            if status == 413:
                raise PayloadTooLargeError("request payload too large")
            if status in TRANSIENT_STATUSES:
                last_error = f"HTTP {status}"
                if attempt < self.max_attempts:
                    self._sleep(self.backoff_s * 2 ** (attempt - 1))
                continue
            if status != 200:
                raise GatewayError(f"provider error HTTP {status}: {body[:200]}")
            try:
                parsed = json.loads(body)
                text = parsed["choices"][0]["message"]["content"]
            except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
                raise GatewayError(f"malformed provider response: {exc}") from exc
            resp = ChatResponse(
                text=text,
                usage=parsed.get("usage", {}),
                latency_ms=latency_ms,
                attempt=attempt,
            )
            if self.transcript is not None:
                self.transcript.record(req, resp)
            return resp
        raise RetriesExhaustedError(f"gave up after {self.max_attempts} attempts: {last_error}")


class ScriptedGateway:
    """Test double that replays canned responses per tag, in order."""

    def __init__(self, responses: dict[str, list[str]], transcript: Transcript | None = None):
        self._responses = {tag: list(items) for tag, items in responses.items()}
        self.transcript = transcript
        self.requests: list[ChatRequest] = []

    def complete(self, req: ChatRequest) -> ChatResponse:
        _validate_request(req)
        self.requests.append(req)
        queue = self._responses.get(req.tag)
        if not queue:
            raise GatewayError(f"scripted gateway has no response queued for tag '{req.tag}'")
        resp = ChatResponse(text=queue.pop(0))
        if self.transcript is not None:
            self.transcript.record(req, resp)
        return resp
