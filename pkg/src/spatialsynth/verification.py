"""Code-as-ground-truth acquisition and quality control.

For each question: render k code prompts (the few-shot reference program
rotates per variant, which is what makes the prompts diverse), execute every
candidate program through a runner honoring the stdio wire schema, demand
unanimous pairwise consistency, and cross-check against the task oracle when
the task is oracle-supported. Any execution failure or disagreement rejects
the question.

Runner wire schema (one JSON record each way):
  request:  {"code": str, "metadata": [...], "camera_position": [x,y,z]?, "timeout_s": float}
  response: {"status": "ok|error|timeout|non_string|object_not_found",
             "result": str, "error": str, "wall_ms": int}
Any deviation (no output, malformed record, nonzero exit) maps to status=error.
"""

from __future__ import annotations

import json
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import task_oracle
from .consistency import answers_consistent
from .gateway import ChatRequest, GatewayError, render_prompt
from .geometry import GeometryError
from .programs import reference_snippet
from .scene_model import SceneKind, SceneMeta, object_to_dict
from .synthesis import QuestionRecord
from .task_oracle import (
    ArityError,
    MissingCameraError,
    ModalityMismatchError,
    OracleAnswer,
    OracleError,
    UnknownObjectError,
)

DEFAULT_K = 3
DEFAULT_TIMEOUT_S = 10.0
OUTPUT_CAP_BYTES = 4096
STDERR_CAP = 512

RUNNER_STATUSES = ("ok", "error", "timeout", "non_string", "object_not_found")


@dataclass(frozen=True)
class AnswerProgram:
    source: str
    prompt_variant: int
    question_id: str


@dataclass(frozen=True)
class ExecutionResult:
    status: str
    answer_text: str | None = None
    stderr_excerpt: str = ""
    wall_ms: int = 0


@dataclass
class VerificationOutcome:
    question_id: str
    candidates: list[tuple[AnswerProgram, ExecutionResult]] = field(default_factory=list)
    consistent: bool = False
    oracle_answer: OracleAnswer | None = None
    oracle_agrees: bool | None = None
    decision: str = "rejected"
    reject_reason: str | None = None
    flags: tuple[str, ...] = ()

    @property
    def accepted_answer(self) -> str | None:
        if self.decision != "accepted" or not self.candidates:
            return None
        return self.candidates[0][1].answer_text

    def summary_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "decision": self.decision,
            "reject_reason": self.reject_reason,
            "consistent": self.consistent,
            "oracle_agrees": self.oracle_agrees,
            "oracle_text": self.oracle_answer.text if self.oracle_answer else None,
            "flags": list(self.flags),
            "candidates": [
                {"variant": p.prompt_variant, "status": r.status, "answer": r.answer_text}
                for p, r in self.candidates
            ],
        }


# --- wire schema ------------------------------------------------------------------------------


def encode_request(code: str, metadata: list[dict], camera_position: list[float] | None, timeout_s: float) -> str:
    record: dict = {"code": code, "metadata": metadata, "timeout_s": timeout_s}
    if camera_position is not None:
        record["camera_position"] = camera_position
    return json.dumps(record, ensure_ascii=False)


def decode_response(line: str) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        return {"status": "error", "result": "", "error": f"malformed runner response: {exc}", "wall_ms": 0}
    if not isinstance(record, dict) or record.get("status") not in RUNNER_STATUSES:
        return {"status": "error", "result": "", "error": "runner response missing a valid status", "wall_ms": 0}
    record.setdefault("result", "")
    record.setdefault("error", "")
    record.setdefault("wall_ms", 0)
    return record


def _result_from_record(record: dict) -> ExecutionResult:
    status = record["status"]
    return ExecutionResult(
        status=status,
        answer_text=record["result"] if status == "ok" else None,
        stderr_excerpt=str(record.get("error", ""))[:STDERR_CAP],
        wall_ms=int(record.get("wall_ms", 0)),
    )


# --- runners ----------------------------------------------------------------------------------


class InProcessRunner:
    """Executes trusted programs in-process with a restricted namespace.

    Used for the offline pipeline whose programs come from the built-in
    builders. There is no hard kill here; untrusted live code should go
    through a subprocess runner command instead.
    """

    def run(self, request: dict) -> dict:
        from .restricted_exec import execute_program

        return execute_program(request)


class SubprocessRunner:
    """Client for an external runner command speaking the stdio protocol."""

    def __init__(self, cmd: list[str], grace_s: float = 5.0):
        if not cmd:
            raise ValueError("runner command must not be empty")
        self.cmd = list(cmd)
        self.grace_s = grace_s

    def run(self, request: dict) -> dict:
        line = json.dumps(request, ensure_ascii=False)
        deadline = float(request.get("timeout_s", DEFAULT_TIMEOUT_S)) + self.grace_s
        try:
            proc = subprocess.run(
                self.cmd,
                input=line + "\n",
                capture_output=True,
                text=True,
                timeout=deadline,
            )
        except subprocess.TimeoutExpired:
            return {"status": "error", "result": "", "error": "runner did not respond before the deadline", "wall_ms": int(deadline * 1000)}
        except OSError as exc:
            return {"status": "error", "result": "", "error": f"could not start runner: {exc}", "wall_ms": 0}
        if proc.returncode != 0:
            return {"status": "error", "result": "", "error": f"runner exited with status {proc.returncode}", "wall_ms": 0}
        out = proc.stdout.strip().splitlines()
        if not out:
            return {"status": "error", "result": "", "error": "runner produced no output", "wall_ms": 0}
        return decode_response(out[-1])


class StubRunner:
    """In-process fake honoring the wire schema; responses come from a script.

    The script is either a list of response records (served in order) or a
    callable (request_dict, index) -> response_dict. Requests and responses
    both round-trip through JSON so schema drift shows up in tests.
    """

    def __init__(self, script):
        self._script = script
        self.requests: list[dict] = []

    def run(self, request: dict) -> dict:
        request = json.loads(json.dumps(request))  # enforce wire-compatibility
        if not request.get("code"):
            return {"status": "error", "result": "", "error": "empty code", "wall_ms": 0}
        index = len(self.requests)
        self.requests.append(request)
        if callable(self._script):
            response = self._script(request, index)
        else:
            response = self._script[index % len(self._script)]
        return decode_response(json.dumps(response))


def scene_metadata(scene: SceneMeta) -> list[dict]:
    return [object_to_dict(o) for o in scene.objects]


def execute_candidates(
    programs: list[AnswerProgram],
    scene: SceneMeta,
    runner,
    camera_position: list[float] | None = None,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    max_workers: int = 1,
) -> list[ExecutionResult]:
    metadata = scene_metadata(scene)

    def one(program: AnswerProgram) -> ExecutionResult:
        request = json.loads(encode_request(program.source, metadata, camera_position, timeout_s))
        record = runner.run(request)
        if record.get("status") == "ok" and len(str(record.get("result", ""))) > OUTPUT_CAP_BYTES:
            record = dict(record, result=str(record["result"])[:OUTPUT_CAP_BYTES])
        return _result_from_record(record)

    if max_workers <= 1 or len(programs) <= 1:
        return [one(p) for p in programs]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(one, programs))


# --- quality control ---------------------------------------------------------------------------


def qc_filter(q: QuestionRecord, scene: SceneMeta, tolerances: dict | None = None) -> tuple[bool, str | None]:
    """Predefined exclusion rules; (passed, reject_reason)."""
    for oid in q.objects:
        if not scene.has_object(oid):
            return False, "unknown_object"
    if q.category in ("compound", "navigation"):
        return True, None
    if q.category not in task_oracle.TASKS:
        return False, "unknown_task"
    task = task_oracle.TASKS[q.category]
    if not task_oracle.task_modality_ok(task, scene.kind):
        return False, "modality_mismatch"
    params = dict(tolerances or {})
    params.update(q.params)
    try:
        result = task_oracle.answer(task, scene, list(q.objects), params)
    except UnknownObjectError:
        return False, "unknown_object"
    except MissingCameraError:
        return False, "missing_camera"
    except ModalityMismatchError:
        return False, "modality_mismatch"
    except ArityError:
        return False, "arity_mismatch"
    except GeometryError:
        return False, "degenerate_geometry"
    except OracleError:
        return False, "oracle_error"
    if result.ambiguous:
        return False, "ambiguous_geometry"
    return True, None


def _code_from_response(text: str) -> str | None:
    import re

    fenced = re.search(r"```(?:python)?\s*\n(.*?)```", text, re.DOTALL)
    body = fenced.group(1) if fenced else text
    if "def func" not in body:
        return None
    return body.strip() + "\n"


def _camera_payload(q: QuestionRecord, scene: SceneMeta) -> tuple[list[float] | None, list[float] | None]:
    """(camera_position wire argument, camera_rotation prompt payload)."""
    if scene.kind is SceneKind.VIDEO:
        return None, None
    cam = task_oracle.scene_camera(scene, q.params)
    if cam is None:
        return None, None
    pos = cam.position.as_list()
    rot = cam.rotation.as_list()
    return pos, rot


def acquire_truth(
    q: QuestionRecord,
    scene: SceneMeta,
    gw,
    runner,
    k: int = DEFAULT_K,
    model_id: str = "",
    timeout_s: float = DEFAULT_TIMEOUT_S,
    tolerances: dict | None = None,
    escalate_oracle_mismatch: bool = False,
    max_workers: int = 1,
) -> VerificationOutcome:
    """Generate k answer programs, execute them, vote, and cross-check."""
    outcome = VerificationOutcome(question_id=q.question_id)
    template = "video_code" if scene.kind is SceneKind.VIDEO else "image_code"
    camera_position, camera_rotation = _camera_payload(q, scene)

    question_payload = {
        "instruction": q.instruction,
        "objects": list(q.objects),
        "objects_category": list(q.objects_category),
        "category": q.category,
        "params": q.params,
        "scene_kind": scene.kind.value,
    }
    if camera_rotation is not None:
        question_payload["camera_rotation"] = camera_rotation

    programs: list[AnswerProgram] = []
    try:
        for variant in range(k):
            context = {
                "meta_info": json.dumps(scene_metadata(scene)[:1], indent=2, ensure_ascii=False),
                "reference_code": reference_snippet(scene.kind, variant),
                "question": json.dumps(question_payload, indent=2, ensure_ascii=False),
                "objects": json.dumps(list(q.objects), ensure_ascii=False),
                "categories": json.dumps(list(q.objects_category), ensure_ascii=False),
            }
            req = ChatRequest(
                model_id=model_id,
                messages=tuple(render_prompt(template, context)),
                temperature=0.2,
                tag=template,
            )
            resp = gw.complete(req)
            source = _code_from_response(resp.text)
            if source is None:
                outcome.reject_reason = "generation_failed"
                return outcome
            programs.append(AnswerProgram(source=source, prompt_variant=variant, question_id=q.question_id))
    except GatewayError:
        outcome.reject_reason = "generation_failed"
        return outcome

    results = execute_candidates(
        programs, scene, runner, camera_position=camera_position, timeout_s=timeout_s, max_workers=max_workers
    )
    outcome.candidates = list(zip(programs, results))

    statuses = [r.status for r in results]
    if any(s != "ok" for s in statuses):
        for status in ("timeout", "object_not_found", "non_string", "error"):
            if status in statuses:
                outcome.reject_reason = {
                    "timeout": "timeout",
                    "object_not_found": "object_not_found",
                    "non_string": "non_string_result",
                    "error": "execution_error",
                }[status]
                break
        return outcome

    answers = [r.answer_text or "" for r in results]
    outcome.consistent = all(
        answers_consistent(answers[i], answers[j]) for i in range(len(answers)) for j in range(i + 1, len(answers))
    )
    if not outcome.consistent:
        outcome.reject_reason = "inconsistent"
        return outcome

    if q.category in task_oracle.TASKS:
        params = dict(tolerances or {})
        params.update(q.params)
        try:
            oracle = task_oracle.answer(q.category, scene, list(q.objects), params)
        except (OracleError, GeometryError):
            oracle = None
        if oracle is not None and not oracle.ambiguous:
            outcome.oracle_answer = oracle
            outcome.oracle_agrees = answers_consistent(answers[0], oracle.text)
            if not outcome.oracle_agrees:
                outcome.flags = outcome.flags + ("oracle_mismatch",)
                if escalate_oracle_mismatch:
                    outcome.reject_reason = "oracle_mismatch"
                    return outcome

    outcome.decision = "accepted"
    return outcome


def compound_check(compound_answer: str, parent_answers: tuple[str, str], gw, model_id: str = "") -> bool:
    """Plausibility judgment for a compound answer; fails closed on gateway errors."""
    if not all(parent_answers):
        raise ValueError("both parent answers must be present and verified")
    context = {
        "question_a": "(verified pair A)",
        "answer_a": parent_answers[0],
        "question_b": "(verified pair B)",
        "answer_b": parent_answers[1],
        "compound_answer": compound_answer,
    }
    try:
        resp = gw.complete(
            ChatRequest(model_id=model_id, messages=tuple(render_prompt("judge_compound", context)), temperature=0.0, tag="judge_compound")
        )
    except GatewayError:
        return False
    verdict = resp.text.strip().lower()
    return verdict.startswith("yes")
