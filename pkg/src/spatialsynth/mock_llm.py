"""Deterministic offline stand-in for the chat provider.

The mock reads everything it needs back out of the rendered prompt (candidate
objects, task list, question payload, judge inputs), so the real prompt
rendering and parsing code paths are exercised end to end with zero network
access. Responses are a pure function of (seed, prompt text).
"""

from __future__ import annotations

import hashlib
import json
import re
from types import SimpleNamespace

from . import programs
from .consistency import answers_consistent, token_set
from .gateway import ChatRequest, ChatResponse, GatewayError, Transcript, _validate_request
from .scene_model import CameraPose, SceneKind, UnitQuaternion, Vec3
from .textfmt import render_nav_text

import random


def _fenced_after(text: str, marker_pattern: str) -> str:
    """Contents of the first ``` fence after the line matching marker_pattern."""
    marker = re.search(marker_pattern, text)
    if not marker:
        raise GatewayError(f"mock could not locate section {marker_pattern!r}")
    fence = re.compile(r"```\n(.*?)\n```", re.DOTALL)
    m = fence.search(text, marker.end())
    if not m:
        raise GatewayError(f"mock found no fenced block after {marker_pattern!r}")
    return m.group(1)


def _section_after(text: str, header: str) -> str:
    m = re.search(re.escape(header) + r"\n(.*?)(?=\n###|\Z)", text, re.DOTALL)
    if not m:
        raise GatewayError(f"mock could not locate section {header!r}")
    return m.group(1).strip()


def _or_join(names: list[str]) -> str:
    if len(names) == 2:
        return f"the {names[0]} or the {names[1]}"
    return "the " + ", the ".join(names[:-1]) + f", or the {names[-1]}"


_DIM_CHOICES = [
    ("height", "largest", "tallest"),
    ("height", "smallest", "shortest"),
    ("length", "largest", "longest"),
    ("width", "largest", "widest"),
    ("width", "smallest", "narrowest"),
]
_DIMENSIONS = ("height", "length", "width")


class MockGateway:
    """Offline provider; see module docstring."""

    def __init__(self, seed: int = 0, transcript: Transcript | None = None):
        self.seed = seed
        self.transcript = transcript

    # -- plumbing ------------------------------------------------------------------

    def _rng(self, prompt: str) -> random.Random:
        digest = hashlib.sha256(f"{self.seed}:{prompt}".encode()).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))

    def complete(self, req: ChatRequest) -> ChatResponse:
        _validate_request(req)
        prompt = req.prompt_text()
        handlers = {
            "image_questions": lambda: self._questions(prompt, video=False),
            "video_questions": lambda: self._questions(prompt, video=True),
            "image_code": lambda: self._code(prompt),
            "video_code": lambda: self._code(prompt),
            "compound": lambda: self._compound(prompt),
            "disambiguate": lambda: self._disambiguate(prompt),
            "judge_consistency": lambda: self._judge_consistency(prompt),
            "judge_compound": lambda: self._judge_compound(prompt),
            "navigation": lambda: self._navigation(prompt),
            "mc_distractors": lambda: self._mc_distractors(prompt),
        }
        if req.tag not in handlers:
            raise GatewayError(f"mock gateway does not handle tag '{req.tag}'")
        resp = ChatResponse(text=handlers[req.tag]())
        if self.transcript is not None:
            self.transcript.record(req, resp)
        return resp

    # -- question generation -------------------------------------------------------

    def _questions(self, prompt: str, video: bool) -> str:
        objects_info: dict[str, str] = json.loads(_fenced_after(prompt, r"###\s*candidate object"))
        tasks = [t["name"] for t in json.loads(_fenced_after(prompt, r"need to comply with the following task types"))]
        rng = self._rng(prompt)
        ids = list(objects_info)
        by_category: dict[str, list[str]] = {}
        for oid, cat in objects_info.items():
            by_category.setdefault(cat, []).append(oid)

        target = 44 if video else 24
        entries: list[dict] = []
        attempts = 0
        while len(entries) < target and attempts < target * 12:
            task = tasks[attempts % len(tasks)]
            attempts += 1
            entry = self._one_question(task, ids, objects_info, by_category, rng, video)
            if entry is not None:
                entries.append(entry)
        return json.dumps(entries, indent=2, ensure_ascii=False)

    def _one_question(self, task, ids, objects_info, by_category, rng, video) -> dict | None:
        def pick(n):
            if len(ids) < n:
                return None
            return rng.sample(ids, n)

        where = "video" if video else "image"
        if task == "object_size_estimation":
            sel = pick(1)
            if not sel:
                return None
            dim = rng.choice(_DIMENSIONS)
            text = rng.choice(
                [
                    f"What is the {dim} of the {sel[0]} in meters?",
                    f"Please estimate the {dim} of the {sel[0]}, in meters.",
                ]
            )
        elif task == "object_size_comparison":
            sel = pick(rng.choice([2, 3]))
            if not sel:
                return None
            dim, extreme, word = rng.choice(_DIM_CHOICES)
            text = rng.choice(
                [
                    f"Determine which is the {word}: {_or_join(sel)}.",
                    f"Among {_or_join(sel)}, which one is the {word}?",
                ]
            )
        elif task == "object_volume_estimation":
            sel = pick(1)
            if not sel:
                return None
            text = f"What is the volume of the {sel[0]} in cubic meters?"
        elif task == "object_volume_comparison":
            sel = pick(rng.choice([2, 3]))
            if not sel:
                return None
            extreme = rng.choice(["largest", "smallest"])
            text = f"Which object has the {extreme} volume: {_or_join(sel)}?"
        elif task in ("object_above", "object_below"):
            sel = pick(2)
            if not sel:
                return None
            rel = "above" if task == "object_above" else "below"
            text = f"Is the {sel[0]} positioned {rel} the {sel[1]}?"
        elif task in ("object_direction_facing_simple", "object_direction_facing_complex"):
            sel = pick(3)
            if not sel:
                return None
            if task.endswith("simple"):
                text = f"If you stand at the {sel[0]} and face the {sel[1]}, is the {sel[2]} on your left or right?"
            else:
                text = (
                    f"If you stand at the {sel[0]} and face the {sel[1]}, in which direction is the {sel[2]}: "
                    "front-left, front-right, back-left, or back-right?"
                )
        elif task == "object_absolute_distance":
            sel = pick(2)
            if not sel:
                return None
            text = rng.choice(
                [
                    f"What is the distance in meters between the {sel[0]} and the {sel[1]}?",
                    f"How far apart are the {sel[0]} and the {sel[1]}, in meters?",
                ]
            )
        elif task == "object_relative_distance":
            sel = pick(3)
            if not sel:
                return None
            text = f"Which of {_or_join(sel[1:])} is closest to the {sel[0]}?"
        elif task == "object_nearby":
            sel = pick(1)
            if not sel:
                return None
            text = f"Are there any objects within 5 meters of the {sel[0]}?"
        elif task == "object_counting":
            cat = rng.choice(sorted(by_category))
            sel = [by_category[cat][0]]
            text = f"How many objects of the {cat} category are in the {where}?"
        elif task == "object_in_frame":
            sel = pick(1)
            if not sel:
                return None
            text = f"Which objects are visible at frame {rng.randint(0, 2)} of the video? List them by category."
        elif task in ("object_appearance_order", "temporal_appearance_sequence"):
            sel = pick(min(3, len(ids)))
            if not sel or len(sel) < 2:
                return None
            if task == "object_appearance_order":
                text = f"In what order do {_or_join(sel).replace(' or ', ' and ')} first appear in the video?"
            else:
                text = f"Considering when they first appear, what is the chronological sequence of {_or_join(sel).replace(' or ', ' and ')}?"
        elif task == "object_height_determination":
            sel = pick(rng.choice([2, 3]))
            if not sel:
                return None
            text = f"Whose top is the highest: {_or_join(sel)}?"
        elif task == "high_and_low_position":
            sel = pick(2)
            if not sel:
                return None
            text = f"Which is at a higher elevation, the {sel[0]} or the {sel[1]}?"
        elif task == "object_distance_camera_absolute":
            sel = pick(1)
            if not sel:
                return None
            text = f"How far is the {sel[0]} from the camera, in meters?"
        elif task == "object_distance_camera_relative":
            sel = pick(2)
            if not sel:
                return None
            extreme = rng.choice(["closer to", "farther from"])
            text = f"From the current view, which is {extreme} the camera: the {sel[0]} or the {sel[1]}?"
        elif task == "object_direction_camera_simple":
            sel = pick(2)
            if not sel:
                return None
            text = f"From the current view, is the {sel[0]} to the left or right of the {sel[1]}?"
        elif task == "object_direction_camera_complex":
            sel = pick(2)
            if not sel:
                return None
            text = (
                f"From the current view, in which direction is the {sel[0]} relative to the {sel[1]}: "
                "front-left, front-right, back-left, or back-right?"
            )
        else:
            return None
        return {
            "instruction": text,
            "objects": sel,
            "objects_category": [objects_info[o] for o in sel],
            "category": task,
        }

    # -- code generation -----------------------------------------------------------

    def _code(self, prompt: str) -> str:
        q = json.loads(_fenced_after(prompt, r"###question"))
        reference = _fenced_after(prompt, r"###reference code")
        m = re.search(r"# approach (\d+)", reference)
        variant = int(m.group(1)) if m else 0
        kind = SceneKind(q.get("scene_kind", "video"))
        camera_pose = None
        if q.get("camera_rotation"):
            w, x, y, z = q["camera_rotation"]
            camera_pose = CameraPose(position=Vec3(0.0, 0.0, 0.0), rotation=UnitQuaternion(w, x, y, z))
        try:
            source = programs.build_program(
                q["category"],
                q["objects"],
                q.get("params", {}),
                scene_kind=kind,
                camera_pose=camera_pose,
                variant=variant,
            )
        except programs.ProgramBuildError as exc:
            source = (
                f"def func(metadata{', camera_position' if kind.is_image else ''}):\n"
                f"    raise ValueError({str(exc)!r})\n"
            )
        return f"Here is the function:\n```python\n{source}```\n"

    # -- compound synthesis ----------------------------------------------------------

    def _compound(self, prompt: str) -> str:
        # anchor on the pair sections so the few-shot example is not picked up
        pair_a = _section_after(prompt, "###pair A")
        pair_b = _section_after(prompt, "###pair B")
        qa = re.search(r"Question A: (.*)", pair_a).group(1).strip()
        aa = re.search(r"Answer A: (.*)", pair_a).group(1).strip()
        qb = re.search(r"Question B: (.*)", pair_b).group(1).strip()
        ab = re.search(r"Answer B: (.*)", pair_b).group(1).strip()
        instruction = (
            f"Consider two related questions about the scene: (1) {qa} (2) {qb} "
            "What single conclusion follows from their answers?"
        )
        second = ab[0].lower() + ab[1:] if ab else ab
        answer = f"{aa.rstrip('.')}; moreover, {second}"
        return json.dumps({"instruction": instruction, "answer": answer}, ensure_ascii=False)

    # -- disambiguation ----------------------------------------------------------------

    def _disambiguate(self, prompt: str) -> str:
        block = _section_after(prompt, "###marked instances")
        lines = []
        for line in block.splitlines():
            if ":" not in line:
                continue
            color, category = (part.strip() for part in line.split(":", 1))
            lines.append(f"{color}: {color} {category}")
        return "\n".join(lines)

    # -- judges -------------------------------------------------------------------------

    def _judge_consistency(self, prompt: str) -> str:
        a = _section_after(prompt, "###answer 1")
        b = _section_after(prompt, "###answer 2")
        return "yes" if answers_consistent(a, b) else "no"

    def _judge_compound(self, prompt: str) -> str:
        pair_a = _section_after(prompt, "###pair A")
        pair_b = _section_after(prompt, "###pair B")
        aa = re.search(r"Answer A: (.*)", pair_a).group(1).strip()
        ab = re.search(r"Answer B: (.*)", pair_b).group(1).strip()
        compound = _section_after(prompt, "###compound answer")
        ct = token_set(compound)
        ok = bool(ct & token_set(aa)) and bool(ct & token_set(ab))
        return "yes" if ok else "no"

    # -- navigation phrasing --------------------------------------------------------------

    def _navigation(self, prompt: str) -> str:
        raw = json.loads(_section_after(prompt, "###segments"))
        segments = [SimpleNamespace(**seg) for seg in raw]
        return render_nav_text(segments)

    # -- multiple-choice distractors --------------------------------------------------------

    def _mc_distractors(self, prompt: str) -> str:
        answer = _section_after(prompt, "###correct answer")
        names = [n for n in _section_after(prompt, "###related object names").splitlines() if n.strip()]
        m = re.search(r"(?<![\w.])(\d+(?:\.(\d+))?)(?![\w.])", answer)
        out: list[str] = []
        if m:
            decimals = len(m.group(2) or "")
            value = float(m.group(1))
            for scale in (0.5, 1.5, 2.0):
                scaled = value * scale
                rendered = f"{scaled:.{decimals}f}" if decimals else str(round(scaled))
                out.append(answer[: m.start(1)] + rendered + answer[m.end(1):])
        else:
            present = [n for n in names if n in answer]
            if present:
                chosen = max(present, key=len)
                for other in names:
                    if other != chosen and other not in answer:
                        out.append(answer.replace(chosen, other))
                    if len(out) == 3:
                        break
        return "\n".join(out[:3])
