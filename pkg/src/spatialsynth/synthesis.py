"""Everything that produces question records and answer candidates.

Covers structured question generation through the gateway, alias
disambiguation for duplicate categories, compound synthesis from two verified
pairs, egocentric navigation description, and the rigid template baseline.
Structured output parsing is strict: entries missing required fields or
naming unknown objects/tasks are dropped with a diagnostic, never repaired.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import re
from dataclasses import dataclass, field, replace

from . import task_oracle
from .gateway import ChatRequest, render_prompt
from .geometry import GeometryError
from .scene_model import CameraPose, Diagnostic, SceneKind, SceneMeta, rename_objects
from .task_oracle import OracleAnswer, OracleError, TaskType
from .textfmt import fmt_trim, render_nav_text

DEFAULT_TURN_THRESHOLD_DEG = 15.0
DEFAULT_MIN_MOVE_M = 0.2

QUESTION_FIELDS = ("instruction", "objects", "objects_category", "category")


class SynthesisError(RuntimeError):
    pass


class ZeroParseError(SynthesisError):
    """The model produced no usable question entries."""


class DisambiguationError(SynthesisError):
    pass


class UnsatisfiableTaskError(SynthesisError):
    pass


@dataclass(frozen=True)
class QuestionRecord:
    question_id: str
    instruction: str
    objects: tuple[str, ...]
    objects_category: tuple[str, ...]
    category: str
    scene_id: str
    media: tuple[str, ...] = ()
    provenance: str = "llm"
    params: dict = field(default_factory=dict)
    parents: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "instruction": self.instruction,
            "objects": list(self.objects),
            "objects_category": list(self.objects_category),
            "category": self.category,
            "scene_id": self.scene_id,
            "media": list(self.media),
            "provenance": self.provenance,
            "params": self.params,
            "parents": list(self.parents),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "QuestionRecord":
        return cls(
            question_id=raw["question_id"],
            instruction=raw["instruction"],
            objects=tuple(raw.get("objects", [])),
            objects_category=tuple(raw.get("objects_category", [])),
            category=raw["category"],
            scene_id=raw.get("scene_id", ""),
            media=tuple(raw.get("media", [])),
            provenance=raw.get("provenance", "llm"),
            params=dict(raw.get("params", {})),
            parents=tuple(raw.get("parents", [])),
        )


@dataclass(frozen=True)
class AliasMap:
    mapping: dict[str, str]

    def __len__(self) -> int:
        return len(self.mapping)


@dataclass(frozen=True)
class NavSegment:
    kind: str  # "move_forward" | "turn"
    distance_m: float = 0.0
    angle_deg: float = 0.0  # signed, positive = left

    def to_dict(self) -> dict:
        if self.kind == "move_forward":
            return {"kind": self.kind, "distance_m": self.distance_m}
        return {"kind": self.kind, "angle_deg": self.angle_deg}


@dataclass(frozen=True)
class NavDescription:
    segments: tuple[NavSegment, ...]
    text: str


# --- prompt context building -----------------------------------------------------------

_META_EXAMPLE_VIDEO = json.dumps(
    [
        {
            "id": "bed_1",
            "obb": {
                "center": [1.2, 0.45, -2.3],
                "half_extent": [0.95, 0.45, 1.05],
                "rotation": [1.0, 0.0, 0.0, 0.0],
                "sizes": [1.9, 0.9, 2.1],
                "volume": 3.5910,
            },
            "category": "bed",
            "appear": [0, 1, 3],
        }
    ],
    indent=2,
)

_META_EXAMPLE_IMAGE = json.dumps(
    [
        {
            "id": "bed_1",
            "obb": {
                "center": [1.2, 0.45, -2.3],
                "half_extent": [0.95, 0.45, 1.05],
                "sizes": [1.9, 0.9, 2.1],
                "volume": 3.5910,
            },
            "category": "bed",
        }
    ],
    indent=2,
)

_OUTPUT_EXAMPLE = json.dumps(
    [
        {
            "instruction": "What is the distance in meters between the bed_1 and the desk_1?",
            "objects": ["bed_1", "desk_1"],
            "objects_category": ["bed", "desk"],
            "category": "object_absolute_distance",
        },
        {
            "instruction": "How many objects of the chair category are in the video?",
            "objects": ["chair_2"],
            "objects_category": ["chair"],
            "category": "object_counting",
        },
    ],
    indent=2,
)

_TASK_DESCRIPTIONS = {
    "object_size_estimation": "report one dimension (length, width, or height) of a named object",
    "object_size_comparison": "pick which of several objects is the largest or smallest in one dimension",
    "object_volume_estimation": "report the volume of a named object",
    "object_volume_comparison": "pick the object with the largest or smallest volume",
    "object_below": "say whether one object sits below another",
    "object_above": "say whether one object sits above another",
    "object_direction_facing_complex": "standing at one object facing a second, classify a third as front-left/front-right/back-left/back-right",
    "object_direction_facing_simple": "standing at one object facing a second, classify a third as left or right",
    "object_absolute_distance": "report the distance between two objects",
    "object_relative_distance": "pick which candidate object is closest to a target object",
    "object_nearby": "list objects within a given range of a target object",
    "object_counting": "count the objects of one category",
    "object_distance_camera_relative": "pick which of two objects is closer to or farther from the camera",
    "object_distance_camera_absolute": "report the distance from an object to the camera",
    "object_direction_camera_complex": "classify one object relative to another from the camera view (front-left/front-right/back-left/back-right)",
    "object_direction_camera_simple": "say whether one object is left or right of another from the camera view",
    "high_and_low_position": "pick which object is at a higher elevation",
    "object_appearance_order": "list objects in the order they first appear",
    "object_in_frame": "list the objects visible at a given moment, grouped by category",
    "object_height_determination": "pick the object whose top is the highest",
    "temporal_appearance_sequence": "give the chronological sequence of first appearances",
}


def question_type_listing(kind: SceneKind) -> str:
    rows = [
        {"name": t.name, "description": _TASK_DESCRIPTIONS.get(t.name, "")}
        for t in task_oracle.supported_tasks(kind)
    ]
    return json.dumps(rows, indent=2)


def question_prompt_context(scene: SceneMeta) -> dict:
    return {
        "objects_info": json.dumps({o.id: o.category for o in scene.objects}, indent=2, ensure_ascii=False),
        "meta_example": _META_EXAMPLE_VIDEO if scene.kind is SceneKind.VIDEO else _META_EXAMPLE_IMAGE,
        "question_type_all": question_type_listing(scene.kind),
        "output_example": _OUTPUT_EXAMPLE,
    }


# --- structured output parsing ----------------------------------------------------------


def extract_json_block(text: str):
    """First JSON array/object in a model response, tolerating code fences."""
    fenced = re.search(r"```(?:json)?\s*\n(.*?)\n```", text, re.DOTALL)
    if fenced:
        text = fenced.group(1)
    start = min((i for i in (text.find("["), text.find("{")) if i >= 0), default=-1)
    if start < 0:
        raise ValueError("no JSON payload found in response")
    decoder = json.JSONDecoder()
    obj, _ = decoder.raw_decode(text[start:])
    return obj


def parse_question_entries(text: str, diagnostics: list[Diagnostic] | None = None) -> list[dict]:
    """Strictly validated question entries; malformed ones are dropped."""
    def drop(i, why):
        if diagnostics is not None:
            diagnostics.append(Diagnostic("malformed_entry", None, f"entry {i}: {why}"))

    try:
        payload = extract_json_block(text)
    except (ValueError, json.JSONDecodeError) as exc:
        raise ZeroParseError(f"unparseable question block: {exc}") from exc
    if isinstance(payload, dict):
        payload = [payload]
    if not isinstance(payload, list):
        raise ZeroParseError("question block is not a list")

    out = []
    for i, entry in enumerate(payload):
        if not isinstance(entry, dict):
            drop(i, "not an object")
            continue
        if any(f not in entry for f in QUESTION_FIELDS):
            drop(i, "missing required field")
            continue
        if not isinstance(entry["instruction"], str) or not entry["instruction"].strip():
            drop(i, "empty instruction")
            continue
        if not isinstance(entry["objects"], list) or not all(isinstance(o, str) for o in entry["objects"]):
            drop(i, "objects must be a list of names")
            continue
        if not isinstance(entry["objects_category"], list):
            drop(i, "objects_category must be a list")
            continue
        if not isinstance(entry["category"], str):
            drop(i, "category must be a string")
            continue
        out.append(entry)
    return out


# --- parameter inference from question text ----------------------------------------------

_WORD_TO_DIM_EXTREME = {
    "tallest": ("height", "largest"),
    "shortest": ("height", "smallest"),
    "longest": ("length", "largest"),
    "widest": ("width", "largest"),
    "narrowest": ("width", "smallest"),
}


def _id_positions(text: str, ids: tuple[str, ...]) -> dict[str, int]:
    """First non-overlapping occurrence of each id; longest ids claim spans first."""
    taken: list[tuple[int, int]] = []
    positions: dict[str, int] = {}
    for oid in sorted(ids, key=len, reverse=True):
        for m in re.finditer(re.escape(oid), text):
            s, e = m.span()
            if any(s < te and ts < e for ts, te in taken):
                continue
            positions[oid] = s
            taken.append((s, e))
            break
    return positions


def infer_params(category: str, instruction: str, objects_category: tuple[str, ...] = ()) -> dict:
    """Best-effort task parameters recovered from the question text."""
    low = instruction.lower()
    params: dict = {}
    if category in ("object_size_estimation",):
        for dim in ("height", "length", "width"):
            if re.search(rf"\b{dim}\b", low):
                params["dimension"] = dim
                break
    if category == "object_size_comparison":
        for word, (dim, extreme) in _WORD_TO_DIM_EXTREME.items():
            if word in low:
                params["dimension"] = dim
                params["extreme"] = extreme
                break
    if category == "object_volume_comparison":
        if re.search(r"\b(smallest|least)\b", low):
            params["extreme"] = "smallest"
        elif re.search(r"\b(largest|biggest|greatest)\b", low):
            params["extreme"] = "largest"
    if category == "object_distance_camera_relative":
        if re.search(r"\b(farther|furthest|farthest|further)\b", low):
            params["extreme"] = "farther"
        elif re.search(r"\b(closer|closest|nearest)\b", low):
            params["extreme"] = "closer"
    if category == "object_nearby":
        m = re.search(r"within (\d+(?:\.\d+)?) meters?", low)
        if m:
            params["radius"] = float(m.group(1))
        if "in front" in low:
            params["front"] = True
    if category in ("object_in_frame", "object_counting"):
        m = re.search(r"\b(?:frame|picture|image|moment)\s+(\d+)\b", low)
        if m:
            params["frame"] = int(m.group(1))
    if category == "object_counting" and objects_category:
        params["category"] = objects_category[0]
    return params


def normalize_object_order(category: str, instruction: str, objects: tuple[str, ...]) -> tuple[str, ...]:
    """Reorder involved objects into the role order the oracle expects."""
    if len(objects) < 2:
        return objects
    if category in ("object_direction_facing_simple", "object_direction_facing_complex") and len(objects) == 3:
        anchor = target = None
        for oid in sorted(objects, key=len, reverse=True):
            if re.search(r"stand(?:ing)? at the " + re.escape(oid), instruction):
                anchor = oid
            if re.search(r"fac(?:e|ing) the " + re.escape(oid), instruction):
                target = oid
        if anchor and target and anchor != target:
            query = next(o for o in objects if o not in (anchor, target))
            return (anchor, target, query)
        return objects
    if category == "object_relative_distance":
        for oid in sorted(objects, key=len, reverse=True):
            if re.search(r"(?:closest|nearest) to the " + re.escape(oid), instruction):
                rest = [o for o in objects if o != oid]
                return (oid, *rest)
        return objects
    if category in (
        "object_above",
        "object_below",
        "object_absolute_distance",
        "object_distance_camera_relative",
        "object_direction_camera_simple",
        "object_direction_camera_complex",
        "high_and_low_position",
    ):
        positions = _id_positions(instruction, objects)
        if len(positions) == len(objects):
            return tuple(sorted(objects, key=lambda o: positions[o]))
    return objects


# --- question generation -------------------------------------------------------------------


def generate_questions(
    scene: SceneMeta,
    media,
    gw,
    model_id: str = "",
    diagnostics: list[Diagnostic] | None = None,
    question_id_prefix: str | None = None,
) -> list[QuestionRecord]:
    """Render the question prompt, query the gateway, and parse strict records.

    `media` is the FramePlan (video) or ImageCandidate (image) the questions
    refer to; entries naming unknown objects or task types are dropped.
    """
    template = "video_questions" if scene.kind is SceneKind.VIDEO else "image_questions"
    context = question_prompt_context(scene)
    if scene.kind.is_image:
        context["images"] = list(scene.media)
    messages = render_prompt(template, context)
    req = ChatRequest(
        model_id=model_id,
        messages=tuple(messages),
        temperature=0.7,
        tag=template,
    )
    resp = gw.complete(req)
    entries = parse_question_entries(resp.text, diagnostics)
    if not entries:
        raise ZeroParseError("no well-formed question entries in the response")

    known = {t.name for t in task_oracle.supported_tasks(scene.kind)}
    prefix = question_id_prefix or scene.scene_id
    records: list[QuestionRecord] = []
    for entry in entries:
        unknown = [o for o in entry["objects"] if not scene.has_object(o)]
        if unknown:
            if diagnostics is not None:
                diagnostics.append(
                    Diagnostic("unknown_object", unknown[0], f"question names object '{unknown[0]}' absent from the scene metadata")
                )
            continue
        if entry["category"] not in known:
            if diagnostics is not None:
                diagnostics.append(Diagnostic("unknown_task", None, f"unsupported task type '{entry['category']}'"))
            continue
        objects = normalize_object_order(entry["category"], entry["instruction"], tuple(entry["objects"]))
        params = infer_params(entry["category"], entry["instruction"], tuple(entry["objects_category"]))
        records.append(
            QuestionRecord(
                question_id=f"{prefix}:q{len(records):03d}",
                instruction=entry["instruction"].strip(),
                objects=objects,
                objects_category=tuple(str(c) for c in entry["objects_category"]),
                category=entry["category"],
                scene_id=scene.scene_id,
                media=tuple(scene.media),
                provenance="llm",
                params=params,
            )
        )
    return records


# --- alias disambiguation -------------------------------------------------------------------


def load_legend(path) -> list[tuple[str, str]]:
    """Legend file: one "color<TAB>object_id" per line."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            color, _, object_id = line.partition("\t")
            if not object_id:
                raise ValueError(f"legend line without a tab separator: {line!r}")
            out.append((color.strip(), object_id.strip()))
    return out


def duplicate_category_ids(scene: SceneMeta) -> list[str]:
    out = []
    for _cat, ids in scene.categories().items():
        if len(ids) > 1:
            out.extend(ids)
    return out


def disambiguate(
    scene: SceneMeta,
    annotated_images: list[str],
    legend: list[tuple[str, str]],
    gw,
    model_id: str = "",
) -> AliasMap:
    """Unique readable aliases for duplicate-category objects via the gateway.

    Returns an empty map (no gateway call) when every category is unique.
    Raises DisambiguationError when a legend color is missing from the reply or
    aliases collide twice in a row.
    """
    needing = duplicate_category_ids(scene)
    if not needing:
        return AliasMap({})
    legend_by_color = {color.lower(): oid for color, oid in legend}
    missing = [oid for oid in needing if oid not in legend_by_color.values()]
    if missing:
        raise DisambiguationError(f"legend does not cover duplicate-category object '{missing[0]}'")

    colors_block = "\n".join(
        f"{color}: {scene.object_by_id(oid).category}" for color, oid in legend
    )
    context = {"legend_colors": colors_block, "images": list(annotated_images)}

    last_error = ""
    for _attempt in range(2):
        resp = gw.complete(
            ChatRequest(model_id=model_id, messages=tuple(render_prompt("disambiguate", context)), temperature=0.2, tag="disambiguate")
        )
        mapping: dict[str, str] = {}
        seen_aliases: set[str] = set()
        for line in resp.text.splitlines():
            if ":" not in line:
                continue
            color, alias = (part.strip() for part in line.split(":", 1))
            oid = legend_by_color.get(color.lower())
            if oid is None or not alias:
                continue
            mapping[oid] = alias
            if alias in seen_aliases:
                last_error = f"duplicate alias '{alias}'"
                mapping = {}
                break
            seen_aliases.add(alias)
        if mapping:
            absent = [color for color, oid in legend if oid not in mapping]
            if absent:
                raise DisambiguationError(f"response omitted color '{absent[0]}'")
            return AliasMap(mapping)
    raise DisambiguationError(last_error or "could not obtain unique aliases")


def apply_aliases(scene: SceneMeta, amap: AliasMap) -> SceneMeta:
    if not amap.mapping:
        return scene
    return rename_objects(scene, amap.mapping)


# --- compound synthesis -----------------------------------------------------------------------

_COMPOUND_EXAMPLE = """Question A: Which object has the largest volume: the wardrobe, the lamp, or the rug?
Answer A: The largest object by volume among the wardrobe, lamp, and rug is the wardrobe, with a volume of 1.8 cubic meters.
Question B: Which of the lamp or the wardrobe is closest to the rug?
Answer B: The wardrobe is closest to the rug.
Compound question: Is the bulkiest item in the room also the one you would reach first from the rug?
Compound answer: Yes. The wardrobe has the largest volume and is also the closest to the rug."""


def compound_synthesize(
    qa_a: tuple[QuestionRecord, str],
    qa_b: tuple[QuestionRecord, str],
    gw,
    model_id: str = "",
    question_id: str | None = None,
) -> tuple[QuestionRecord, str]:
    """One compound record from two verified pairs sharing an object."""
    (rec_a, ans_a), (rec_b, ans_b) = qa_a, qa_b
    shared = set(rec_a.objects) & set(rec_b.objects)
    if not shared:
        raise ValueError("compound synthesis needs two pairs sharing at least one object")
    context = {
        "compound_example": _COMPOUND_EXAMPLE,
        "question_a": rec_a.instruction,
        "answer_a": ans_a,
        "question_b": rec_b.instruction,
        "answer_b": ans_b,
    }
    resp = gw.complete(
        ChatRequest(model_id=model_id, messages=tuple(render_prompt("compound", context)), temperature=0.7, tag="compound")
    )
    try:
        payload = extract_json_block(resp.text)
    except ValueError as exc:
        raise SynthesisError(f"malformed compound response: {exc}") from exc
    if not isinstance(payload, dict) or not payload.get("instruction") or not payload.get("answer"):
        raise SynthesisError("compound response must carry 'instruction' and 'answer'")

    objects = tuple(dict.fromkeys(rec_a.objects + rec_b.objects))
    categories = tuple(dict.fromkeys(rec_a.objects_category + rec_b.objects_category))
    record = QuestionRecord(
        question_id=question_id or f"{rec_a.scene_id}:c:{rec_a.question_id}+{rec_b.question_id}",
        instruction=str(payload["instruction"]).strip(),
        objects=objects,
        objects_category=categories,
        category="compound",
        scene_id=rec_a.scene_id,
        media=rec_a.media,
        provenance="compound",
        parents=(rec_a.question_id, rec_b.question_id),
    )
    return record, str(payload["answer"]).strip()


# --- navigation description --------------------------------------------------------------------


def _yaw_deg(pose: CameraPose) -> float:
    """Heading of the camera's forward (-Z) axis projected to the ground plane."""
    q = pose.rotation
    # forward = R @ (0, 0, -1)
    fx = -(2.0 * (q.x * q.z + q.w * q.y))
    fz = -(1.0 - 2.0 * (q.x * q.x + q.y * q.y))
    if math.hypot(fx, fz) < 1e-9:
        return math.nan  # looking straight up/down; caller carries the last heading
    return math.degrees(math.atan2(-fx, -fz))


def _wrap_deg(angle: float) -> float:
    while angle > 180.0:
        angle -= 360.0
    while angle <= -180.0:
        angle += 360.0
    return angle


def navigation_describe(
    trajectory: list[CameraPose],
    gw=None,
    model_id: str = "",
    turn_threshold_deg: float = DEFAULT_TURN_THRESHOLD_DEG,
    min_move_m: float = DEFAULT_MIN_MOVE_M,
) -> NavDescription:
    """Structured move/turn segments plus a natural-language rendering.

    Without a gateway the deterministic template renderer is used, which keeps
    offline runs reproducible; with one, the segments are sent for rephrasing.
    """
    if len(trajectory) < 2:
        raise ValueError("navigation needs at least two poses")
    same = all(
        p.position == trajectory[0].position and p.rotation == trajectory[0].rotation for p in trajectory
    )
    if same:
        raise GeometryError("degenerate trajectory: all poses identical")

    yaws = []
    last = 0.0
    for pose in trajectory:
        y = _yaw_deg(pose)
        if math.isnan(y):
            y = last
        yaws.append(y)
        last = y

    segments: list[NavSegment] = []
    pending_move = 0.0
    pending_turn = 0.0
    for i in range(1, len(trajectory)):
        a, b = trajectory[i - 1].position, trajectory[i].position
        step = math.sqrt((b.x - a.x) ** 2 + (b.y - a.y) ** 2 + (b.z - a.z) ** 2)
        turn = _wrap_deg(yaws[i] - yaws[i - 1])
        pending_turn += turn
        if abs(pending_turn) >= turn_threshold_deg:
            if pending_move >= min_move_m:
                segments.append(NavSegment(kind="move_forward", distance_m=pending_move))
                pending_move = 0.0
            segments.append(NavSegment(kind="turn", angle_deg=float(round(pending_turn))))
            pending_turn = 0.0
        pending_move += step
    if pending_move > 0 and (pending_move >= min_move_m or not segments):
        segments.append(NavSegment(kind="move_forward", distance_m=pending_move))
    elif pending_move > 0 and segments:
        # fold trailing jitter into the last move so no displacement is lost
        for j in range(len(segments) - 1, -1, -1):
            if segments[j].kind == "move_forward":
                segments[j] = replace(segments[j], distance_m=segments[j].distance_m + pending_move)
                break
        else:
            segments.append(NavSegment(kind="move_forward", distance_m=pending_move))

    if gw is None:
        text = render_nav_text(segments)
    else:
        payload = json.dumps([s.to_dict() for s in segments], indent=2)
        resp = gw.complete(
            ChatRequest(model_id=model_id, messages=tuple(render_prompt("navigation", {"segments": payload})), temperature=0.7, tag="navigation")
        )
        text = resp.text.strip()
    return NavDescription(segments=tuple(segments), text=text)


# --- template baseline -----------------------------------------------------------------------

TEMPLATE_QUESTIONS = {
    "object_size_estimation": "What is the {dimension} in meters of the {a}?",
    "object_size_comparison": "Determine which is the {word}: {orlist}.",
    "object_volume_estimation": "What is the volume of the {a} in cubic meters?",
    "object_volume_comparison": "Which object has the {extreme} volume: {orlist}?",
    "object_above": "Is the {a} positioned above the {b}?",
    "object_below": "Is the {a} positioned below the {b}?",
    "object_direction_facing_simple": "If you stand at the {a} and face the {b}, is the {c} on your left or right?",
    "object_direction_facing_complex": "If you stand at the {a} and face the {b}, in which direction is the {c}: front-left, front-right, back-left, or back-right?",
    "object_absolute_distance": "What is the distance in meters between the {a} and the {b}?",
    "object_relative_distance": "Which of {orlist} is closest to the {a}?",
    "object_nearby": "Are there any objects within {radius} meters of the {a}?",
    "object_counting": "How many objects of the {category} category are in the {where}?",
    "object_distance_camera_absolute": "How far is the {a} from the camera, in meters?",
    "object_distance_camera_relative": "From the current view, which is {extreme_phrase} the camera: the {a} or the {b}?",
    "object_direction_camera_simple": "From the current view, is the {a} to the left or right of the {b}?",
    "object_direction_camera_complex": "From the current view, in which direction is the {a} relative to the {b}: front-left, front-right, back-left, or back-right?",
    "high_and_low_position": "Which is at a higher elevation, the {a} or the {b}?",
    "object_appearance_order": "In what order do {andlist} first appear in the video?",
    "object_in_frame": "Which objects are visible at frame {frame} of the video? List them by category.",
    "object_height_determination": "Whose top is the highest: {orlist}?",
    "temporal_appearance_sequence": "Considering when they first appear, what is the chronological sequence of {andlist}?",
}

_TEMPLATE_DIM_WORDS = {
    ("height", "largest"): "tallest",
    ("height", "smallest"): "shortest",
    ("length", "largest"): "longest",
    ("width", "largest"): "widest",
    ("width", "smallest"): "narrowest",
}


def _listing(names, sep_word):
    if len(names) == 2:
        return f"the {names[0]} {sep_word} the {names[1]}"
    return "the " + ", the ".join(names[:-1]) + f", {sep_word} the {names[-1]}"


def template_generate(
    scene: SceneMeta,
    task: TaskType | str,
    rng_seed: int = 0,
    nearby_radius_m: float = task_oracle.DEFAULT_NEARBY_RADIUS_M,
    question_id: str | None = None,
    max_attempts: int = 25,
) -> tuple[QuestionRecord, OracleAnswer]:
    """Rigid template question plus its oracle answer (the baseline generator)."""
    if isinstance(task, str):
        if task not in task_oracle.TASKS:
            raise UnsatisfiableTaskError(f"unknown task '{task}'")
        task = task_oracle.TASKS[task]
    if not task_oracle.task_modality_ok(task, scene.kind):
        raise UnsatisfiableTaskError(f"task '{task.name}' does not fit a {scene.kind.value} scene")
    if task.needs_camera and not scene.trajectory:
        raise UnsatisfiableTaskError(f"task '{task.name}' needs a camera pose")
    if len(scene.objects) < task.min_objects:
        raise UnsatisfiableTaskError(
            f"task '{task.name}' needs {task.min_objects} objects, scene has {len(scene.objects)}"
        )
    if task.name not in TEMPLATE_QUESTIONS:
        raise UnsatisfiableTaskError(f"no template for task '{task.name}'")

    digest = hashlib.sha256(f"{rng_seed}:{scene.scene_id}:{task.name}".encode()).digest()
    rng = random.Random(int.from_bytes(digest[:8], "big"))
    ids = [o.id for o in scene.objects]
    by_category = scene.categories()

    for _ in range(max_attempts):
        params: dict = {}
        n = task.min_objects
        if task.max_objects is None or task.max_objects > task.min_objects:
            n = rng.randint(task.min_objects, min(len(ids), task.min_objects + 1))
        if task.name == "object_counting":
            category = rng.choice(sorted(by_category))
            chosen = [by_category[category][0]]
            params["category"] = category
        elif task.name == "object_in_frame":
            obj = rng.choice([o for o in scene.objects if o.appear] or list(scene.objects))
            if not obj.appear:
                raise UnsatisfiableTaskError("object_in_frame needs appearance data")
            chosen = [obj.id]
            params["frame"] = obj.appear[0]
        else:
            if n > len(ids):
                raise UnsatisfiableTaskError(f"task '{task.name}' needs {n} objects")
            chosen = rng.sample(ids, n)
        if task.name == "object_size_estimation":
            params["dimension"] = rng.choice(("height", "length", "width"))
        if task.name == "object_size_comparison":
            params["dimension"], params["extreme"] = rng.choice(list(_TEMPLATE_DIM_WORDS))
        if task.name in ("object_volume_comparison",):
            params["extreme"] = rng.choice(("largest", "smallest"))
        if task.name == "object_distance_camera_relative":
            params["extreme"] = rng.choice(("closer", "farther"))
        if task.name == "object_nearby":
            params["radius"] = nearby_radius_m

        try:
            result = task_oracle.answer(task, scene, chosen, params)
        except (OracleError, GeometryError):
            continue
        if result.ambiguous:
            continue

        fills = {
            "a": chosen[0] if chosen else "",
            "b": chosen[1] if len(chosen) > 1 else "",
            "c": chosen[2] if len(chosen) > 2 else "",
            "orlist": _listing(chosen[1:] if task.name == "object_relative_distance" else chosen, "or"),
            "andlist": _listing(chosen, "and"),
            "dimension": params.get("dimension", "height"),
            "extreme": params.get("extreme", "largest"),
            "extreme_phrase": "closer to" if params.get("extreme", "closer") == "closer" else "farther from",
            "word": _TEMPLATE_DIM_WORDS.get((params.get("dimension", "height"), params.get("extreme", "largest")), "tallest"),
            "category": params.get("category", ""),
            "radius": fmt_trim(params.get("radius", nearby_radius_m)),
            "frame": params.get("frame", 0),
            "where": {"video": "video", "single_image": "image", "multi_image": "images"}[scene.kind.value],
        }
        instruction = TEMPLATE_QUESTIONS[task.name].format(**fills)
        record = QuestionRecord(
            question_id=question_id or f"{scene.scene_id}:t:{task.name}",
            instruction=instruction,
            objects=tuple(chosen),
            objects_category=tuple(scene.object_by_id(o).category for o in chosen),
            category=task.name,
            scene_id=scene.scene_id,
            media=tuple(scene.media),
            provenance="template",
            params=params,
        )
        return record, result
    raise UnsatisfiableTaskError(f"no non-ambiguous instance of '{task.name}' found in scene '{scene.scene_id}'")
