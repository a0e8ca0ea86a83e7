"""Deterministic ground truth for every supported spatial task type.

Each task dispatches to the geometry module and renders a stable English
answer. Measurement answers use two fixed decimals ("6.00 cubic meters");
comparative phrasings quote values with insignificant zeros trimmed ("with a
height of 2.4 meters"). Ambiguous geometry (near-ties, near-boundary
directions) yields an answer flagged ambiguous so quality control can drop
the question instead of asserting a noisy label.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Sequence

from . import geometry
from .geometry import ELEVATION_TOL_M, GeometryError
from .scene_model import CameraPose, ObjectRecord, SceneKind, SceneMeta
from .textfmt import fmt_fixed, fmt_trim, join_names, meters

EXACT_TIE_TOL = 1e-9
DEFAULT_NEARBY_RADIUS_M = 5.0


class Modality(str, Enum):
    IMAGE = "image"
    VIDEO = "video"
    BOTH = "both"


class OracleError(ValueError):
    pass


class UnknownObjectError(OracleError):
    def __init__(self, object_id: str):
        super().__init__(f"object '{object_id}' is absent from the scene metadata")
        self.object_id = object_id


class UnknownTaskError(OracleError):
    pass


class ModalityMismatchError(OracleError):
    pass


class ArityError(OracleError):
    pass


class MissingCameraError(OracleError):
    pass


@dataclass(frozen=True)
class TaskType:
    name: str
    modality: Modality
    min_objects: int = 1
    max_objects: int | None = None
    needs_camera: bool = False


@dataclass(frozen=True)
class OracleAnswer:
    text: str
    value: float | int | None = None
    selected_ids: tuple[str, ...] | None = None
    ambiguous: bool = False


_AMBIGUOUS = OracleAnswer(text="", ambiguous=True)

Handler = Callable[[SceneMeta, list[ObjectRecord], dict], OracleAnswer]

TASKS: dict[str, TaskType] = {}
_HANDLERS: dict[str, Handler] = {}

# Enumeration order matters: supported_tasks() reports these lists verbatim.
IMAGE_TASK_NAMES = (
    "object_size_estimation",
    "object_size_comparison",
    "object_volume_estimation",
    "object_volume_comparison",
    "object_below",
    "object_above",
    "object_direction_facing_complex",
    "object_direction_facing_simple",
    "object_absolute_distance",
    "object_relative_distance",
    "object_nearby",
    "object_counting",
    "object_distance_camera_relative",
    "object_distance_camera_absolute",
    "object_direction_camera_complex",
    "object_direction_camera_simple",
    "high_and_low_position",
)
VIDEO_TASK_NAMES = (
    "object_appearance_order",
    "object_absolute_distance",
    "object_counting",
    "object_relative_distance",
    "object_size_estimation",
    "object_direction_facing_complex",
    "object_direction_facing_simple",
    "object_volume_comparison",
    "object_in_frame",
    "object_volume_estimation",
    "object_height_determination",
    "temporal_appearance_sequence",
    "object_nearby",
    "object_below",
    "object_above",
    "high_and_low_position",
)


def register_task(task: TaskType, handler: Handler) -> None:
    """Register a task type (also the extension hook for custom tasks)."""
    TASKS[task.name] = task
    _HANDLERS[task.name] = handler


def _task(name: str, modality: Modality, min_objects: int = 1, max_objects: int | None = None, needs_camera: bool = False):
    def deco(fn: Handler) -> Handler:
        register_task(TaskType(name, modality, min_objects, max_objects, needs_camera), fn)
        return fn

    return deco


def supported_tasks(scene_kind: SceneKind | str) -> list[TaskType]:
    if isinstance(scene_kind, str):
        try:
            scene_kind = SceneKind(scene_kind)
        except ValueError:
            raise OracleError(f"unknown scene kind {scene_kind!r}") from None
    names = VIDEO_TASK_NAMES if scene_kind is SceneKind.VIDEO else IMAGE_TASK_NAMES
    return [TASKS[n] for n in names]


def task_modality_ok(task: TaskType, kind: SceneKind) -> bool:
    if task.modality is Modality.BOTH:
        return True
    if kind is SceneKind.VIDEO:
        return task.modality is Modality.VIDEO
    return task.modality is Modality.IMAGE


def scene_camera(scene: SceneMeta, params: Mapping) -> CameraPose | None:
    return scene.camera_at(int(params.get("view_index", 0)))


def answer(
    task: TaskType | str,
    scene: SceneMeta,
    objects: Sequence[str],
    params: Mapping | None = None,
) -> OracleAnswer:
    """Ground truth for one question; raises OracleError subtypes on bad input."""
    if isinstance(task, str):
        if task not in TASKS:
            raise UnknownTaskError(f"unknown task type '{task}'")
        task = TASKS[task]
    elif task.name not in TASKS:
        raise UnknownTaskError(f"unregistered task type '{task.name}'")
    params = dict(params or {})

    if not task_modality_ok(task, scene.kind):
        raise ModalityMismatchError(f"task '{task.name}' does not apply to {scene.kind.value} scenes")
    for oid in objects:
        if not scene.has_object(oid):
            raise UnknownObjectError(oid)
    if len(objects) < task.min_objects:
        raise ArityError(f"task '{task.name}' needs at least {task.min_objects} objects, got {len(objects)}")
    if task.max_objects is not None and len(objects) > task.max_objects:
        raise ArityError(f"task '{task.name}' takes at most {task.max_objects} objects, got {len(objects)}")
    if task.needs_camera and scene_camera(scene, params) is None:
        raise MissingCameraError(f"task '{task.name}' needs a camera pose and the scene has none")

    objs = [scene.object_by_id(oid) for oid in objects]
    return _HANDLERS[task.name](scene, objs, params)


# --- dimension/extreme vocabulary ---------------------------------------------------------

_DIM_WORDS = {
    ("height", "largest"): "tallest",
    ("height", "smallest"): "shortest",
    ("length", "largest"): "longest",
    ("length", "smallest"): "shortest",
    ("width", "largest"): "widest",
    ("width", "smallest"): "narrowest",
}


def _extent_value(obj: ObjectRecord, dimension: str) -> float:
    ext = geometry.world_extents(obj.obb)
    try:
        return getattr(ext, dimension)
    except AttributeError:
        raise ArityError(f"unknown dimension '{dimension}'") from None


def _pick_extreme(values: list[float], largest: bool) -> tuple[int, bool]:
    """Index of the extreme value and whether the pick is an exact-tie."""
    best = max(range(len(values)), key=lambda i: (values[i], -i)) if largest else min(
        range(len(values)), key=lambda i: (values[i], i)
    )
    ranked = sorted(values, reverse=largest)
    tie = len(values) > 1 and abs(ranked[0] - ranked[1]) < EXACT_TIE_TOL
    return best, tie


# --- size and volume ----------------------------------------------------------------------


@_task("object_size_estimation", Modality.BOTH, 1, 1)
def _size_estimation(scene, objs, params):
    dim = params.get("dimension", "height")
    v = _extent_value(objs[0], dim)
    return OracleAnswer(
        text=f"The {dim} of the {objs[0].id} is {fmt_fixed(v)} meters.",
        value=v,
        selected_ids=(objs[0].id,),
    )


@_task("object_size_comparison", Modality.IMAGE, 2)
def _size_comparison(scene, objs, params):
    dim = params.get("dimension", "height")
    largest = params.get("extreme", "largest") == "largest"
    values = [_extent_value(o, dim) for o in objs]
    idx, tie = _pick_extreme(values, largest)
    if tie:
        return _AMBIGUOUS
    word = _DIM_WORDS.get((dim, "largest" if largest else "smallest"), "largest" if largest else "smallest")
    winner = objs[idx]
    v = fmt_trim(values[idx])
    return OracleAnswer(
        text=(
            f"The {word} object among {join_names([o.id for o in objs])} is the {winner.id}, "
            f"with a {dim} of {v} {meters(v)}."
        ),
        value=values[idx],
        selected_ids=(winner.id,),
    )


@_task("object_volume_estimation", Modality.BOTH, 1, 1)
def _volume_estimation(scene, objs, params):
    v = objs[0].obb.volume
    return OracleAnswer(
        text=f"The volume of the {objs[0].id} is {fmt_fixed(v)} cubic meters.",
        value=v,
        selected_ids=(objs[0].id,),
    )


@_task("object_volume_comparison", Modality.BOTH, 2)
def _volume_comparison(scene, objs, params):
    largest = params.get("extreme", "largest") == "largest"
    values = [o.obb.volume for o in objs]
    idx, tie = _pick_extreme(values, largest)
    if tie:
        return _AMBIGUOUS
    winner = objs[idx]
    word = "largest" if largest else "smallest"
    return OracleAnswer(
        text=(
            f"The {word} object by volume among {join_names([o.id for o in objs])} is the {winner.id}, "
            f"with a volume of {fmt_trim(values[idx])} cubic meters."
        ),
        value=values[idx],
        selected_ids=(winner.id,),
    )


# --- vertical relations -------------------------------------------------------------------


@_task("object_above", Modality.BOTH, 2, 2)
def _above(scene, objs, params):
    a, b = objs
    rel = geometry.vertical_relation(a.obb, b.obb, params.get("elevation_tol_m", ELEVATION_TOL_M))
    yes = rel is geometry.VerticalRelation.A_ABOVE_B
    text = f"Yes, the {a.id} is above the {b.id}." if yes else f"No, the {a.id} is not above the {b.id}."
    return OracleAnswer(text=text, selected_ids=(a.id,) if yes else ())


@_task("object_below", Modality.BOTH, 2, 2)
def _below(scene, objs, params):
    a, b = objs
    rel = geometry.vertical_relation(a.obb, b.obb, params.get("elevation_tol_m", ELEVATION_TOL_M))
    yes = rel is geometry.VerticalRelation.B_ABOVE_A
    text = f"Yes, the {a.id} is below the {b.id}." if yes else f"No, the {a.id} is not below the {b.id}."
    return OracleAnswer(text=text, selected_ids=(a.id,) if yes else ())


@_task("high_and_low_position", Modality.BOTH, 2)
def _high_low(scene, objs, params):
    order, ambiguous = geometry.elevation_order(
        [o.obb for o in objs], params.get("elevation_tol_m", ELEVATION_TOL_M)
    )
    if ambiguous:
        return _AMBIGUOUS
    winner = objs[order[0]]
    if len(objs) == 2:
        loser = objs[order[1]]
        text = f"The {winner.id} is at a higher elevation than the {loser.id}."
    else:
        text = f"The {winner.id} is at the highest elevation among {join_names([o.id for o in objs])}."
    return OracleAnswer(text=text, selected_ids=(winner.id,))


@_task("object_height_determination", Modality.VIDEO, 2)
def _height_determination(scene, objs, params):
    tops = [geometry.top_elevation(o.obb) for o in objs]
    idx, _ = _pick_extreme(tops, largest=True)
    ranked = sorted(tops, reverse=True)
    if len(tops) > 1 and ranked[0] - ranked[1] < params.get("elevation_tol_m", ELEVATION_TOL_M):
        return _AMBIGUOUS
    winner = objs[idx]
    v = fmt_trim(tops[idx])
    return OracleAnswer(
        text=f"The {winner.id} is the highest, with its top at {v} {meters(v)}.",
        value=tops[idx],
        selected_ids=(winner.id,),
    )


# --- observer-relative directions ---------------------------------------------------------


def _facing(scene, objs, params, mode):
    anchor, target, query = objs
    try:
        res = geometry.facing_direction(
            anchor.obb, target.obb, query.obb, mode=mode, tol_deg=params.get("direction_tol_deg", geometry.DIRECTION_TOL_DEG)
        )
    except GeometryError:
        raise
    if res is None:
        return _AMBIGUOUS
    joiner = "on the" if mode == "simple" else "to the"
    return OracleAnswer(
        text=f"From the {anchor.id} facing the {target.id}, the {query.id} is {joiner} {res.label.phrase}.",
        selected_ids=(query.id,),
    )


@_task("object_direction_facing_simple", Modality.BOTH, 3, 3)
def _facing_simple(scene, objs, params):
    return _facing(scene, objs, params, "simple")


@_task("object_direction_facing_complex", Modality.BOTH, 3, 3)
def _facing_complex(scene, objs, params):
    return _facing(scene, objs, params, "complex")


# --- distances ----------------------------------------------------------------------------


@_task("object_absolute_distance", Modality.BOTH, 2, 2)
def _absolute_distance(scene, objs, params):
    a, b = objs
    d = geometry.center_distance(a.obb, b.obb)
    return OracleAnswer(
        text=f"The distance between the {a.id} and the {b.id} is {fmt_fixed(d)} meters.",
        value=d,
    )


@_task("object_relative_distance", Modality.BOTH, 3)
def _relative_distance(scene, objs, params):
    target, candidates = objs[0], objs[1:]
    dists = [geometry.center_distance(target.obb, c.obb) for c in candidates]
    idx, tie = _pick_extreme(dists, largest=False)
    if tie:
        return _AMBIGUOUS
    winner = candidates[idx]
    return OracleAnswer(
        text=f"The {winner.id} is closest to the {target.id}.",
        value=dists[idx],
        selected_ids=(winner.id,),
    )


@_task("object_nearby", Modality.BOTH, 1, 1)
def _nearby(scene, objs, params):
    target = objs[0]
    radius = float(params.get("radius", DEFAULT_NEARBY_RADIUS_M))
    others = [o for o in scene.objects if o.id != target.id]
    within = [(geometry.center_distance(target.obb, o.obb), o) for o in others]
    within = [(d, o) for d, o in within if d <= radius]
    if params.get("front") and scene.kind.is_image:
        cam = scene_camera(scene, params)
        if cam is not None:
            t_depth = -geometry.camera_frame_position(target.obb.center.as_array(), cam)[2]
            within = [
                (d, o)
                for d, o in within
                if -geometry.camera_frame_position(o.obb.center.as_array(), cam)[2] < t_depth
            ]
    within.sort(key=lambda pair: (pair[0], pair[1].id))
    r = fmt_trim(radius)
    if not within:
        return OracleAnswer(
            text=f"No, there are no objects within {r} {meters(r)} of the {target.id}.",
            value=0,
            selected_ids=(),
        )
    ids = [o.id for _, o in within]
    return OracleAnswer(
        text=f"Yes, {join_names(ids)} {'is' if len(ids) == 1 else 'are'} within {r} {meters(r)} of the {target.id}.",
        value=len(ids),
        selected_ids=tuple(ids),
    )


# --- category counting and frame membership -----------------------------------------------


def _is_visible(obj: ObjectRecord, frame: int | None) -> bool:
    # Objects without appearance data count as present everywhere.
    if frame is None or not obj.appear:
        return True
    return frame in obj.appear


@_task("object_counting", Modality.BOTH, 0)
def _counting(scene, objs, params):
    category = params.get("category") or (objs[0].category if objs else None)
    if not category:
        raise ArityError("counting needs a target category")
    frame = params.get("frame")
    if frame is None and scene.kind is SceneKind.SINGLE_IMAGE:
        frame = 0
    matched = [o for o in scene.objects if o.category == category and _is_visible(o, frame)]
    n = len(matched)
    where = {"video": "video", "single_image": "image", "multi_image": "images"}[scene.kind.value]
    verb = "is" if n == 1 else "are"
    return OracleAnswer(
        text=f"There {verb} {n} {'object' if n == 1 else 'objects'} of the {category} category in the {where}.",
        value=n,
        selected_ids=tuple(o.id for o in matched),
    )


@_task("object_in_frame", Modality.VIDEO, 0)
def _in_frame(scene, objs, params):
    if "frame" not in params:
        raise ArityError("object_in_frame needs a frame parameter")
    frame = int(params["frame"])
    visible = [o for o in scene.objects if frame in o.appear]
    if not visible:
        return OracleAnswer(text="No objects are visible at that moment.", value=0, selected_ids=())
    by_cat: dict[str, list[str]] = {}
    for o in visible:
        by_cat.setdefault(o.category, []).append(o.id)
    parts = [f"{cat}: {', '.join(sorted(ids))}" for cat, ids in sorted(by_cat.items())]
    return OracleAnswer(
        text="At that moment, the visible objects are " + "; ".join(parts) + ".",
        value=len(visible),
        selected_ids=tuple(sorted(o.id for o in visible)),
    )


# --- temporal ordering --------------------------------------------------------------------


def _first_appearance_order(objs: list[ObjectRecord]) -> tuple[list[ObjectRecord], bool] | None:
    if any(not o.appear for o in objs):
        return None
    firsts = [o.appear[0] for o in objs]
    if len(set(firsts)) != len(firsts):
        return None
    order = sorted(objs, key=lambda o: o.appear[0])
    return order, False


@_task("object_appearance_order", Modality.VIDEO, 2)
def _appearance_order(scene, objs, params):
    ordered = _first_appearance_order(objs)
    if ordered is None:
        return _AMBIGUOUS
    names = [o.id for o in ordered[0]]
    return OracleAnswer(
        text="The order of appearance is: " + ", ".join(names) + ".",
        selected_ids=tuple(names),
    )


@_task("temporal_appearance_sequence", Modality.VIDEO, 2)
def _temporal_sequence(scene, objs, params):
    ordered = _first_appearance_order(objs)
    if ordered is None:
        return _AMBIGUOUS
    names = [o.id for o in ordered[0]]
    return OracleAnswer(
        text="In chronological order of first appearance: " + ", ".join(names) + ".",
        selected_ids=tuple(names),
    )


# --- camera-relative tasks ----------------------------------------------------------------


@_task("object_distance_camera_absolute", Modality.IMAGE, 1, 1, needs_camera=True)
def _camera_abs(scene, objs, params):
    cam = scene_camera(scene, params)
    d = geometry.camera_distance(objs[0].obb, cam)
    return OracleAnswer(
        text=f"The {objs[0].id} is {fmt_fixed(d)} meters from the camera.",
        value=d,
    )


@_task("object_distance_camera_relative", Modality.IMAGE, 2, 2, needs_camera=True)
def _camera_rel(scene, objs, params):
    cam = scene_camera(scene, params)
    closer = params.get("extreme", "closer") == "closer"
    dists = [geometry.camera_distance(o.obb, cam) for o in objs]
    if abs(dists[0] - dists[1]) < params.get("elevation_tol_m", ELEVATION_TOL_M):
        return _AMBIGUOUS
    idx = dists.index(min(dists)) if closer else dists.index(max(dists))
    winner = objs[idx]
    phrase = "closer to" if closer else "farther from"
    return OracleAnswer(
        text=f"The {winner.id} is {phrase} the camera.",
        value=dists[idx],
        selected_ids=(winner.id,),
    )


def _camera_dir(scene, objs, params, mode):
    cam = scene_camera(scene, params)
    a, b = objs
    res = geometry.camera_direction(
        a.obb,
        b.obb,
        cam,
        mode=mode,
        tol_deg=params.get("direction_tol_deg", geometry.DIRECTION_TOL_DEG),
        depth_tol_m=params.get("elevation_tol_m", ELEVATION_TOL_M),
        forward=params.get("camera_forward", "-z"),
    )
    if res is None:
        return _AMBIGUOUS
    return OracleAnswer(
        text=f"From the current view, the {a.id} is to the {res.label.phrase} of the {b.id}.",
        selected_ids=(a.id,),
    )


@_task("object_direction_camera_simple", Modality.IMAGE, 2, 2, needs_camera=True)
def _camera_dir_simple(scene, objs, params):
    return _camera_dir(scene, objs, params, "simple")


@_task("object_direction_camera_complex", Modality.IMAGE, 2, 2, needs_camera=True)
def _camera_dir_complex(scene, objs, params):
    return _camera_dir(scene, objs, params, "complex")
