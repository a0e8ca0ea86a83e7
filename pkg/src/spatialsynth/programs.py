"""Builders for self-contained answer programs (entry function `func`).

Each builder emits Python source that recomputes one question's answer from the
`metadata` list (and `camera_position` for image scenes), using only math and
container builtins so it runs inside the restricted execution namespace. The
emitted logic and phrasing mirror the task oracle, so these programs double as:

  * the hand-written code behind the template question baseline,
  * the few-shot `reference_code` shown to the code-generation model,
  * the deterministic output of the offline mock code model.

Camera-frame tasks inline the capture orientation as a constant: the code
prompt only passes camera_position at call time, so orientation must travel
with the program.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from .scene_model import CameraPose, SceneKind

VARIANT_NOTES = (
    "recompute directly from the metadata list",
    "resolve objects first, then derive the quantities",
    "defensive lookup with explicit intermediate values",
)

_HELPERS = {
    "fmt": '''\
def _fmt(v):
    s = "%.2f" % v
    return "0.00" if s == "-0.00" else s
''',
    "fmtt": '''\
def _fmtt(v):
    s = "%.2f" % v
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    if s in ("", "-0"):
        s = "0"
    return s
''',
    "meters": '''\
def _meters(s):
    return "meter" if s == "1" else "meters"
''',
    "join": '''\
def _join(names):
    if len(names) == 1:
        return "the " + names[0]
    if len(names) == 2:
        return "the " + names[0] + " and " + names[1]
    return "the " + ", ".join(names[:-1]) + ", and " + names[-1]
''',
    "get": '''\
def _get(metadata, name):
    for entry in metadata:
        if entry["id"] == name:
            return entry
    raise KeyError(name)
''',
    "extents": '''\
def _extents(obb):
    w, x, y, z = obb["rotation"]
    ys = [abs(2.0 * (x * y + w * z)), abs(1.0 - 2.0 * (x * x + z * z)), abs(2.0 * (y * z - w * x))]
    vert = ys.index(max(ys))
    sizes = obb["sizes"]
    rest = [sizes[i] for i in range(3) if i != vert]
    return {"height": sizes[vert], "length": max(rest), "width": min(rest)}
''',
    "dist": '''\
def _dist(a, b):
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)
''',
    "bounds": '''\
def _ground_bounds(obb):
    w, x, y, z = obb["rotation"]
    r0 = [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)]
    r2 = [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)]
    c = obb["center"]
    h = obb["half_extent"]
    rx = abs(r0[0]) * h[0] + abs(r0[1]) * h[1] + abs(r0[2]) * h[2]
    rz = abs(r2[0]) * h[0] + abs(r2[1]) * h[1] + abs(r2[2]) * h[2]
    return (c[0] - rx, c[0] + rx, c[2] - rz, c[2] + rz)
''',
    "stacked": '''\
def _stacked(a, b, tol):
    dy = a["obb"]["center"][1] - b["obb"]["center"][1]
    if abs(dy) <= tol:
        return 0
    fa = _ground_bounds(a["obb"])
    fb = _ground_bounds(b["obb"])
    if not (fa[0] <= fb[1] and fb[0] <= fa[1] and fa[2] <= fb[3] and fb[2] <= fa[3]):
        return 0
    return 1 if dy > 0 else -1
''',
    "cam_frame": '''\
def _cam_frame(p, cam_pos, q):
    w, x, y, z = q
    r = [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
    d = [p[0] - cam_pos[0], p[1] - cam_pos[1], p[2] - cam_pos[2]]
    return [r[0][i] * d[0] + r[1][i] * d[1] + r[2][i] * d[2] for i in range(3)]
''',
}

_DIM_WORDS = {
    ("height", "largest"): "tallest",
    ("height", "smallest"): "shortest",
    ("length", "largest"): "longest",
    ("length", "smallest"): "shortest",
    ("width", "largest"): "widest",
    ("width", "smallest"): "narrowest",
}


class ProgramBuildError(ValueError):
    pass


def _lit(value) -> str:
    return repr(value)


def _quat_literal(pose: CameraPose) -> str:
    q = pose.rotation
    return f"({q.w!r}, {q.x!r}, {q.y!r}, {q.z!r})"


def _body(task: str, ids: Sequence[str], params: Mapping, kind: SceneKind, camera_pose: CameraPose | None):
    """(helper names, body lines) for one task; raises for unsupported tasks."""
    image = kind is not SceneKind.VIDEO
    dim = params.get("dimension", "height")
    extreme = params.get("extreme", "largest")
    tol = float(params.get("elevation_tol_m", 0.05))

    if task == "object_size_estimation":
        return ["get", "extents", "fmt"], [
            f"name = {_lit(ids[0])}",
            f"dim = {_lit(dim)}",
            "v = _extents(_get(metadata, name)['obb'])[dim]",
            'return "The %s of the %s is %s meters." % (dim, name, _fmt(v))',
        ]
    if task == "object_size_comparison":
        word = _DIM_WORDS[(dim, extreme)]
        pick = "max" if extreme == "largest" else "min"
        return ["get", "extents", "fmtt", "meters", "join"], [
            f"names = {_lit(list(ids))}",
            f"dim = {_lit(dim)}",
            "vals = [_extents(_get(metadata, n)['obb'])[dim] for n in names]",
            f"best = vals.index({pick}(vals))",
            "v = _fmtt(vals[best])",
            f'return "The %s object among %s is the %s, with a %s of %s %s." % ({_lit(word)}, _join(names), names[best], dim, v, _meters(v))',
        ]
    if task == "object_volume_estimation":
        return ["get", "fmt"], [
            f"name = {_lit(ids[0])}",
            "v = _get(metadata, name)['obb']['volume']",
            'return "The volume of the %s is %s cubic meters." % (name, _fmt(v))',
        ]
    if task == "object_volume_comparison":
        pick = "max" if extreme == "largest" else "min"
        return ["get", "fmtt", "join"], [
            f"names = {_lit(list(ids))}",
            "vals = [_get(metadata, n)['obb']['volume'] for n in names]",
            f"best = vals.index({pick}(vals))",
            f'return "The %s object by volume among %s is the %s, with a volume of %s cubic meters." % ({_lit(extreme)}, _join(names), names[best], _fmtt(vals[best]))',
        ]
    if task in ("object_above", "object_below"):
        want = 1 if task == "object_above" else -1
        rel_word = "above" if task == "object_above" else "below"
        return ["get", "bounds", "stacked"], [
            f"a = {_lit(ids[0])}",
            f"b = {_lit(ids[1])}",
            f"rel = _stacked(_get(metadata, a), _get(metadata, b), {tol!r})",
            f"if rel == {want}:",
            f'    return "Yes, the %s is {rel_word} the %s." % (a, b)',
            f'return "No, the %s is not {rel_word} the %s." % (a, b)',
        ]
    if task == "high_and_low_position":
        lines = [
            f"names = {_lit(list(ids))}",
            "ys = [_get(metadata, n)['obb']['center'][1] for n in names]",
            "best = ys.index(max(ys))",
        ]
        if len(ids) == 2:
            lines += [
                "other = names[1 - best]",
                'return "The %s is at a higher elevation than the %s." % (names[best], other)',
            ]
            return ["get"], lines
        lines.append('return "The %s is at the highest elevation among %s." % (names[best], _join(names))')
        return ["get", "join"], lines
    if task == "object_height_determination":
        return ["get", "extents", "fmtt", "meters"], [
            f"names = {_lit(list(ids))}",
            "tops = []",
            "for n in names:",
            "    entry = _get(metadata, n)",
            "    tops.append(entry['obb']['center'][1] + _extents(entry['obb'])['height'] / 2.0)",
            "best = tops.index(max(tops))",
            "v = _fmtt(tops[best])",
            'return "The %s is the highest, with its top at %s %s." % (names[best], v, _meters(v))',
        ]
    if task in ("object_direction_facing_simple", "object_direction_facing_complex"):
        lines = [
            f"anchor, target, query = {_lit(ids[0])}, {_lit(ids[1])}, {_lit(ids[2])}",
            "a = _get(metadata, anchor)['obb']['center']",
            "t = _get(metadata, target)['obb']['center']",
            "q = _get(metadata, query)['obb']['center']",
            "fx, fz = t[0] - a[0], t[2] - a[2]",
            "dx, dz = q[0] - a[0], q[2] - a[2]",
            "lat = fz * dx - fx * dz",
        ]
        if task.endswith("simple"):
            lines += [
                'side = "left" if lat > 0 else "right"',
                'return "From the %s facing the %s, the %s is on the %s." % (anchor, target, query, side)',
            ]
        else:
            lines += [
                "lon = fx * dx + fz * dz",
                "if lon > 0:",
                '    label = "front-left" if lat > 0 else "front-right"',
                "else:",
                '    label = "back-left" if lat > 0 else "back-right"',
                'return "From the %s facing the %s, the %s is to the %s." % (anchor, target, query, label)',
            ]
        return ["get"], lines
    if task == "object_absolute_distance":
        return ["get", "dist", "fmt"], [
            f"a = {_lit(ids[0])}",
            f"b = {_lit(ids[1])}",
            "d = _dist(_get(metadata, a)['obb']['center'], _get(metadata, b)['obb']['center'])",
            'return "The distance between the %s and the %s is %s meters." % (a, b, _fmt(d))',
        ]
    if task == "object_relative_distance":
        return ["get", "dist"], [
            f"target = {_lit(ids[0])}",
            f"candidates = {_lit(list(ids[1:]))}",
            "t = _get(metadata, target)['obb']['center']",
            "ds = [_dist(_get(metadata, c)['obb']['center'], t) for c in candidates]",
            "best = ds.index(min(ds))",
            'return "The %s is closest to the %s." % (candidates[best], target)',
        ]
    if task == "object_nearby":
        radius = float(params.get("radius", 5.0))
        lines = [
            f"target = {_lit(ids[0])}",
            f"radius = {radius!r}",
            "t = _get(metadata, target)['obb']['center']",
            "found = []",
            "for entry in metadata:",
            "    if entry['id'] == target:",
            "        continue",
            "    d = _dist(entry['obb']['center'], t)",
            "    if d <= radius:",
            "        found.append((d, entry['id']))",
        ]
        helpers = ["get", "dist", "fmtt", "meters", "join"]
        if params.get("front") and image and camera_pose is not None:
            helpers.append("cam_frame")
            lines += [
                f"cam_rot = {_quat_literal(camera_pose)}  # capture orientation for this view",
                "t_depth = -_cam_frame(t, camera_position, cam_rot)[2]",
                "found = [(d, n) for d, n in found if -_cam_frame(_get(metadata, n)['obb']['center'], camera_position, cam_rot)[2] < t_depth]",
            ]
        lines += [
            "found.sort()",
            "r = _fmtt(radius)",
            "if not found:",
            '    return "No, there are no objects within %s %s of the %s." % (r, _meters(r), target)',
            "names = [n for _, n in found]",
            'verb = "is" if len(names) == 1 else "are"',
            'return "Yes, %s %s within %s %s of the %s." % (_join(names), verb, r, _meters(r), target)',
        ]
        return helpers, lines
    if task == "object_counting":
        category = params.get("category")
        if not category:
            raise ProgramBuildError("counting needs a category parameter")
        frame = params.get("frame")
        if frame is None and kind is SceneKind.SINGLE_IMAGE:
            frame = 0
        where = {"video": "video", "single_image": "image", "multi_image": "images"}[kind.value]
        return [], [
            f"category = {_lit(category)}",
            f"frame = {_lit(frame)}",
            "n = 0",
            "for entry in metadata:",
            "    if entry.get('category') != category:",
            "        continue",
            "    app = entry.get('appear') or []",
            "    if frame is not None and app and frame not in app:",
            "        continue",
            "    n += 1",
            'verb = "is" if n == 1 else "are"',
            'noun = "object" if n == 1 else "objects"',
            f'return "There %s %d %s of the %s category in the {where}." % (verb, n, noun, category)',
        ]
    if task == "object_in_frame":
        frame = int(params["frame"])
        return [], [
            f"frame = {frame}",
            "by_cat = {}",
            "for entry in metadata:",
            "    app = entry.get('appear') or []",
            "    if frame in app:",
            "        by_cat.setdefault(entry.get('category'), []).append(entry['id'])",
            "if not by_cat:",
            '    return "No objects are visible at that moment."',
            "parts = []",
            "for cat in sorted(by_cat):",
            "    parts.append('%s: %s' % (cat, ', '.join(sorted(by_cat[cat]))))",
            'return "At that moment, the visible objects are " + "; ".join(parts) + "."',
        ]
    if task in ("object_appearance_order", "temporal_appearance_sequence"):
        prefix = (
            "The order of appearance is: "
            if task == "object_appearance_order"
            else "In chronological order of first appearance: "
        )
        return ["get"], [
            f"names = {_lit(list(ids))}",
            "pairs = sorted((min(_get(metadata, n).get('appear') or []), i, n) for i, n in enumerate(names))",
            "ordered = [p[2] for p in pairs]",
            f'return {_lit(prefix)} + ", ".join(ordered) + "."',
        ]
    if task == "object_distance_camera_absolute":
        return ["get", "dist", "fmt"], [
            f"name = {_lit(ids[0])}",
            "d = _dist(_get(metadata, name)['obb']['center'], camera_position)",
            'return "The %s is %s meters from the camera." % (name, _fmt(d))',
        ]
    if task == "object_distance_camera_relative":
        closer = params.get("extreme", "closer") == "closer"
        pick = "min" if closer else "max"
        phrase = "closer to" if closer else "farther from"
        return ["get", "dist"], [
            f"names = {_lit(list(ids))}",
            "ds = [_dist(_get(metadata, n)['obb']['center'], camera_position) for n in names]",
            f"best = ds.index({pick}(ds))",
            f'return "The %s is {phrase} the camera." % names[best]',
        ]
    if task in ("object_direction_camera_simple", "object_direction_camera_complex"):
        if camera_pose is None:
            raise ProgramBuildError(f"{task} needs the capture camera pose")
        lines = [
            f"names = {_lit(list(ids))}",
            f"cam_rot = {_quat_literal(camera_pose)}  # capture orientation for this view",
            "pa = _cam_frame(_get(metadata, names[0])['obb']['center'], camera_position, cam_rot)",
            "pb = _cam_frame(_get(metadata, names[1])['obb']['center'], camera_position, cam_rot)",
            "lat = pa[0] - pb[0]",
        ]
        if task.endswith("simple"):
            lines += ['label = "left" if lat < 0 else "right"']
        else:
            lines += [
                "fwd = pa[2] - pb[2]",
                "if fwd > 0:",
                '    label = "front-left" if lat < 0 else "front-right"',
                "else:",
                '    label = "back-left" if lat < 0 else "back-right"',
            ]
        lines.append('return "From the current view, the %s is to the %s of the %s." % (names[0], label, names[1])')
        return ["get", "cam_frame"], lines
    raise ProgramBuildError(f"no program builder for task '{task}'")


def build_program(
    task: str,
    object_ids: Sequence[str],
    params: Mapping | None = None,
    *,
    scene_kind: SceneKind | str = SceneKind.VIDEO,
    camera_pose: CameraPose | None = None,
    variant: int = 0,
) -> str:
    """Source text of one answer program for the given question."""
    kind = SceneKind(scene_kind) if isinstance(scene_kind, str) else scene_kind
    helpers, body = _body(task, list(object_ids), dict(params or {}), kind, camera_pose)
    note = VARIANT_NOTES[variant % len(VARIANT_NOTES)]
    signature = "def func(metadata, camera_position):" if kind.is_image else "def func(metadata):"

    chunks = [f"# approach {variant % len(VARIANT_NOTES)}: {note}", "import math", ""]
    seen = set()
    for name in helpers:
        if name not in seen:
            seen.add(name)
            chunks.append(_HELPERS[name].rstrip("\n"))
            chunks.append("")
    chunks.append(signature)
    chunks.extend("    " + line for line in body)
    return "\n".join(chunks) + "\n"


def reference_snippet(scene_kind: SceneKind | str, variant: int = 0) -> str:
    """A few-shot example program shown to the code model (generic objects)."""
    kind = SceneKind(scene_kind) if isinstance(scene_kind, str) else scene_kind
    examples = [
        ("object_absolute_distance", ["bed_1", "desk_1"], {}),
        ("object_counting", ["chair_2"], {"category": "chair"}),
        ("object_volume_comparison", ["bed_1", "desk_1", "chair_2"], {"extreme": "largest"}),
    ]
    task, ids, params = examples[variant % len(examples)]
    return build_program(task, ids, params, scene_kind=kind, variant=variant)
