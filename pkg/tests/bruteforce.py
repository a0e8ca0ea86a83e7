"""Independent brute-force re-derivations used as test oracles.

Everything here recomputes results from raw scene fields without importing the
geometry module: rotations go through explicit quaternion sandwich products,
frame changes through numpy matrices and solves, footprints through corner
enumeration. Deliberately a second implementation, not a refactor of the first.
"""

from __future__ import annotations

import math

import numpy as np

ELEVATION_TOL = 0.05


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def rotate_vec(q, v):
    """Sandwich product q (0,v) q*, avoiding the rotation-matrix formula."""
    w, x, y, z = q
    conj = (w, -x, -y, -z)
    t = quat_mul(q, (0.0, v[0], v[1], v[2]))
    _, rx, ry, rz = quat_mul(t, conj)
    return np.array([rx, ry, rz])


def rotation_matrix(q) -> np.ndarray:
    """Columns are the rotated basis vectors."""
    return np.column_stack([rotate_vec(q, e) for e in np.eye(3)])


def corners(center, half, q) -> np.ndarray:
    out = []
    for sx in (-1, 1):
        for sy in (-1, 1):
            for sz in (-1, 1):
                local = np.array([sx * half[0], sy * half[1], sz * half[2]])
                out.append(np.asarray(center) + rotate_vec(q, local))
    return np.array(out)


def footprint(center, half, q):
    pts = corners(center, half, q)
    return (pts[:, 0].min(), pts[:, 0].max(), pts[:, 2].min(), pts[:, 2].max())


def footprints_overlap(fa, fb) -> bool:
    return fa[0] <= fb[1] and fb[0] <= fa[1] and fa[2] <= fb[3] and fb[2] <= fa[3]


def world_extents(sizes, q):
    """(height, length, width) by scoring each rotated local axis against +Y."""
    axes = [rotate_vec(q, e) for e in np.eye(3)]
    scores = [abs(a[1]) for a in axes]
    vert = int(np.argmax(scores))
    rest = sorted((sizes[i] for i in range(3) if i != vert), reverse=True)
    return sizes[vert], rest[0], rest[1]


def distance(a, b) -> float:
    return math.sqrt(sum((a[i] - b[i]) ** 2 for i in range(3)))


def facing_label(anchor, target, query, mode: str):
    """Rotate the ground frame so the facing direction becomes -z, read signs.

    Returns a label string or None when the configuration sits within 5 degrees
    of a sector boundary (mirrors the production ambiguity tolerance).
    """
    f = np.array([target[0] - anchor[0], target[2] - anchor[2]])
    d = np.array([query[0] - anchor[0], query[2] - anchor[2]])
    if np.hypot(*f) <= 1e-6 or np.hypot(*d) <= 1e-6:
        raise ValueError("degenerate facing configuration")
    # angle of f measured in the (x, z) plane; rotate so f lands on (0, -1)
    beta = math.atan2(f[0], f[1])
    alpha = math.pi - beta
    rot = np.array([[math.cos(alpha), math.sin(alpha)], [-math.sin(alpha), math.cos(alpha)]])
    fr = rot @ f
    assert abs(fr[0]) < 1e-9 * max(1.0, np.hypot(*f)) and fr[1] < 0
    qx, qz = rot @ d
    front = qz < 0
    left = qx < 0
    ang = math.degrees(math.atan2(qx, -qz))  # (-180, 180], 0 = straight ahead
    if mode == "simple":
        margin = min(abs(ang), 180 - abs(ang))  # distance from the left/right split plane
        if margin < 5.0:
            return None
        return "left" if left else "right"
    folded = abs(ang) % 90
    if min(folded, 90 - folded) < 5.0:
        return None
    if front:
        return "front_left" if left else "front_right"
    return "back_left" if left else "back_right"


def to_camera_frame(point, cam_pos, cam_q) -> np.ndarray:
    m = rotation_matrix(cam_q)
    return np.linalg.solve(m, np.asarray(point) - np.asarray(cam_pos))


def camera_label(a, b, cam_pos, cam_q, mode: str):
    pa = to_camera_frame(a, cam_pos, cam_q)
    pb = to_camera_frame(b, cam_pos, cam_q)
    depth_a, depth_b = -pa[2], -pb[2]
    az_a = math.degrees(math.atan2(pa[0], depth_a))
    az_b = math.degrees(math.atan2(pb[0], depth_b))
    margin = abs(az_a - az_b)
    if margin > 180:
        margin = 360 - margin
    if margin < 5.0:
        return None
    left = pa[0] < pb[0]
    if mode == "simple":
        return "left" if left else "right"
    if abs(depth_a - depth_b) < ELEVATION_TOL:
        return None
    front = depth_a < depth_b
    if front:
        return "front_left" if left else "front_right"
    return "back_left" if left else "back_right"


# --- object-record level helpers (operate on raw dataclass fields) --------------------


def _c(o):
    return (o.obb.center.x, o.obb.center.y, o.obb.center.z)


def _h(o):
    return (o.obb.half_extent.x, o.obb.half_extent.y, o.obb.half_extent.z)


def _s(o):
    return (o.obb.sizes.x, o.obb.sizes.y, o.obb.sizes.z)


def _q(o):
    r = o.obb.rotation
    return (r.w, r.x, r.y, r.z)


def extents_of(o):
    h, l, w = world_extents(_s(o), _q(o))
    return {"height": h, "length": l, "width": w}


def stacked_above(a, b) -> bool:
    dy = a.obb.center.y - b.obb.center.y
    if dy <= ELEVATION_TOL:
        return False
    return footprints_overlap(footprint(_c(a), _h(a), _q(a)), footprint(_c(b), _h(b), _q(b)))


def top_of(o) -> float:
    return o.obb.center.y + extents_of(o)["height"] / 2.0


def closest_candidate(target, candidates):
    dists = [distance(_c(target), _c(c)) for c in candidates]
    ranked = sorted(dists)
    if len(ranked) > 1 and ranked[1] - ranked[0] < 1e-9:
        return None
    return candidates[int(np.argmin(dists))]


def within_radius(scene, target, radius):
    pairs = []
    for o in scene.objects:
        if o.id == target.id:
            continue
        d = distance(_c(target), _c(o))
        if d <= radius:
            pairs.append((d, o.id))
    pairs.sort()
    return [oid for _, oid in pairs]


def count_category(scene, category, frame=None):
    hits = {
        o.id
        for o in scene.objects
        if o.category == category and (frame is None or not o.appear or frame in o.appear)
    }
    return len(hits)


def visible_at(scene, frame):
    return sorted(o.id for o in scene.objects if frame in o.appear)


def appearance_order(objs):
    if any(not o.appear for o in objs):
        return None
    firsts = [min(o.appear) for o in objs]
    if len(set(firsts)) != len(firsts):
        return None
    return [o.id for _, o in sorted(zip(firsts, objs), key=lambda p: p[0])]


def highest_by_center(objs):
    ys = sorted((o.obb.center.y for o in objs), reverse=True)
    if ys[0] - ys[1] < ELEVATION_TOL:
        return None
    return max(objs, key=lambda o: o.obb.center.y)
