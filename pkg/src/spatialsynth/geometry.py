"""Pure geometric predicates over OBBs and camera poses.

Sign conventions, fixed once for every caller:
  * the world frame is right-handed with +Y up; the ground plane is XZ;
  * an observer's forward direction is projected to the ground plane, and
    (forward x offset).y > 0 means the queried object is on the LEFT;
  * the camera looks along -Z of its local frame, +X right, +Y up;
  * distances are center-to-center.

Directional results carry `margin_deg`, the angular distance to the nearest
sector boundary; results closer than the ambiguity tolerance come back as None
("ambiguous") so downstream quality control can drop the question.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from . import kernels
from .scene_model import CameraPose, Obb

DIRECTION_TOL_DEG = 5.0
ELEVATION_TOL_M = 0.05
COINCIDENT_TOL_M = 1e-6


class GeometryError(ValueError):
    """Degenerate input geometry (coincident points, empty stacks, ...)."""


class DirectionLabel(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    FRONT = "front"
    BACK = "back"
    FRONT_LEFT = "front_left"
    FRONT_RIGHT = "front_right"
    BACK_LEFT = "back_left"
    BACK_RIGHT = "back_right"

    @property
    def phrase(self) -> str:
        return self.value.replace("_", "-")


@dataclass(frozen=True)
class Direction2D:
    label: DirectionLabel
    margin_deg: float


class VerticalRelation(str, Enum):
    A_ABOVE_B = "a_above_b"
    B_ABOVE_A = "b_above_a"
    NEITHER = "neither"


@dataclass(frozen=True)
class Footprint:
    min_x: float
    max_x: float
    min_z: float
    max_z: float

    def overlaps(self, other: "Footprint") -> bool:
        return (
            self.min_x <= other.max_x
            and other.min_x <= self.max_x
            and self.min_z <= other.max_z
            and other.min_z <= self.max_z
        )


@dataclass(frozen=True)
class WorldExtents:
    height: float
    length: float
    width: float


def center_distance(a: Obb, b: Obb) -> float:
    ca, cb = a.center, b.center
    return kernels.dist3(ca.x, ca.y, ca.z, cb.x, cb.y, cb.z)


def camera_distance(o: Obb, cam: CameraPose) -> float:
    c, p = o.center, cam.position
    return kernels.dist3(c.x, c.y, c.z, p.x, p.y, p.z)


def footprint(o: Obb) -> Footprint:
    m = kernels.quat_to_mat(o.rotation.as_array())
    b = kernels.footprint_bounds(o.center.as_array(), o.half_extent.as_array(), m)
    return Footprint(min_x=float(b[0]), max_x=float(b[1]), min_z=float(b[2]), max_z=float(b[3]))


def world_extents(o: Obb) -> WorldExtents:
    m = kernels.quat_to_mat(o.rotation.as_array())
    e = kernels.world_extents_of(o.sizes.as_array(), m)
    return WorldExtents(height=float(e[0]), length=float(e[1]), width=float(e[2]))


def top_elevation(o: Obb) -> float:
    """Elevation of the box top: center height plus half the vertical extent."""
    return o.center.y + world_extents(o).height / 2.0


def _ground_offset(from_obb: Obb, to_obb: Obb) -> tuple[float, float]:
    dx = to_obb.center.x - from_obb.center.x
    dz = to_obb.center.z - from_obb.center.z
    if math.hypot(dx, dz) <= COINCIDENT_TOL_M:
        raise GeometryError("ground-plane centers coincide")
    return dx, dz


def facing_direction(
    anchor: Obb,
    facing_target: Obb,
    query: Obb,
    mode: str = "complex",
    tol_deg: float = DIRECTION_TOL_DEG,
) -> Direction2D | None:
    """Direction of `query` for an observer at `anchor` facing `facing_target`.

    mode="simple" classifies left/right; mode="complex" classifies the quadrant
    (front-left/front-right/back-left/back-right). Returns None when the margin
    to the nearest sector boundary falls below `tol_deg`.
    """
    fx, fz = _ground_offset(anchor, facing_target)
    dx, dz = _ground_offset(anchor, query)
    lon = fx * dx + fz * dz  # along the facing direction
    lat = fz * dx - fx * dz  # (f x d) . yhat; positive = left
    theta = math.degrees(math.atan2(lat, lon))

    if mode == "simple":
        margin = min(abs(theta), 180.0 - abs(theta))
        label = DirectionLabel.LEFT if lat > 0 else DirectionLabel.RIGHT
    elif mode == "complex":
        folded = abs(theta) % 90.0
        margin = min(folded, 90.0 - folded)
        if lon > 0:
            label = DirectionLabel.FRONT_LEFT if lat > 0 else DirectionLabel.FRONT_RIGHT
        else:
            label = DirectionLabel.BACK_LEFT if lat > 0 else DirectionLabel.BACK_RIGHT
    else:
        raise ValueError(f"unknown mode {mode!r}")

    if margin < tol_deg:
        return None
    return Direction2D(label=label, margin_deg=margin)


def camera_frame_position(point_world, cam: CameraPose):
    m = kernels.quat_to_mat(cam.rotation.as_array())
    return kernels.to_camera_frame(point_world, cam.position.as_array(), m)


def camera_direction(
    a: Obb,
    b: Obb,
    cam: CameraPose,
    mode: str = "simple",
    tol_deg: float = DIRECTION_TOL_DEG,
    depth_tol_m: float = ELEVATION_TOL_M,
    forward: str = "-z",
) -> Direction2D | None:
    """Position of `a` relative to `b` as seen from the camera.

    simple: a is left of b iff its camera-frame x is smaller. complex: combines
    the lateral comparison with depth (smaller depth = in front). The margin is
    the angular separation of the two objects as seen from the camera; complex
    mode additionally requires the depth gap to exceed `depth_tol_m`.
    """
    if forward not in ("-z", "+z"):
        raise ValueError(f"unsupported camera forward axis {forward!r}")
    sign = -1.0 if forward == "-z" else 1.0
    pa = camera_frame_position(a.center.as_array(), cam)
    pb = camera_frame_position(b.center.as_array(), cam)
    depth_a = sign * pa[2]
    depth_b = sign * pb[2]
    lat = pa[0] - pb[0]
    fwd = depth_b - depth_a  # positive: a is nearer the camera
    if math.hypot(lat, fwd) <= COINCIDENT_TOL_M:
        raise GeometryError("objects coincide in the camera ground plane")

    az_a = math.degrees(math.atan2(pa[0], depth_a))
    az_b = math.degrees(math.atan2(pb[0], depth_b))
    margin = abs(az_a - az_b)
    if margin > 180.0:
        margin = 360.0 - margin

    if mode == "simple":
        if margin < tol_deg:
            return None
        label = DirectionLabel.LEFT if lat < 0 else DirectionLabel.RIGHT
    elif mode == "complex":
        if margin < tol_deg or abs(fwd) < depth_tol_m:
            return None
        if fwd > 0:
            label = DirectionLabel.FRONT_LEFT if lat < 0 else DirectionLabel.FRONT_RIGHT
        else:
            label = DirectionLabel.BACK_LEFT if lat < 0 else DirectionLabel.BACK_RIGHT
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return Direction2D(label=label, margin_deg=margin)


def vertical_relation(a: Obb, b: Obb, tol_m: float = ELEVATION_TOL_M) -> VerticalRelation:
    """Stacked above/below: needs both a height gap and overlapping footprints."""
    dy = a.center.y - b.center.y
    if abs(dy) <= tol_m:
        return VerticalRelation.NEITHER
    if not footprint(a).overlaps(footprint(b)):
        return VerticalRelation.NEITHER
    return VerticalRelation.A_ABOVE_B if dy > 0 else VerticalRelation.B_ABOVE_A


def elevation_order(objs: Sequence[Obb], tol_m: float = ELEVATION_TOL_M) -> tuple[list[int], bool]:
    """Indices ranked by descending center height, plus an ambiguity flag.

    The flag is set when any adjacent pair in the ranking is closer than
    `tol_m` (a tie the caller should treat as unanswerable).
    """
    if len(objs) < 2:
        raise GeometryError("elevation ranking needs at least two objects")
    order = sorted(range(len(objs)), key=lambda i: (-objs[i].center.y, i))
    ambiguous = any(
        objs[order[i]].center.y - objs[order[i + 1]].center.y < tol_m for i in range(len(order) - 1)
    )
    return order, ambiguous
