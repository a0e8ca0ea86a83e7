"""Numeric kernels for oriented-bounding-box and camera-frame math.

Every function takes plain float64 ndarrays so the same source compiles under
numba's nopython mode. When numba is importable the hot kernels are jitted
(cache=True); setting SPRITE_NO_NUMBA=1 forces the uncompiled pure-numpy path.
`benchmarks/bench_geometry.py` compares both paths.

Quaternions are scalar-first (w, x, y, z) and rotate local -> world. The world
frame is right-handed with +Y up.
"""

from __future__ import annotations

import math
import os

import numpy as np

_DISABLE = os.environ.get("SPRITE_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

NUMBA_ENABLED = _HAVE_NUMBA and not _DISABLE


def _maybe_jit(func):
    if NUMBA_ENABLED:
        return _njit(cache=True)(func)
    return func


@_maybe_jit
def quat_to_mat(q: np.ndarray) -> np.ndarray:
    """3x3 rotation matrix of a unit quaternion (w, x, y, z)."""
    w, x, y, z = q[0], q[1], q[2], q[3]
    m = np.empty((3, 3), dtype=np.float64)
    m[0, 0] = 1.0 - 2.0 * (y * y + z * z)
    m[0, 1] = 2.0 * (x * y - w * z)
    m[0, 2] = 2.0 * (x * z + w * y)
    m[1, 0] = 2.0 * (x * y + w * z)
    m[1, 1] = 1.0 - 2.0 * (x * x + z * z)
    m[1, 2] = 2.0 * (y * z - w * x)
    m[2, 0] = 2.0 * (x * z - w * y)
    m[2, 1] = 2.0 * (y * z + w * x)
    m[2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return m


@_maybe_jit
def rotate_vec(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.empty(3, dtype=np.float64)
    for i in range(3):
        out[i] = m[i, 0] * v[0] + m[i, 1] * v[1] + m[i, 2] * v[2]
    return out


@_maybe_jit
def obb_corners(center: np.ndarray, half: np.ndarray, m: np.ndarray) -> np.ndarray:
    """World positions of the 8 corners, rows ordered by sign pattern."""
    out = np.empty((8, 3), dtype=np.float64)
    k = 0
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for sz in (-1.0, 1.0):
                lx = sx * half[0]
                ly = sy * half[1]
                lz = sz * half[2]
                for i in range(3):
                    out[k, i] = center[i] + m[i, 0] * lx + m[i, 1] * ly + m[i, 2] * lz
                k += 1
    return out


@_maybe_jit
def footprint_bounds(center: np.ndarray, half: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Ground-plane AABB of the rotated box: (min_x, max_x, min_z, max_z).

    Uses the |R| radius identity, which equals the min/max over the 8 corners.
    """
    rx = abs(m[0, 0]) * half[0] + abs(m[0, 1]) * half[1] + abs(m[0, 2]) * half[2]
    rz = abs(m[2, 0]) * half[0] + abs(m[2, 1]) * half[1] + abs(m[2, 2]) * half[2]
    out = np.empty(4, dtype=np.float64)
    out[0] = center[0] - rx
    out[1] = center[0] + rx
    out[2] = center[2] - rz
    out[3] = center[2] + rz
    return out


@_maybe_jit
def world_extents_of(sizes: np.ndarray, m: np.ndarray) -> np.ndarray:
    """(height, length, width): height follows the most-vertical local axis,
    the larger of the remaining two extents is the length."""
    best = 0
    best_score = abs(m[1, 0])
    for i in (1, 2):
        score = abs(m[1, i])
        if score > best_score:
            best_score = score
            best = i
    height = sizes[best]
    a = sizes[(best + 1) % 3]
    b = sizes[(best + 2) % 3]
    out = np.empty(3, dtype=np.float64)
    out[0] = height
    out[1] = a if a >= b else b
    out[2] = b if a >= b else a
    return out


@_maybe_jit
def to_camera_frame(point: np.ndarray, cam_pos: np.ndarray, cam_m: np.ndarray) -> np.ndarray:
    """World point expressed in the camera's local frame (R^T (p - pos))."""
    d0 = point[0] - cam_pos[0]
    d1 = point[1] - cam_pos[1]
    d2 = point[2] - cam_pos[2]
    out = np.empty(3, dtype=np.float64)
    for i in range(3):
        out[i] = cam_m[0, i] * d0 + cam_m[1, i] * d1 + cam_m[2, i] * d2
    return out


@_maybe_jit
def batch_footprints(centers: np.ndarray, halves: np.ndarray, quats: np.ndarray) -> np.ndarray:
    """Vector form of footprint_bounds over N boxes; the benchmark workload."""
    n = centers.shape[0]
    out = np.empty((n, 4), dtype=np.float64)
    for i in range(n):
        m = quat_to_mat(quats[i])
        out[i] = footprint_bounds(centers[i], halves[i], m)
    return out


@_maybe_jit
def batch_world_extents(sizes: np.ndarray, quats: np.ndarray) -> np.ndarray:
    n = sizes.shape[0]
    out = np.empty((n, 3), dtype=np.float64)
    for i in range(n):
        m = quat_to_mat(quats[i])
        out[i] = world_extents_of(sizes[i], m)
    return out


def pure_python_variant(func):
    """The uncompiled implementation of a kernel (the fallback path)."""
    return getattr(func, "py_func", func)


def dist3(ax: float, ay: float, az: float, bx: float, by: float, bz: float) -> float:
    return math.sqrt((ax - bx) ** 2 + (ay - by) ** 2 + (az - bz) ** 2)
