"""
Pinhole camera math: back-projection, projection and camera placement.

Extrinsics map base coordinates into the camera frame, so a pixel `(u, v)`
at depth `z` lands at `H⁻¹ K⁻¹ z (u, v, 1)ᵀ` in the base frame.
"""

from __future__ import annotations

__all__ = [
    "back_project",
    "back_project_many",
    "back_project_depth",
    "project",
    "project_many",
    "look_at_extrinsics",
    "virtual_camera_extrinsics",
]

import math
import typing as t

import numpy as np
import numpy.typing as npt

from ..abc.generic import CameraExtrinsics, CameraIntrinsics, DepthMap, Mask, Point3, as_point
from ..core.defaults import GeometryDefaults
from ..core.errors import InvalidDepth, InvalidInput, OutOfFrustum


def back_project_many(
    pixels: npt.ArrayLike, depths: npt.ArrayLike, intr: CameraIntrinsics, extr: CameraExtrinsics
) -> np.ndarray:
    """
    Vectorized back-projection without bounds checks. Returns N×3 base-frame points.
    """
    uv = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    z = np.asarray(depths, dtype=np.float64).reshape(-1)
    if np.any(~np.isfinite(z)) or np.any(z <= 0):
        raise InvalidDepth("depth must be positive and finite")
    x = (uv[:, 0] - intr.cx) / intr.fx * z
    y = (uv[:, 1] - intr.cy) / intr.fy * z
    camera_points = np.stack([x, y, z], axis=1)
    return extr.camera_to_base().apply(camera_points)


def back_project(
    pixel: t.Tuple[float, float], z: float, intr: CameraIntrinsics, extr: CameraExtrinsics
) -> Point3:
    """
    Lifts a pixel at camera-frame depth `z` into the robot base frame.

    Parameters
    ----------
    pixel : Tuple[float, float]
        `(u, v)` inside the image.
    z : float
        Depth in meters, > 0.
    intr : CameraIntrinsics
    extr : CameraExtrinsics

    Raises
    ------
    InvalidDepth
        `z <= 0`.
    InvalidInput
        The pixel lies outside the image.
    """
    if not (math.isfinite(z) and z > 0):
        raise InvalidDepth(f"depth must be positive, got {z}")
    u, v = float(pixel[0]), float(pixel[1])
    if not intr.contains(u, v):
        raise InvalidInput(f"pixel ({u}, {v}) outside the {intr.width}×{intr.height} image")
    return back_project_many([[u, v]], [z], intr, extr)[0]


def back_project_depth(
    depth: DepthMap, intr: CameraIntrinsics, extr: CameraExtrinsics, mask: t.Optional[Mask] = None
) -> t.Tuple[np.ndarray, np.ndarray]:
    """
    Base-frame points of every valid (and masked) pixel, plus their `(row, col)` indices.
    """
    selected = depth.valid if mask is None else depth.valid & mask.bits
    rows, cols = np.nonzero(selected)
    if rows.size == 0:
        return np.zeros((0, 3)), np.zeros((0, 2), dtype=np.int64)
    pixels = np.stack([cols, rows], axis=1).astype(np.float64)
    points = back_project_many(pixels, depth.values[rows, cols], intr, extr)
    return points, np.stack([rows, cols], axis=1)


def project_many(
    points: npt.ArrayLike, intr: CameraIntrinsics, extr: CameraExtrinsics
) -> t.Tuple[np.ndarray, np.ndarray]:
    """
    Projects N base-frame points. Returns N×2 pixels and N camera depths; points
    behind the camera get NaN pixels.
    """
    camera_points = extr.base_to_camera().apply(np.asarray(points, dtype=np.float64).reshape(-1, 3))
    z = camera_points[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = intr.fx * camera_points[:, 0] / z + intr.cx
        v = intr.fy * camera_points[:, 1] / z + intr.cy
    behind = z <= 0
    u[behind] = np.nan
    v[behind] = np.nan
    return np.stack([u, v], axis=1), z


def project(point: npt.ArrayLike, intr: CameraIntrinsics, extr: CameraExtrinsics) -> t.Tuple[float, float, float]:
    """
    Pinhole projection of one base-frame point.

    Returns
    -------
    Tuple[float, float, float]
        `(u, v, z)` with `z` the camera-frame depth.

    Raises
    ------
    OutOfFrustum
        The point is behind the camera.
    """
    p = as_point(point)
    pixels, z = project_many(p, intr, extr)
    if not z[0] > 0:
        raise OutOfFrustum(f"point {p.tolist()} is behind the camera (z = {z[0]:.6g})")
    return float(pixels[0, 0]), float(pixels[0, 1]), float(z[0])


def look_at_extrinsics(
    eye: npt.ArrayLike, target: npt.ArrayLike, up: npt.ArrayLike = (0.0, 0.0, 1.0)
) -> CameraExtrinsics:
    """
    Extrinsics of a camera at `eye` looking at `target` (x right, y down, z forward).
    """
    eye_p = as_point(eye, "eye")
    forward = as_point(target, "target") - eye_p
    if np.linalg.norm(forward) < 1e-12:
        raise InvalidInput("eye and target coincide")
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, as_point(up, "up"))
    if np.linalg.norm(right) < 1e-9:
        right = np.cross(forward, np.array([1.0, 0.0, 0.0]))
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    rotation = np.stack([right, down, forward], axis=1)
    base_to_camera = np.eye(4)
    base_to_camera[:3, :3] = rotation.T
    base_to_camera[:3, 3] = -rotation.T @ eye_p
    return CameraExtrinsics(base_to_camera)


def virtual_camera_extrinsics(
    position: npt.ArrayLike = GeometryDefaults.VIRTUAL_CAMERA_POSITION,
    pitch: float = GeometryDefaults.VIRTUAL_CAMERA_PITCH,
    yaw: float = 0.0,
) -> CameraExtrinsics:
    """
    Camera at `position` facing along the base `x` axis (rotated by `yaw` about
    `z`), tilted down by `pitch`.
    """
    eye = as_point(position, "position")
    forward = np.array([math.cos(pitch) * math.cos(yaw), math.cos(pitch) * math.sin(yaw), -math.sin(pitch)])
    return look_at_extrinsics(eye, eye + forward)
