"""
Z-buffer triangle rasterization of convex meshes into depth maps.
"""

from __future__ import annotations

__all__ = [
    "MeshLike",
    "render_depth",
    "render_world",
    "silhouette_iou",
    "mesh_triangles",
]

import typing as t

import numpy as np

from ..abc.generic import CameraExtrinsics, CameraIntrinsics, ConvexPiece, DepthMap, Mask, RigidTransform
from ..core.errors import InvalidInput

MeshLike = t.Union[ConvexPiece, t.Sequence[ConvexPiece]]

_NEAR = 1e-3
_EDGE_TOLERANCE = -1e-9


def mesh_triangles(mesh: MeshLike) -> np.ndarray:
    """
    F×3×3 triangle corners of one piece or of several pieces stacked.
    """
    pieces = [mesh] if isinstance(mesh, ConvexPiece) else list(mesh)
    stacked = [piece.triangle_vertices() for piece in pieces if len(piece.triangles)]
    if not stacked:
        raise InvalidInput("mesh has no triangles")
    return np.concatenate(stacked)


def _clip_near(triangle: np.ndarray) -> t.List[np.ndarray]:
    """
    Clips a camera-frame triangle to `z >= _NEAR` and fans the remaining
    polygon back into triangles (none, one or two).
    """
    z = triangle[:, 2]
    if np.all(z >= _NEAR):
        return [triangle]
    if np.all(z < _NEAR):
        return []
    polygon = []
    for i in range(3):
        a, b = triangle[i], triangle[(i + 1) % 3]
        if a[2] >= _NEAR:
            polygon.append(a)
        if (a[2] >= _NEAR) != (b[2] >= _NEAR):
            s = (_NEAR - a[2]) / (b[2] - a[2])
            point = a + s * (b - a)
            point[2] = _NEAR
            polygon.append(point)
    return [np.stack([polygon[0], polygon[k], polygon[k + 1]]) for k in range(1, len(polygon) - 1)]


def _rasterize(camera_triangles: np.ndarray, intr: CameraIntrinsics) -> np.ndarray:
    """
    Nearest camera depth per pixel (inf where nothing was drawn).
    """
    buffer = np.full((intr.height, intr.width), np.inf)
    for corners in camera_triangles:
        for triangle in _clip_near(corners):
            _draw(buffer, triangle, intr)
    return buffer


def _draw(buffer: np.ndarray, triangle: np.ndarray, intr: CameraIntrinsics) -> None:
    zs = triangle[:, 2]
    us = intr.fx * triangle[:, 0] / zs + intr.cx
    vs = intr.fy * triangle[:, 1] / zs + intr.cy
    area = (us[1] - us[0]) * (vs[2] - vs[0]) - (us[2] - us[0]) * (vs[1] - vs[0])
    if not abs(area) >= 1e-12:
        return
    u_lo = max(int(np.ceil(us.min())), 0)
    u_hi = min(int(np.floor(us.max())), intr.width - 1)
    v_lo = max(int(np.ceil(vs.min())), 0)
    v_hi = min(int(np.floor(vs.max())), intr.height - 1)
    if u_lo > u_hi or v_lo > v_hi:
        return
    pu, pv = np.meshgrid(np.arange(u_lo, u_hi + 1, dtype=np.float64), np.arange(v_lo, v_hi + 1, dtype=np.float64))
    # barycentric weights from the three edge functions
    w0 = ((us[2] - us[1]) * (pv - vs[1]) - (vs[2] - vs[1]) * (pu - us[1])) / area
    w1 = ((us[0] - us[2]) * (pv - vs[2]) - (vs[0] - vs[2]) * (pu - us[2])) / area
    w2 = 1.0 - w0 - w1
    inside = (w0 >= _EDGE_TOLERANCE) & (w1 >= _EDGE_TOLERANCE) & (w2 >= _EDGE_TOLERANCE)
    inverse_depth = w0 / zs[0] + w1 / zs[1] + w2 / zs[2]
    inside &= inverse_depth > 0
    if not inside.any():
        return
    depth = np.full(inside.shape, np.inf)
    depth[inside] = 1.0 / inverse_depth[inside]
    window = buffer[v_lo : v_hi + 1, u_lo : u_hi + 1]
    np.minimum(window, depth, out=window)


def render_depth(
    mesh: MeshLike, pose: RigidTransform, scale: float, intr: CameraIntrinsics
) -> t.Tuple[DepthMap, Mask]:
    """
    Renders a mesh placed in the camera frame at `x_cam = scale · R x + t`.

    Parameters
    ----------
    mesh : ConvexPiece or Sequence[ConvexPiece]
        Geometry in the object frame.
    pose : RigidTransform
        Object to camera transform.
    scale : float
        Uniform scale applied to the object before `pose`.
    intr : CameraIntrinsics

    Returns
    -------
    Tuple[DepthMap, Mask]
        Depths in meters (0 outside the silhouette) and the rendered pixel set.
        Triangles are clipped 1 mm in front of the camera, so a mesh fully
        behind the camera yields an empty mask.
    """
    if not scale > 0:
        raise InvalidInput("scale must be positive")
    triangles = mesh_triangles(mesh)
    camera_triangles = scale * triangles @ pose.rotation.T + pose.translation
    buffer = _rasterize(camera_triangles, intr)
    drawn = np.isfinite(buffer)
    depth = np.where(drawn, buffer, 0.0)
    return DepthMap(intr.width, intr.height, depth), Mask(intr.width, intr.height, drawn)


def render_world(
    mesh: MeshLike, intr: CameraIntrinsics, extr: CameraExtrinsics
) -> t.Tuple[DepthMap, Mask]:
    """
    Renders world-frame geometry through a calibrated camera.
    """
    return render_depth(mesh, extr.base_to_camera(), 1.0, intr)


def silhouette_iou(a: Mask, b: Mask) -> float:
    """
    Intersection over union of two masks; 0 when both are empty.
    """
    if a.width != b.width or a.height != b.height:
        raise InvalidInput("masks differ in size")
    union = np.count_nonzero(a.bits | b.bits)
    if union == 0:
        return 0.0
    return float(np.count_nonzero(a.bits & b.bits) / union)
