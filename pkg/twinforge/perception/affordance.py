"""
Lifts 2D affordances (contact pixel plus post-contact pixel vector) into 3D.

A contact and its trajectory seen by one camera span a plane through the
optical center; the same affordance seen from a second (virtual) camera spans
another. The 3D post-contact direction is the intersection line of both.
"""

from __future__ import annotations

__all__ = [
    "warp_to_virtual_view",
    "lookup_depth",
    "plane_from_affordance",
    "intersect_post_contact",
    "project_direction",
    "affordance_to_3d",
]

import typing as t

import numpy as np

from ..abc.generic import (
    Affordance3D,
    CameraExtrinsics,
    CameraIntrinsics,
    DepthMap,
    Mask,
    PixelAffordance,
    ProjectionPlane,
)
from ..core.console import Console, silent
from ..core.defaults import GeometryDefaults
from ..core.errors import DegeneratePlane, EmptyWarp, IllConditionedIntersection, InvalidDepth, InvalidInput
from ..geometry.camera import back_project, back_project_depth, back_project_many, project_many


def warp_to_virtual_view(
    depth: DepthMap,
    mask: Mask,
    intr: CameraIntrinsics,
    extr_real: CameraExtrinsics,
    extr_virtual: CameraExtrinsics,
) -> t.Tuple[DepthMap, Mask]:
    """
    Forward-warps the masked depth into a second camera with z-buffering.

    Every masked pixel with a valid depth is lifted into the base frame and
    splatted onto the nearest virtual pixel; the closest surface wins. Virtual
    pixels nothing lands on stay invalid.

    Parameters
    ----------
    depth : DepthMap
        Real-view depth, meters.
    mask : Mask
        Object mask of the real view.
    intr : CameraIntrinsics
        Shared by both cameras.
    extr_real, extr_virtual : CameraExtrinsics

    Returns
    -------
    Tuple[DepthMap, Mask]
        Virtual depth and the set of written pixels.

    Raises
    ------
    EmptyWarp
        No masked pixel lands inside the virtual image.
    """
    if not mask.matches(depth):
        raise InvalidInput("mask and depth differ in size")
    if depth.width != intr.width or depth.height != intr.height:
        raise InvalidInput("depth map does not match the camera image size")
    points, _ = back_project_depth(depth, intr, extr_real, mask)
    if len(points) == 0:
        raise EmptyWarp("no masked pixel carries a valid depth")
    pixels, z = project_many(points, intr, extr_virtual)
    with np.errstate(invalid="ignore"):
        cols = np.rint(pixels[:, 0])
        rows = np.rint(pixels[:, 1])
    inside = (z > 0) & (cols >= 0) & (cols < intr.width) & (rows >= 0) & (rows < intr.height)
    if not inside.any():
        raise EmptyWarp("no masked pixel lands inside the virtual view")
    flat = rows[inside].astype(np.int64) * intr.width + cols[inside].astype(np.int64)
    depths = z[inside]
    # nearest first within each target pixel, then keep the first of every run
    order = np.lexsort((depths, flat))
    flat, depths = flat[order], depths[order]
    first = np.ones(flat.shape[0], dtype=bool)
    first[1:] = flat[1:] != flat[:-1]
    values = np.zeros(intr.width * intr.height)
    values[flat[first]] = depths[first]
    written = np.zeros(intr.width * intr.height, dtype=bool)
    written[flat[first]] = True
    return DepthMap(intr.width, intr.height, values), Mask(intr.width, intr.height, written)


def lookup_depth(depth: DepthMap, pixel: t.Tuple[float, float], window: int = 2) -> float:
    """
    Depth at a pixel; falls back to the median of the valid depths inside the
    `(2·window + 1)²` neighborhood when the pixel itself is invalid.

    Raises
    ------
    InvalidDepth
        Nothing valid nearby.
    """
    col, row = int(round(pixel[0])), int(round(pixel[1]))
    if not (0 <= col < depth.width and 0 <= row < depth.height):
        raise InvalidInput(f"pixel {pixel} outside the {depth.width}×{depth.height} image")
    if depth.values[row, col] > 0:
        return float(depth.values[row, col])
    patch = depth.values[max(row - window, 0) : row + window + 1, max(col - window, 0) : col + window + 1]
    valid = patch[patch > 0]
    if valid.size == 0:
        raise InvalidDepth(f"no valid depth within {window} pixels of {pixel}")
    return float(np.median(valid))


def plane_from_affordance(
    aff: PixelAffordance, z_c: float, intr: CameraIntrinsics, extr: CameraExtrinsics
) -> ProjectionPlane:
    """
    Plane through the optical center, the contact point and the trajectory.

    The contact `p_c` and the trajectory endpoint `p_c'` are both lifted at the
    contact depth `z_c`; the plane is spanned by `φ = p_c' − p_c` and the
    viewing ray `φ' = p_c − o_c`.

    Parameters
    ----------
    aff : PixelAffordance
        The contact must lie inside the image; the endpoint may not.
    z_c : float
        Contact depth in meters.
    intr : CameraIntrinsics
    extr : CameraExtrinsics

    Returns
    -------
    ProjectionPlane
        Unit normal `φ × φ'` anchored at `p_c`.

    Raises
    ------
    InvalidDepth
        `z_c <= 0`.
    DegeneratePlane
        The trajectory is parallel to the viewing ray.

    Example
    -------
    ```python
    aff = PixelAffordance(contact=(160.0, 120.0), trajectory=(20.0, 0.0))
    plane = plane_from_affordance(aff, 0.8, intr, extr)
    ```
    """
    p_c = back_project(aff.contact, z_c, intr, extr)
    p_end = back_project_many([aff.endpoint], [z_c], intr, extr)[0]
    phi = p_end - p_c
    ray = p_c - extr.camera_origin
    normal = np.cross(phi, ray)
    length = np.linalg.norm(normal)
    if length <= 1e-12 * np.linalg.norm(phi) * np.linalg.norm(ray):
        raise DegeneratePlane("trajectory is parallel to the viewing ray")
    return ProjectionPlane(normal / length, p_c)


def project_direction(
    point: np.ndarray, direction: np.ndarray, intr: CameraIntrinsics, extr: CameraExtrinsics
) -> np.ndarray:
    """
    Image-space velocity of a point at `point` moving along `direction`
    (differential of the pinhole projection).
    """
    to_camera = extr.base_to_camera()
    x, y, z = to_camera.apply(point)
    dx, dy, dz = to_camera.apply_direction(direction)
    return np.array([intr.fx * (dx * z - x * dz) / z**2, intr.fy * (dy * z - y * dz) / z**2])


def intersect_post_contact(
    plane_real: ProjectionPlane,
    plane_virtual: ProjectionPlane,
    aff_real: PixelAffordance,
    intr: CameraIntrinsics,
    extr_real: CameraExtrinsics,
) -> Affordance3D:
    """
    Post-contact direction as the intersection of both projection planes.

    The sign is chosen so that the direction, projected into the real image,
    agrees with the real trajectory.

    Raises
    ------
    IllConditionedIntersection
        The planes are (nearly) parallel, or the intersection runs along the
        real viewing ray so that no sign can be read from the image.
    """
    n0 = plane_real.normal
    n1 = plane_virtual.normal
    if abs(float(n0 @ n1)) > 1.0 - GeometryDefaults.PARALLEL_PLANES:
        raise IllConditionedIntersection("projection planes are parallel; move the virtual camera")
    direction = np.cross(n0, n1)
    direction /= np.linalg.norm(direction)
    image_motion = project_direction(plane_real.anchor, direction, intr, extr_real)
    agreement = float(image_motion @ np.asarray(aff_real.trajectory))
    if agreement == 0.0:
        raise IllConditionedIntersection("intersection line runs along the viewing ray")
    if agreement < 0:
        direction = -direction
    return Affordance3D(plane_real.anchor, direction)


def affordance_to_3d(
    depth: DepthMap,
    mask: Mask,
    intr: CameraIntrinsics,
    extr_real: CameraExtrinsics,
    extr_virtual: CameraExtrinsics,
    aff_real: PixelAffordance,
    aff_virtual: PixelAffordance,
    window: int = 2,
    console: Console = silent,
) -> Affordance3D:
    """
    Full projection: warp the real depth into the virtual view, read both
    contact depths, build both planes and intersect them.

    `aff_virtual` is predicted on the synthesized virtual view.
    """
    virtual_depth, virtual_mask = warp_to_virtual_view(depth, mask, intr, extr_real, extr_virtual)
    console.log(f"warped {virtual_mask.count} pixels into the virtual view")
    z_real = lookup_depth(depth, aff_real.contact, window)
    z_virtual = lookup_depth(virtual_depth, aff_virtual.contact, window)
    plane_real = plane_from_affordance(aff_real, z_real, intr, extr_real)
    plane_virtual = plane_from_affordance(aff_virtual, z_virtual, intr, extr_virtual)
    result = intersect_post_contact(plane_real, plane_virtual, aff_real, intr, extr_real)
    console.log(f"contact {np.round(result.contact, 4).tolist()} direction {np.round(result.direction, 4).tolist()}")
    return result
