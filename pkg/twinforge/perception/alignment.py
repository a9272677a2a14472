"""
Places and scales a canonical mesh against an observed depth map and mask.

The pose search scores silhouettes only, so it runs on the unscaled mesh: a
mesh of the wrong size at the right bearing produces the same silhouette as
the true object at a proportionally different depth. The depth ratio then
yields the scale.
"""

from __future__ import annotations

__all__ = [
    "search_pose",
    "estimate_scale",
    "align_scale",
    "hypothesis_transform",
    "object_pose",
]

import math
import typing as t

import numpy as np
from scipy.spatial.transform import Rotation

from ..abc.generic import CameraExtrinsics, CameraIntrinsics, DepthMap, Mask, RigidTransform
from ..abc.modals import PoseHypothesis
from ..core.console import Console, silent
from ..core.defaults import PerceptionDefaults
from ..core.errors import AlignmentFailure, InvalidInput, InvalidRender
from .render import MeshLike, render_depth, silhouette_iou

_TWO_PI = 2.0 * math.pi


def hypothesis_transform(yaw: float, translation: np.ndarray, extr: CameraExtrinsics) -> RigidTransform:
    """
    Object to camera transform of a hypothesis: a rotation by `yaw` about the
    world z axis, seen through the camera, then `translation` in the camera frame.
    """
    rotation = extr.base_to_camera().rotation @ Rotation.from_rotvec([0.0, 0.0, yaw]).as_matrix()
    return RigidTransform(rotation, translation)


def object_pose(hypothesis: PoseHypothesis, extr: CameraExtrinsics) -> RigidTransform:
    """
    Object to world transform of a (scaled) hypothesis.
    """
    camera = hypothesis_transform(hypothesis.yaw, hypothesis.translation, extr)
    return extr.camera_to_base().compose(camera)


def _initial_translation(observed_mask: Mask, observed_depth: DepthMap, intr: CameraIntrinsics) -> np.ndarray:
    rows, cols = np.nonzero(observed_mask.bits & observed_depth.valid)
    if rows.size == 0:
        raise AlignmentFailure("no masked pixel carries a valid depth")
    z = float(np.median(observed_depth.values[rows, cols]))
    u, v = float(cols.mean()), float(rows.mean())
    return np.array([(u - intr.cx) / intr.fx * z, (v - intr.cy) / intr.fy * z, z])


def search_pose(
    mesh: MeshLike,
    observed_mask: Mask,
    intr: CameraIntrinsics,
    observed_depth: DepthMap,
    extr: t.Optional[CameraExtrinsics] = None,
    yaw_samples: int = PerceptionDefaults.YAW_SAMPLES,
    refine_steps: int = PerceptionDefaults.REFINE_STEPS,
    console: Console = silent,
) -> PoseHypothesis:
    """
    Finds the yaw and unscaled camera-frame translation whose silhouette best
    matches `observed_mask`.

    Every uniform yaw is scored with the translation initialized from the mask
    centroid back-projected at the median masked depth; the best one is refined
    by coordinate descent on (yaw, tx, ty, tz) with step halving.

    Parameters
    ----------
    mesh : ConvexPiece or Sequence[ConvexPiece]
        Canonical geometry, object frame with z up.
    observed_mask : Mask
        Object silhouette.
    intr : CameraIntrinsics
    observed_depth : DepthMap
        Source of the initial depth.
    extr : Optional[CameraExtrinsics]
        Camera pose; yaw turns about the world z axis seen through it. Defaults
        to the identity.
    yaw_samples : int
        Size of the uniform yaw grid over [0, 2π).
    refine_steps : int
        Coordinate-descent rounds.

    Returns
    -------
    PoseHypothesis
        Scale 1, IoU score. Score ties on the grid keep the smallest yaw.

    Raises
    ------
    AlignmentFailure
        The best IoU is below 0.2.
    """
    if observed_mask.count == 0:
        raise InvalidInput("observed mask is empty")
    if yaw_samples < 1 or refine_steps < 0:
        raise InvalidInput("yaw_samples must be positive and refine_steps non-negative")
    camera = extr if extr is not None else CameraExtrinsics.identity()
    translation = _initial_translation(observed_mask, observed_depth, intr)

    def score(params: np.ndarray) -> float:
        pose = hypothesis_transform(params[0], params[1:], camera)
        _, rendered = render_depth(mesh, pose, 1.0, intr)
        return silhouette_iou(rendered, observed_mask)

    best = np.concatenate([[0.0], translation])
    best_score = -1.0
    for index in range(yaw_samples):
        params = np.concatenate([[_TWO_PI * index / yaw_samples], translation])
        value = score(params)
        if value > best_score:
            best, best_score = params, value
    console.log(f"yaw sweep best IoU {best_score:.4f} at {math.degrees(best[0]):.1f} deg")

    z = translation[2]
    steps = np.array([math.radians(10.0), 0.05 * z, 0.05 * z, 0.25 * z])
    for _ in range(refine_steps):
        for axis in range(4):
            improved = False
            for direction in (1.0, -1.0):
                candidate = best.copy()
                candidate[axis] += direction * steps[axis]
                if axis == 3 and candidate[3] <= 0:
                    continue
                value = score(candidate)
                if value > best_score:
                    best, best_score, improved = candidate, value, True
                    break
            if not improved:
                steps[axis] /= 2.0
    console.log(f"refined IoU {best_score:.4f}")

    if best_score < PerceptionDefaults.MIN_IOU:
        raise AlignmentFailure(f"best silhouette IoU {best_score:.4f} is below {PerceptionDefaults.MIN_IOU}")
    return PoseHypothesis(float(np.mod(best[0], _TWO_PI)), best[1:], 1.0, best_score)


def estimate_scale(observed_depth: DepthMap, rendered_unscaled_depth: DepthMap, mask: Mask) -> float:
    """
    Ratio of the observed to the rendered depth sums over the mask.

    Pixels invalid in either map are left out of both sums.

    Raises
    ------
    InvalidRender
        No usable pixel, or the rendered sum is zero.
    """
    if not (mask.matches(observed_depth) and mask.matches(rendered_unscaled_depth)):
        raise InvalidInput("depth maps and mask differ in size")
    selected = mask.bits & observed_depth.valid & rendered_unscaled_depth.valid
    denominator = float(rendered_unscaled_depth.values[selected].sum())
    if not selected.any() or denominator == 0.0:
        raise InvalidRender("the rendered depth has no valid pixel under the mask")
    return float(observed_depth.values[selected].sum()) / denominator


def align_scale(
    mesh: MeshLike,
    observed_depth: DepthMap,
    observed_mask: Mask,
    intr: CameraIntrinsics,
    extr: t.Optional[CameraExtrinsics] = None,
    yaw_samples: int = PerceptionDefaults.YAW_SAMPLES,
    refine_steps: int = PerceptionDefaults.REFINE_STEPS,
    console: Console = silent,
) -> PoseHypothesis:
    """
    Full placement: pose search, unscaled render, scale from the depth ratio.

    Returns
    -------
    PoseHypothesis
        Scale `s` and the scaled translation `s · t̃` (camera frame); the
        object pose in the world is `object_pose(hypothesis, extr)`.
    """
    camera = extr if extr is not None else CameraExtrinsics.identity()
    unscaled = search_pose(mesh, observed_mask, intr, observed_depth, camera, yaw_samples, refine_steps, console)
    rendered, _ = render_depth(mesh, hypothesis_transform(unscaled.yaw, unscaled.translation, camera), 1.0, intr)
    scale = estimate_scale(observed_depth, rendered, observed_mask)
    console.log(f"scale {scale:.6g}")
    return PoseHypothesis(unscaled.yaw, scale * unscaled.translation, scale, unscaled.score)
