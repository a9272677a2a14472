"""
Per-part rigid motion estimation and projection onto 1-DoF joints.

- `estimate_part_transform`: correspondence fit or closest-point registration.
- `screw_decompose` / `compose_screw`: rigid motion to screw parameters and back.
- `classify_joint`, `fit_joint`: joint kind, axis, origin and displacements.
- `extract_part_frames`, `build_model`: from segmentation to an articulated model.
- `axis_angle_error`, `origin_axis_distance`: accuracy metrics.
"""

from __future__ import annotations

__all__ = [
    "estimate_part_transform",
    "screw_decompose",
    "compose_screw",
    "classify_joint",
    "fit_joint",
    "extract_part_frames",
    "convex_hull_piece",
    "build_model",
    "axis_angle_error",
    "origin_axis_distance",
]

import math
import typing as t

import numpy as np
import numpy.typing as npt
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.transform import Rotation

from ..abc.generic import ConvexPiece, PointCloud, RigidTransform, as_point
from ..abc.modals import (
    ArticulatedModel,
    Joint,
    JointEstimate,
    JointKind,
    Part,
    RegistrationResult,
    ScrewMotion,
    SegmentationLabels,
    SubPart,
)
from ..core.console import Console, silent
from ..core.defaults import PerceptionDefaults
from ..core.errors import (
    ConflictingEvidence,
    IncompleteModel,
    InsufficientMotion,
    InvalidInput,
)
from ..geometry.cloud import CloudIndex, chamfer_directed, fit_rigid_transform

_PURE_TRANSLATION = 1e-8
_STATIC_DISTANCE = 0.01


def estimate_part_transform(
    part_points_prev: PointCloud,
    part_points_cur: PointCloud,
    correspondences: t.Optional[npt.ArrayLike] = None,
    max_iterations: int = PerceptionDefaults.ICP_MAX_ITERATIONS,
    tolerance: float = PerceptionDefaults.ICP_TOLERANCE,
    initial: t.Optional[RigidTransform] = None,
) -> RegistrationResult:
    """
    Rigid transform taking the previous part points onto the current ones.

    Parameters
    ----------
    part_points_prev, part_points_cur : PointCloud
    correspondences : Optional[array]
        M×2 index pairs `(prev, cur)`. Given, a single least-squares fit is made.
        Otherwise closest-point registration runs from `initial` (identity).
    max_iterations : int
    tolerance : float
        Stop once the mean residual changes by less than this, meters.
    initial : Optional[RigidTransform]

    Returns
    -------
    RegistrationResult
        The lowest-residual transform seen, with `converged` False when the
        iteration cap was hit first.
    """
    part_points_prev.require_points("previous part cloud")
    part_points_cur.require_points("current part cloud")
    source = part_points_prev.points
    target = part_points_cur.points
    if correspondences is not None:
        pairs = np.asarray(correspondences, dtype=np.int64).reshape(-1, 2)
        transform = fit_rigid_transform(source[pairs[:, 0]], target[pairs[:, 1]])
        residual = float(np.linalg.norm(transform.apply(source[pairs[:, 0]]) - target[pairs[:, 1]], axis=1).mean())
        return RegistrationResult(transform, True, 1, residual)

    index = CloudIndex(target)
    transform = initial if initial is not None else RigidTransform.identity()
    best, best_error = transform, math.inf
    previous_error = math.inf
    for iteration in range(1, max_iterations + 1):
        matched, distances = index.query(transform.apply(source))
        error = float(distances.mean())
        if error < best_error:
            best, best_error = transform, error
        if abs(previous_error - error) < tolerance:
            return RegistrationResult(best, True, iteration, best_error)
        previous_error = error
        transform = fit_rigid_transform(source, target[matched])
    return RegistrationResult(best, False, max_iterations, best_error)


def screw_decompose(transform: RigidTransform) -> ScrewMotion:
    """
    Screw parameters of a rigid motion.

    The axis origin is the minimum-norm solution of `(I − R) o = t⊥`, i.e. the
    point of the axis closest to the coordinate origin. A rotation below
    1e-8 rad is treated as a pure translation with axis `t / ‖t‖` and origin 0.

    Example
    -------
    ```python
    screw = screw_decompose(RigidTransform.about_axis([0, 0, 1], np.pi / 4, [1, 2, 0]))
    screw.axis_origin  # -> [1, 2, 0]
    ```
    """
    rotvec = Rotation.from_matrix(transform.rotation).as_rotvec()
    angle = float(np.linalg.norm(rotvec))
    t_vec = transform.translation
    if angle < _PURE_TRANSLATION:
        length = float(np.linalg.norm(t_vec))
        axis = t_vec / length if length > 0 else np.array([0.0, 0.0, 1.0])
        return ScrewMotion(0.0, axis, np.zeros(3), length)
    axis = rotvec / angle
    along = float(axis @ t_vec)
    perpendicular = t_vec - along * axis
    origin, *_ = np.linalg.lstsq(np.eye(3) - transform.rotation, perpendicular, rcond=None)
    origin = origin - (origin @ axis) * axis
    return ScrewMotion(angle, axis, origin, along)


def compose_screw(screw: ScrewMotion) -> RigidTransform:
    """
    Inverse of `screw_decompose`.
    """
    rotation = Rotation.from_rotvec(screw.rotation_axis * screw.rotation_angle).as_matrix()
    origin = screw.axis_origin
    return RigidTransform(rotation, origin - rotation @ origin + screw.translation_along_axis * screw.rotation_axis)


def classify_joint(screw: ScrewMotion, angle_threshold: float = PerceptionDefaults.ANGLE_THRESHOLD) -> JointKind:
    """
    Prismatic when the rotation is below `angle_threshold`, revolute otherwise.

    Raises
    ------
    InsufficientMotion
        Both the rotation and the translation (5 mm) are below their floors.
    """
    translation = float(np.linalg.norm(compose_screw(screw).translation))
    if screw.rotation_angle <= angle_threshold and translation <= PerceptionDefaults.TRANSLATION_FLOOR:
        raise InsufficientMotion(
            f"rotation {math.degrees(screw.rotation_angle):.3f} deg and translation {translation * 1000:.2f} mm "
            "are below the motion floor; interact with the part again"
        )
    return "prismatic" if screw.rotation_angle < angle_threshold else "revolute"


class _PairMotion(t.NamedTuple):
    frame: int
    kind: JointKind
    axis: np.ndarray
    origin: np.ndarray
    amount: float
    extent: float
    """
    Mean point displacement, used to rank pairs.
    """


def _pair_motion(
    frame: int, transform: RigidTransform, points: np.ndarray, angle_threshold: float
) -> t.Optional[_PairMotion]:
    screw = screw_decompose(transform)
    extent = float(np.linalg.norm(transform.apply(points) - points, axis=1).mean())
    try:
        kind = classify_joint(screw, angle_threshold)
    except InsufficientMotion:
        return None
    if kind == "prismatic":
        length = float(np.linalg.norm(transform.translation))
        return _PairMotion(frame, kind, transform.translation / length, np.zeros(3), length, extent)
    return _PairMotion(frame, kind, screw.rotation_axis, screw.axis_origin, screw.rotation_angle, extent)


def _residual(
    joint: Joint, displacement: t.Sequence[float], clouds: t.Sequence[PointCloud], corresponded: bool
) -> float:
    distances = []
    for value, cloud in zip(displacement[1:], clouds[1:]):
        moved = joint.motion(value).apply(clouds[0].points)
        if corresponded:
            distances.append(np.linalg.norm(moved - cloud.points, axis=1))
        else:
            distances.append(chamfer_directed(moved, cloud))
    return float(np.concatenate(distances).mean()) if distances else 0.0


def fit_joint(
    frames: t.Sequence[PointCloud],
    corresponded: bool = False,
    base_alignment: t.Optional[t.Sequence[RigidTransform]] = None,
    angle_threshold: float = PerceptionDefaults.ANGLE_THRESHOLD,
    console: Console = silent,
) -> JointEstimate:
    """
    Fits one joint to the per-frame clouds of one part.

    Consecutive frames are registered; pairs without motion are skipped. The
    kind comes from the largest motion and must agree with every other moving
    pair. The axis is the sign-aligned mean of the pair axes; a revolute origin
    is the least-squares point nearest to every pair axis, moved along the axis
    to the point closest to the coordinate origin.

    Parameters
    ----------
    frames : Sequence[PointCloud]
        The part's points in every frame.
    corresponded : bool
        Point `i` is the same surface point in every frame.
    base_alignment : Optional[Sequence[RigidTransform]]
        Per-frame transforms into the frame-0 coordinates of the root.
    angle_threshold : float
    console : Console

    Returns
    -------
    JointEstimate
        Displacements relative to frame 0.

    Raises
    ------
    InsufficientMotion
        No pair of frames shows motion.
    ConflictingEvidence
        Moving pairs disagree on the joint kind.
    """
    if len(frames) < 2:
        raise InvalidInput("joint fitting needs at least 2 frames")
    if base_alignment is not None:
        if len(base_alignment) != len(frames):
            raise InvalidInput("one base alignment per frame is required")
        frames = [frame.transformed(align) for frame, align in zip(frames, base_alignment)]
    if corresponded and len({len(frame) for frame in frames}) != 1:
        raise InvalidInput("corresponded frames must have equal point counts")

    motions: t.List[t.Optional[_PairMotion]] = []
    for k in range(1, len(frames)):
        identity_pairs = np.repeat(np.arange(len(frames[k]))[:, None], 2, axis=1) if corresponded else None
        registration = estimate_part_transform(frames[k - 1], frames[k], identity_pairs)
        motions.append(_pair_motion(k, registration.transform, frames[k - 1].points, angle_threshold))
    moving = [motion for motion in motions if motion is not None]
    if not moving:
        raise InsufficientMotion("the part does not move between any pair of frames")

    reference = max(moving, key=lambda motion: motion.extent)
    kind = reference.kind
    if any(motion.kind != kind for motion in moving):
        pairs = [(motion.frame, motion.kind) for motion in moving]
        raise ConflictingEvidence(f"frame pairs disagree on the joint kind: {pairs}", pairs)

    signs = [1.0 if motion.axis @ reference.axis >= 0 else -1.0 for motion in moving]
    axis = np.sum([sign * motion.axis for sign, motion in zip(signs, moving)], axis=0)
    axis /= np.linalg.norm(axis)

    origin = np.zeros(3)
    if kind == "revolute":
        projectors = [np.eye(3) - np.outer(motion.axis, motion.axis) for motion in moving]
        lhs = np.sum(projectors, axis=0)
        rhs = np.sum([p @ motion.origin for p, motion in zip(projectors, moving)], axis=0)
        origin, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
        origin = origin - (origin @ axis) * axis

    steps = dict((motion.frame, sign * motion.amount) for sign, motion in zip(signs, moving))
    displacement = [0.0]
    for k in range(1, len(frames)):
        displacement.append(displacement[-1] + steps.get(k, 0.0))
    joint = Joint(kind, axis, origin, min(displacement), max(displacement))
    residual = _residual(joint, displacement, frames, corresponded)
    console.log(f"fitted {kind} joint, axis {np.round(axis, 4).tolist()}, residual {residual * 1000:.3f} mm")
    return JointEstimate(kind, axis, origin if kind == "revolute" else None, displacement, residual)


def extract_part_frames(
    frames: t.Sequence[PointCloud],
    segmentation: SegmentationLabels,
    label: int,
    corresponded: bool = False,
) -> t.List[PointCloud]:
    """
    The points of movable part `label` in every frame.

    With `corresponded`, the final labels select the same indices in every
    frame. Otherwise frames from `label` on use their own labels; the frame
    before holds the part at its old place, found as the points more than
    1 cm away from the current static remainder, and earlier frames repeat it.
    """
    if not 1 <= label <= segmentation.part_count:
        raise InvalidInput(f"label {label} is not a movable part")
    if corresponded:
        if any(len(frame) != len(segmentation.labels) for frame in frames):
            raise InvalidInput("corresponded frames must match the label count")
        selected = np.flatnonzero(segmentation.labels == label)
        return [frame.subset(selected) for frame in frames]
    if len(segmentation.history) != len(frames):
        raise InvalidInput("segmentation history does not match the frame count")
    out: t.List[t.Optional[PointCloud]] = [None] * len(frames)
    for k in range(label, len(frames)):
        out[k] = frames[k].subset(np.flatnonzero(segmentation.history[k] == label))
    cur = frames[label]
    static = cur.subset(np.flatnonzero(segmentation.history[label] != label))
    before = frames[label - 1]
    if len(static):
        _, gaps = CloudIndex(static).query(before)
        old_place = before.subset(np.flatnonzero(gaps > _STATIC_DISTANCE))
    else:
        old_place = before
    if len(old_place) == 0:
        raise InsufficientMotion(f"part {label} left no trace of its previous place")
    for k in range(label):
        out[k] = old_place
    return [cloud for cloud in out if cloud is not None]


def convex_hull_piece(points: npt.ArrayLike) -> t.Optional[ConvexPiece]:
    """
    Convex hull with outward-facing triangles; None for fewer than 4 points.
    Flat or degenerate sets are hulled with joggled input.
    """
    array = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(array) < 4:
        return None
    try:
        hull = ConvexHull(array)
    except QhullError:
        try:
            hull = ConvexHull(array, qhull_options="QJ")
        except QhullError:
            return None
    used = np.unique(hull.simplices)
    remap = np.full(len(array), -1, dtype=np.int64)
    remap[used] = np.arange(used.size)
    vertices = array[used]
    triangles = remap[hull.simplices]
    center = vertices.mean(axis=0)
    corners = vertices[triangles]
    normals = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    inward = np.einsum("ij,ij->i", normals, corners.mean(axis=1) - center) < 0
    triangles[inward] = triangles[inward][:, ::-1]
    return ConvexPiece(vertices, triangles)


def _hulls(points: np.ndarray, groups: t.Sequence[np.ndarray]) -> t.List[ConvexPiece]:
    pieces = [convex_hull_piece(points[group]) for group in groups if group.size]
    return [piece for piece in pieces if piece is not None]


def build_model(
    segmentation: SegmentationLabels,
    frames: t.Sequence[PointCloud],
    joint_estimates: t.Union[t.Sequence[JointEstimate], t.Mapping[int, JointEstimate]],
    subparts: t.Optional[t.Sequence[SubPart]] = None,
    meshes: t.Optional[t.Mapping[int, t.Sequence[ConvexPiece]]] = None,
    margin: float = PerceptionDefaults.LIMIT_MARGIN,
) -> ArticulatedModel:
    """
    Assembles a star-shaped model at the frame-0 configuration.

    Parameters
    ----------
    segmentation : SegmentationLabels
        Labels of the last frame.
    frames : Sequence[PointCloud]
        Every frame; geometry is taken from the last one.
    joint_estimates : Sequence or Mapping of JointEstimate
        One estimate per movable label; a sequence is indexed by `label - 1`.
    subparts : Optional[Sequence[SubPart]]
        Sub-parts of the last frame; every one becomes a convex piece of the
        part owning its points. Without them each part is one hull.
    meshes : Optional[Mapping[int, Sequence[ConvexPiece]]]
        Geometry per part id (part frame) replacing the hulls.
    margin : float
        Joint limits widen the observed range by this fraction on each side.

    Raises
    ------
    IncompleteModel
        A movable label has no estimate.
    """
    if not frames:
        raise InvalidInput("at least one frame is required")
    final = frames[-1]
    if len(final) != len(segmentation.labels):
        raise InvalidInput("labels do not match the last frame")
    count = segmentation.part_count
    estimates = dict(joint_estimates) if isinstance(joint_estimates, t.Mapping) else {
        index + 1: estimate for index, estimate in enumerate(joint_estimates)
    }
    missing = [label for label in range(1, count + 1) if label not in estimates]
    if missing:
        raise IncompleteModel(f"no joint estimate for movable parts {missing}")

    parts = []
    for label in range(count + 1):
        joint: t.Optional[Joint] = None
        points = final.points
        if label > 0:
            estimate = estimates[label]
            joint = estimate.as_joint(margin)
            # back to the frame-0 configuration
            points = joint.motion(estimate.observed_displacement[-1]).inverse().apply(final.points)
        if meshes is not None and label in meshes:
            geometry = list(meshes[label])
        else:
            owned = segmentation.labels == label
            if subparts is not None:
                groups = [sp.point_indices[owned[sp.point_indices]] for sp in subparts]
            else:
                groups = [np.flatnonzero(owned)]
            geometry = _hulls(points, groups)
        parts.append(Part(label, -1 if label == 0 else 0, geometry, joint))
    return ArticulatedModel(parts)


def axis_angle_error(estimated: npt.ArrayLike, truth: npt.ArrayLike) -> float:
    """
    Angle between two axis directions in radians, ignoring orientation.
    """
    a = as_point(estimated, "estimated axis")
    b = as_point(truth, "true axis")
    cos = abs(float(a @ b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    return float(np.arccos(min(cos, 1.0)))


def origin_axis_distance(point: npt.ArrayLike, axis_origin: npt.ArrayLike, axis: npt.ArrayLike) -> float:
    """
    Distance from `point` to the line through `axis_origin` along `axis`.
    """
    p = as_point(point) - as_point(axis_origin, "axis origin")
    direction = as_point(axis, "axis")
    direction = direction / np.linalg.norm(direction)
    return float(np.linalg.norm(p - (p @ direction) * direction))
