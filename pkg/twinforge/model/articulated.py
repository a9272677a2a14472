"""
Forward kinematics of articulated models.
"""

from __future__ import annotations

__all__ = [
    "forward_kinematics",
    "forward_kinematics_matrices",
    "part_vertices",
    "sample_model_points",
]

import typing as t

import numpy as np

from ..abc.generic import RigidTransform
from ..abc.modals import ArticulatedModel, JointState


def forward_kinematics(model: ArticulatedModel, state: JointState) -> t.List[RigidTransform]:
    """
    World pose of every part.

    The root sits at `base_pose`; a movable part's pose is its parent's pose
    composed with the joint motion at its value.

    Parameters
    ----------
    model : ArticulatedModel
    state : JointState
        One value per movable part.

    Returns
    -------
    List[RigidTransform]
        Indexed by part id.

    Raises
    ------
    JointLimitViolation
        A value lies outside its joint limits.
    """
    return [RigidTransform.from_matrix(h) for h in forward_kinematics_matrices(model, state)]


def forward_kinematics_matrices(
    model: ArticulatedModel, state: JointState, check: bool = True
) -> t.List[np.ndarray]:
    """
    4×4 variant of `forward_kinematics`, used by the simulator.
    """
    if check:
        state.check(model)
    poses: t.List[t.Optional[np.ndarray]] = [None] * len(model.parts)
    poses[0] = model.base_pose.matrix()

    def resolve(part_id: int) -> np.ndarray:
        cached = poses[part_id]
        if cached is not None:
            return cached
        part = model.parts[part_id]
        assert part.joint is not None
        pose = resolve(part.parent) @ part.joint.motion_matrix(state[part_id - 1])
        poses[part_id] = pose
        return pose

    return [resolve(part.id) for part in model.parts]


def part_vertices(model: ArticulatedModel, state: JointState) -> t.List[np.ndarray]:
    """
    World-frame vertices of every part (all convex pieces stacked).
    """
    poses = forward_kinematics_matrices(model, state)
    out = []
    for part, pose in zip(model.parts, poses):
        if part.geometry:
            vertices = np.concatenate([piece.vertices for piece in part.geometry])
        else:
            vertices = np.zeros((0, 3))
        out.append(vertices @ pose[:3, :3].T + pose[:3, 3])
    return out


def sample_model_points(
    model: ArticulatedModel, state: JointState, local_points: t.Sequence[np.ndarray]
) -> t.Tuple[np.ndarray, np.ndarray]:
    """
    Transforms per-part sample points (part frames) to the world.

    Returns
    -------
    Tuple[ndarray, ndarray]
        Stacked N×3 points and their part labels.
    """
    poses = forward_kinematics_matrices(model, state)
    points = []
    labels = []
    for part_id, (pose, local) in enumerate(zip(poses, local_points)):
        points.append(np.asarray(local) @ pose[:3, :3].T + pose[:3, 3])
        labels.append(np.full(len(local), part_id, dtype=np.int64))
    return np.concatenate(points), np.concatenate(labels)
