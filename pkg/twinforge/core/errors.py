"""
Exceptions raised across twinforge.

Every documented failure has its own class so the command line can report the
error by name. All of them derive from `TwinforgeError`.
"""

from __future__ import annotations

__all__ = [
    "TwinforgeError",
    "InvalidInput",
    "InvalidDepth",
    "OutOfFrustum",
    "RankDeficiency",
    "InvalidTransform",
    "EmptyWarp",
    "DegeneratePlane",
    "IllConditionedIntersection",
    "JointLimitViolation",
    "UrdfParseError",
    "UnsupportedJoint",
    "CyclicPartGraph",
    "InsufficientMotion",
    "ConflictingEvidence",
    "IncompleteModel",
    "AlignmentFailure",
    "InvalidRender",
    "ConfigError",
    "FileFormatError",
]

import typing as t


class TwinforgeError(Exception):
    """
    Base class of every domain error.

    The CLI turns any subclass into exit code 1.
    """

    ...


class InvalidInput(TwinforgeError):
    """
    Empty clouds, mismatched lengths, non-finite coordinates or frame/contact
    counts that do not line up.
    """

    ...


class InvalidDepth(TwinforgeError):
    """
    A depth value was zero, negative or not finite where a valid depth is required.
    """

    ...


class OutOfFrustum(TwinforgeError):
    """
    The point lies behind the camera (camera-frame z <= 0) and cannot be projected.
    """

    ...


class RankDeficiency(TwinforgeError):
    """
    Point sets are coincident or collinear, so a rigid transform is not determined.
    """

    ...


class InvalidTransform(TwinforgeError):
    """
    A rotation is not orthonormal with determinant +1, or a homogeneous matrix
    has a bad bottom row.
    """

    ...


class EmptyWarp(TwinforgeError):
    """
    No masked pixel of the real view lands inside the virtual camera.
    """

    ...


class DegeneratePlane(TwinforgeError):
    """
    The back-projected trajectory runs along the viewing ray of the contact,
    so the projection plane has no normal.
    """

    ...


class IllConditionedIntersection(TwinforgeError):
    """
    The real and virtual projection planes are (nearly) parallel.

    Move the virtual camera and try again.
    """

    ...


class JointLimitViolation(TwinforgeError):
    """
    A joint value lies outside its limits.
    """

    ...


class UrdfParseError(TwinforgeError):
    """
    The URDF text is not well formed XML or misses a required element.
    """

    ...


class UnsupportedJoint(UrdfParseError):
    """
    The joint type is outside the supported subset (prismatic, revolute and the
    base `fixed` joint).
    """

    ...


class CyclicPartGraph(UrdfParseError):
    """
    The link/joint graph is not a tree.
    """

    ...


class InsufficientMotion(TwinforgeError):
    """
    The observed motion is below both the rotation and the translation floor.

    Interact with the part again.
    """

    ...


class ConflictingEvidence(TwinforgeError):
    """
    Frame pairs disagree on whether the joint is prismatic or revolute.
    """

    def __init__(self, message: str, pairs: t.Sequence[t.Tuple[int, str]]) -> None:
        super().__init__(message)
        self.pairs = list(pairs)


class IncompleteModel(TwinforgeError):
    """
    A movable label has no joint estimate.
    """

    ...


class AlignmentFailure(TwinforgeError):
    """
    No pose hypothesis reaches the minimum silhouette IoU.
    """

    ...


class InvalidRender(TwinforgeError):
    """
    The rendered depth selects no valid pixel, so the scale ratio is undefined.
    """

    ...


class ConfigError(TwinforgeError):
    """
    A configuration value is out of range, or a reward family was asked for a
    different effector.
    """

    ...


class FileFormatError(TwinforgeError):
    """
    An input file does not follow its documented format.
    """

    ...
