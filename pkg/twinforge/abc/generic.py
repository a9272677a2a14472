"""
Geometric primitives shared by every module.

- `RigidTransform`: rotation plus translation in SE(3).
- `PointCloud`: N×3 points with optional integer labels.
- `CameraIntrinsics` / `CameraExtrinsics`: pinhole camera model.
- `DepthMap` / `Mask`: per-pixel depth in meters and boolean masks.
- `PixelAffordance`, `ProjectionPlane`, `Affordance3D`: affordance geometry.
- `ConvexPiece`: a convex triangle mesh.

Array-holding structs copy their inputs into read-only float64 arrays and
compare by identity.
"""

from __future__ import annotations

__all__ = [
    "Point3",
    "as_point",
    "as_points",
    "readonly",
    "RigidTransform",
    "PointCloud",
    "CameraIntrinsics",
    "CameraExtrinsics",
    "DepthMap",
    "Mask",
    "PixelAffordance",
    "ProjectionPlane",
    "Affordance3D",
    "ConvexPiece",
]

import typing as t

import msgspec
import numpy as np
import numpy.typing as npt

from ..core.defaults import GeometryDefaults
from ..core.errors import InvalidInput, InvalidTransform

Point3 = npt.NDArray[np.float64]
"""
A finite 3-vector in meters.
"""


def readonly(array: npt.ArrayLike, dtype: t.Any = np.float64) -> np.ndarray:
    out = np.array(array, dtype=dtype)
    out.flags.writeable = False
    return out


def as_point(value: npt.ArrayLike, name: str = "point") -> Point3:
    point = np.asarray(value, dtype=np.float64).reshape(-1)
    if point.shape != (3,):
        raise InvalidInput(f"{name} must have 3 components, got {point.shape[0]}")
    if not np.all(np.isfinite(point)):
        raise InvalidInput(f"{name} has non-finite components")
    return point


def as_points(value: npt.ArrayLike, name: str = "points") -> np.ndarray:
    points = np.asarray(value, dtype=np.float64)
    if points.ndim == 1 and points.size == 0:
        points = points.reshape(0, 3)
    if points.ndim != 2 or points.shape[1] != 3:
        raise InvalidInput(f"{name} must be an N×3 array, got shape {points.shape}")
    if not np.all(np.isfinite(points)):
        raise InvalidInput(f"{name} has non-finite coordinates")
    return points


def _check_rotation(rotation: np.ndarray) -> None:
    if rotation.shape != (3, 3) or not np.all(np.isfinite(rotation)):
        raise InvalidTransform(f"rotation must be a finite 3×3 matrix, got shape {rotation.shape}")
    tol = GeometryDefaults.ROTATION_TOLERANCE
    if np.max(np.abs(rotation.T @ rotation - np.eye(3))) > tol:
        raise InvalidTransform("rotation is not orthonormal")
    if abs(np.linalg.det(rotation) - 1.0) > tol:
        raise InvalidTransform("rotation has determinant different from +1")


class RigidTransform(msgspec.Struct, eq=False):
    """
    A rigid motion `x -> R x + t`.

    Parameters
    ----------
    rotation : ndarray
        3×3 orthonormal matrix with determinant +1.
    translation : ndarray
        Translation in meters.

    Example
    -------
    ```python
    quarter = RigidTransform.from_rotvec([0, 0, np.pi / 2])
    quarter.apply([1.0, 0.0, 0.0])  # -> [0, 1, 0]
    ```
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        self.rotation = readonly(self.rotation)
        self.translation = readonly(np.reshape(self.translation, -1))
        _check_rotation(self.rotation)
        if self.translation.shape != (3,) or not np.all(np.isfinite(self.translation)):
            raise InvalidTransform("translation must be a finite 3-vector")

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix: npt.ArrayLike) -> RigidTransform:
        """
        Builds the transform from a 4×4 homogeneous matrix.
        """
        h = np.asarray(matrix, dtype=np.float64)
        if h.shape != (4, 4):
            raise InvalidTransform(f"homogeneous matrix must be 4×4, got {h.shape}")
        if np.max(np.abs(h[3] - np.array([0.0, 0.0, 0.0, 1.0]))) > GeometryDefaults.ROTATION_TOLERANCE:
            raise InvalidTransform("bottom row must be (0, 0, 0, 1)")
        return cls(h[:3, :3], h[:3, 3])

    @classmethod
    def from_rotvec(
        cls, rotvec: npt.ArrayLike, translation: npt.ArrayLike = (0.0, 0.0, 0.0)
    ) -> RigidTransform:
        from scipy.spatial.transform import Rotation

        return cls(Rotation.from_rotvec(np.asarray(rotvec, dtype=np.float64)).as_matrix(), translation)

    @classmethod
    def about_axis(cls, axis: npt.ArrayLike, angle: float, origin: npt.ArrayLike) -> RigidTransform:
        """
        Rotation by `angle` about the line through `origin` with direction `axis`.
        """
        from scipy.spatial.transform import Rotation

        direction = np.asarray(axis, dtype=np.float64)
        direction = direction / np.linalg.norm(direction)
        rotation = Rotation.from_rotvec(direction * angle).as_matrix()
        point = np.asarray(origin, dtype=np.float64)
        return cls(rotation, point - rotation @ point)

    def matrix(self) -> np.ndarray:
        h = np.eye(4)
        h[:3, :3] = self.rotation
        h[:3, 3] = self.translation
        return h

    def apply(self, points: npt.ArrayLike) -> np.ndarray:
        """
        Applies the transform to one point or an N×3 array of points.
        """
        array = np.asarray(points, dtype=np.float64)
        return array @ self.rotation.T + self.translation

    def apply_direction(self, vectors: npt.ArrayLike) -> np.ndarray:
        return np.asarray(vectors, dtype=np.float64) @ self.rotation.T

    def compose(self, other: RigidTransform) -> RigidTransform:
        """
        Returns `self ∘ other`: `other` is applied first.
        """
        return RigidTransform(self.rotation @ other.rotation, self.rotation @ other.translation + self.translation)

    def inverse(self) -> RigidTransform:
        return RigidTransform(self.rotation.T, -self.rotation.T @ self.translation)


class PointCloud(msgspec.Struct, eq=False):
    """
    An ordered set of points, optionally labeled.

    Parameters
    ----------
    points : ndarray
        N×3 coordinates in meters.
    labels : Optional[ndarray]
        N non-negative integers.
    """

    points: np.ndarray
    labels: t.Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.points = readonly(as_points(self.points))
        if self.labels is not None:
            labels = np.asarray(self.labels).reshape(-1)
            if labels.shape[0] != self.points.shape[0]:
                raise InvalidInput(f"{labels.shape[0]} labels for {self.points.shape[0]} points")
            if labels.size and (np.any(labels < 0) or np.any(labels != np.round(labels))):
                raise InvalidInput("labels must be non-negative integers")
            self.labels = readonly(labels, np.int64)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def require_points(self, name: str = "cloud") -> None:
        if len(self) == 0:
            raise InvalidInput(f"{name} is empty")

    def subset(self, indices: npt.ArrayLike) -> PointCloud:
        idx = np.asarray(indices, dtype=np.int64)
        labels = None if self.labels is None else self.labels[idx]
        return PointCloud(self.points[idx], labels)

    def transformed(self, transform: RigidTransform) -> PointCloud:
        return PointCloud(transform.apply(self.points), self.labels)


class CameraIntrinsics(msgspec.Struct, frozen=True):
    """
    Pinhole intrinsics. Pixel centers sit at integer coordinates.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidInput("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise InvalidInput("image size must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise InvalidInput("principal point must lie inside the image")

    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def contains(self, u: float, v: float) -> bool:
        return bool(0 <= u <= self.width - 1 and 0 <= v <= self.height - 1)


class CameraExtrinsics(msgspec.Struct, eq=False):
    """
    Homogeneous transform `H` mapping robot-base coordinates into the camera
    frame (x right, y down, z forward).
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        self.matrix = readonly(np.reshape(self.matrix, (4, 4)))
        self.base_to_camera()

    @classmethod
    def identity(cls) -> CameraExtrinsics:
        return cls(np.eye(4))

    def base_to_camera(self) -> RigidTransform:
        return RigidTransform.from_matrix(self.matrix)

    def camera_to_base(self) -> RigidTransform:
        return self.base_to_camera().inverse()

    @property
    def camera_origin(self) -> Point3:
        """
        Optical center in the base frame (`o_c0`).
        """
        return self.camera_to_base().translation.copy()


class DepthMap(msgspec.Struct, eq=False):
    """
    Row-major depths in meters; 0 marks an invalid pixel.
    """

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.size != self.width * self.height:
            raise InvalidInput(f"depth has {values.size} values for a {self.width}×{self.height} image")
        values = values.reshape(self.height, self.width)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise InvalidInput("depth values must be finite and non-negative")
        self.values = readonly(values)

    @classmethod
    def empty(cls, width: int, height: int) -> DepthMap:
        return cls(width, height, np.zeros((height, width)))

    @property
    def valid(self) -> np.ndarray:
        return self.values > 0


class Mask(msgspec.Struct, eq=False):
    """
    Row-major boolean mask.
    """

    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=bool)
        if bits.size != self.width * self.height:
            raise InvalidInput(f"mask has {bits.size} bits for a {self.width}×{self.height} image")
        self.bits = readonly(bits.reshape(self.height, self.width), bool)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def matches(self, depth: DepthMap) -> bool:
        return self.width == depth.width and self.height == depth.height


class PixelAffordance(msgspec.Struct, frozen=True):
    """
    A 2D contact pixel and post-contact trajectory vector.
    """

    contact: t.Tuple[float, float]
    trajectory: t.Tuple[float, float]

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.contact + self.trajectory)):
            raise InvalidInput("affordance values must be finite")
        if self.trajectory[0] == 0.0 and self.trajectory[1] == 0.0:
            raise InvalidInput("affordance trajectory must be non-zero")

    @property
    def endpoint(self) -> t.Tuple[float, float]:
        return (self.contact[0] + self.trajectory[0], self.contact[1] + self.trajectory[1])


class ProjectionPlane(msgspec.Struct, eq=False):
    """
    Plane through the camera center, the contact point and the trajectory.
    """

    normal: np.ndarray
    anchor: np.ndarray

    def __post_init__(self) -> None:
        normal = as_point(self.normal, "normal")
        if abs(np.linalg.norm(normal) - 1.0) > 1e-9:
            raise InvalidInput("plane normal must be a unit vector")
        self.normal = readonly(normal)
        self.anchor = readonly(as_point(self.anchor, "anchor"))


class Affordance3D(msgspec.Struct, eq=False):
    """
    3D contact point and unit post-contact direction in the base frame.
    """

    contact: np.ndarray
    direction: np.ndarray

    def __post_init__(self) -> None:
        self.contact = readonly(as_point(self.contact, "contact"))
        direction = as_point(self.direction, "direction")
        if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
            raise InvalidInput("direction must be a unit vector")
        self.direction = readonly(direction)


class ConvexPiece(msgspec.Struct, eq=False):
    """
    Convex triangle mesh: vertices plus integer triangle indices.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self) -> None:
        self.vertices = readonly(as_points(self.vertices, "vertices"))
        triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(self.vertices)):
            raise InvalidInput("triangle index out of range")
        self.triangles = readonly(triangles, np.int64)

    @classmethod
    def box(cls, lower: npt.ArrayLike, upper: npt.ArrayLike) -> ConvexPiece:
        """
        Axis-aligned box with outward-facing triangles.
        """
        lo = np.asarray(lower, dtype=np.float64)
        hi = np.asarray(upper, dtype=np.float64)
        corners = np.array([[(hi if (i >> k) & 1 else lo)[k] for k in range(3)] for i in range(8)])
        faces = np.array(
            [
                [0, 2, 1], [1, 2, 3],  # z- (corners 0..3 have bit2 = 0)
                [4, 5, 6], [5, 7, 6],  # z+
                [0, 1, 4], [1, 5, 4],  # y-
                [2, 6, 3], [3, 6, 7],  # y+
                [0, 4, 2], [2, 4, 6],  # x-
                [1, 3, 5], [3, 7, 5],  # x+
            ]
        )
        return cls(corners, faces)

    def transformed(self, transform: RigidTransform) -> ConvexPiece:
        return ConvexPiece(transform.apply(self.vertices), self.triangles)

    def triangle_vertices(self) -> np.ndarray:
        """
        F×3×3 array of triangle corners.
        """
        return self.vertices[self.triangles]
