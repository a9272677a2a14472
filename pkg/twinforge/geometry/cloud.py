"""
Nearest neighbors, directed chamfer distances and rigid registration.
"""

from __future__ import annotations

__all__ = [
    "CloudIndex",
    "nearest_neighbors",
    "chamfer_directed",
    "fit_rigid_transform",
    "transform_error",
]

import typing as t

import numpy as np
import numpy.typing as npt
from scipy.spatial import cKDTree

from ..abc.generic import PointCloud, RigidTransform, as_points
from ..core.defaults import GeometryDefaults
from ..core.errors import InvalidInput, RankDeficiency

CloudLike = t.Union[PointCloud, npt.ArrayLike]

_TIE_CANDIDATES = 8
_TIE_SLACK = 1e-9


def _points(cloud: CloudLike, name: str) -> np.ndarray:
    points = cloud.points if isinstance(cloud, PointCloud) else as_points(cloud, name)
    if points.shape[0] == 0:
        raise InvalidInput(f"{name} cloud is empty")
    return points


class CloudIndex:
    """
    Exact k-d tree over one cloud, reusable across queries.

    Parameters
    ----------
    cloud : PointCloud or array
        Target points.
    """

    def __init__(self, cloud: CloudLike) -> None:
        self.points = _points(cloud, "target")
        self.tree = cKDTree(self.points)

    def query(self, query: CloudLike) -> t.Tuple[np.ndarray, np.ndarray]:
        """
        Nearest target index and Euclidean distance for each query point.
        Equidistant targets resolve to the lowest index.
        """
        points = _points(query, "query")
        k = min(_TIE_CANDIDATES, self.points.shape[0])
        distances, indices = self.tree.query(points, k=k)
        if k == 1:
            return indices.astype(np.int64), distances.astype(np.float64)
        # recompute exactly so equal distances compare equal
        exact = np.linalg.norm(self.points[indices] - points[:, None, :], axis=2)
        best = exact.min(axis=1, keepdims=True)
        tied = np.where(exact == best, indices, np.iinfo(np.int64).max)
        chosen = tied.min(axis=1)
        if k < self.points.shape[0]:
            # every candidate tied: more equidistant targets may lie past the k nearest
            for row in np.flatnonzero(exact[:, -1] <= best[:, 0] * (1.0 + _TIE_SLACK)):
                chosen[row] = self._lowest_within(points[row], best[row, 0])
        return chosen.astype(np.int64), best[:, 0]

    def _lowest_within(self, point: np.ndarray, radius: float) -> int:
        within = self.tree.query_ball_point(point, radius * (1.0 + _TIE_SLACK) + 1e-12)
        candidates = np.asarray(within, dtype=np.int64)
        exact = np.linalg.norm(self.points[candidates] - point, axis=1)
        return int(candidates[exact == exact.min()].min())


def nearest_neighbors(query: CloudLike, target: CloudLike) -> t.Tuple[np.ndarray, np.ndarray]:
    """
    For each query point, the index of its nearest target point and the distance.

    Parameters
    ----------
    query, target : PointCloud or N×3 array
        Non-empty clouds.

    Returns
    -------
    Tuple[ndarray, ndarray]
        Indices into `target` (ties broken by lowest index) and distances in meters.
    """
    return CloudIndex(target).query(query)


def chamfer_directed(source: CloudLike, target: CloudLike) -> np.ndarray:
    """
    Distance from every source point to its nearest target point, in source order.
    """
    _, distances = nearest_neighbors(source, target)
    return distances


def fit_rigid_transform(source_pts: npt.ArrayLike, target_pts: npt.ArrayLike) -> RigidTransform:
    """
    Least-squares rigid transform mapping ordered `source_pts` onto `target_pts`.

    SVD solution with reflection correction, no scale.

    Raises
    ------
    InvalidInput
        Different lengths or fewer than 3 points.
    RankDeficiency
        Coincident or collinear source points.
    """
    src = as_points(source_pts, "source")
    dst = as_points(target_pts, "target")
    if src.shape != dst.shape:
        raise InvalidInput(f"{len(src)} source points for {len(dst)} target points")
    if src.shape[0] < 3:
        raise InvalidInput("at least 3 correspondences are required")
    src_mean = src.mean(axis=0)
    dst_mean = dst.mean(axis=0)
    src_c = src - src_mean
    dst_c = dst - dst_mean
    spread = np.linalg.svd(src_c, compute_uv=False)
    if spread[0] <= 1e-12 or spread[1] <= GeometryDefaults.RANK_RATIO * spread[0]:
        raise RankDeficiency("source points are coincident or collinear")
    u, _, vt = np.linalg.svd(src_c.T @ dst_c)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0:
        d = 1.0
    correction = np.diag([1.0, 1.0, d])
    rotation = vt.T @ correction @ u.T
    translation = dst_mean - rotation @ src_mean
    return RigidTransform(rotation, translation)


def transform_error(a: RigidTransform, b: RigidTransform) -> t.Tuple[float, float]:
    """
    Rotation angle (radians) of `a⁻¹ b` and translation distance between `a` and `b`.
    """
    relative = a.rotation.T @ b.rotation
    cos = np.clip((np.trace(relative) - 1.0) / 2.0, -1.0, 1.0)
    return float(np.arccos(cos)), float(np.linalg.norm(a.translation - b.translation))
