"""
Movable part segmentation from K + 1 frames of one articulated object.

Between frames k - 1 and k the robot moved exactly one part. Every sub-part of
frame k is tested for motion; moved sub-parts reachable from the one the robot
touched take label k, the rest inherit the label of the nearest frame k - 1
point.
"""

from __future__ import annotations

__all__ = [
    "cluster_subparts",
    "build_subpart_graph",
    "closest_subpart",
    "is_moved",
    "segment_movable_parts",
]

import collections
import typing as t

import numpy as np
import numpy.typing as npt
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.stats import ks_2samp

from ..abc.configs import MovedCriterion
from ..abc.generic import PointCloud, as_point
from ..abc.modals import SegmentationLabels, SubPart, SubPartGraph
from ..core.console import Console, silent
from ..core.defaults import PerceptionDefaults
from ..core.errors import InvalidInput
from ..geometry.cloud import CloudIndex, nearest_neighbors


def cluster_subparts(cloud: PointCloud, radius: float = PerceptionDefaults.CLUSTER_RADIUS) -> t.List[SubPart]:
    """
    Euclidean region growing: points closer than `radius` share a sub-part.

    Sub-parts are numbered in the order of their lowest point index, so the
    result only depends on the point order.

    Example
    -------
    ```python
    subparts = cluster_subparts(frame, radius=0.015)
    ```
    """
    if not radius > 0:
        raise InvalidInput("cluster radius must be positive")
    n = len(cloud)
    if n == 0:
        return []
    pairs = cKDTree(cloud.points).query_pairs(radius, output_type="ndarray").reshape(-1, 2)
    adjacency = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, components = connected_components(adjacency, directed=False)
    _, first = np.unique(components, return_index=True)
    order = np.argsort(first)
    renumber = np.empty_like(order)
    renumber[order] = np.arange(order.size)
    labels = renumber[components]
    return [SubPart(index, np.flatnonzero(labels == index)) for index in range(order.size)]


def _point_labels(cloud: PointCloud, subparts: t.Sequence[SubPart]) -> np.ndarray:
    labels = np.full(len(cloud), -1, dtype=np.int64)
    for subpart in subparts:
        indices = subpart.point_indices
        if indices.size and (indices.min() < 0 or indices.max() >= len(cloud)):
            raise InvalidInput(f"sub-part {subpart.id} indexes outside the cloud")
        if np.any(labels[indices] >= 0):
            raise InvalidInput(f"sub-part {subpart.id} overlaps another sub-part")
        labels[indices] = subpart.id
    if np.any(labels < 0):
        raise InvalidInput("sub-parts do not cover the cloud")
    return labels


def build_subpart_graph(
    cloud: PointCloud,
    subparts: t.Sequence[SubPart],
    adjacency_radius: float = PerceptionDefaults.ADJACENCY_RADIUS,
) -> SubPartGraph:
    """
    Connects two sub-parts when some pair of their points is closer than
    `adjacency_radius`.

    Raises
    ------
    InvalidInput
        The sub-parts do not partition the cloud.
    """
    labels = _point_labels(cloud, subparts)
    edges: t.Set[t.Tuple[int, int]] = set()
    if len(cloud) > 1:
        pairs = cKDTree(cloud.points).query_pairs(adjacency_radius, output_type="ndarray").reshape(-1, 2)
        if len(pairs):
            gaps = np.linalg.norm(cloud.points[pairs[:, 0]] - cloud.points[pairs[:, 1]], axis=1)
            pairs = pairs[gaps < adjacency_radius]
            a, b = labels[pairs[:, 0]], labels[pairs[:, 1]]
            crossing = a != b
            for low, high in zip(np.minimum(a, b)[crossing].tolist(), np.maximum(a, b)[crossing].tolist()):
                edges.add((low, high))
    return SubPartGraph(list(subparts), sorted(edges))


def closest_subpart(subparts: t.Sequence[SubPart], cloud: PointCloud, contact: npt.ArrayLike) -> int:
    """
    Id of the sub-part holding the point nearest to `contact`; ties go to the
    lowest id.
    """
    target = as_point(contact, "contact")
    labels = _point_labels(cloud, subparts)
    distances = np.linalg.norm(cloud.points - target, axis=1)
    nearest = distances == distances.min()
    return int(labels[nearest].min())


def is_moved(
    part: PointCloud,
    prev_frame: PointCloud,
    cur_frame: PointCloud,
    crit: MovedCriterion = MovedCriterion(),
) -> t.Tuple[bool, np.ndarray, np.ndarray]:
    """
    Decides whether a sub-part of the current frame moved since the previous one.

    Forward distances go from the sub-part to its closest previous-frame points;
    backward distances go from those matched points back to the current frame.

    Returns
    -------
    Tuple[bool, ndarray, ndarray]
        Whether the mean forward distance or the Kolmogorov-Smirnov statistic
        between both samples exceeds its threshold, then both distance samples.
    """
    matched, forward = nearest_neighbors(part, prev_frame)
    _, backward = nearest_neighbors(prev_frame.points[matched], cur_frame)
    if float(forward.mean()) > crit.distance_threshold:
        return True, forward, backward
    statistic = float(ks_2samp(forward, backward).statistic)
    return statistic > crit.distribution_statistic_threshold, forward, backward


def segment_movable_parts(
    frames: t.Sequence[PointCloud],
    contacts: t.Sequence[npt.ArrayLike],
    subparts: t.Optional[t.Sequence[t.Optional[t.Sequence[SubPart]]]] = None,
    crit: MovedCriterion = MovedCriterion(),
    cluster_radius: float = PerceptionDefaults.CLUSTER_RADIUS,
    adjacency_radius: float = PerceptionDefaults.ADJACENCY_RADIUS,
    console: Console = silent,
) -> SegmentationLabels:
    """
    Labels every point of the last frame with the movable part that moved it.

    Parameters
    ----------
    frames : Sequence[PointCloud]
        K + 1 clouds; between frames k - 1 and k one part was moved.
    contacts : Sequence[Point3]
        K robot contact points, `contacts[k - 1]` in frame k.
    subparts : Optional[Sequence[Optional[Sequence[SubPart]]]]
        Sub-part proposals per frame (entry 0 unused); missing entries fall back
        to `cluster_subparts`.
    crit : MovedCriterion
    cluster_radius, adjacency_radius : float
        Region-growing and adjacency radii, meters.
    console : Console

    Returns
    -------
    SegmentationLabels
        Labels of frame K plus the labels of every frame.

    Raises
    ------
    InvalidInput
        `len(contacts) != len(frames) - 1`, or an empty frame.
    """
    if not frames:
        raise InvalidInput("at least one frame is required")
    if len(contacts) != len(frames) - 1:
        raise InvalidInput(f"{len(frames)} frames need {len(frames) - 1} contacts, got {len(contacts)}")
    if subparts is not None and len(subparts) != len(frames):
        raise InvalidInput(f"sub-part proposals for {len(subparts)} frames, expected {len(frames)}")
    for index, frame in enumerate(frames):
        frame.require_points(f"frame {index}")

    history = [np.zeros(len(frames[0]), dtype=np.int64)]
    for k in range(1, len(frames)):
        prev, cur = frames[k - 1], frames[k]
        proposals = subparts[k] if subparts is not None else None
        nodes = list(proposals) if proposals is not None else cluster_subparts(cur, cluster_radius)
        graph = build_subpart_graph(cur, nodes, adjacency_radius)
        by_id = {node.id: node for node in nodes}
        root = closest_subpart(nodes, cur, contacts[k - 1])

        moved_label: t.Set[int] = set()
        queue = collections.deque([root])
        queued = {root}
        while queue:
            node = queue.popleft()
            moved, _, _ = is_moved(cur.subset(by_id[node].point_indices), prev, cur, crit)
            has_predecessor = any(neighbor in moved_label for neighbor in graph.neighbors(node))
            if moved and (node == root or has_predecessor):
                moved_label.add(node)
            for neighbor in graph.neighbors(node):
                if neighbor not in queued:
                    queued.add(neighbor)
                    queue.append(neighbor)

        previous = history[-1]
        inherited, _ = CloudIndex(prev).query(cur)
        labels = previous[inherited].copy()
        for node in moved_label:
            labels[by_id[node].point_indices] = k
        console.log(f"frame {k}: {len(moved_label)} of {len(nodes)} sub-parts moved")
        history.append(labels)
    return SegmentationLabels(history[-1], history)
