from __future__ import annotations

import numpy as np
import pytest

from twinforge.abc.configs import MovedCriterion, SceneRecipe
from twinforge.abc.generic import PointCloud, RigidTransform
from twinforge.abc.modals import SubPart
from twinforge.core.errors import InvalidInput
from twinforge.perception.segmentation import (
    build_subpart_graph,
    closest_subpart,
    cluster_subparts,
    is_moved,
    segment_movable_parts,
)
from twinforge.synthgen.generator import generate


def _blobs() -> PointCloud:
    line = np.linspace(0.0, 0.05, 6)[:, None] * [1.0, 0.0, 0.0]
    return PointCloud(np.concatenate([line + [0.5, 0.0, 0.0], line, line + [0.0, 0.2, 0.0]]))


def test_clusters_follow_point_order():
    subparts = cluster_subparts(_blobs(), radius=0.015)
    assert [sp.point_indices.tolist() for sp in subparts] == [
        list(range(0, 6)),
        list(range(6, 12)),
        list(range(12, 18)),
    ]


def test_cluster_radius_must_be_positive():
    with pytest.raises(InvalidInput):
        cluster_subparts(_blobs(), radius=0.0)


def test_graph_connects_touching_subparts():
    cloud = PointCloud([[0.0, 0.0, 0.0], [0.01, 0.0, 0.0], [0.5, 0.0, 0.0]])
    graph = build_subpart_graph(cloud, [SubPart(0, [0]), SubPart(1, [1]), SubPart(2, [2])], 0.015)
    assert graph.edges == [(0, 1)]
    assert graph.neighbors(1) == [0]


def test_subparts_must_partition_the_cloud():
    cloud = PointCloud(np.zeros((3, 3)))
    with pytest.raises(InvalidInput):
        build_subpart_graph(cloud, [SubPart(0, [0, 1])])
    with pytest.raises(InvalidInput):
        build_subpart_graph(cloud, [SubPart(0, [0, 1]), SubPart(1, [1, 2])])


def test_closest_subpart_ties_go_low():
    cloud = PointCloud([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    assert closest_subpart([SubPart(3, [0]), SubPart(1, [1])], cloud, [0.0, 0.0, 0.0]) == 1


def test_moved_and_static_parts(rng):
    prev = PointCloud(rng.uniform(-0.1, 0.1, (200, 3)))
    moved, _, _ = is_moved(prev.subset(np.arange(50)), prev, prev)
    assert not moved
    shifted = prev.transformed(RigidTransform(np.eye(3), [0.0, 0.0, 0.1]))
    moved, forward, backward = is_moved(shifted.subset(np.arange(50)), prev, shifted)
    assert moved
    assert forward.shape == backward.shape == (50,)


def test_contact_count_must_match():
    cloud = PointCloud(np.zeros((1, 3)))
    with pytest.raises(InvalidInput):
        segment_movable_parts([cloud, cloud], [])


def test_drawer_segmentation(drawer_scene):
    labels = segment_movable_parts(
        drawer_scene.clouds,
        drawer_scene.contacts,
        [frame.subparts for frame in drawer_scene.frames],
    )
    accuracy = np.mean(labels.labels == drawer_scene.true_labels)
    assert accuracy >= 0.99
    assert len(labels.history) == 2
    assert not labels.history[0].any()


def test_labels_ignore_a_global_motion(drawer_scene):
    motion = RigidTransform.from_rotvec([0.1, -0.2, 0.7], [1.0, 2.0, -0.5])
    subparts = [frame.subparts for frame in drawer_scene.frames]
    plain = segment_movable_parts(drawer_scene.clouds, drawer_scene.contacts, subparts)
    moved = segment_movable_parts(
        [cloud.transformed(motion) for cloud in drawer_scene.clouds],
        [motion.apply(contact) for contact in drawer_scene.contacts],
        subparts,
    )
    assert np.array_equal(plain.labels, moved.labels)


def test_strict_criterion_leaves_everything_static(drawer_scene):
    labels = segment_movable_parts(
        drawer_scene.clouds,
        drawer_scene.contacts,
        [frame.subparts for frame in drawer_scene.frames],
        crit=MovedCriterion(distance_threshold=10.0, distribution_statistic_threshold=1.0),
    )
    assert not labels.labels.any()


@pytest.mark.slow
def test_fridge_segmentation():
    scene = generate(SceneRecipe("fridge", spacing=0.02), render=False)
    labels = segment_movable_parts(scene.clouds, scene.contacts, [frame.subparts for frame in scene.frames])
    assert labels.part_count == 3
    assert np.mean(labels.labels == scene.true_labels) >= 0.99


def test_two_door_cabinet_segmentation():
    scene = generate(SceneRecipe("two_door_cabinet", spacing=0.02), render=False)
    labels = segment_movable_parts(scene.clouds, scene.contacts, [frame.subparts for frame in scene.frames])
    assert labels.part_count == 2
    assert np.mean(labels.labels == scene.true_labels) >= 0.99
    assert len(labels.history) == 3


@pytest.mark.slow
@pytest.mark.parametrize("category", ["drawer", "two_door_cabinet", "laptop"])
def test_segmentation_under_point_noise(category):
    for seed in range(3):
        scene = generate(SceneRecipe(category, noise=0.005, seed=seed), render=False)
        labels = segment_movable_parts(scene.clouds, scene.contacts, [frame.subparts for frame in scene.frames])
        assert np.mean(labels.labels == scene.true_labels) >= 0.95
