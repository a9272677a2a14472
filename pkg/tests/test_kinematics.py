from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from twinforge.abc.configs import SceneRecipe
from twinforge.abc.generic import PointCloud, RigidTransform
from twinforge.abc.modals import SegmentationLabels
from twinforge.core.errors import ConflictingEvidence, IncompleteModel, InsufficientMotion, InvalidInput
from twinforge.geometry.cloud import transform_error
from twinforge.perception.kinematics import (
    axis_angle_error,
    build_model,
    classify_joint,
    compose_screw,
    convex_hull_piece,
    estimate_part_transform,
    extract_part_frames,
    fit_joint,
    origin_axis_distance,
    screw_decompose,
)
from twinforge.synthgen.generator import generate

component = st.floats(-1.0, 1.0, allow_nan=False)


def test_screw_of_an_offset_rotation():
    screw = screw_decompose(RigidTransform.about_axis([0.0, 0.0, 1.0], np.pi / 4, [1.0, 2.0, 0.0]))
    assert screw.rotation_angle == pytest.approx(np.pi / 4)
    assert_allclose(screw.axis_origin, [1.0, 2.0, 0.0], atol=1e-12)
    assert screw.translation_along_axis == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    st.tuples(component, component, component).filter(lambda v: 0.05 < np.linalg.norm(v) < 1.7),
    st.tuples(component, component, component),
)
def test_screw_composes_back(rotvec, translation):
    transform = RigidTransform.from_rotvec(np.array(rotvec) * 1.8, translation)
    again = compose_screw(screw_decompose(transform))
    assert_allclose(again.rotation, transform.rotation, atol=1e-9)
    assert_allclose(again.translation, transform.translation, atol=1e-9)


def test_pure_translation_screw():
    screw = screw_decompose(RigidTransform(np.eye(3), [0.0, 0.3, 0.4]))
    assert screw.rotation_angle == 0.0
    assert_allclose(screw.rotation_axis, [0.0, 0.6, 0.8])
    assert screw.translation_along_axis == pytest.approx(0.5)


def test_joint_kinds():
    assert classify_joint(screw_decompose(RigidTransform(np.eye(3), [0.05, 0.0, 0.0]))) == "prismatic"
    assert classify_joint(screw_decompose(RigidTransform.about_axis([0, 0, 1], 0.3, [1, 0, 0]))) == "revolute"
    with pytest.raises(InsufficientMotion):
        classify_joint(screw_decompose(RigidTransform.about_axis([0, 0, 1], 0.01, [0.1, 0, 0])))


def test_closest_point_registration(rng):
    source = PointCloud(rng.uniform(-0.1, 0.1, (300, 3)))
    truth = RigidTransform.from_rotvec(np.radians([0.0, 1.0, 3.0]), [0.005, -0.002, 0.0])
    result = estimate_part_transform(source, source.transformed(truth))
    angle, distance = transform_error(result.transform, truth)
    assert result.converged
    assert angle < 1e-3
    assert distance < 1e-3


def test_registration_with_correspondences(rng):
    source = PointCloud(rng.uniform(-0.1, 0.1, (50, 3)))
    truth = RigidTransform.from_rotvec([0.0, 0.0, 2.0], [1.0, 0.0, 0.0])
    pairs = np.repeat(np.arange(50)[:, None], 2, axis=1)
    result = estimate_part_transform(source, source.transformed(truth), pairs)
    assert result.iterations == 1
    assert result.residual < 1e-9


def _moving_part(scene, label):
    selected = np.flatnonzero(scene.true_labels == label)
    return [cloud.subset(selected) for cloud in scene.clouds]


def test_laptop_lid_hinge(laptop_scene):
    estimate = fit_joint(_moving_part(laptop_scene, 1), corresponded=True)
    truth = laptop_scene.joint_truth()[0]
    assert estimate.kind == "revolute"
    assert axis_angle_error(estimate.axis, truth.axis) < 1e-6
    assert origin_axis_distance(truth.origin, estimate.origin, estimate.axis) < 1e-6
    assert abs(estimate.observed_displacement[1]) == pytest.approx(np.radians(25.0), abs=1e-6)
    assert estimate.residual < 1e-6


def test_drawer_slide(drawer_scene):
    estimate = fit_joint(_moving_part(drawer_scene, 1), corresponded=True)
    assert estimate.kind == "prismatic"
    assert estimate.origin is None
    assert_allclose(estimate.axis, [-1.0, 0.0, 0.0], atol=1e-9)
    assert estimate.observed_displacement == pytest.approx([0.0, 0.08])


def test_conflicting_pairs():
    cloud = PointCloud(np.random.default_rng(0).uniform(-0.1, 0.1, (40, 3)))
    slid = cloud.transformed(RigidTransform(np.eye(3), [0.05, 0.0, 0.0]))
    turned = slid.transformed(RigidTransform.about_axis([0.0, 0.0, 1.0], 0.5, [0.3, 0.0, 0.0]))
    with pytest.raises(ConflictingEvidence) as info:
        fit_joint([cloud, slid, turned], corresponded=True)
    assert [kind for _, kind in info.value.pairs] == ["prismatic", "revolute"]


def test_static_part():
    cloud = PointCloud(np.random.default_rng(0).uniform(-0.1, 0.1, (40, 3)))
    with pytest.raises(InsufficientMotion):
        fit_joint([cloud, cloud], corresponded=True)
    with pytest.raises(InvalidInput):
        fit_joint([cloud])


def test_idle_pairs_keep_the_displacement():
    cloud = PointCloud(np.random.default_rng(0).uniform(-0.1, 0.1, (40, 3)))
    first = cloud.transformed(RigidTransform(np.eye(3), [0.0, 0.0, 0.04]))
    second = cloud.transformed(RigidTransform(np.eye(3), [0.0, 0.0, 0.1]))
    estimate = fit_joint([cloud, first, first, second], corresponded=True)
    assert estimate.observed_displacement == pytest.approx([0.0, 0.04, 0.04, 0.1])


def test_part_frames_by_label(drawer_scene):
    labels = SegmentationLabels(drawer_scene.true_labels, [np.zeros_like(drawer_scene.true_labels)] * 2)
    frames = extract_part_frames(drawer_scene.clouds, labels, 1, corresponded=True)
    assert len(frames) == 2
    assert len(frames[0]) == int(np.count_nonzero(drawer_scene.true_labels == 1))
    with pytest.raises(InvalidInput):
        extract_part_frames(drawer_scene.clouds, labels, 2)


def test_old_place_without_correspondence(drawer_scene):
    true = drawer_scene.true_labels
    labels = SegmentationLabels(true, [np.zeros_like(true), true])
    frames = extract_part_frames(drawer_scene.clouds, labels, 1)
    assert len(frames[1]) == int(np.count_nonzero(true == 1))
    # every drawer point of frame 0 clears the body by more than 1 cm
    assert_allclose(frames[0].points, drawer_scene.clouds[0].points[true == 1])


def test_model_from_fitted_joints(drawer_scene):
    true = drawer_scene.true_labels
    labels = SegmentationLabels(true, [np.zeros_like(true), true])
    estimate = fit_joint(_moving_part(drawer_scene, 1), corresponded=True)
    model = build_model(labels, drawer_scene.clouds, [estimate], subparts=drawer_scene.frames[-1].subparts)
    assert model.dof == 1
    assert model.joint(0).kind == "prismatic"
    assert model.joint(0).lower == pytest.approx(-0.04)
    assert model.joint(0).upper == pytest.approx(0.12)
    assert len(model.parts[1].geometry) == 3
    with pytest.raises(IncompleteModel):
        build_model(labels, drawer_scene.clouds, {})


def test_hull_faces_outward(rng):
    points = rng.uniform(-1.0, 1.0, (200, 3))
    piece = convex_hull_piece(points)
    corners = piece.triangle_vertices()
    normals = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    outward = corners.mean(axis=1) - piece.vertices.mean(axis=0)
    assert np.all(np.einsum("ij,ij->i", normals, outward) > 0)
    assert convex_hull_piece(points[:3]) is None


def test_axis_error_ignores_orientation():
    assert axis_angle_error([0.0, 0.0, 1.0], [0.0, 0.0, -2.0]) == 0.0
    assert axis_angle_error([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]) == pytest.approx(np.pi / 2)
    assert origin_axis_distance([1.0, 1.0, 5.0], [0.0, 0.0, 0.0], [0.0, 0.0, 3.0]) == pytest.approx(np.sqrt(2))


def _fit_against_truth(scene):
    (truth,) = scene.joint_truth()
    estimate = fit_joint(_moving_part(scene, truth.part), corresponded=True)
    return estimate, truth


@pytest.mark.parametrize("category", ["drawer", "laptop", "cabinet", "lamp"])
def test_noiseless_fits_match_the_truth(category):
    estimate, truth = _fit_against_truth(generate(SceneRecipe(category, spacing=0.02), render=False))
    assert estimate.kind == truth.kind
    assert np.degrees(axis_angle_error(estimate.axis, truth.axis)) < 0.5
    if truth.kind == "revolute":
        assert origin_axis_distance(truth.origin, estimate.origin, estimate.axis) < 1e-3


@pytest.mark.slow
def test_noisy_fits_stay_within_nine_degrees():
    errors = []
    for category in ("drawer", "laptop", "cabinet", "lamp"):
        for seed in range(10):
            scene = generate(SceneRecipe(category, spacing=0.02, noise=0.005, seed=seed), render=False)
            estimate, truth = _fit_against_truth(scene)
            errors.append(np.degrees(axis_angle_error(estimate.axis, truth.axis)))
    assert np.mean(errors) < 9.0
