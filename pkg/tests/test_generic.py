from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from twinforge.abc.generic import (
    Affordance3D,
    CameraExtrinsics,
    ConvexPiece,
    DepthMap,
    Mask,
    PixelAffordance,
    PointCloud,
    RigidTransform,
)
from twinforge.core.errors import InvalidInput, InvalidTransform

finite = st.floats(-3.0, 3.0, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(st.tuples(finite, finite, finite), st.tuples(finite, finite, finite))
def test_compose_with_inverse_is_identity(rotvec, translation):
    transform = RigidTransform.from_rotvec(rotvec, translation)
    identity = transform.compose(transform.inverse())
    assert_allclose(identity.rotation, np.eye(3), atol=1e-9)
    assert_allclose(identity.translation, np.zeros(3), atol=1e-9)


def test_compose_applies_right_operand_first():
    turn = RigidTransform.from_rotvec([0.0, 0.0, np.pi / 2])
    shift = RigidTransform(np.eye(3), [1.0, 0.0, 0.0])
    assert_allclose(turn.compose(shift).apply([0.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-12)
    assert_allclose(shift.compose(turn).apply([0.0, 0.0, 0.0]), [1.0, 0.0, 0.0], atol=1e-12)


def test_about_axis_keeps_the_axis_fixed():
    origin = np.array([0.3, -0.2, 0.1])
    transform = RigidTransform.about_axis([0.0, 0.0, 1.0], 0.7, origin)
    assert_allclose(transform.apply(origin + [0.0, 0.0, 0.5]), origin + [0.0, 0.0, 0.5], atol=1e-12)


def test_reflection_is_rejected():
    with pytest.raises(InvalidTransform):
        RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))


def test_matrix_round_trip():
    transform = RigidTransform.from_rotvec([0.1, 0.2, 0.3], [1.0, 2.0, 3.0])
    again = RigidTransform.from_matrix(transform.matrix())
    assert_allclose(again.rotation, transform.rotation)
    assert_allclose(again.translation, transform.translation)


def test_bad_bottom_row_is_rejected():
    matrix = np.eye(4)
    matrix[3, 0] = 1.0
    with pytest.raises(InvalidTransform):
        RigidTransform.from_matrix(matrix)


def test_cloud_validation():
    with pytest.raises(InvalidInput):
        PointCloud(np.zeros((3, 2)))
    with pytest.raises(InvalidInput):
        PointCloud([[0.0, 0.0, np.nan]])
    with pytest.raises(InvalidInput):
        PointCloud(np.zeros((2, 3)), labels=[0])
    with pytest.raises(InvalidInput):
        PointCloud(np.zeros((2, 3)), labels=[0, -1])


def test_cloud_subset_keeps_labels():
    cloud = PointCloud(np.arange(12.0).reshape(4, 3), labels=[0, 1, 2, 3])
    part = cloud.subset([3, 1])
    assert part.labels.tolist() == [3, 1]
    assert_allclose(part.points[0], [9.0, 10.0, 11.0])


def test_arrays_are_read_only():
    cloud = PointCloud(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        cloud.points[0, 0] = 1.0


def test_depth_and_mask_sizes():
    with pytest.raises(InvalidInput):
        DepthMap(4, 3, np.zeros(11))
    with pytest.raises(InvalidInput):
        DepthMap(2, 1, [0.5, -0.1])
    mask = Mask(3, 2, [1, 0, 1, 0, 0, 1])
    assert mask.count == 3
    assert mask.bits.shape == (2, 3)


def test_zero_trajectory_affordance_is_rejected():
    with pytest.raises(InvalidInput):
        PixelAffordance((10.0, 10.0), (0.0, 0.0))
    assert PixelAffordance((1.0, 2.0), (3.0, -1.0)).endpoint == (4.0, 1.0)


def test_affordance_direction_must_be_unit():
    with pytest.raises(InvalidInput):
        Affordance3D([0.0, 0.0, 0.0], [0.0, 0.0, 2.0])


def test_camera_origin():
    extr = CameraExtrinsics(RigidTransform(np.eye(3), [0.0, 0.0, -1.0]).matrix())
    assert_allclose(extr.camera_origin, [0.0, 0.0, 1.0])


def test_box_triangles_face_outward():
    box = ConvexPiece.box([0.0, 0.0, 0.0], [1.0, 2.0, 3.0])
    center = box.vertices.mean(axis=0)
    corners = box.triangle_vertices()
    normals = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    outward = corners.mean(axis=1) - center
    assert np.all(np.einsum("ij,ij->i", normals, outward) > 0)
    assert len(box.triangles) == 12


def test_triangle_index_out_of_range():
    with pytest.raises(InvalidInput):
        ConvexPiece(np.zeros((3, 3)), [[0, 1, 3]])
