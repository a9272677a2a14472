from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from twinforge.abc.generic import CameraExtrinsics, CameraIntrinsics, DepthMap
from twinforge.core.errors import InvalidDepth, InvalidInput, OutOfFrustum
from twinforge.geometry.camera import (
    back_project,
    back_project_depth,
    look_at_extrinsics,
    project,
    virtual_camera_extrinsics,
)

INTR = CameraIntrinsics(300.0, 300.0, 160.0, 120.0, 320, 240)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 319.0), st.floats(0.0, 239.0), st.floats(0.1, 5.0))
def test_project_inverts_back_project(u, v, z):
    extr = look_at_extrinsics([0.0, 0.0, 0.9], [0.6, 0.0, 0.25])
    point = back_project((u, v), z, INTR, extr)
    pu, pv, pz = project(point, INTR, extr)
    assert_allclose([pu, pv, pz], [u, v, z], rtol=1e-9, atol=1e-8)


def test_principal_point_lies_on_the_optical_axis():
    extr = CameraExtrinsics.identity()
    assert_allclose(back_project((160.0, 120.0), 2.0, INTR, extr), [0.0, 0.0, 2.0])


def test_back_project_errors():
    extr = CameraExtrinsics.identity()
    with pytest.raises(InvalidDepth):
        back_project((10.0, 10.0), 0.0, INTR, extr)
    with pytest.raises(InvalidInput):
        back_project((400.0, 10.0), 1.0, INTR, extr)


def test_point_behind_camera():
    with pytest.raises(OutOfFrustum):
        project([0.0, 0.0, -1.0], INTR, CameraExtrinsics.identity())


def test_look_at_centers_the_target():
    extr = look_at_extrinsics([0.0, 0.0, 0.9], [0.6, 0.0, 0.25])
    u, v, z = project([0.6, 0.0, 0.25], INTR, extr)
    assert_allclose([u, v], [INTR.cx, INTR.cy], atol=1e-9)
    assert z == pytest.approx(np.linalg.norm([0.6, 0.0, -0.65]))


def test_virtual_camera_looks_down_and_forward():
    extr = virtual_camera_extrinsics([0.2, 0.0, 0.7], np.radians(45.0))
    forward = extr.camera_to_base().apply_direction([0.0, 0.0, 1.0])
    assert_allclose(forward, [np.sqrt(0.5), 0.0, -np.sqrt(0.5)], atol=1e-12)
    assert_allclose(extr.camera_origin, [0.2, 0.0, 0.7], atol=1e-12)


def test_back_project_depth_skips_invalid_pixels():
    values = np.zeros((240, 320))
    values[120, 160] = 1.5
    values[10, 20] = 2.0
    points, pixels = back_project_depth(DepthMap(320, 240, values), INTR, CameraExtrinsics.identity())
    assert points.shape == (2, 3)
    assert pixels.tolist() == [[10, 20], [120, 160]]
    assert_allclose(points[1], [0.0, 0.0, 1.5])
