from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from twinforge.abc.configs import SceneRecipe
from twinforge.abc.generic import CameraExtrinsics, CameraIntrinsics, DepthMap, Mask, PixelAffordance
from twinforge.core.errors import EmptyWarp, IllConditionedIntersection, InvalidDepth
from twinforge.geometry.camera import look_at_extrinsics, project
from twinforge.perception.affordance import (
    affordance_to_3d,
    intersect_post_contact,
    lookup_depth,
    plane_from_affordance,
    project_direction,
    warp_to_virtual_view,
)
from twinforge.perception.kinematics import axis_angle_error
from twinforge.synthgen.generator import generate, scene_affordances

INTR = CameraIntrinsics(300.0, 300.0, 160.0, 120.0, 320, 240)
CONTACT = np.array([0.6, 0.05, 0.3])
DIRECTION = np.array([-1.0, 1.0, 0.5]) / 1.5


def _pixel_affordance(extr: CameraExtrinsics) -> PixelAffordance:
    u0, v0, _ = project(CONTACT, INTR, extr)
    u1, v1, _ = project(CONTACT + 0.05 * DIRECTION, INTR, extr)
    return PixelAffordance((u0, v0), (u1 - u0, v1 - v0))


def _plane(extr: CameraExtrinsics):
    aff = _pixel_affordance(extr)
    _, _, z = project(CONTACT, INTR, extr)
    return aff, plane_from_affordance(aff, z, INTR, extr)


def test_plane_of_a_horizontal_swipe():
    aff = PixelAffordance((160.0, 120.0), (20.0, 0.0))
    plane = plane_from_affordance(aff, 1.0, INTR, CameraExtrinsics.identity())
    assert_allclose(plane.normal, [0.0, -1.0, 0.0], atol=1e-12)
    assert_allclose(plane.anchor, [0.0, 0.0, 1.0])


def test_plane_needs_a_positive_depth():
    with pytest.raises(InvalidDepth):
        plane_from_affordance(PixelAffordance((1.0, 1.0), (1.0, 0.0)), 0.0, INTR, CameraExtrinsics.identity())


def test_two_views_recover_the_direction():
    real = look_at_extrinsics([0.0, 0.0, 0.9], [0.6, 0.0, 0.25])
    virtual = look_at_extrinsics([0.2, -0.4, 0.8], CONTACT)
    aff_real, plane_real = _plane(real)
    _, plane_virtual = _plane(virtual)
    result = intersect_post_contact(plane_real, plane_virtual, aff_real, INTR, real)
    assert_allclose(result.direction, DIRECTION, atol=1e-9)
    assert_allclose(result.contact, CONTACT, atol=1e-9)


def test_sign_follows_the_real_trajectory():
    real = look_at_extrinsics([0.0, 0.0, 0.9], [0.6, 0.0, 0.25])
    virtual = look_at_extrinsics([0.2, -0.4, 0.8], CONTACT)
    aff_real, plane_real = _plane(real)
    _, plane_virtual = _plane(virtual)
    backwards = PixelAffordance(aff_real.contact, (-aff_real.trajectory[0], -aff_real.trajectory[1]))
    result = intersect_post_contact(plane_real, plane_virtual, backwards, INTR, real)
    assert_allclose(result.direction, -DIRECTION, atol=1e-9)


def test_one_camera_twice_is_ill_conditioned():
    real = look_at_extrinsics([0.0, 0.0, 0.9], [0.6, 0.0, 0.25])
    aff, plane = _plane(real)
    with pytest.raises(IllConditionedIntersection):
        intersect_post_contact(plane, plane, aff, INTR, real)


def test_image_velocity():
    assert_allclose(
        project_direction(np.array([0.0, 0.0, 2.0]), np.array([1.0, 0.0, 0.0]), INTR, CameraExtrinsics.identity()),
        [150.0, 0.0],
    )


def test_depth_lookup_falls_back_to_the_neighborhood():
    values = np.zeros((5, 5))
    values[1, 1], values[1, 3], values[3, 2] = 1.0, 2.0, 4.0
    depth = DepthMap(5, 5, values)
    assert lookup_depth(depth, (3.0, 1.0)) == 2.0
    assert lookup_depth(depth, (2.0, 2.0), window=1) == 2.0
    with pytest.raises(InvalidDepth):
        lookup_depth(depth, (4.0, 4.0), window=0)


def test_warp_into_the_same_camera_is_the_identity():
    intr = CameraIntrinsics(40.0, 40.0, 20.0, 15.0, 40, 30)
    values = np.zeros((30, 40))
    values[10:20, 5:25] = 1.0 + np.linspace(0.0, 0.2, 20)
    bits = values > 0
    extr = look_at_extrinsics([0.0, 0.0, 0.9], [0.6, 0.0, 0.25])
    depth, mask = warp_to_virtual_view(DepthMap(40, 30, values), Mask(40, 30, bits), intr, extr, extr)
    assert_allclose(depth.values, values, atol=1e-9)
    assert np.array_equal(mask.bits, bits)


def test_warp_keeps_the_nearest_surface():
    intr = CameraIntrinsics(40.0, 40.0, 20.0, 15.0, 40, 30)
    values = np.zeros((30, 40))
    values[15, 20] = 1.0
    values[15, 21] = 2.0
    identity = CameraExtrinsics.identity()
    # seen from ten meters back both points land on the same virtual pixel
    behind = CameraExtrinsics(np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 10.0], [0, 0, 0, 1]]))
    depth, mask = warp_to_virtual_view(DepthMap(40, 30, values), Mask(40, 30, values > 0), intr, identity, behind)
    assert mask.count == 1
    assert depth.values[15, 20] == pytest.approx(11.0)


def test_nothing_to_warp():
    intr = CameraIntrinsics(40.0, 40.0, 20.0, 15.0, 40, 30)
    depth = DepthMap(40, 30, np.ones((30, 40)))
    identity = CameraExtrinsics.identity()
    with pytest.raises(EmptyWarp):
        warp_to_virtual_view(depth, Mask(40, 30, np.zeros(1200)), intr, identity, identity)
    turned = CameraExtrinsics(np.diag([1.0, -1.0, -1.0, 1.0]))
    with pytest.raises(EmptyWarp):
        warp_to_virtual_view(depth, Mask(40, 30, np.ones(1200)), intr, identity, turned)


@pytest.mark.slow
def test_drawer_pull_from_rendered_views():
    scene = generate(SceneRecipe("drawer", spacing=0.02))
    extr_virtual = look_at_extrinsics([0.1, 0.4, 0.7], [0.35, 0.0, 0.15])
    real, virtual, contact, direction = scene_affordances(scene, 1, virtual=extr_virtual)
    intr, extr_real = scene.cameras[0]
    frame = scene.frames[0]
    result = affordance_to_3d(frame.depths[0], frame.masks[0], intr, extr_real, extr_virtual, real, virtual)
    assert np.degrees(axis_angle_error(result.direction, direction)) < 1.0
    assert result.direction @ direction > 0
    # the handle stands 3 cm proud of the panel centroid
    assert np.linalg.norm(result.contact - contact) < 0.05


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _image_angle(a, b) -> float:
    return float(np.arctan2(abs(a[0] * b[1] - a[1] * b[0]), a[0] * b[0] + a[1] * b[1]))


def test_direction_reprojects_onto_both_trajectories():
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 1000:
        contact = rng.uniform([0.3, -0.3, 0.0], [0.8, 0.3, 0.5])
        direction = _unit(rng.normal(size=3))
        eyes = [contact + _unit(rng.normal(size=3)) * rng.uniform(0.4, 1.5) for _ in range(2)]
        views = [look_at_extrinsics(eye, contact) for eye in eyes]
        rays = [_unit(contact - extr.camera_origin) for extr in views]
        if any(np.linalg.norm(np.cross(ray, direction)) < np.sin(np.radians(10.0)) for ray in rays):
            continue

        affordances, planes = [], []
        for extr in views:
            u0, v0, z = project(contact, INTR, extr)
            u1, v1, _ = project(contact + 0.05 * direction, INTR, extr)
            aff = PixelAffordance((u0, v0), (u1 - u0, v1 - v0))
            affordances.append(aff)
            planes.append(plane_from_affordance(aff, z, INTR, extr))
        if abs(planes[0].normal @ planes[1].normal) > np.cos(np.radians(10.0)):
            continue

        result = intersect_post_contact(planes[0], planes[1], affordances[0], INTR, views[0])
        for aff, extr in zip(affordances, views):
            u0, v0, _ = project(result.contact, INTR, extr)
            u1, v1, _ = project(result.contact + 0.05 * result.direction, INTR, extr)
            assert _image_angle((u1 - u0, v1 - v0), aff.trajectory) < 1e-6
        checked += 1


@pytest.mark.parametrize("category", ["drawer", "cabinet", "laptop", "lamp"])
def test_scene_directions_from_exact_depths(category):
    scene = generate(SceneRecipe(category, spacing=0.05), render=False)
    _, _, contact, _ = scene_affordances(scene, 1)
    extr_virtual = look_at_extrinsics(contact + [-0.3, 0.4, 0.5], contact)
    real, virtual, contact, direction = scene_affordances(scene, 1, virtual=extr_virtual)
    intr, extr_real = scene.cameras[0]
    plane_real = plane_from_affordance(real, project(contact, intr, extr_real)[2], intr, extr_real)
    plane_virtual = plane_from_affordance(virtual, project(contact, intr, extr_virtual)[2], intr, extr_virtual)
    result = intersect_post_contact(plane_real, plane_virtual, real, intr, extr_real)
    assert np.degrees(axis_angle_error(result.direction, direction)) < 0.5
    assert result.direction @ direction > 0
