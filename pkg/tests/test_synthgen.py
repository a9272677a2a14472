from __future__ import annotations

import msgspec
import numpy as np
import pytest
from numpy.testing import assert_allclose

from twinforge.abc.configs import CameraSetup, SceneRecipe
from twinforge.abc.generic import CameraIntrinsics
from twinforge.abc.modals import JointState
from twinforge.core.errors import ConfigError
from twinforge.geometry import fileio
from twinforge.model.articulated import sample_model_points
from twinforge.model.urdf import load_urdf
from twinforge.synthgen.generator import generate, scene_affordances, write_scene
from twinforge.synthgen.shapes import CATEGORIES, blueprint, face_samples, object_model, panel_face_centroid

SMALL_CAMERA = CameraSetup(CameraIntrinsics(75.0, 75.0, 40.0, 30.0, 80, 60))


@pytest.mark.parametrize(
    ("category", "dof"),
    [("drawer", 1), ("cabinet", 1), ("laptop", 1), ("lamp", 1), ("two_door_cabinet", 2), ("fridge", 3)],
)
def test_categories(category, dof):
    assert category in CATEGORIES
    model = object_model(SceneRecipe(category))
    assert model.dof == dof
    assert all(part.geometry for part in model.parts)
    assert len(blueprint(category).default_states[0]) == dof


def test_fridge_joint_kinds():
    kinds = [object_model(SceneRecipe("fridge")).joint(i).kind for i in range(3)]
    assert kinds == ["revolute", "revolute", "prismatic"]


def test_scaling_scales_slides_but_not_angles():
    drawer = blueprint("drawer", 0.5).parts[1].joint
    assert drawer.upper == pytest.approx(0.15)
    door = blueprint("cabinet", 0.5).parts[1].joint
    assert door.upper == pytest.approx(np.pi / 2)
    assert door.origin[0] == pytest.approx(0.11)


def test_face_samples():
    points = face_samples([0.0, 0.0, 0.0], [0.1, 0.1, 0.1], 0.05)
    assert points.shape == (24, 3)
    assert len(np.unique(points, axis=0)) == 24
    on_face = np.isclose(points, 0.0) | np.isclose(points, 0.1)
    assert np.all(on_face.sum(axis=1) == 1)


def test_panel_face_centroid():
    assert_allclose(panel_face_centroid(blueprint("drawer").parts[1]), [0.24, 0.0, 0.15])
    assert_allclose(panel_face_centroid(blueprint("laptop").parts[1]), [0.0, 0.0, 0.055])


def test_frames_correspond_by_index(drawer_scene):
    first, second = drawer_scene.clouds
    labels = drawer_scene.true_labels
    assert len(first) == len(second)
    assert np.array_equal(second.labels, labels)
    shift = second.points - first.points
    assert_allclose(shift[labels == 1], np.tile([-0.08, 0.0, 0.0], ((labels == 1).sum(), 1)), atol=1e-12)
    assert_allclose(shift[labels == 0], 0.0, atol=1e-12)


def test_clouds_follow_the_model(drawer_scene):
    plan = blueprint("drawer")
    local = [np.concatenate([face_samples(lo, hi, 0.02) for lo, hi in part.boxes]) for part in plan.parts]
    points, labels = sample_model_points(drawer_scene.model, JointState([0.13]), local)
    assert_allclose(points, drawer_scene.frames[1].cloud.points, atol=1e-12)
    assert np.array_equal(labels, drawer_scene.true_labels)


def test_subparts_are_boxes(drawer_scene):
    subparts = drawer_scene.frames[0].subparts
    assert len(subparts) == 5 + 3
    indices = np.concatenate([subpart.point_indices for subpart in subparts])
    assert np.array_equal(np.sort(indices), np.arange(len(drawer_scene.true_labels)))


def test_contact_where_the_motion_ended(drawer_scene):
    assert drawer_scene.frames[0].contact is None
    assert drawer_scene.frames[1].moved_part == 1
    (contact,) = drawer_scene.contacts
    assert_allclose(contact, [0.23, 0.0, 0.15], atol=1e-9)


def test_joint_truth(drawer_scene):
    (truth,) = drawer_scene.joint_truth()
    assert truth.part == 1
    assert truth.kind == "prismatic"
    assert_allclose(truth.axis, [-1.0, 0.0, 0.0], atol=1e-12)
    assert (truth.lower, truth.upper) == (0.0, 0.3)


def test_affordances_before_the_motion(drawer_scene):
    with pytest.raises(ConfigError):
        scene_affordances(drawer_scene, 0)
    with pytest.raises(ConfigError):
        scene_affordances(drawer_scene, 2)
    _, _, contact, direction = scene_affordances(drawer_scene, 1)
    assert_allclose(contact, [0.31, 0.0, 0.15], atol=1e-9)
    assert_allclose(direction, [-1.0, 0.0, 0.0], atol=1e-12)


def test_closing_reverses_the_direction():
    closing = generate(SceneRecipe("drawer", states=[[0.2], [0.1]], spacing=0.05), render=False)
    opening = generate(SceneRecipe("drawer", states=[[0.2], [0.3]], spacing=0.05), render=False)
    real, _, _, direction = scene_affordances(closing, 1)
    pulled, _, _, _ = scene_affordances(opening, 1)
    assert_allclose(direction, [1.0, 0.0, 0.0], atol=1e-12)
    assert_allclose(real.contact, pulled.contact, atol=1e-9)
    assert np.dot(real.trajectory, pulled.trajectory) < 0.0


def test_repeated_state_blames_the_first_part():
    scene = generate(SceneRecipe("lamp", states=[[0.0], [0.0]], spacing=0.05), render=False)
    assert scene.frames[1].moved_part == 0
    assert len(scene.contacts) == 1


def test_noise_is_seeded():
    recipe = SceneRecipe("laptop", spacing=0.05, noise=0.002, seed=4)
    first = generate(recipe, render=False)
    again = generate(recipe, render=False)
    other = generate(msgspec.structs.replace(recipe, seed=5), render=False)
    assert np.array_equal(first.frames[1].cloud.points, again.frames[1].cloud.points)
    assert not np.array_equal(first.frames[1].cloud.points, other.frames[1].cloud.points)


@pytest.mark.parametrize(
    ("recipe", "message"),
    [
        (SceneRecipe("sofa"), "unknown category"),
        (SceneRecipe("drawer", states=[[0.5]]), "leave"),
        (SceneRecipe("drawer", states=[[0.1, 0.2]]), "rows of 1"),
        (SceneRecipe("two_door_cabinet", states=[[0.2, 0.2], [0.8, 0.8]]), "move together"),
    ],
)
def test_bad_recipes(recipe, message):
    with pytest.raises(ConfigError, match=message):
        generate(recipe, render=False)


def test_recipe_validation():
    with pytest.raises(ConfigError):
        SceneRecipe("drawer", scale=0.0)
    with pytest.raises(ConfigError):
        SceneRecipe("drawer", noise=-1.0)


def test_renders_see_the_object():
    scene = generate(SceneRecipe("cabinet", cameras=[SMALL_CAMERA], spacing=0.05))
    for frame in scene.frames:
        (mask,) = frame.masks
        (depth,) = frame.depths
        assert mask.bits.shape == (60, 80)
        assert mask.bits.sum() > 100
        assert np.all(depth.values[mask.bits] > 0)
    assert not np.array_equal(scene.frames[0].masks[0].bits, scene.frames[1].masks[0].bits)


def test_write_scene(tmp_path):
    scene = generate(SceneRecipe("drawer", cameras=[SMALL_CAMERA], spacing=0.05))
    written = write_scene(scene, tmp_path / "drawer")
    root = tmp_path / "drawer"
    names = {path.relative_to(root).as_posix() for path in written}
    assert names == {
        "camera_0.json",
        "frame_0.apc",
        "frame_1.apc",
        "subparts_0.json",
        "subparts_1.json",
        "depth_0_0.pgm",
        "depth_1_0.pgm",
        "mask_0_0.pbm",
        "mask_1_0.pbm",
        "contacts.json",
        "aff_1_real.json",
        "aff_1_virtual.json",
        "truth/model.urdf",
        "truth/joints.json",
    }
    assert all(path.exists() for path in written)

    cloud = fileio.read_cloud(root / "frame_1.apc")
    assert np.array_equal(cloud.labels, scene.true_labels)
    assert_allclose(fileio.read_contacts(root / "contacts.json")[0], scene.contacts[0], atol=1e-9)
    view, _ = fileio.read_affordance(root / "aff_1_virtual.json")
    assert view == "virtual"

    model = load_urdf(root / "truth" / "model.urdf")
    assert model.dof == 1
    assert model.joint(0).kind == "prismatic"
    joints = msgspec.json.decode((root / "truth" / "joints.json").read_bytes())
    assert [joint["part"] for joint in joints["joints"]] == [1]
