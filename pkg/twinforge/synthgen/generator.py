"""
Synthetic articulated scenes: labeled clouds, depth renders and contacts of a
box-assembly object moved through a sequence of joint states.

Classes
-------
- `SceneFrame`: One observation of the scene.
- `JointTruth`: Ground truth of one joint, world frame.
- `Scene`: Model, cameras and frames of a generated recipe.
"""

from __future__ import annotations

__all__ = [
    "SceneFrame",
    "JointTruth",
    "Scene",
    "generate",
    "scene_affordances",
    "write_scene",
]

import pathlib
import typing as t

import msgspec
import numpy as np

from ..abc.configs import SceneRecipe
from ..abc.generic import (
    CameraExtrinsics,
    CameraIntrinsics,
    ConvexPiece,
    DepthMap,
    Mask,
    PixelAffordance,
    PointCloud,
    RigidTransform,
)
from ..abc.modals import ArticulatedModel, JointKind, JointState, SubPart
from ..core.codec import write_json
from ..core.console import Console, silent
from ..core.errors import ConfigError
from ..geometry import fileio
from ..geometry.camera import look_at_extrinsics, project, virtual_camera_extrinsics
from ..model.articulated import forward_kinematics_matrices, sample_model_points
from ..model.urdf import export_urdf
from ..perception.render import render_world
from .shapes import Blueprint, blueprint, face_samples, object_model, panel_face_centroid, recipe_states


class SceneFrame(msgspec.Struct, eq=False):
    """
    One observation of a generated scene.

    Parameters
    ----------
    state : ndarray
        Joint values of the frame.
    cloud : PointCloud
        Sampled surface points labeled with their true part id. Point `i`
        is the same surface point in every frame.
    subparts : List[SubPart]
        One sub-part per box.
    depths : List[DepthMap]
        One render per camera.
    masks : List[Mask]
    contact : Optional[ndarray]
        World contact on the moved part where the interaction ended; None for frame 0.
    moved_part : int
        The part that moved since the previous frame; 0 for frame 0.
    """

    state: np.ndarray
    cloud: PointCloud
    subparts: t.List[SubPart]
    depths: t.List[DepthMap]
    masks: t.List[Mask]
    contact: t.Optional[np.ndarray] = None
    moved_part: int = 0


class JointTruth(msgspec.Struct, frozen=True):
    """
    Ground-truth joint of a movable part, world frame. `origin` is a point on
    the axis; it is meaningless for prismatic joints.
    """

    part: int
    kind: JointKind
    axis: t.List[float]
    origin: t.List[float]
    lower: float
    upper: float


class Scene(msgspec.Struct, eq=False):
    recipe: SceneRecipe
    model: ArticulatedModel
    cameras: t.List[t.Tuple[CameraIntrinsics, CameraExtrinsics]]
    frames: t.List[SceneFrame]

    @property
    def clouds(self) -> t.List[PointCloud]:
        return [frame.cloud for frame in self.frames]

    @property
    def contacts(self) -> t.List[np.ndarray]:
        """
        Contacts of frames 1..K, in order.
        """
        return [frame.contact for frame in self.frames[1:] if frame.contact is not None]

    @property
    def true_labels(self) -> np.ndarray:
        labels = self.frames[0].cloud.labels
        assert labels is not None
        return labels

    def joint_truth(self) -> t.List[JointTruth]:
        """
        Joints of every movable part in world coordinates.
        """
        base = self.model.base_pose
        truths = []
        for part in self.model.movable_parts:
            joint = part.joint
            assert joint is not None
            truths.append(
                JointTruth(
                    part.id,
                    joint.kind,
                    base.apply_direction(joint.axis).tolist(),
                    base.apply(joint.origin).tolist(),
                    joint.lower,
                    joint.upper,
                )
            )
        return truths


def _local_samples(plan: Blueprint, spacing: float) -> t.Tuple[t.List[np.ndarray], t.List[np.ndarray]]:
    """
    Part-frame samples per part, and the global box index of every sample.
    """
    samples = []
    boxes = []
    box_id = 0
    for part in plan.parts:
        points = []
        ids = []
        for lo, hi in part.boxes:
            face = face_samples(lo, hi, spacing)
            points.append(face)
            ids.append(np.full(len(face), box_id, dtype=np.int64))
            box_id += 1
        samples.append(np.concatenate(points))
        boxes.append(np.concatenate(ids))
    return samples, boxes


def _moved_part(previous: np.ndarray, current: np.ndarray) -> int:
    changed = np.flatnonzero(previous != current)
    if changed.size > 1:
        raise ConfigError(f"joints {(changed + 1).tolist()} move together; move one part per frame")
    return int(changed[0]) + 1 if changed.size else 0


def _contact(plan: Blueprint, poses: t.List[np.ndarray], part: int) -> np.ndarray:
    local = panel_face_centroid(plan.parts[part])
    pose = poses[part]
    return pose[:3, :3] @ local + pose[:3, 3]


def _world_pieces(model: ArticulatedModel, poses: t.List[np.ndarray]) -> t.List[ConvexPiece]:
    pieces = []
    for part, pose in zip(model.parts, poses):
        transform = RigidTransform.from_matrix(pose)
        pieces.extend(piece.transformed(transform) for piece in part.geometry)
    return pieces


def generate(recipe: SceneRecipe, render: bool = True, console: Console = silent) -> Scene:
    """
    Generates the scene of a recipe.

    Every frame samples the same part-frame points, so clouds correspond by
    index. Between two frames exactly one joint may change; its part is the
    frame's moved part and the contact is the centroid of that part's panel
    free face, taken where the motion ended. A frame whose state repeats the
    previous one is attributed to part 1.

    Parameters
    ----------
    recipe : SceneRecipe
    render : bool
        Whether to render depth and masks. Defaults to True.
    console : Console

    Returns
    -------
    Scene
        Deterministic given `recipe.seed`.

    Raises
    ------
    ConfigError
        Unknown category, states out of limits, or two joints changing at once.
    """
    plan = blueprint(recipe.category, recipe.scale)
    model = object_model(recipe)
    states = recipe_states(recipe)
    local, box_ids = _local_samples(plan, recipe.spacing)
    all_boxes = np.concatenate(box_ids)
    subparts = [SubPart(int(b), np.flatnonzero(all_boxes == b)) for b in np.unique(all_boxes)]
    cameras = [(c.intrinsics, look_at_extrinsics(c.eye, c.target)) for c in recipe.cameras]
    rng = np.random.default_rng(recipe.seed)

    frames: t.List[SceneFrame] = []
    for k, values in enumerate(states):
        state = JointState(values)
        poses = forward_kinematics_matrices(model, state)
        points, labels = sample_model_points(model, state, local)
        if recipe.noise > 0:
            points = points + rng.normal(0.0, recipe.noise, points.shape)
        contact = None
        moved = 0
        if k > 0:
            moved = _moved_part(states[k - 1], values)
            contact = _contact(plan, poses, moved or 1)
        depths: t.List[DepthMap] = []
        masks: t.List[Mask] = []
        if render:
            pieces = _world_pieces(model, poses)
            for intr, extr in cameras:
                depth, mask = render_world(pieces, intr, extr)
                depths.append(depth)
                masks.append(mask)
        frames.append(
            SceneFrame(values.copy(), PointCloud(points, labels), subparts, depths, masks, contact, moved)
        )
        console.log(f"{recipe.category} frame {k}: {len(points)} points, moved part {moved}")
    return Scene(recipe, model, cameras, frames)


def scene_affordances(
    scene: Scene,
    frame: int,
    camera: int = 0,
    virtual: t.Optional[CameraExtrinsics] = None,
    reach: float = 0.05,
) -> t.Tuple[PixelAffordance, PixelAffordance, np.ndarray, np.ndarray]:
    """
    Ground-truth pixel affordances of the interaction leading to `frame`.

    The contact and the motion direction are taken in frame `frame - 1`
    (the observation an affordance predictor would see) and projected into
    the real camera and a virtual camera sharing its intrinsics.

    Returns
    -------
    Tuple[PixelAffordance, PixelAffordance, ndarray, ndarray]
        Real-view and virtual-view affordances, the world contact and the unit
        world motion direction.

    Raises
    ------
    ConfigError
        `frame` is 0 or out of range.
    """
    if not 1 <= frame < len(scene.frames):
        raise ConfigError(f"frame must lie in [1, {len(scene.frames) - 1}]")
    target = scene.frames[frame]
    before = scene.frames[frame - 1]
    part_id = target.moved_part or 1
    part = scene.model.parts[part_id]
    assert part.joint is not None
    poses = forward_kinematics_matrices(scene.model, JointState(before.state))
    contact = _contact(blueprint(scene.recipe.category, scene.recipe.scale), poses, part_id)
    parent = poses[part.parent]
    contact_in_parent = np.linalg.solve(parent[:3, :3], contact - parent[:3, 3])
    direction = parent[:3, :3] @ part.joint.tangent(contact_in_parent)
    if target.state[part_id - 1] < before.state[part_id - 1]:
        direction = -direction
    direction = direction / np.linalg.norm(direction)

    intr, extr_real = scene.cameras[camera]
    extr_virtual = virtual if virtual is not None else virtual_camera_extrinsics()
    tip = contact + reach * direction

    def pixel(extr: CameraExtrinsics) -> PixelAffordance:
        u0, v0, _ = project(contact, intr, extr)
        u1, v1, _ = project(tip, intr, extr)
        return PixelAffordance((u0, v0), (u1 - u0, v1 - v0))

    return pixel(extr_real), pixel(extr_virtual), contact, direction


class _JointsFile(msgspec.Struct):
    joints: t.List[JointTruth]


def write_scene(scene: Scene, directory: t.Union[str, pathlib.Path]) -> t.List[pathlib.Path]:
    """
    Writes a scene in the documented file formats.

    Layout
    ------
    - `frame_<k>.apc`, `subparts_<k>.json` per frame.
    - `camera_<c>.json`, `depth_<k>_<c>.pgm`, `mask_<k>_<c>.pbm` per camera.
    - `contacts.json`, and `aff_<k>_real.json` / `aff_<k>_virtual.json` for
      every frame `k >= 1`, seen from camera 0.
    - `truth/model.urdf` with its meshes and `truth/joints.json`.

    Returns
    -------
    List[pathlib.Path]
        Every written file except URDF meshes.
    """
    root = pathlib.Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    written: t.List[pathlib.Path] = []

    def out(name: str) -> pathlib.Path:
        path = root / name
        written.append(path)
        return path

    for c, (intr, extr) in enumerate(scene.cameras):
        fileio.write_camera(out(f"camera_{c}.json"), intr, extr)
    for k, frame in enumerate(scene.frames):
        fileio.write_cloud(out(f"frame_{k}.apc"), frame.cloud)
        fileio.write_subparts(out(f"subparts_{k}.json"), frame.subparts)
        for c, (depth, mask) in enumerate(zip(frame.depths, frame.masks)):
            fileio.write_depth(out(f"depth_{k}_{c}.pgm"), depth)
            fileio.write_mask(out(f"mask_{k}_{c}.pbm"), mask)
    fileio.write_contacts(out("contacts.json"), scene.contacts)
    if scene.cameras:
        for k in range(1, len(scene.frames)):
            real, virtual, _, _ = scene_affordances(scene, k)
            fileio.write_affordance(out(f"aff_{k}_real.json"), "real", real)
            fileio.write_affordance(out(f"aff_{k}_virtual.json"), "virtual", virtual)

    truth = root / "truth"
    written.append(export_urdf(scene.model, truth, "model.urdf"))
    joints = truth / "joints.json"
    write_json(joints, _JointsFile(scene.joint_truth()))
    written.append(joints)
    return written
