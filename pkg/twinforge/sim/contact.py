"""
Contacts between robot collision spheres and the convex pieces of an object.

Every piece is reduced once to its hull half-spaces `n·x + d <= 0` (part
frame). A sphere's signed distance to a piece is the largest plane distance of
its center, minus its radius.
"""

from __future__ import annotations

__all__ = [
    "PiecePlanes",
    "SphereContacts",
    "piece_planes",
    "model_planes",
    "world_planes",
    "sphere_contacts",
    "point_distance",
    "build_report",
    "detect_contacts",
]

import typing as t

import msgspec
import numpy as np
import numpy.typing as npt
from scipy.spatial import ConvexHull, QhullError

from ..abc.configs import EffectorKind, RobotSpec, SimConfig
from ..abc.generic import ConvexPiece
from ..abc.modals import ArticulatedModel, ContactPair, ContactReport, JointState
from ..core.defaults import SimDefaults
from ..model.articulated import forward_kinematics_matrices
from .robot import RobotChain, RobotPose


class PiecePlanes(msgspec.Struct, eq=False):
    """
    Hull half-spaces of one convex piece.

    Parameters
    ----------
    part : int
        Owning part id.
    normals : ndarray
        F×3 outward unit normals.
    offsets : ndarray
        F plane offsets; inside points satisfy `normals @ x + offsets <= 0`.
    vertices : ndarray
        Hull vertices, used for face centroids.
    """

    part: int
    normals: np.ndarray
    offsets: np.ndarray
    vertices: np.ndarray

    @property
    def center(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def face_centroid(self, face: int) -> np.ndarray:
        distance = self.vertices @ self.normals[face] + self.offsets[face]
        on_face = np.abs(distance) <= 1e-9 * max(1.0, float(np.abs(self.vertices).max()))
        return self.vertices[on_face].mean(axis=0)

    def transformed(self, pose: np.ndarray) -> PiecePlanes:
        normals = self.normals @ pose[:3, :3].T
        return PiecePlanes(
            part=self.part,
            normals=normals,
            offsets=self.offsets - normals @ pose[:3, 3],
            vertices=self.vertices @ pose[:3, :3].T + pose[:3, 3],
        )


def piece_planes(piece: ConvexPiece, part: int) -> t.Optional[PiecePlanes]:
    """
    Half-spaces of a piece, `None` when the piece is flat or degenerate.

    Coplanar hull facets are merged so that a box yields six planes.
    """
    vertices = np.unique(np.asarray(piece.vertices, dtype=np.float64), axis=0)
    if len(vertices) < 4:
        return None
    try:
        hull = ConvexHull(vertices)
    except QhullError:
        try:
            hull = ConvexHull(vertices, qhull_options="QJ")
        except QhullError:
            return None
    equations = hull.equations
    _, keep = np.unique(np.round(equations, 9), axis=0, return_index=True)
    equations = equations[np.sort(keep)]
    return PiecePlanes(
        part=part,
        normals=equations[:, :3].copy(),
        offsets=equations[:, 3].copy(),
        vertices=vertices[hull.vertices],
    )


def model_planes(model: ArticulatedModel) -> t.List[PiecePlanes]:
    """
    Half-spaces of every piece of every part, part frames.
    """
    planes = []
    for part in model.parts:
        for piece in part.geometry:
            found = piece_planes(piece, part.id)
            if found is not None:
                planes.append(found)
    return planes


def world_planes(planes: t.Sequence[PiecePlanes], part_poses: t.Sequence[np.ndarray]) -> t.List[PiecePlanes]:
    return [piece.transformed(part_poses[piece.part]) for piece in planes]


class SphereContacts(msgspec.Struct, eq=False):
    """
    Sphere-piece pairs closer than the contact distance, world frame.

    Parameters
    ----------
    sphere : ndarray
        Sphere index per contact.
    part : ndarray
        Part id per contact.
    gap : ndarray
        Surface gap, negative when penetrating.
    normal : ndarray
        C×3 outward normal of the nearest face.
    point : ndarray
        C×3 sphere center projected onto that face.
    """

    sphere: np.ndarray
    part: np.ndarray
    gap: np.ndarray
    normal: np.ndarray
    point: np.ndarray

    def __len__(self) -> int:
        return int(self.sphere.shape[0])

    @property
    def penetration(self) -> np.ndarray:
        return np.maximum(0.0, -self.gap)


def sphere_contacts(
    centers: np.ndarray, radii: np.ndarray, planes: t.Sequence[PiecePlanes], epsilon: float
) -> SphereContacts:
    """
    Every sphere-piece pair whose gap is below `epsilon`, ordered by sphere then piece.
    """
    spheres, parts, gaps, normals, points, order = [], [], [], [], [], []
    for index, piece in enumerate(planes):
        if len(centers) == 0:
            break
        distances = centers @ piece.normals.T + piece.offsets
        nearest = distances.argmax(axis=1)
        signed = distances[np.arange(len(centers)), nearest]
        gap = signed - radii
        hit = np.flatnonzero(gap < epsilon)
        if hit.size == 0:
            continue
        normal = piece.normals[nearest[hit]]
        spheres.append(hit)
        parts.append(np.full(hit.size, piece.part, dtype=np.int64))
        gaps.append(gap[hit])
        normals.append(normal)
        points.append(centers[hit] - normal * signed[hit, None])
        order.append(np.full(hit.size, index, dtype=np.int64))
    if not spheres:
        empty = np.zeros(0, np.int64)
        return SphereContacts(empty, empty.copy(), np.zeros(0), np.zeros((0, 3)), np.zeros((0, 3)))
    sphere = np.concatenate(spheres)
    sort = np.lexsort((np.concatenate(order), sphere))
    return SphereContacts(
        sphere=sphere[sort],
        part=np.concatenate(parts)[sort],
        gap=np.concatenate(gaps)[sort],
        normal=np.concatenate(normals)[sort],
        point=np.concatenate(points)[sort],
    )


def point_distance(point: np.ndarray, planes: t.Sequence[PiecePlanes]) -> t.Tuple[float, np.ndarray]:
    """
    Smallest signed distance from a point to the given pieces, with the outward
    normal of the face that realizes it.
    """
    best = np.inf
    normal = np.zeros(3)
    for piece in planes:
        distances = piece.normals @ point + piece.offsets
        face = int(distances.argmax())
        if distances[face] < best:
            best, normal = float(distances[face]), piece.normals[face]
    return best, normal


def build_report(
    kind: EffectorKind,
    pose: RobotPose,
    contacts: SphereContacts,
    target_planes: t.Sequence[PiecePlanes],
    config: SimConfig,
) -> ContactReport:
    """
    Summarizes raw sphere contacts into a `ContactReport`.

    A contact is unexpected when an arm link touches anything or an effector
    link touches a part other than the target.
    """
    target = config.target_part
    pairs: t.Dict[t.Tuple[str, int], float] = {}
    penetrations = contacts.penetration.tolist()
    for sphere, part, penetration in zip(contacts.sphere.tolist(), contacts.part.tolist(), penetrations):
        key = (pose.sphere_links[sphere], part)
        pairs[key] = max(pairs.get(key, 0.0), penetration)

    on_effector = pose.sphere_effector[contacts.sphere] if len(contacts) else np.zeros(0, dtype=bool)
    on_target = contacts.part == target
    unexpected = bool(np.any(~on_effector) or np.any(on_effector & ~on_target))
    grip = on_effector & on_target
    fingers = pose.sphere_finger[contacts.sphere[grip]]
    palm = bool(np.any(fingers == -1))
    finger_count = int(np.unique(fingers[fingers >= 0]).size)

    closure = False
    if grip.sum() >= 2:
        normals = contacts.normal[grip]
        closure = bool((normals @ normals.T).min() < SimDefaults.OPPOSING_NORMALS)

    tip_on_target = False
    if kind == "suction" and pose.virtual_tip is not None and target_planes:
        distance, normal = point_distance(pose.virtual_tip, target_planes)
        if distance < config.contact_epsilon:
            tip_on_target = float(pose.suction_axis @ -normal) >= np.cos(config.psi)

    return ContactReport(
        pairs=[ContactPair(link, part, penetration) for (link, part), penetration in pairs.items()],
        unexpected_collision=unexpected,
        palm_contact=palm,
        finger_contact_count=finger_count,
        tip_on_target=bool(tip_on_target),
        target_contact=bool(grip.any() or tip_on_target),
        closure=closure,
    )


def detect_contacts(
    spec: RobotSpec,
    q: npt.ArrayLike,
    model: ArticulatedModel,
    s: JointState,
    config: SimConfig = SimConfig(),
    planes: t.Optional[t.Sequence[PiecePlanes]] = None,
) -> ContactReport:
    """
    Contacts of the robot at `q` with the object at `s`.

    Parameters
    ----------
    spec : RobotSpec
    q : ArrayLike
        Robot configuration.
    model : ArticulatedModel
    s : JointState
    config : SimConfig
        Contact distance, direction cone and target part.
    planes : Optional[Sequence[PiecePlanes]]
        Precomputed `model_planes(model)`.

    Returns
    -------
    ContactReport

    Raises
    ------
    JointLimitViolation
        `q` or `s` lies outside its limits.
    """
    pose = RobotChain(spec).fk(q)
    part_planes = model_planes(model) if planes is None else planes
    current = world_planes(part_planes, forward_kinematics_matrices(model, s))
    contacts = sphere_contacts(pose.sphere_centers, pose.sphere_radii, current, config.contact_epsilon)
    target = [piece for piece in current if piece.part == config.target_part]
    return build_report(spec.effector.kind, pose, contacts, target, config)
