"""
Domain models built on top of the geometric primitives.

- `Joint`, `Part`, `ArticulatedModel`, `JointState`: the articulated object model.
- `SubPart`, `SubPartGraph`, `SegmentationLabels`: movable part segmentation.
- `ScrewMotion`, `RegistrationResult`, `JointEstimate`: kinematic fitting.
- `PoseHypothesis`: silhouette alignment result.
- `ContactReport`, `Observation`, `SimState`: simulator state.
- `RewardBreakdown`: per-term reward values.
- `GraspDataset`, `EigengraspBasis`: hand posture PCA.
- `StepRecord`, `Trajectory`: planner output.
"""

from __future__ import annotations

__all__ = [
    "JointKind",
    "Joint",
    "Part",
    "ArticulatedModel",
    "JointState",
    "SubPart",
    "SubPartGraph",
    "SegmentationLabels",
    "ScrewMotion",
    "RegistrationResult",
    "JointEstimate",
    "PoseHypothesis",
    "ContactPair",
    "ContactReport",
    "Observation",
    "SimState",
    "RewardBreakdown",
    "GraspDataset",
    "EigengraspBasis",
    "StepRecord",
    "Trajectory",
]

import typing as t

import msgspec
import numpy as np

from ..core.errors import InvalidInput, JointLimitViolation
from .generic import ConvexPiece, RigidTransform, as_point, readonly

JointKind = t.Literal["prismatic", "revolute"]

LIMIT_TOLERANCE = 1e-12


class Joint(msgspec.Struct, eq=False):
    """
    A 1-DoF joint connecting a part to its parent.

    Parameters
    ----------
    kind : Literal["prismatic", "revolute"]
        Sliding (meters) or rotating (radians).
    axis : ndarray
        Unit direction in the parent frame.
    origin : ndarray
        A point on the axis in the parent frame; unused for prismatic joints.
    lower, upper : float
        Joint limits.
    """

    kind: JointKind
    axis: np.ndarray
    origin: np.ndarray
    lower: float
    upper: float

    def __post_init__(self) -> None:
        axis = as_point(self.axis, "joint axis")
        norm = np.linalg.norm(axis)
        if norm < 1e-12:
            raise InvalidInput("joint axis must be non-zero")
        self.axis = readonly(axis / norm)
        self.origin = readonly(as_point(self.origin, "joint origin"))
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)) or self.lower > self.upper:
            raise InvalidInput(f"invalid joint limits [{self.lower}, {self.upper}]")

    def contains(self, value: float) -> bool:
        return self.lower - LIMIT_TOLERANCE <= value <= self.upper + LIMIT_TOLERANCE

    def clamp(self, value: float) -> float:
        return float(min(max(value, self.lower), self.upper))

    def motion(self, value: float) -> RigidTransform:
        """
        Rigid motion of the child relative to its rest pose at joint value `value`.
        """
        if self.kind == "prismatic":
            return RigidTransform(np.eye(3), self.axis * value)
        return RigidTransform.about_axis(self.axis, value, self.origin)

    def motion_matrix(self, value: float) -> np.ndarray:
        """
        4×4 variant of `motion` without validation, for inner loops.
        """
        h = np.eye(4)
        if self.kind == "prismatic":
            h[:3, 3] = self.axis * value
            return h
        a = self.axis
        k = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
        rotation = np.eye(3) + np.sin(value) * k + (1.0 - np.cos(value)) * (k @ k)
        h[:3, :3] = rotation
        h[:3, 3] = self.origin - rotation @ self.origin
        return h

    def tangent(self, point_in_parent: np.ndarray) -> np.ndarray:
        """
        Velocity of a rigidly attached point per unit joint value, parent frame.
        """
        if self.kind == "prismatic":
            return self.axis.copy()
        return np.cross(self.axis, point_in_parent - self.origin)


class Part(msgspec.Struct, eq=False):
    """
    A rigid part. Geometry vertices are expressed in the part frame, which
    coincides with the parent frame at joint value 0.
    """

    id: int
    parent: int
    geometry: t.List[ConvexPiece] = msgspec.field(default_factory=list)
    joint: t.Optional[Joint] = None
    name: str = ""

    @property
    def label(self) -> str:
        return self.name or f"part_{self.id}"


class ArticulatedModel(msgspec.Struct, eq=False):
    """
    One root part and K movable parts forming a tree.

    Parameters
    ----------
    parts : List[Part]
        Parts sorted by id, ids dense 0..K, part 0 the root.
    base_pose : RigidTransform
        Pose of the root in the world.
    """

    parts: t.List[Part]
    base_pose: RigidTransform = msgspec.field(default_factory=RigidTransform.identity)

    def __post_init__(self) -> None:
        self.parts = sorted(self.parts, key=lambda part: part.id)
        ids = [part.id for part in self.parts]
        if ids != list(range(len(self.parts))):
            raise InvalidInput(f"part ids must be dense from 0, got {ids}")
        if not self.parts:
            raise InvalidInput("a model needs a root part")
        for part in self.parts:
            if part.id == 0:
                if part.joint is not None:
                    raise InvalidInput("the root part has no joint")
                continue
            if part.joint is None:
                raise InvalidInput(f"part {part.id} has no joint")
            if not 0 <= part.parent < len(self.parts) or part.parent == part.id:
                raise InvalidInput(f"part {part.id} has invalid parent {part.parent}")
        for part in self.parts[1:]:
            seen = {part.id}
            node = part
            while node.id != 0:
                node = self.parts[node.parent]
                if node.id in seen:
                    raise InvalidInput(f"part {part.id} is on a cycle")
                seen.add(node.id)

    @property
    def dof(self) -> int:
        return len(self.parts) - 1

    @property
    def movable_parts(self) -> t.List[Part]:
        return self.parts[1:]

    def joint(self, index: int) -> Joint:
        """
        Joint of the `index`-th movable part (part id `index + 1`).
        """
        joint = self.parts[index + 1].joint
        assert joint is not None
        return joint

    def rest_state(self) -> JointState:
        """
        All joints at 0, clamped into their limits.
        """
        return JointState(np.array([self.joint(i).clamp(0.0) for i in range(self.dof)]))


class JointState(msgspec.Struct, eq=False):
    """
    One value per movable part, ordered by part id.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise InvalidInput("joint state must be finite")
        self.values = readonly(values)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def __getitem__(self, index: int) -> float:
        return float(self.values[index])

    def check(self, model: ArticulatedModel) -> None:
        if len(self) != model.dof:
            raise InvalidInput(f"joint state has {len(self)} values for {model.dof} joints")
        for index, value in enumerate(self.values):
            joint = model.joint(index)
            if not joint.contains(value):
                raise JointLimitViolation(
                    f"joint {index} value {value:.6g} outside [{joint.lower:.6g}, {joint.upper:.6g}]"
                )

    def replace(self, index: int, value: float) -> JointState:
        values = self.values.copy()
        values[index] = value
        return JointState(values)


class SubPart(msgspec.Struct, eq=False):
    """
    A small geometric segment of one frame.
    """

    id: int
    point_indices: np.ndarray

    def __post_init__(self) -> None:
        self.point_indices = readonly(np.asarray(self.point_indices).reshape(-1), np.int64)


class SubPartGraph(msgspec.Struct, eq=False):
    """
    Sub-parts with undirected adjacency edges `(a, b)`, `a < b`.
    """

    nodes: t.List[SubPart]
    edges: t.List[t.Tuple[int, int]]

    def __post_init__(self) -> None:
        valid = {node.id for node in self.nodes}
        for a, b in self.edges:
            if a not in valid or b not in valid or a == b:
                raise InvalidInput(f"invalid edge ({a}, {b})")

    def neighbors(self, node: int) -> t.List[int]:
        found = [b for a, b in self.edges if a == node] + [a for a, b in self.edges if b == node]
        return sorted(found)


class SegmentationLabels(msgspec.Struct, eq=False):
    """
    Per-point movable part labels of the last frame (0 = root).

    `history[k]` holds the labels of frame k, so `history[-1]` equals `labels`.
    """

    labels: np.ndarray
    history: t.List[np.ndarray] = msgspec.field(default_factory=list)

    def __post_init__(self) -> None:
        self.labels = readonly(np.asarray(self.labels).reshape(-1), np.int64)
        self.history = [readonly(np.asarray(h).reshape(-1), np.int64) for h in self.history]

    @property
    def part_count(self) -> int:
        """
        K, the number of movable labels.
        """
        return int(self.labels.max()) if self.labels.size else 0


class ScrewMotion(msgspec.Struct, eq=False):
    """
    Rotation about an axis through `axis_origin` plus translation along it.
    """

    rotation_angle: float
    rotation_axis: np.ndarray
    axis_origin: np.ndarray
    translation_along_axis: float

    def __post_init__(self) -> None:
        self.rotation_axis = readonly(as_point(self.rotation_axis, "screw axis"))
        self.axis_origin = readonly(as_point(self.axis_origin, "screw origin"))


class RegistrationResult(msgspec.Struct, eq=False):
    """
    Output of part transform estimation.
    """

    transform: RigidTransform
    converged: bool
    iterations: int
    residual: float


class JointEstimate(msgspec.Struct, eq=False):
    """
    A fitted joint.

    Parameters
    ----------
    kind : Literal["prismatic", "revolute"]
    axis : ndarray
        Unit axis direction.
    origin : Optional[ndarray]
        Minimum-norm point on the axis, `None` for prismatic joints.
    observed_displacement : List[float]
        Joint value per frame relative to frame 0.
    residual : float
        Mean point distance under the fitted joint, meters.
    """

    kind: JointKind
    axis: np.ndarray
    origin: t.Optional[np.ndarray]
    observed_displacement: t.List[float]
    residual: float

    def __post_init__(self) -> None:
        self.axis = readonly(as_point(self.axis, "axis"))
        if self.origin is not None:
            self.origin = readonly(as_point(self.origin, "origin"))
        if self.residual < 0:
            raise InvalidInput("residual must be non-negative")

    def as_joint(self, margin: float = 0.5) -> Joint:
        """
        Joint whose limits span the observed range widened by `margin` on each side.
        """
        low = min(self.observed_displacement)
        high = max(self.observed_displacement)
        span = high - low
        origin = self.origin if self.origin is not None else np.zeros(3)
        return Joint(self.kind, self.axis, origin, low - margin * span, high + margin * span)


class PoseHypothesis(msgspec.Struct, eq=False):
    """
    Yaw about the world z axis, unscaled translation, scale and silhouette IoU.
    """

    yaw: float
    translation: np.ndarray
    scale: float = 1.0
    score: float = 0.0

    def __post_init__(self) -> None:
        self.translation = readonly(as_point(self.translation, "translation"))
        if not self.scale > 0:
            raise InvalidInput("scale must be positive")


class ContactPair(msgspec.Struct, frozen=True, array_like=True):
    """
    A robot link near (or inside) an object part.
    """

    link: str
    part: int
    penetration: float


class ContactReport(msgspec.Struct, frozen=True):
    """
    Contacts between robot and object after a step.
    """

    pairs: t.List[ContactPair] = msgspec.field(default_factory=list)
    unexpected_collision: bool = False
    palm_contact: bool = False
    finger_contact_count: int = 0
    tip_on_target: bool = False
    target_contact: bool = False
    """
    Any effector link touches the target part.
    """
    closure: bool = False
    """
    Opposing effector contacts on the target part.
    """

    @property
    def max_penetration(self) -> float:
        return max((pair.penetration for pair in self.pairs), default=0.0)


class Observation(msgspec.Struct, eq=False):
    """
    Reward inputs derived from a state: effector points and target geometry in the world.
    """

    grasp_center: np.ndarray
    virtual_tip: t.Optional[np.ndarray]
    suction_axis: t.Optional[np.ndarray]
    target_point: np.ndarray
    target_normal: np.ndarray
    cartesian_error: float = 0.0


class SimState(msgspec.Struct, eq=False):
    """
    Robot configuration, object joint state and bookkeeping for one instant.
    """

    robot_q: np.ndarray
    object_s: JointState
    last_q_velocity: np.ndarray
    last_q_acceleration: np.ndarray
    contact: ContactReport
    observation: Observation
    attached: bool = False
    attach_effector: t.Optional[np.ndarray] = None
    """
    Weld point in the effector frame.
    """
    attach_part: t.Optional[np.ndarray] = None
    """
    Weld point in the target part frame.
    """
    stuck: bool = False
    step_index: int = 0

    def __post_init__(self) -> None:
        self.robot_q = readonly(np.reshape(self.robot_q, -1))
        self.last_q_velocity = readonly(np.reshape(self.last_q_velocity, -1))
        self.last_q_acceleration = readonly(np.reshape(self.last_q_acceleration, -1))


class RewardBreakdown(msgspec.Struct, frozen=True):
    """
    Individual reward terms of one step.

    `dist_term` is the unsigned weighted distance; `r_dist` is its signed
    contribution to `total`.
    """

    r_success: float = 0.0
    r_target: float = 0.0
    r_contact: float = 0.0
    dist_term: float = 0.0
    r_dist: float = 0.0
    r_reg: float = 0.0
    r_dir: float = 0.0
    total: float = 0.0

    @classmethod
    def build(cls, **terms: float) -> RewardBreakdown:
        dist_term = terms.pop("dist_term", 0.0)
        total = float(sum(terms.values()))
        return cls(dist_term=dist_term, total=total, **terms)


class GraspDataset(msgspec.Struct, eq=False):
    """
    N hand postures (radians) with the hand name and joint limits.
    """

    postures: np.ndarray
    hand: str
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        postures = np.asarray(self.postures, dtype=np.float64)
        if postures.ndim != 2:
            raise InvalidInput("postures must be an N×d matrix")
        self.postures = readonly(postures)
        self.lower = readonly(np.reshape(self.lower, -1))
        self.upper = readonly(np.reshape(self.upper, -1))
        d = postures.shape[1]
        if self.lower.shape != (d,) or self.upper.shape != (d,):
            raise InvalidInput("limits must have one entry per hand joint")
        if postures.shape[0] < d:
            raise InvalidInput(f"need at least {d} postures, got {postures.shape[0]}")
        if np.any(postures < self.lower - 1e-12) or np.any(postures > self.upper + 1e-12):
            raise InvalidInput("postures must lie within the joint limits")

    @property
    def dof(self) -> int:
        return int(self.postures.shape[1])


class EigengraspBasis(msgspec.Struct, eq=False):
    """
    Mean posture, the first m eigengrasps (columns) and all eigenvalues.

    Parameters
    ----------
    mean : ndarray
        d_hand posture average.
    eigenvectors : ndarray
        d_hand × m, orthonormal columns.
    eigenvalues : ndarray
        All d_hand eigenvalues, descending.
    accumulated_ratio : ndarray
        Cumulative explained variance for m = 1..d_hand.
    flagged : List[int]
        Indices of retained components with zero variance.
    """

    mean: np.ndarray
    eigenvectors: np.ndarray
    eigenvalues: np.ndarray
    accumulated_ratio: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    hand: str = ""
    flagged: t.List[int] = msgspec.field(default_factory=list)

    def __post_init__(self) -> None:
        self.mean = readonly(np.reshape(self.mean, -1))
        self.eigenvectors = readonly(np.reshape(self.eigenvectors, (self.mean.shape[0], -1)))
        self.eigenvalues = readonly(np.reshape(self.eigenvalues, -1))
        self.accumulated_ratio = readonly(np.reshape(self.accumulated_ratio, -1))
        self.lower = readonly(np.reshape(self.lower, -1))
        self.upper = readonly(np.reshape(self.upper, -1))

    @property
    def m(self) -> int:
        return int(self.eigenvectors.shape[1])

    @property
    def dof(self) -> int:
        return int(self.mean.shape[0])


class StepRecord(msgspec.Struct, frozen=True):
    """
    One executed planner step.
    """

    step: int
    action: t.List[float]
    breakdown: RewardBreakdown
    object_s: float
    best_score: float


class Trajectory(msgspec.Struct, frozen=True):
    """
    Planner output.

    Parameters
    ----------
    actions : List[List[float]]
        Executed actions in plan space.
    steps : List[StepRecord]
        Per-step breakdowns.
    success : bool
        |s_target - s_final| < ε.
    s_initial, s_target, s_final : float
        Target joint values.
    delta : float
        Δs_real - Δs_target.
    delta_relative : float
        delta / Δs_target × 100 (0 when Δs_target is 0).
    robot_q : List[List[float]]
        Robot configuration after every executed step, including the initial one.
    collision : bool
        An unexpected collision happened during execution.
    """

    actions: t.List[t.List[float]]
    steps: t.List[StepRecord]
    success: bool
    s_initial: float
    s_target: float
    s_final: float
    delta: float
    delta_relative: float
    robot_q: t.List[t.List[float]] = msgspec.field(default_factory=list)
    collision: bool = False

    @property
    def length(self) -> int:
        return len(self.actions)
