"""
JSON-decodable configuration structs.

- `MovedCriterion`: movable part test thresholds.
- `SphereSpec`, `FingerSpec`, `EffectorSpec`, `ArmJointSpec`, `RobotSpec`: robot description.
- `SimConfig`: simulator settings.
- `RewardConfig`: reward weights and task values.
- `ICEMConfig`, `PlanSpace`: planner settings.
- `CameraSetup`, `SceneRecipe`: synthetic scenes.
- `SuiteTask`, `SuiteSpec`: evaluation suites.
- `GlobalConfig`: command line wide settings.
"""

from __future__ import annotations

__all__ = [
    "EffectorKind",
    "REWARD_TERMS",
    "MovedCriterion",
    "SphereSpec",
    "FingerSpec",
    "EffectorSpec",
    "ArmJointSpec",
    "RobotSpec",
    "SimConfig",
    "RewardConfig",
    "ICEMConfig",
    "PlanSpace",
    "CameraSetup",
    "SceneRecipe",
    "SuiteTask",
    "SuiteSpec",
    "GlobalConfig",
]

import math
import os
import typing as t

import msgspec
import numpy as np

from ..core.defaults import (
    GripperDefaults,
    HandDefaults,
    PerceptionDefaults,
    PlannerDefaults,
    SimDefaults,
    SuctionDefaults,
    SynthDefaults,
)
from ..core.errors import ConfigError
from .generic import CameraIntrinsics

EffectorKind = t.Literal["suction", "gripper", "hand"]
Vec3 = t.Tuple[float, float, float]

REWARD_TERMS = ("r_success", "r_target", "r_contact", "r_dist", "r_reg", "r_dir")


class MovedCriterion(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """
    Thresholds deciding whether a sub-part moved between two frames.
    """

    distance_threshold: float = PerceptionDefaults.MOVED_DISTANCE
    """
    Mean forward chamfer distance threshold, meters.
    """
    distribution_statistic_threshold: float = PerceptionDefaults.MOVED_STATISTIC
    """
    Kolmogorov-Smirnov statistic threshold between forward and backward distances.
    """

    def __post_init__(self) -> None:
        if not (self.distance_threshold > 0 and self.distribution_statistic_threshold > 0):
            raise ConfigError("moved criterion thresholds must be positive")


class SphereSpec(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """
    Collision sphere in its link frame.
    """

    center: Vec3
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ConfigError("sphere radius must be positive")


class FingerSpec(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """
    A planar finger: a chain of segments that curl about one axis.

    Parameters
    ----------
    name : str
        Link name prefix used in contact reports.
    base : Vec3
        Finger root in the effector frame.
    direction : Vec3
        Direction of the straight finger in the effector frame.
    curl_axis : Vec3
        Rotation axis of every joint of the finger, effector frame.
    segments : List[float]
        Segment length per joint, meters.
    lower, upper : List[float]
        Joint limits per joint, radians.
    radius : float
        Radius of the spheres placed at each segment end.
    """

    name: str
    base: Vec3
    direction: Vec3
    curl_axis: Vec3
    segments: t.List[float]
    lower: t.List[float]
    upper: t.List[float]
    radius: float = 0.01

    def __post_init__(self) -> None:
        if not (len(self.segments) == len(self.lower) == len(self.upper)) or not self.segments:
            raise ConfigError(f"finger {self.name}: segments and limits must have equal, non-zero length")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ConfigError(f"finger {self.name}: lower limit above upper limit")

    @property
    def dof(self) -> int:
        return len(self.segments)


class EffectorSpec(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """
    End effector mounted on the robot flange. The effector frame is the flange
    frame; its +z axis is the approach direction.

    Parameters
    ----------
    kind : Literal["suction", "gripper", "hand"]
    palm : List[SphereSpec]
        Palm (or cup body) spheres.
    tip_offset : float
        Suction only: distance of the virtual tip along +z.
    finger_length : float
        Gripper only: finger length along +z.
    max_opening : float
        Gripper only: maximum distance between the finger pads.
    finger_radius : float
        Gripper only: finger sphere radius.
    fingers : List[FingerSpec]
        Hand only.
    """

    kind: EffectorKind
    palm: t.List[SphereSpec]
    tip_offset: float = 0.0
    finger_length: float = 0.05
    max_opening: float = 0.08
    finger_radius: float = 0.008
    fingers: t.List[FingerSpec] = msgspec.field(default_factory=list)
    name: str = ""

    def __post_init__(self) -> None:
        if not self.palm:
            raise ConfigError("an effector needs palm spheres")
        if self.kind == "suction" and not self.tip_offset > 0:
            raise ConfigError("a suction effector needs a positive virtual tip offset")
        if self.kind == "hand" and len(self.fingers) < 3:
            raise ConfigError("a hand needs at least 3 fingers")
        if self.kind == "gripper" and not self.max_opening > 0:
            raise ConfigError("gripper opening must be positive")

    @property
    def hand_dof(self) -> int:
        if self.kind == "suction":
            return 0
        if self.kind == "gripper":
            return 1
        return sum(finger.dof for finger in self.fingers)

    def hand_limits(self) -> t.Tuple[np.ndarray, np.ndarray]:
        if self.kind == "gripper":
            return np.array([0.0]), np.array([self.max_opening])
        lower = [value for finger in self.fingers for value in finger.lower]
        upper = [value for finger in self.fingers for value in finger.upper]
        return np.array(lower, dtype=np.float64), np.array(upper, dtype=np.float64)


class ArmJointSpec(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """
    Revolute arm joint placed like a URDF joint: `xyz`/`rpy` locate the joint
    frame in the previous link frame, `axis` is given in the joint frame.
    """

    xyz: Vec3
    rpy: Vec3
    lower: float
    upper: float
    axis: Vec3 = (0.0, 0.0, 1.0)
    spheres: t.List[SphereSpec] = msgspec.field(default_factory=list)
    """
    Collision spheres of the link driven by this joint.
    """

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)) or self.lower > self.upper:
            raise ConfigError("arm joint limits must be finite with lower <= upper")


class RobotSpec(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """
    A robot: a 7-revolute serial arm (or a free-flying 6-DoF base) plus an effector.

    Parameters
    ----------
    base : Literal["arm", "free"]
        `arm` uses `arm`; `free` moves the effector by xyz + roll-pitch-yaw directly.
    arm : List[ArmJointSpec]
        Serial chain from the robot base.
    flange_xyz, flange_rpy : Vec3
        Effector mount in the last link frame.
    base_position : Vec3
        Robot base position in the world.
    base_spheres : List[SphereSpec]
        Spheres of the fixed base link.
    free_lower, free_upper : Vec3
        Position limits of the free-flying mode; angles are limited to ±π.
    """

    effector: EffectorSpec
    base: t.Literal["arm", "free"] = "arm"
    arm: t.List[ArmJointSpec] = msgspec.field(default_factory=list)
    flange_xyz: Vec3 = (0.0, 0.0, 0.0)
    flange_rpy: Vec3 = (0.0, 0.0, 0.0)
    base_position: Vec3 = (0.0, 0.0, 0.0)
    base_spheres: t.List[SphereSpec] = msgspec.field(default_factory=list)
    free_lower: Vec3 = (-2.0, -2.0, -2.0)
    free_upper: Vec3 = (2.0, 2.0, 2.0)
    name: str = ""

    def __post_init__(self) -> None:
        if self.base == "arm" and not self.arm:
            raise ConfigError("an arm robot needs at least one arm joint")

    @property
    def base_dof(self) -> int:
        return len(self.arm) if self.base == "arm" else 6

    @property
    def dof(self) -> int:
        return self.base_dof + self.effector.hand_dof

    def limits(self) -> t.Tuple[np.ndarray, np.ndarray]:
        if self.base == "arm":
            lower = [joint.lower for joint in self.arm]
            upper = [joint.upper for joint in self.arm]
        else:
            lower = list(self.free_lower) + [-math.pi] * 3
            upper = list(self.free_upper) + [math.pi] * 3
        if self.effector.hand_dof:
            hand_lower, hand_upper = self.effector.hand_limits()
            lower += hand_lower.tolist()
            upper += hand_upper.tolist()
        return np.array(lower, dtype=np.float64), np.array(upper, dtype=np.float64)


class SimConfig(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """
    Simulator settings.

    Parameters
    ----------
    target_part : int
        Part id the robot is meant to touch.
    target_point : Optional[Vec3]
        Grasp target on the target part, part frame. Defaults to a point on the
        face that looks most directly at the robot base (the most protruding one
        on ties): the face centroid for suction, the center of its piece otherwise.
    target_normal : Optional[Vec3]
        Outward surface normal at the target point, part frame. Defaults to the
        outward normal of the face holding the default target point.
    """

    target_part: int = 1
    contact_epsilon: float = SimDefaults.CONTACT_EPSILON
    psi: float = SuctionDefaults.PSI
    resolution_passes: int = SimDefaults.RESOLUTION_PASSES
    penetration_tolerance: float = SimDefaults.PENETRATION_TOLERANCE
    action_bound: float = SimDefaults.ACTION_BOUND
    weld: bool = True
    target_point: t.Optional[Vec3] = None
    target_normal: t.Optional[Vec3] = None

    def __post_init__(self) -> None:
        if self.target_part < 1:
            raise ConfigError("the target part must be a movable part (id >= 1)")
        if not self.contact_epsilon > 0 or not self.penetration_tolerance > 0:
            raise ConfigError("contact tolerances must be positive")
        if self.resolution_passes < 1:
            raise ConfigError("at least one resolution pass is required")
        if not 0 < self.psi < math.pi / 2:
            raise ConfigError("psi must lie in (0, pi/2)")


class RewardConfig(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """
    Reward weights and task values for one effector family.

    `s_initial` and `s_target` refer to the joint `target_joint`
    (index into the joint state). `disabled_terms` zeroes terms for ablations.
    """

    effector: EffectorKind
    s_initial: float
    s_target: float
    target_joint: int = 0
    w_success: float = SuctionDefaults.W_SUCCESS
    w_target: float = SuctionDefaults.W_TARGET
    w_contact: float = SuctionDefaults.W_CONTACT
    w_collision: float = SuctionDefaults.W_COLLISION
    w_dist: float = SuctionDefaults.W_DIST
    w_acc: float = SuctionDefaults.W_ACC
    w_vel: float = SuctionDefaults.W_VEL
    w_pos: float = SuctionDefaults.W_POS
    w_dir: float = SuctionDefaults.W_DIR
    epsilon: float = SuctionDefaults.EPSILON_PRISMATIC
    psi: float = SuctionDefaults.PSI
    disabled_terms: t.List[str] = msgspec.field(default_factory=list)

    def __post_init__(self) -> None:
        weights = (
            self.w_success, self.w_target, self.w_contact, self.w_collision,
            self.w_dist, self.w_acc, self.w_vel, self.w_pos, self.w_dir,
        )
        if any(w < 0 for w in weights):
            raise ConfigError("reward weights must be non-negative")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not 0 < self.psi < math.pi / 2:
            raise ConfigError("psi must lie in (0, pi/2)")
        unknown = set(self.disabled_terms) - set(REWARD_TERMS)
        if unknown:
            raise ConfigError(f"unknown reward terms: {sorted(unknown)}")
        if self.target_joint < 0:
            raise ConfigError("target joint index must be non-negative")

    @classmethod
    def for_effector(
        cls,
        effector: EffectorKind,
        s_initial: float,
        s_target: float,
        target_joint: int = 0,
        joint_kind: str = "prismatic",
        **overrides: t.Any,
    ) -> RewardConfig:
        """
        Documented defaults of an effector family.

        Parameters
        ----------
        joint_kind : str
            Selects the prismatic or revolute success tolerance.
        overrides
            Any field to replace.
        """
        revolute = joint_kind == "revolute"
        if effector == "suction":
            d: t.Any = SuctionDefaults
            epsilon = d.EPSILON_REVOLUTE if revolute else d.EPSILON_PRISMATIC
            extra = {"w_dir": d.W_DIR}
        elif effector == "gripper":
            d = GripperDefaults
            epsilon = d.EPSILON
            extra = {"w_dir": 0.0}
        elif effector == "hand":
            d = HandDefaults
            epsilon = d.EPSILON_REVOLUTE if revolute else d.EPSILON_PRISMATIC
            extra = {"w_dir": 0.0}
        else:
            raise ConfigError(f"unknown effector kind {effector!r}")
        fields: t.Dict[str, t.Any] = dict(
            effector=effector,
            s_initial=s_initial,
            s_target=s_target,
            target_joint=target_joint,
            w_success=d.W_SUCCESS,
            w_target=d.W_TARGET,
            w_contact=d.W_CONTACT,
            w_collision=d.W_COLLISION,
            w_dist=d.W_DIST,
            w_acc=d.W_ACC,
            w_vel=d.W_VEL,
            w_pos=d.W_POS,
            epsilon=epsilon,
            **extra,
        )
        fields.update(overrides)
        return cls(**fields)

    def enabled(self, term: str) -> bool:
        return term not in self.disabled_terms


class ICEMConfig(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """
    iCEM hyperparameters.

    Parameters
    ----------
    horizon_steps : int
        T, maximum number of executed steps.
    population : int
        Samples per CEM iteration.
    elites : int
        E, number of elites refit per iteration.
    horizon : int
        h, planning horizon.
    cem_iterations : int
        Inner iterations per executed step.
    noise_beta : float
        Power-law exponent of the colored sampling noise.
    sigma_init : Optional[List[float]]
        Per-dimension initial std; defaults to `0.5 × (hi - lo)`.
    momentum : float
        Weight of the previous distribution when refitting.
    elite_shift_fraction : float
        Fraction of elites kept across iterations and shifted to the next step.
    action_bound : float
        Symmetric bound used when `action_bounds` is not given.
    action_bounds : Optional[List[Tuple[float, float]]]
        Per-dimension `[lo, hi]`.
    seed : int
    workers : int
        Rollout worker processes; 1 evaluates in-process.
    """

    horizon_steps: int = SuctionDefaults.HORIZON_STEPS
    population: int = PlannerDefaults.POPULATION
    elites: int = SuctionDefaults.ELITES
    horizon: int = SuctionDefaults.HORIZON
    cem_iterations: int = PlannerDefaults.CEM_ITERATIONS
    noise_beta: float = PlannerDefaults.NOISE_BETA
    sigma_init: t.Optional[t.List[float]] = None
    momentum: float = PlannerDefaults.MOMENTUM
    elite_shift_fraction: float = PlannerDefaults.ELITE_SHIFT_FRACTION
    action_bound: float = SimDefaults.ACTION_BOUND
    action_bounds: t.Optional[t.List[t.Tuple[float, float]]] = None
    seed: int = 0
    workers: int = PlannerDefaults.WORKERS

    def __post_init__(self) -> None:
        if self.horizon < 1 or self.horizon_steps < 0 or self.cem_iterations < 1:
            raise ConfigError("horizon and iteration counts must be positive")
        if not 1 <= self.elites <= self.population:
            raise ConfigError(f"need 1 <= elites ({self.elites}) <= population ({self.population})")
        if not 0.0 <= self.momentum <= 1.0 or not 0.0 <= self.elite_shift_fraction <= 1.0:
            raise ConfigError("momentum and elite_shift_fraction must lie in [0, 1]")
        if not self.action_bound > 0:
            raise ConfigError("action bound must be positive")
        if self.action_bounds is not None and any(lo >= hi for lo, hi in self.action_bounds):
            raise ConfigError("every action bound needs lo < hi")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.workers < 1:
            raise ConfigError("worker count must be at least 1")

    @classmethod
    def for_effector(cls, effector: EffectorKind, **overrides: t.Any) -> ICEMConfig:
        defaults: t.Any = {"suction": SuctionDefaults, "gripper": GripperDefaults, "hand": HandDefaults}.get(
            effector
        )
        if defaults is None:
            raise ConfigError(f"unknown effector kind {effector!r}")
        fields: t.Dict[str, t.Any] = dict(
            horizon_steps=defaults.HORIZON_STEPS,
            elites=defaults.ELITES,
            horizon=defaults.HORIZON,
            population=max(PlannerDefaults.POPULATION, getattr(defaults, "POPULATION", 0)),
        )
        fields.update(overrides)
        return cls(**fields)

    def bounds(self, dim: int) -> t.Tuple[np.ndarray, np.ndarray]:
        if self.action_bounds is None:
            return np.full(dim, -self.action_bound), np.full(dim, self.action_bound)
        if len(self.action_bounds) != dim:
            raise ConfigError(f"{len(self.action_bounds)} action bounds for {dim} action dimensions")
        array = np.asarray(self.action_bounds, dtype=np.float64)
        return array[:, 0].copy(), array[:, 1].copy()

    def sigma(self, dim: int) -> np.ndarray:
        lo, hi = self.bounds(dim)
        if self.sigma_init is None:
            return PlannerDefaults.SIGMA_FRACTION * (hi - lo)
        if len(self.sigma_init) != dim:
            raise ConfigError(f"{len(self.sigma_init)} initial deviations for {dim} action dimensions")
        return np.asarray(self.sigma_init, dtype=np.float64)


class PlanSpace(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """
    Action space searched by the planner: full joint increments, or arm
    increments plus m eigengrasp coefficient increments.
    """

    mode: t.Literal["full", "eigengrasp"] = "full"
    m: int = 0

    def __post_init__(self) -> None:
        if self.mode == "eigengrasp" and self.m < 1:
            raise ConfigError("eigengrasp mode needs m >= 1")

    def dimension(self, robot: RobotSpec) -> int:
        if self.mode == "eigengrasp":
            if robot.effector.kind != "hand":
                raise ConfigError("eigengrasp actions need a hand effector")
            return robot.base_dof + self.m
        return robot.dof


class CameraSetup(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """
    A camera placed by eye and look-at target, world frame.
    """

    intrinsics: CameraIntrinsics = msgspec.field(
        default_factory=lambda: CameraIntrinsics(300.0, 300.0, 160.0, 120.0, 320, 240)
    )
    eye: Vec3 = (0.0, 0.0, 0.9)
    target: Vec3 = (0.6, 0.0, 0.25)


class SceneRecipe(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """
    A synthetic articulated scene.

    Parameters
    ----------
    category : str
        One of drawer, cabinet, laptop, lamp, two_door_cabinet, fridge.
    scale : float
        Uniform scale of the object.
    position : Vec3
        Object base position in the world.
    yaw : float
        Object base yaw; the default faces the object front toward the robot at the origin.
    states : Optional[List[List[float]]]
        Joint values per frame; one movable part moves between consecutive frames.
    cameras : List[CameraSetup]
    spacing : float
        Surface sampling grid spacing, meters.
    noise : float
        Gaussian point noise σ, meters.
    seed : int
    """

    category: t.Literal["drawer", "cabinet", "laptop", "lamp", "two_door_cabinet", "fridge"]
    scale: float = 1.0
    position: Vec3 = (0.6, 0.0, 0.0)
    yaw: float = math.pi
    states: t.Optional[t.List[t.List[float]]] = None
    cameras: t.List[CameraSetup] = msgspec.field(default_factory=lambda: [CameraSetup()])
    spacing: float = SynthDefaults.SPACING
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.scale > 0 or not self.spacing > 0:
            raise ConfigError("scale and spacing must be positive")
        if self.noise < 0:
            raise ConfigError("noise must be non-negative")


class SuiteTask(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """
    One planning task of an evaluation suite.

    The object comes from `model` (URDF path) or a synthetic `category`; the
    goal is `target_value`, or `initial_value + target_delta`.
    """

    name: str
    effector: EffectorKind
    category: t.Optional[str] = None
    model: t.Optional[str] = None
    robot: t.Optional[str] = None
    """
    Robot preset name or JSON path; defaults to the effector's preset.
    """
    target_joint: int = 0
    initial_value: t.Optional[float] = None
    target_value: t.Optional[float] = None
    target_delta: t.Optional[float] = None
    robot_q: t.Optional[t.List[float]] = None
    eigengrasp_dim: t.Optional[int] = None
    basis: t.Optional[str] = None
    icem: t.Optional[ICEMConfig] = None
    sim: t.Optional[SimConfig] = None
    disabled_terms: t.List[str] = msgspec.field(default_factory=list)


class SuiteSpec(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    tasks: t.List[SuiteTask]
    seeds: t.List[int] = msgspec.field(default_factory=lambda: list(range(10)))


class GlobalConfig(msgspec.Struct, frozen=True):
    """
    Settings shared by every subcommand.
    """

    seed: int = 0
    workers: int = 1
    verbosity: int = 1
    cloud_format: str = "apc v1"
    dataset_format: str = "EGDS"

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigError("worker count must be at least 1")

    @classmethod
    def from_environment(cls, seed: int = 0, workers: t.Optional[int] = None, verbosity: int = 1) -> GlobalConfig:
        """
        `TWINFORGE_WORKERS` supplies the worker count when `workers` is not given.
        """
        env = os.environ.get("TWINFORGE_WORKERS")
        if workers is None and env is not None:
            try:
                workers = int(env)
            except ValueError as exc:
                raise ConfigError(f"TWINFORGE_WORKERS must be an integer, got {env!r}") from exc
        return cls(seed=seed, workers=workers or 1, verbosity=verbosity)
