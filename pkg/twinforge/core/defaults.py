"""
Default constants, grouped by the component that consumes them.

Each class is a plain holder of documented values; configuration structs in
`twinforge.abc.configs` read their defaults from here.
"""

from __future__ import annotations

__all__ = [
    "GeometryDefaults",
    "PerceptionDefaults",
    "SimDefaults",
    "SuctionDefaults",
    "GripperDefaults",
    "HandDefaults",
    "PlannerDefaults",
    "SynthDefaults",
]

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class GeometryDefaults:
    """
    Tolerances used by the geometric primitives.
    """

    ROTATION_TOLERANCE = 1e-9
    """
    Maximum deviation of RᵀR from identity, and of det(R) from +1.
    """
    RANK_RATIO = 1e-9
    """
    Relative singular value below which a centered point set counts as rank deficient.
    """
    VIRTUAL_CAMERA_POSITION = (0.2, 0.0, 0.7)
    """
    Virtual camera position in the robot base frame, meters.
    """
    VIRTUAL_CAMERA_PITCH = math.radians(52.0)
    """
    Downward pitch of the virtual camera, radians.
    """
    PARALLEL_PLANES = 1e-6
    """
    Planes with |n0·n1| > 1 - this value are rejected as parallel.
    """


@dataclass(frozen=True)
class PerceptionDefaults:
    """
    Segmentation, joint fitting and alignment defaults.
    """

    MOVED_DISTANCE = 0.01
    """
    Mean forward chamfer distance above which a sub-part counts as moved, meters.
    """
    MOVED_STATISTIC = 0.4
    """
    Two-sample Kolmogorov-Smirnov statistic above which a sub-part counts as moved.
    """
    CLUSTER_RADIUS = 0.015
    """
    Region-growing radius of the fallback sub-part proposer, meters.
    """
    ADJACENCY_RADIUS = 0.015
    """
    Two sub-parts are adjacent when their closest points are nearer than this, meters.
    """
    ICP_MAX_ITERATIONS = 50
    """
    Iteration cap of the closest-point registration.
    """
    ICP_TOLERANCE = 1e-6
    """
    Registration stops once the mean residual changes by less than this, meters.
    """
    ANGLE_THRESHOLD = math.radians(3.0)
    """
    Rotations below this angle are classified as prismatic.
    """
    TRANSLATION_FLOOR = 0.005
    """
    Translations below this magnitude (with a small angle) are not motion at all, meters.
    """
    LIMIT_MARGIN = 0.5
    """
    Observed joint range is widened by this fraction on each side.
    """
    YAW_SAMPLES = 72
    """
    Uniform yaw hypotheses evaluated by the silhouette search.
    """
    REFINE_STEPS = 20
    """
    Coordinate-descent rounds after the yaw sweep.
    """
    MIN_IOU = 0.2
    """
    Best silhouette IoU below this raises an alignment failure.
    """


@dataclass(frozen=True)
class SimDefaults:
    """
    Quasi-static simulator defaults.
    """

    CONTACT_EPSILON = 0.002
    """
    Sphere surfaces nearer than this to a part are in contact, meters.
    """
    RESOLUTION_PASSES = 10
    """
    Maximum penetration resolution passes per step.
    """
    PENETRATION_TOLERANCE = 0.0005
    """
    Resolution stops once every penetration is below this, meters.
    """
    ACTION_BOUND = 0.05
    """
    Per-dimension bound on joint increments.
    """
    OPPOSING_NORMALS = -0.5
    """
    Two contact normals with a dot product below this oppose each other (grasp closure).
    """
    WELD_TOLERANCE = 0.001
    """
    Largest allowed gap between the welded effector point and the part point, meters.
    """
    WELD_ITERATIONS = 5
    """
    Robot correction rounds while tracking a weld.
    """
    BLOCKED_FRACTIONS = (1.0, 0.5, 0.25)
    """
    Fractions of a commanded increment tried before the robot counts as stuck.
    """


@dataclass(frozen=True)
class SuctionDefaults:
    """
    Reward and planner defaults for the suction effector.
    """

    W_SUCCESS = 20.0
    W_TARGET = 50.0
    W_CONTACT = 10.0
    W_COLLISION = 60.0
    W_DIST = 10.0
    W_ACC = 0.01
    W_VEL = 0.03
    W_POS = 0.0
    W_DIR = 5.0
    """
    Reward for holding the suction axis inside the direction cone.
    """
    EPSILON_PRISMATIC = 0.005
    """
    Success tolerance for prismatic joints, meters.
    """
    EPSILON_REVOLUTE = 0.02
    """
    Success tolerance for revolute joints, radians.
    """
    PSI = math.radians(15.0)
    """
    Half-angle of the suction direction cone.
    """
    HORIZON_STEPS = 50
    ELITES = 20
    HORIZON = 10


@dataclass(frozen=True)
class GripperDefaults:
    """
    Reward and planner defaults for the two-finger gripper.
    """

    W_SUCCESS = 20.0
    W_TARGET = 50.0
    W_CONTACT = 10.0
    W_COLLISION = 60.0
    W_DIST = 10.0
    W_ACC = 0.01
    W_VEL = 0.03
    W_POS = 0.0
    EPSILON = 0.005
    """
    Success tolerance, meters or radians.
    """
    HORIZON_STEPS = 50
    ELITES = 300
    HORIZON = 10
    POPULATION = 400
    """
    Population large enough to hold the 300 elites.
    """


@dataclass(frozen=True)
class HandDefaults:
    """
    Reward and planner defaults for dexterous hands.
    """

    W_SUCCESS = 20.0
    W_TARGET = 50.0
    W_CONTACT = 10.0
    W_COLLISION = 60.0
    W_DIST = 10.0
    W_ACC = 0.0
    W_VEL = 0.01
    W_POS = 0.001
    """
    Weight of the Cartesian tracking error of the end link.
    """
    EPSILON_PRISMATIC = 0.005
    EPSILON_REVOLUTE = 0.02
    HORIZON_STEPS = 50
    ELITES = 100
    HORIZON = 10
    EIGENGRASP_DIM = 2
    """
    Number of eigengrasps the planner searches over.
    """


@dataclass(frozen=True)
class PlannerDefaults:
    """
    iCEM internals.
    """

    POPULATION = 120
    CEM_ITERATIONS = 3
    NOISE_BETA = 2.0
    """
    Exponent of the power-law (colored) sampling noise.
    """
    MOMENTUM = 0.1
    ELITE_SHIFT_FRACTION = 0.3
    """
    Fraction of elites carried over to the next iteration and the next step.
    """
    SIGMA_FRACTION = 0.5
    """
    Initial standard deviation as a fraction of the action range.
    """
    WORKERS = 1


@dataclass(frozen=True)
class SynthDefaults:
    """
    Synthetic scene defaults.
    """

    SPACING = 0.005
    """
    Surface sampling grid spacing, meters.
    """
    PART_GAP = 0.02
    """
    Clearance between a closed movable part and the body, meters.
    """
