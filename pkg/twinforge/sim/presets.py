"""
Built-in robots: a 7-joint arm with the kinematics of a common research arm,
carrying a suction cup, a parallel gripper, a 16-DoF four-finger hand or a
12-DoF five-finger hand, plus free-flying variants of each effector.
"""

from __future__ import annotations

__all__ = [
    "READY_ARM",
    "arm_chain",
    "suction_cup",
    "parallel_gripper",
    "four_finger_hand",
    "five_finger_hand",
    "robot_preset",
    "preset_names",
    "home_configuration",
    "load_robot",
]

import math
import pathlib
import typing as t

import numpy as np

from ..abc.configs import ArmJointSpec, EffectorSpec, FingerSpec, RobotSpec, SphereSpec
from ..core.codec import read_json
from ..core.errors import ConfigError

_HALF_PI = math.pi / 2

READY_ARM = (0.0, -math.pi / 4, 0.0, -3 * math.pi / 4, 0.0, math.pi / 2, 0.0)
"""
Arm configuration with the flange at (0.307, 0, 0.590), approach axis pointing down.
"""


def _s(x: float, y: float, z: float, r: float) -> SphereSpec:
    return SphereSpec((x, y, z), r)


def arm_chain() -> t.List[ArmJointSpec]:
    """
    Seven revolute joints. With every joint at zero the flange sits at
    (0.088, 0, 0.926) with its +z axis pointing down.
    """
    return [
        ArmJointSpec((0.0, 0.0, 0.333), (0.0, 0.0, 0.0), -2.8973, 2.8973, spheres=[_s(0.0, 0.0, 0.0, 0.07)]),
        ArmJointSpec(
            (0.0, 0.0, 0.0), (-_HALF_PI, 0.0, 0.0), -1.7628, 1.7628,
            spheres=[_s(0.0, -0.1, 0.0, 0.06), _s(0.0, -0.2, 0.0, 0.06)],
        ),
        ArmJointSpec(
            (0.0, -0.316, 0.0), (_HALF_PI, 0.0, 0.0), -2.8973, 2.8973,
            spheres=[_s(0.0, 0.0, 0.0, 0.06), _s(0.04, 0.0, 0.0, 0.06)],
        ),
        ArmJointSpec(
            (0.0825, 0.0, 0.0), (_HALF_PI, 0.0, 0.0), -3.0718, 0.1,
            spheres=[_s(0.0, 0.0, 0.0, 0.06), _s(-0.04, 0.13, 0.0, 0.055), _s(-0.06, 0.26, 0.0, 0.05)],
        ),
        ArmJointSpec((-0.0825, 0.384, 0.0), (-_HALF_PI, 0.0, 0.0), -2.8973, 2.8973, spheres=[_s(0.0, 0.0, 0.0, 0.05)]),
        ArmJointSpec(
            (0.0, 0.0, 0.0), (_HALF_PI, 0.0, 0.0), -0.0175, 3.7525, spheres=[_s(0.05, 0.0, 0.0, 0.05)]
        ),
        ArmJointSpec((0.088, 0.0, 0.0), (_HALF_PI, 0.0, 0.0), -2.8973, 2.8973, spheres=[_s(0.0, 0.0, 0.05, 0.045)]),
    ]


def suction_cup() -> EffectorSpec:
    return EffectorSpec(
        kind="suction",
        palm=[_s(0.0, 0.0, 0.03, 0.03), _s(0.0, 0.0, 0.07, 0.015)],
        tip_offset=0.1,
        name="suction",
    )


def parallel_gripper() -> EffectorSpec:
    return EffectorSpec(
        kind="gripper",
        palm=[_s(0.0, 0.0, 0.02, 0.04), _s(0.05, 0.0, 0.03, 0.025), _s(-0.05, 0.0, 0.03, 0.025)],
        finger_length=0.1,
        max_opening=0.08,
        finger_radius=0.008,
        name="gripper",
    )


def four_finger_hand() -> EffectorSpec:
    """
    Three fingers and an opposing thumb, four joints each. Fingers curl toward
    +x (the palm side); the thumb sits in front of the palm and curls back.
    """
    finger_lower = [-0.47, -0.196, -0.174, -0.227]
    finger_upper = [0.47, 1.61, 1.709, 1.618]
    segments = [0.02, 0.054, 0.038, 0.044]
    fingers = [
        FingerSpec(name, (0.0, y, 0.12), (0.0, 0.0, 1.0), (0.0, 1.0, 0.0), segments, finger_lower, finger_upper, 0.012)
        for name, y in (("index", 0.045), ("middle", 0.0), ("ring", -0.045))
    ]
    fingers.append(
        FingerSpec(
            "thumb", (0.05, -0.04, 0.06), (0.0, 0.0, 1.0), (0.0, -1.0, 0.0),
            [0.02, 0.05, 0.05, 0.05], [0.263, -0.105, -0.189, -0.162], [1.396, 1.163, 1.644, 1.719], 0.012,
        )
    )
    return EffectorSpec(
        kind="hand",
        palm=[_s(0.0, 0.0, 0.04, 0.04), _s(0.0, 0.03, 0.08, 0.03), _s(0.0, -0.03, 0.08, 0.03)],
        fingers=fingers,
        name="four_finger_hand",
    )


def five_finger_hand() -> EffectorSpec:
    """
    Thumb and index with three joints, middle, ring and pinky with two.
    """
    fingers = [
        FingerSpec(
            "thumb", (0.045, -0.035, 0.05), (0.0, 0.0, 1.0), (0.0, -1.0, 0.0),
            [0.03, 0.045, 0.035], [0.0, 0.0, 0.0], [1.05, 1.57, 1.57], 0.01,
        ),
        FingerSpec(
            "index", (0.0, 0.045, 0.11), (0.0, 0.0, 1.0), (0.0, 1.0, 0.0),
            [0.03, 0.04, 0.03], [-0.17, 0.0, 0.0], [0.17, 1.92, 1.92], 0.01,
        ),
    ]
    fingers += [
        FingerSpec(name, (0.0, y, z), (0.0, 0.0, 1.0), (0.0, 1.0, 0.0), segments, [0.0, 0.0], [1.92, 1.92], 0.01)
        for name, y, z, segments in (
            ("middle", 0.015, 0.11, [0.045, 0.035]),
            ("ring", -0.015, 0.11, [0.045, 0.035]),
            ("pinky", -0.045, 0.105, [0.04, 0.03]),
        )
    ]
    return EffectorSpec(
        kind="hand",
        palm=[_s(0.0, 0.0, 0.04, 0.035), _s(0.0, 0.025, 0.08, 0.025), _s(0.0, -0.025, 0.08, 0.025)],
        fingers=fingers,
        name="five_finger_hand",
    )


_EFFECTORS: t.Dict[str, t.Callable[[], EffectorSpec]] = {
    "suction": suction_cup,
    "gripper": parallel_gripper,
    "hand": four_finger_hand,
    "five_finger_hand": five_finger_hand,
}


def robot_preset(name: str) -> RobotSpec:
    """
    A built-in robot by name: `suction`, `gripper`, `hand`, `five_finger_hand`,
    or any of them prefixed with `free_` for the free-flying variant.

    Raises
    ------
    ConfigError
        Unknown name.
    """
    free = name.startswith("free_")
    key = name[len("free_") :] if free else name
    factory = _EFFECTORS.get(key)
    if factory is None:
        raise ConfigError(f"unknown robot preset {name!r}; choose from {preset_names()}")
    if free:
        return RobotSpec(
            effector=factory(),
            base="free",
            free_lower=(-0.5, -1.0, 0.0),
            free_upper=(1.5, 1.0, 1.5),
            name=name,
        )
    return RobotSpec(
        effector=factory(),
        arm=arm_chain(),
        flange_xyz=(0.0, 0.0, 0.107),
        base_spheres=[_s(0.0, 0.0, 0.1, 0.08), _s(0.0, 0.0, 0.23, 0.07)],
        name=name,
    )


def preset_names() -> t.List[str]:
    return list(_EFFECTORS) + [f"free_{name}" for name in _EFFECTORS]


def home_configuration(robot: RobotSpec) -> np.ndarray:
    """
    Ready configuration: the arm in `READY_ARM` (free-flying: above the origin
    region pointing down), the gripper open and every hand joint at zero,
    clipped into the limits.
    """
    lower, upper = robot.limits()
    if robot.base == "arm":
        arm = list(READY_ARM[: len(robot.arm)]) + [0.0] * max(0, len(robot.arm) - len(READY_ARM))
    else:
        arm = [0.3, 0.0, 0.5, math.pi, 0.0, 0.0]
    if robot.effector.kind == "gripper":
        hand = [robot.effector.max_opening]
    else:
        hand = [0.0] * robot.effector.hand_dof
    return np.clip(np.array(arm + hand, dtype=np.float64), lower, upper)


def load_robot(name_or_path: str) -> RobotSpec:
    """
    A preset name, or a path to a JSON-encoded `RobotSpec`.
    """
    path = pathlib.Path(name_or_path)
    if path.suffix == ".json" or path.exists():
        return read_json(path, RobotSpec)
    return robot_preset(name_or_path)
