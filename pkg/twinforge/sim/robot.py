"""
Forward kinematics of the robot: a serial arm (or a free-flying base) carrying
a suction cup, a two-finger gripper or a multi-finger hand.

Collision geometry is a set of spheres per link. `RobotChain` compiles a
`RobotSpec` once and evaluates it for many configurations; `robot_fk` is the
one-shot form.
"""

from __future__ import annotations

__all__ = [
    "RobotPose",
    "RobotChain",
    "robot_fk",
    "origin_matrix",
]

import math
import typing as t

import msgspec
import numpy as np
import numpy.typing as npt
from scipy.spatial.transform import Rotation

from ..abc.configs import FingerSpec, RobotSpec, SphereSpec
from ..core.errors import InvalidInput, JointLimitViolation

_LIMIT_TOLERANCE = 1e-9


def origin_matrix(xyz: t.Sequence[float], rpy: t.Sequence[float]) -> np.ndarray:
    """
    4×4 transform of a URDF-style origin (fixed-axis roll, pitch, yaw).
    """
    h = np.eye(4)
    h[:3, :3] = Rotation.from_euler("xyz", rpy).as_matrix()
    h[:3, 3] = xyz
    return h


def _axis_rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    k = np.array([[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def _unit(vector: t.Sequence[float], name: str) -> np.ndarray:
    array = np.asarray(vector, dtype=np.float64)
    norm = np.linalg.norm(array)
    if not norm > 1e-12:
        raise InvalidInput(f"{name} must be non-zero")
    return array / norm


def _spheres(specs: t.Sequence[SphereSpec]) -> t.Tuple[np.ndarray, np.ndarray]:
    if not specs:
        return np.zeros((0, 3)), np.zeros(0)
    return np.array([s.center for s in specs], dtype=np.float64), np.array([s.radius for s in specs])


class RobotPose(msgspec.Struct, eq=False):
    """
    Robot geometry at one configuration, world frame.

    Parameters
    ----------
    link_names : List[str]
        `base`, `link1`..`linkN` (arm mode) and `effector`.
    link_frames : ndarray
        L×4×4 link frames in the order of `link_names`.
    effector : ndarray
        4×4 effector frame; its +z axis is the approach direction.
    grasp_center : ndarray
        Fingertip midpoint (gripper, hand) or virtual tip (suction).
    virtual_tip : Optional[ndarray]
        Suction only.
    suction_axis : Optional[ndarray]
        Suction only: the effector +z axis.
    fingertips : ndarray
        F×3 fingertip positions (empty for suction).
    sphere_links : List[str]
        Link name of every collision sphere.
    sphere_centers : ndarray
        S×3 sphere centers.
    sphere_radii : ndarray
    sphere_effector : ndarray
        Whether each sphere belongs to the effector.
    sphere_finger : ndarray
        Finger index of each sphere, -1 for palm and arm spheres.
    """

    link_names: t.List[str]
    link_frames: np.ndarray
    effector: np.ndarray
    grasp_center: np.ndarray
    virtual_tip: t.Optional[np.ndarray]
    suction_axis: t.Optional[np.ndarray]
    fingertips: np.ndarray
    sphere_links: t.List[str]
    sphere_centers: np.ndarray
    sphere_radii: np.ndarray
    sphere_effector: np.ndarray
    sphere_finger: np.ndarray

    @property
    def effector_position(self) -> np.ndarray:
        return self.effector[:3, 3]


class RobotChain:
    """
    A compiled `RobotSpec`.

    Parameters
    ----------
    spec : RobotSpec

    Example
    -------
    ```python
    chain = RobotChain(robot_preset("gripper"))
    pose = chain.fk(np.zeros(chain.dof))
    pose.grasp_center  # -> [0.088, 0.0, 0.826]
    ```
    """

    def __init__(self, spec: RobotSpec) -> None:
        self.spec = spec
        self.effector_spec = spec.effector
        self.base_dof = spec.base_dof
        self.dof = spec.dof
        self.lower, self.upper = spec.limits()
        self._base = np.eye(4)
        self._base[:3, 3] = spec.base_position
        self._origins = [origin_matrix(joint.xyz, joint.rpy) for joint in spec.arm]
        self._axes = [_unit(joint.axis, f"axis of arm joint {i + 1}") for i, joint in enumerate(spec.arm)]
        self._flange = origin_matrix(spec.flange_xyz, spec.flange_rpy)
        self._base_spheres = _spheres(spec.base_spheres) if spec.base == "arm" else _spheres([])
        self._arm_spheres = [_spheres(joint.spheres) for joint in spec.arm]
        self._palm = _spheres(spec.effector.palm)
        self._fingers = [
            (
                finger,
                _unit(finger.direction, f"{finger.name} direction"),
                _unit(finger.curl_axis, f"{finger.name} axis"),
            )
            for finger in spec.effector.fingers
        ]
        if spec.effector.kind == "gripper":
            effector = spec.effector
            count = max(2, math.ceil(effector.finger_length / effector.finger_radius))
            self._finger_z = effector.finger_length * np.arange(1, count + 1) / count
        else:
            self._finger_z = np.zeros(0)

    def check(self, q: npt.ArrayLike) -> np.ndarray:
        """
        Validates the configuration shape and limits.

        Raises
        ------
        InvalidInput
            Wrong length or non-finite values.
        JointLimitViolation
            A value lies outside its limits.
        """
        values = np.asarray(q, dtype=np.float64).reshape(-1)
        if values.shape != (self.dof,):
            raise InvalidInput(f"robot configuration has {values.shape[0]} values, expected {self.dof}")
        if not np.all(np.isfinite(values)):
            raise InvalidInput("robot configuration must be finite")
        bad = np.flatnonzero((values < self.lower - _LIMIT_TOLERANCE) | (values > self.upper + _LIMIT_TOLERANCE))
        if bad.size:
            i = int(bad[0])
            raise JointLimitViolation(
                f"robot joint {i} value {values[i]:.6g} outside [{self.lower[i]:.6g}, {self.upper[i]:.6g}]"
            )
        return values

    def link_frames(self, q: np.ndarray) -> t.Tuple[t.List[np.ndarray], np.ndarray]:
        """
        Arm link frames and the effector frame, without validation.
        """
        if self.spec.base == "free":
            effector = np.eye(4)
            effector[:3, :3] = Rotation.from_euler("xyz", q[3:6]).as_matrix()
            effector[:3, 3] = q[:3]
            return [], effector
        frame = self._base
        frames = [frame]
        for origin, axis, value in zip(self._origins, self._axes, q[: self.base_dof]):
            rotation = np.eye(4)
            rotation[:3, :3] = _axis_rotation(axis, value)
            frame = frame @ origin @ rotation
            frames.append(frame)
        return frames, frame @ self._flange

    def effector_matrix(self, q: np.ndarray) -> np.ndarray:
        return self.link_frames(q)[1]

    def _finger_chain(self, finger: FingerSpec, direction: np.ndarray, axis: np.ndarray, angles: np.ndarray):
        point = np.asarray(finger.base, dtype=np.float64)
        total = 0.0
        centers = []
        for length, angle in zip(finger.segments, angles):
            total += angle
            step = _axis_rotation(axis, total) @ direction * length
            centers.append(point + 0.5 * step)
            point = point + step
            centers.append(point)
        return np.array(centers), point

    def fk(self, q: npt.ArrayLike, check: bool = True) -> RobotPose:
        """
        Link frames, effector points and collision spheres at `q`.
        """
        values = self.check(q) if check else np.asarray(q, dtype=np.float64)
        frames, effector = self.link_frames(values)
        rotation, origin = effector[:3, :3], effector[:3, 3]
        hand = values[self.base_dof :]
        kind = self.effector_spec.kind

        names: t.List[str] = []
        centers: t.List[np.ndarray] = []
        radii: t.List[np.ndarray] = []
        on_effector: t.List[bool] = []
        finger_ids: t.List[int] = []

        def add(link: str, local: np.ndarray, radius: np.ndarray, frame: np.ndarray, effector_link: bool, finger: int):
            if len(local) == 0:
                return
            centers.append(local @ frame[:3, :3].T + frame[:3, 3])
            radii.append(np.broadcast_to(radius, (len(local),)).astype(np.float64))
            names.extend([link] * len(local))
            on_effector.extend([effector_link] * len(local))
            finger_ids.extend([finger] * len(local))

        link_names = []
        if frames:
            link_names.append("base")
            add("base", *self._base_spheres, frames[0], False, -1)
            for index, (spheres, frame) in enumerate(zip(self._arm_spheres, frames[1:])):
                link_names.append(f"link{index + 1}")
                add(f"link{index + 1}", *spheres, frame, False, -1)
        link_names.append("effector")
        add("palm", *self._palm, effector, True, -1)

        virtual_tip = None
        suction_axis = None
        tips_local: t.List[np.ndarray] = []
        if kind == "suction":
            suction_axis = rotation[:, 2].copy()
            virtual_tip = origin + self.effector_spec.tip_offset * suction_axis
        elif kind == "gripper":
            spec = self.effector_spec
            offset = 0.5 * float(hand[0]) + spec.finger_radius
            for index, (link, sign) in enumerate((("finger_left", 1.0), ("finger_right", -1.0))):
                z = self._finger_z
                local = np.stack([np.full_like(z, sign * offset), np.zeros_like(z), z], axis=1)
                add(link, local, np.array(spec.finger_radius), effector, True, index)
                tips_local.append(np.array([sign * offset, 0.0, spec.finger_length]))
        else:
            start = 0
            for index, (finger, direction, axis) in enumerate(self._fingers):
                angles = hand[start : start + finger.dof]
                start += finger.dof
                local, tip = self._finger_chain(finger, direction, axis, angles)
                for segment in range(finger.dof):
                    pair = local[2 * segment : 2 * segment + 2]
                    add(f"{finger.name}_{segment}", pair, np.array(finger.radius), effector, True, index)
                tips_local.append(tip)

        fingertips = np.array(tips_local).reshape(-1, 3) @ rotation.T + origin if tips_local else np.zeros((0, 3))
        grasp_center = virtual_tip.copy() if virtual_tip is not None else fingertips.mean(axis=0)
        return RobotPose(
            link_names=link_names,
            link_frames=np.array(frames + [effector]),
            effector=effector,
            grasp_center=grasp_center,
            virtual_tip=virtual_tip,
            suction_axis=suction_axis,
            fingertips=fingertips,
            sphere_links=names,
            sphere_centers=np.concatenate(centers) if centers else np.zeros((0, 3)),
            sphere_radii=np.concatenate(radii) if radii else np.zeros(0),
            sphere_effector=np.array(on_effector, dtype=bool),
            sphere_finger=np.array(finger_ids, dtype=np.int64),
        )


def robot_fk(spec: RobotSpec, q: npt.ArrayLike) -> RobotPose:
    """
    World geometry of the robot at configuration `q`.

    Parameters
    ----------
    spec : RobotSpec
    q : ArrayLike
        Arm joints (or free-flying xyz + roll-pitch-yaw) followed by the hand joints.

    Returns
    -------
    RobotPose

    Raises
    ------
    JointLimitViolation
        `q` lies outside the robot limits.
    """
    return RobotChain(spec).fk(q)
