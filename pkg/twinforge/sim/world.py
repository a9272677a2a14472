"""
Quasi-static simulator: the robot moves by joint increments, the object only
moves where the robot pushes it, along its joints.

- `SimWorld`: a model, a robot and a `SimConfig`, compiled once.
- `step`, `snapshot`, `restore`: the functional surface the planner samples against.
- `TraceWriter`: JSON lines, one state record per executed step.
"""

from __future__ import annotations

__all__ = [
    "SimWorld",
    "TraceRecord",
    "TraceWriter",
    "step",
    "snapshot",
    "restore",
]

import pathlib
import types
import typing as t

import msgspec
import numpy as np
import numpy.typing as npt

from ..abc.configs import RobotSpec, SimConfig
from ..abc.modals import ArticulatedModel, ContactReport, JointState, Observation, SimState
from ..core.codec import decode_msgpack, encode_json, encode_msgpack
from ..core.console import Console, silent
from ..core.defaults import SimDefaults
from ..core.errors import ConfigError, InvalidInput
from ..model.articulated import forward_kinematics_matrices
from .contact import PiecePlanes, build_report, model_planes, point_distance, sphere_contacts, world_planes
from .presets import home_configuration
from .robot import RobotChain, RobotPose

_FINITE_DIFFERENCE = 1e-6
_JOINT_SOLVER_ITERATIONS = 10


def _to_local(pose: np.ndarray, point: np.ndarray) -> np.ndarray:
    return pose[:3, :3].T @ (point - pose[:3, 3])


def _to_world(pose: np.ndarray, point: np.ndarray) -> np.ndarray:
    return pose[:3, :3] @ point + pose[:3, 3]


class SimWorld:
    """
    The simulator for one object and one robot.

    Parameters
    ----------
    model : ArticulatedModel
    robot : RobotSpec
    config : SimConfig
        Contact distances, resolution budget and the target part.
    console : Console

    Raises
    ------
    ConfigError
        The target part does not exist or has no collision geometry.

    Example
    -------
    ```python
    world = SimWorld(model, robot_preset("gripper"), SimConfig(target_part=1))
    state = world.initial_state()
    state = world.step(state, np.zeros(world.dof))
    ```
    """

    def __init__(
        self,
        model: ArticulatedModel,
        robot: RobotSpec,
        config: SimConfig = SimConfig(),
        console: Console = silent,
    ) -> None:
        if config.target_part > model.dof:
            raise ConfigError(
                f"target part {config.target_part} does not exist; the model has {model.dof} movable parts"
            )
        self.model = model
        self.robot = robot
        self.config = config
        self.console = console
        self.chain = RobotChain(robot)
        self.planes = model_planes(model)
        self._target = config.target_part
        self._target_planes = [piece for piece in self.planes if piece.part == self._target]
        if not self._target_planes:
            raise ConfigError(f"target part {self._target} has no collision geometry")
        self.target_point_local, self.target_normal_local = self._target_geometry()

    @property
    def dof(self) -> int:
        return self.chain.dof

    @property
    def target_joint(self) -> int:
        return self._target - 1

    def part_poses(self, s: np.ndarray) -> t.List[np.ndarray]:
        return forward_kinematics_matrices(self.model, JointState(s), check=False)

    def _target_geometry(self) -> t.Tuple[np.ndarray, np.ndarray]:
        config = self.config
        if config.target_point is not None:
            point = np.asarray(config.target_point, dtype=np.float64)
            if config.target_normal is not None:
                normal = np.asarray(config.target_normal, dtype=np.float64)
                return point, normal / np.linalg.norm(normal)
            return point, point_distance(point, self._target_planes)[1].copy()

        pose = self.part_poses(self.model.rest_state().values)[self._target]
        base = _to_local(pose, np.asarray(self.robot.base_position, dtype=np.float64))
        center = np.concatenate([piece.vertices for piece in self._target_planes]).mean(axis=0)
        toward = base - center
        toward /= max(np.linalg.norm(toward), 1e-12)
        best: t.Optional[t.Tuple[float, float, PiecePlanes, int]] = None
        for piece in self._target_planes:
            for face in range(len(piece.offsets)):
                facing = float(piece.normals[face] @ toward)
                reach = float(-piece.offsets[face])
                if best is None or facing > best[0] + 1e-6 or (facing > best[0] - 1e-6 and reach > best[1] + 1e-9):
                    best = (facing, reach, piece, face)
        assert best is not None
        _, _, piece, face = best
        point = piece.face_centroid(face) if self.robot.effector.kind == "suction" else piece.center
        return point, piece.normals[face].copy()

    def _evaluate(self, q: np.ndarray, s: np.ndarray) -> t.Tuple[RobotPose, t.List[np.ndarray], ContactReport]:
        pose = self.chain.fk(q, check=False)
        poses = self.part_poses(s)
        current = world_planes(self.planes, poses)
        contacts = sphere_contacts(pose.sphere_centers, pose.sphere_radii, current, self.config.contact_epsilon)
        target = [piece for piece in current if piece.part == self._target]
        report = build_report(self.robot.effector.kind, pose, contacts, target, self.config)
        return pose, poses, report

    def _observation(self, pose: RobotPose, poses: t.Sequence[np.ndarray], cartesian_error: float) -> Observation:
        part = poses[self._target]
        return Observation(
            grasp_center=pose.grasp_center,
            virtual_tip=pose.virtual_tip,
            suction_axis=pose.suction_axis,
            target_point=_to_world(part, self.target_point_local),
            target_normal=part[:3, :3] @ self.target_normal_local,
            cartesian_error=cartesian_error,
        )

    def _attachment(
        self, pose: RobotPose, poses: t.Sequence[np.ndarray], report: ContactReport
    ) -> t.Optional[t.Tuple[np.ndarray, np.ndarray]]:
        if not self.config.weld:
            return None
        if self.robot.effector.kind == "suction":
            if not report.tip_on_target or pose.virtual_tip is None:
                return None
            point = pose.virtual_tip
        elif report.closure:
            point = pose.grasp_center
        else:
            return None
        return _to_local(pose.effector, point), _to_local(poses[self._target], point)

    def initial_state(
        self, robot_q: t.Optional[npt.ArrayLike] = None, object_s: t.Optional[npt.ArrayLike] = None
    ) -> SimState:
        """
        A resting state; the robot defaults to its home configuration and the
        object to its rest state.

        Raises
        ------
        JointLimitViolation
            Either configuration lies outside its limits.
        """
        q = self.chain.check(home_configuration(self.robot) if robot_q is None else robot_q)
        s = self.model.rest_state() if object_s is None else JointState(np.asarray(object_s, dtype=np.float64))
        s.check(self.model)
        pose, poses, report = self._evaluate(q, s.values)
        attachment = self._attachment(pose, poses, report)
        zeros = np.zeros(self.dof)
        return SimState(
            robot_q=q,
            object_s=s,
            last_q_velocity=zeros,
            last_q_acceleration=zeros,
            contact=report,
            observation=self._observation(pose, poses, 0.0),
            attached=attachment is not None,
            attach_effector=attachment[0] if attachment else None,
            attach_part=attachment[1] if attachment else None,
        )

    def _resolve(self, q: np.ndarray, s: np.ndarray) -> t.Tuple[np.ndarray, float]:
        """
        Pushes movable parts out of the robot spheres; returns the new joint
        values and the largest remaining penetration.
        """
        pose = self.chain.fk(q, check=False)
        centers, radii = pose.sphere_centers, pose.sphere_radii
        tolerance = self.config.penetration_tolerance
        s = s.copy()
        for _ in range(self.config.resolution_passes):
            poses = self.part_poses(s)
            contacts = sphere_contacts(centers, radii, world_planes(self.planes, poses), 0.0)
            penetration = contacts.penetration
            if len(contacts) == 0 or penetration.max() < tolerance:
                return s, float(penetration.max()) if len(contacts) else 0.0
            moved = False
            handled: t.Set[int] = set()
            for index in np.argsort(-penetration, kind="stable"):
                part_id = int(contacts.part[index])
                if part_id == 0 or part_id in handled or penetration[index] < tolerance:
                    continue
                handled.add(part_id)
                part = self.model.parts[part_id]
                assert part.joint is not None
                parent = poses[part.parent]
                tangent = parent[:3, :3] @ part.joint.tangent(_to_local(parent, contacts.point[index]))
                norm = float(tangent @ tangent)
                if norm < 1e-12:
                    continue
                push = -contacts.normal[index] * penetration[index]
                value = part.joint.clamp(s[part_id - 1] + float(push @ tangent) / norm)
                if value != s[part_id - 1]:
                    s[part_id - 1] = value
                    moved = True
            if not moved:
                break
        contacts = sphere_contacts(centers, radii, world_planes(self.planes, self.part_poses(s)), 0.0)
        return s, float(contacts.penetration.max()) if len(contacts) else 0.0

    def _push(
        self, q_prev: np.ndarray, q_cmd: np.ndarray, s: np.ndarray, allowance: float
    ) -> t.Tuple[np.ndarray, np.ndarray, bool]:
        """
        Moves the robot toward `q_cmd`, backing off to a fraction of the
        increment when the object cannot make room.
        """
        tolerance = self.config.penetration_tolerance
        for fraction in SimDefaults.BLOCKED_FRACTIONS:
            q = q_prev + fraction * (q_cmd - q_prev)
            s_new, residual = self._resolve(q, s)
            if residual < tolerance or residual <= allowance:
                return q, s_new, True
        return q_prev.copy(), s.copy(), False

    def _weld_point(self, q: np.ndarray, local: np.ndarray) -> np.ndarray:
        return _to_world(self.chain.effector_matrix(q), local)

    def _solve_joint(self, weld: np.ndarray, s: np.ndarray, local: np.ndarray) -> np.ndarray:
        """
        Gauss-Newton on the target joint so that the welded part point follows `weld`.
        """
        part = self.model.parts[self._target]
        assert part.joint is not None
        index = self.target_joint
        s = s.copy()
        for _ in range(_JOINT_SOLVER_ITERATIONS):
            poses = self.part_poses(s)
            point = _to_world(poses[self._target], local)
            parent = poses[part.parent]
            tangent = parent[:3, :3] @ part.joint.tangent(_to_local(parent, point))
            norm = float(tangent @ tangent)
            if norm < 1e-12:
                break
            delta = float(tangent @ (weld - point)) / norm
            value = part.joint.clamp(s[index] + delta)
            if value == s[index] or abs(delta) < 1e-12:
                s[index] = value
                break
            s[index] = value
        return s

    def _follow_weld(
        self, q_cmd: np.ndarray, s: np.ndarray, state: SimState
    ) -> t.Tuple[np.ndarray, np.ndarray, bool]:
        """
        Drives the welded joint with the effector; where the joint cannot follow
        (limits, motion off the joint path) the arm is corrected back onto it.
        """
        assert state.attach_effector is not None and state.attach_part is not None
        base = self.chain.base_dof
        lower, upper = self.chain.lower[:base], self.chain.upper[:base]
        q = q_cmd.copy()
        for _ in range(SimDefaults.WELD_ITERATIONS):
            weld = self._weld_point(q, state.attach_effector)
            s = self._solve_joint(weld, s, state.attach_part)
            residual = weld - _to_world(self.part_poses(s)[self._target], state.attach_part)
            if np.linalg.norm(residual) <= SimDefaults.WELD_TOLERANCE:
                return q, s, True
            jacobian = np.empty((3, base))
            for column in range(base):
                shifted = q.copy()
                shifted[column] += _FINITE_DIFFERENCE
                jacobian[:, column] = (self._weld_point(shifted, state.attach_effector) - weld) / _FINITE_DIFFERENCE
            correction = np.linalg.lstsq(jacobian, -residual, rcond=None)[0]
            q[:base] = np.clip(q[:base] + correction, lower, upper)
        weld = self._weld_point(q, state.attach_effector)
        s = self._solve_joint(weld, s, state.attach_part)
        residual = weld - _to_world(self.part_poses(s)[self._target], state.attach_part)
        return q, s, bool(np.linalg.norm(residual) <= SimDefaults.WELD_TOLERANCE)

    def step(self, state: SimState, action: npt.ArrayLike) -> SimState:
        """
        Applies one joint increment.

        The increment is clipped to the action bound and the configuration to
        the robot limits. Free robots push movable parts along their joints
        until no penetration above the tolerance remains; a welded effector
        drives its part directly.

        A blocked increment is retried at the `SimDefaults.BLOCKED_FRACTIONS`
        of its length; when every fraction still penetrates, the robot keeps
        its previous configuration instead of moving into the part, and the
        state is flagged `stuck`. A zero action leaves the configuration, the
        object and the contacts unchanged. It still advances `step_index` and
        zeroes the velocity, and the acceleration one step later, so the state
        repeats exactly from the second zero action on.

        Parameters
        ----------
        state : SimState
        action : ArrayLike
            One increment per robot joint.

        Returns
        -------
        SimState
            `stuck` is set when the robot had to stay where it was.

        Raises
        ------
        InvalidInput
            Wrong action length or non-finite values.
        """
        increment = np.asarray(action, dtype=np.float64).reshape(-1)
        if increment.shape != (self.dof,):
            raise InvalidInput(f"action has {increment.shape[0]} values, expected {self.dof}")
        if not np.all(np.isfinite(increment)):
            raise InvalidInput("action must be finite")
        bound = self.config.action_bound
        increment = np.clip(increment, -bound, bound)
        q_prev = np.array(state.robot_q, dtype=np.float64)
        s_prev = np.array(state.object_s.values, dtype=np.float64)
        q_cmd = np.clip(q_prev + increment, self.chain.lower, self.chain.upper)

        if np.array_equal(q_cmd, q_prev):
            q, s, ok = q_prev, s_prev, True
        elif state.attached:
            q, s, ok = self._follow_weld(q_cmd, s_prev, state)
            if not ok:
                q, s = q_prev, s_prev
        else:
            q, s, ok = self._push(q_prev, q_cmd, s_prev, state.contact.max_penetration)

        pose, poses, report = self._evaluate(q, s)
        attached, attach_effector, attach_part = state.attached, state.attach_effector, state.attach_part
        if not attached:
            attachment = self._attachment(pose, poses, report)
            if attachment is not None:
                attached, (attach_effector, attach_part) = True, attachment
                self.console.log(f"step {state.step_index + 1}: effector welded to part {self._target}")

        commanded = self.chain.effector_matrix(q_cmd)[:3, 3]
        velocity = q - q_prev
        return SimState(
            robot_q=q,
            object_s=JointState(s),
            last_q_velocity=velocity,
            last_q_acceleration=velocity - state.last_q_velocity,
            contact=report,
            observation=self._observation(pose, poses, float(np.linalg.norm(commanded - pose.effector[:3, 3]))),
            attached=attached,
            attach_effector=attach_effector,
            attach_part=attach_part,
            stuck=not ok,
            step_index=state.step_index + 1,
        )

    def snapshot(self, state: SimState) -> bytes:
        return snapshot(state)

    def restore(self, token: bytes) -> SimState:
        return restore(token)


def snapshot(state: SimState) -> bytes:
    """
    Opaque, bit-exact serialization of a state (MessagePack).
    """
    return encode_msgpack(state)


def restore(token: bytes) -> SimState:
    return decode_msgpack(token, SimState)


def step(
    state: SimState,
    action: npt.ArrayLike,
    spec: RobotSpec,
    model: ArticulatedModel,
    config: t.Optional[SimConfig] = None,
) -> SimState:
    """
    One-shot form of `SimWorld.step`.
    """
    return SimWorld(model, spec, config or SimConfig()).step(state, action)


class TraceRecord(msgspec.Struct, frozen=True):
    """
    One line of a simulation trace.
    """

    step: int
    robot_q: t.List[float]
    object_s: t.List[float]
    attached: bool
    stuck: bool
    contact: ContactReport
    grasp_center: t.List[float]
    cartesian_error: float

    @classmethod
    def from_state(cls, state: SimState) -> TraceRecord:
        return cls(
            step=state.step_index,
            robot_q=state.robot_q.tolist(),
            object_s=state.object_s.values.tolist(),
            attached=state.attached,
            stuck=state.stuck,
            contact=state.contact,
            grasp_center=state.observation.grasp_center.tolist(),
            cartesian_error=state.observation.cartesian_error,
        )


class TraceWriter:
    """
    Writes one JSON record per state to a `.jsonl` file.

    Example
    -------
    ```python
    with TraceWriter("out.jsonl") as trace:
        trace.write(state)
    ```
    """

    def __init__(self, path: t.Union[str, pathlib.Path]) -> None:
        self.path = pathlib.Path(path)
        self._handle: t.Optional[t.BinaryIO] = None

    def __enter__(self) -> TraceWriter:
        self._handle = self.path.open("wb")
        return self

    def __exit__(
        self,
        exc_type: t.Optional[t.Type[BaseException]],
        exc: t.Optional[BaseException],
        traceback: t.Optional[types.TracebackType],
    ) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def write(self, state: SimState) -> None:
        if self._handle is None:
            raise RuntimeError("trace writer is not open")
        self._handle.write(encode_json(TraceRecord.from_state(state)) + b"\n")
