"""
Box-assembly blueprints of the synthetic object categories.

Object frame: `+x` is the front (the side facing the robot once placed with
the default yaw), `+z` is up and the object stands on `z = 0`. Every part is a
set of axis-aligned boxes expressed in the object frame at joint value 0. A
closed movable part keeps `SynthDefaults.PART_GAP` of clearance from the body,
so box sub-parts of different parts are never adjacent.
"""

from __future__ import annotations

__all__ = [
    "CATEGORIES",
    "JointBlueprint",
    "PartBlueprint",
    "Blueprint",
    "blueprint",
    "base_pose",
    "object_model",
    "recipe_states",
    "face_samples",
    "panel_face_centroid",
]

import math
import typing as t

import msgspec
import numpy as np
import numpy.typing as npt

from ..abc.configs import SceneRecipe, Vec3
from ..abc.generic import ConvexPiece, RigidTransform
from ..abc.modals import ArticulatedModel, Joint, JointKind, Part
from ..core.defaults import SynthDefaults
from ..core.errors import ConfigError

Box = t.Tuple[Vec3, Vec3]

CATEGORIES = ("drawer", "cabinet", "laptop", "lamp", "two_door_cabinet", "fridge")

_WALL = 0.02
_GAP = SynthDefaults.PART_GAP


class JointBlueprint(msgspec.Struct, frozen=True):
    kind: JointKind
    axis: Vec3
    origin: Vec3
    lower: float
    upper: float


class PartBlueprint(msgspec.Struct, frozen=True):
    """
    One part of a blueprint.

    Parameters
    ----------
    name : str
    boxes : List[Tuple[Vec3, Vec3]]
        `(lower, upper)` corners, object frame.
    joint : Optional[JointBlueprint]
        None for the body.
    panel : int
        Index of the box the robot pushes or pulls.
    face : Vec3
        Outward normal of the panel's free face.
    """

    name: str
    boxes: t.List[Box]
    joint: t.Optional[JointBlueprint] = None
    panel: int = 0
    face: Vec3 = (1.0, 0.0, 0.0)


class Blueprint(msgspec.Struct, frozen=True):
    """
    Parts of one category plus the joint values of its default frames; part 0 is the body.
    """

    category: str
    parts: t.List[PartBlueprint]
    default_states: t.List[t.List[float]]

    @property
    def dof(self) -> int:
        return len(self.parts) - 1

    def scaled(self, scale: float) -> Blueprint:
        """
        Uniformly scaled copy; prismatic limits and default values scale too.
        """

        def box(b: Box) -> Box:
            lo, hi = b
            return (_mul(lo, scale), _mul(hi, scale))

        parts = []
        for part in self.parts:
            joint = part.joint
            if joint is not None:
                factor = scale if joint.kind == "prismatic" else 1.0
                joint = JointBlueprint(
                    joint.kind, joint.axis, _mul(joint.origin, scale), joint.lower * factor, joint.upper * factor
                )
            parts.append(PartBlueprint(part.name, [box(b) for b in part.boxes], joint, part.panel, part.face))
        factors = [scale if p.joint is not None and p.joint.kind == "prismatic" else 1.0 for p in self.parts[1:]]
        states = [[value * f for value, f in zip(row, factors)] for row in self.default_states]
        return Blueprint(self.category, parts, states)


def _mul(v: Vec3, scale: float) -> Vec3:
    return (v[0] * scale, v[1] * scale, v[2] * scale)


def _shell(depth: float, width: float, height: float, dividers: t.Sequence[t.Tuple[float, float]] = ()) -> t.List[Box]:
    """
    An open-front carcass: bottom, top, both sides, back and optional shelves.
    """
    x0, x1 = -depth / 2, depth / 2
    y0, y1 = -width / 2, width / 2
    boxes: t.List[Box] = [
        ((x0, y0, 0.0), (x1, y1, _WALL)),
        ((x0, y0, height - _WALL), (x1, y1, height)),
        ((x0, y0, _WALL), (x1, y0 + _WALL, height - _WALL)),
        ((x0, y1 - _WALL, _WALL), (x1, y1, height - _WALL)),
        ((x0, y0 + _WALL, _WALL), (x0 + _WALL, y1 - _WALL, height - _WALL)),
    ]
    for z0, z1 in dividers:
        boxes.append(((x0 + _WALL, y0 + _WALL, z0), (x1, y1 - _WALL, z1)))
    return boxes


def _drawer() -> Blueprint:
    body = PartBlueprint("body", _shell(0.4, 0.4, 0.3))
    drawer = PartBlueprint(
        "drawer",
        [
            ((-0.16, -0.16, 0.04), (0.22, 0.16, 0.26)),
            ((0.22, -0.18, 0.02), (0.24, 0.18, 0.28)),
            ((0.24, -0.06, 0.14), (0.27, 0.06, 0.16)),
        ],
        JointBlueprint("prismatic", (1.0, 0.0, 0.0), (0.0, 0.0, 0.0), 0.0, 0.3),
        panel=1,
    )
    return Blueprint("drawer", [body, drawer], [[0.05], [0.13]])


def _door(
    name: str,
    y: t.Tuple[float, float],
    hinge_y: float,
    axis_z: float,
    handle_y: float,
    z: t.Tuple[float, float],
    front: float,
) -> PartBlueprint:
    """
    A panel hinged about a vertical axis at `(front, hinge_y)` with a vertical handle.
    """
    y0, y1 = y
    z0, z1 = z
    middle = (z0 + z1) / 2
    return PartBlueprint(
        name,
        [
            ((front, y0, z0), (front + _WALL, y1, z1)),
            ((front + _WALL, handle_y - 0.01, middle - 0.05), (front + _WALL + 0.03, handle_y + 0.01, middle + 0.05)),
        ],
        JointBlueprint("revolute", (0.0, 0.0, axis_z), (front, hinge_y, 0.0), 0.0, math.pi / 2),
    )


def _cabinet() -> Blueprint:
    body = PartBlueprint("body", _shell(0.4, 0.4, 0.5))
    door = _door("door", (-0.2, 0.2), 0.2, 1.0, -0.16, (0.0, 0.5), 0.2 + _GAP)
    return Blueprint("cabinet", [body, door], [[0.2], [0.7]])


def _two_door_cabinet() -> Blueprint:
    body = PartBlueprint("body", _shell(0.4, 0.6, 0.5))
    front = 0.2 + _GAP
    left = _door("left_door", (_GAP / 2, 0.3), 0.3, 1.0, 0.04, (0.0, 0.5), front)
    right = _door("right_door", (-0.3, -_GAP / 2), -0.3, -1.0, -0.04, (0.0, 0.5), front)
    return Blueprint(
        "two_door_cabinet",
        [body, left, right],
        [[0.2, 0.2], [0.8, 0.2], [0.8, 0.8]],
    )


def _laptop() -> Blueprint:
    base = PartBlueprint("base", [((-0.15, -0.17, 0.0), (0.15, 0.17, _WALL))])
    lid = PartBlueprint(
        "lid",
        [((-0.15, -0.17, _WALL + _GAP), (0.15, 0.17, _WALL + _GAP + 0.015))],
        JointBlueprint("revolute", (0.0, -1.0, 0.0), (-0.15, 0.0, _WALL + _GAP), 0.0, 2.2),
        face=(0.0, 0.0, 1.0),
    )
    return Blueprint("laptop", [base, lid], [[0.8], [1.236]])


def _lamp() -> Blueprint:
    stand = PartBlueprint(
        "stand",
        [((-0.1, -0.1, 0.0), (0.1, 0.1, 0.03)), ((-0.015, -0.015, 0.03), (0.015, 0.015, 0.4))],
    )
    arm = PartBlueprint(
        "arm",
        [((0.015 + _GAP, -0.015, 0.37), (0.25, 0.015, 0.4)), ((0.2, -0.05, 0.3), (0.3, 0.05, 0.37))],
        JointBlueprint("revolute", (0.0, 0.0, 1.0), (0.0, 0.0, 0.0), -1.5, 1.5),
        panel=1,
    )
    return Blueprint("lamp", [stand, arm], [[0.0], [0.5]])


def _fridge() -> Blueprint:
    body = PartBlueprint("body", _shell(0.5, 0.6, 1.0, dividers=[(0.2, 0.22), (0.49, 0.51)]))
    front = 0.25 + _GAP
    upper = _door("upper_door", (-0.3, 0.3), 0.3, 1.0, -0.26, (0.51, 1.0), front)
    lower = _door("lower_door", (-0.3, 0.3), 0.3, 1.0, -0.26, (0.22, 0.49), front)
    drawer = PartBlueprint(
        "drawer",
        [
            ((-0.19, -0.26, 0.04), (front, 0.26, 0.18)),
            ((front, -0.28, 0.0), (front + _WALL, 0.28, 0.2)),
            ((front + _WALL, -0.08, 0.09), (front + _WALL + 0.03, 0.08, 0.11)),
        ],
        JointBlueprint("prismatic", (1.0, 0.0, 0.0), (0.0, 0.0, 0.0), 0.0, 0.3),
        panel=1,
    )
    return Blueprint(
        "fridge",
        [body, upper, lower, drawer],
        [[0.1, 0.1, 0.05], [0.7, 0.1, 0.05], [0.7, 0.7, 0.05], [0.7, 0.7, 0.15]],
    )


_BUILDERS: t.Dict[str, t.Callable[[], Blueprint]] = {
    "drawer": _drawer,
    "cabinet": _cabinet,
    "laptop": _laptop,
    "lamp": _lamp,
    "two_door_cabinet": _two_door_cabinet,
    "fridge": _fridge,
}


def blueprint(category: str, scale: float = 1.0) -> Blueprint:
    """
    The blueprint of a category.

    Raises
    ------
    ConfigError
        Unknown category.
    """
    builder = _BUILDERS.get(category)
    if builder is None:
        raise ConfigError(f"unknown category {category!r}; choose from {list(CATEGORIES)}")
    found = builder()
    return found if scale == 1.0 else found.scaled(scale)


def base_pose(recipe: SceneRecipe) -> RigidTransform:
    return RigidTransform.from_rotvec((0.0, 0.0, recipe.yaw), recipe.position)


def object_model(recipe: SceneRecipe) -> ArticulatedModel:
    """
    Ground-truth model of a recipe: every box becomes a convex piece, every
    movable part hangs from the body.

    Example
    -------
    ```python
    model = object_model(SceneRecipe("drawer"))
    model.joint(0).kind  # -> "prismatic"
    ```
    """
    plan = blueprint(recipe.category, recipe.scale)
    parts = []
    for index, part in enumerate(plan.parts):
        joint = None
        if part.joint is not None:
            joint = Joint(part.joint.kind, part.joint.axis, part.joint.origin, part.joint.lower, part.joint.upper)
        pieces = [ConvexPiece.box(lo, hi) for lo, hi in part.boxes]
        parts.append(Part(index, 0 if index else -1, pieces, joint, part.name))
    return ArticulatedModel(parts, base_pose(recipe))


def recipe_states(recipe: SceneRecipe) -> np.ndarray:
    """
    Joint values of every frame, `(K + 1) × dof`.

    Raises
    ------
    ConfigError
        Wrong row length or a value outside its joint limits.
    """
    plan = blueprint(recipe.category, recipe.scale)
    states = np.asarray(recipe.states if recipe.states is not None else plan.default_states, dtype=np.float64)
    if states.ndim != 2 or states.shape[1] != plan.dof or states.shape[0] < 1:
        raise ConfigError(f"{recipe.category} states need rows of {plan.dof} joint values")
    for i, part in enumerate(plan.parts[1:]):
        assert part.joint is not None
        column = states[:, i]
        if np.any(column < part.joint.lower) or np.any(column > part.joint.upper):
            raise ConfigError(f"{part.name} values {column.tolist()} leave [{part.joint.lower}, {part.joint.upper}]")
    return states


def face_samples(lower: npt.ArrayLike, upper: npt.ArrayLike, spacing: float) -> np.ndarray:
    """
    Cell-centered grid points on all six faces of a box.

    Each face is split into cells of about `spacing` and one point sits at
    every cell center, so no point is shared between faces.
    """
    lo = np.asarray(lower, dtype=np.float64)
    hi = np.asarray(upper, dtype=np.float64)
    points = []
    for axis in range(3):
        u, v = [a for a in range(3) if a != axis]
        counts = [max(1, int(round((hi[a] - lo[a]) / spacing))) for a in (u, v)]
        cu = lo[u] + (np.arange(counts[0]) + 0.5) * (hi[u] - lo[u]) / counts[0]
        cv = lo[v] + (np.arange(counts[1]) + 0.5) * (hi[v] - lo[v]) / counts[1]
        gu, gv = np.meshgrid(cu, cv, indexing="ij")
        for value in (lo[axis], hi[axis]):
            face = np.empty((gu.size, 3))
            face[:, axis] = value
            face[:, u] = gu.ravel()
            face[:, v] = gv.ravel()
            points.append(face)
    return np.concatenate(points)


def panel_face_centroid(part: PartBlueprint) -> np.ndarray:
    """
    Centroid of the panel's free face, object frame at joint value 0.
    """
    lo, hi = (np.asarray(c, dtype=np.float64) for c in part.boxes[part.panel])
    normal = np.asarray(part.face, dtype=np.float64)
    axis = int(np.argmax(np.abs(normal)))
    centroid = (lo + hi) / 2
    centroid[axis] = hi[axis] if normal[axis] > 0 else lo[axis]
    return centroid
