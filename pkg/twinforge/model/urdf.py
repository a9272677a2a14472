"""
URDF serialization of articulated models.

The accepted subset is documented in `docs/home/formats.md`:

- `robot` root with `link` and `joint` children; `material`, `gazebo` and
  `transmission` elements are ignored.
- `link` holds any number of `visual` / `collision` elements with a `mesh`
  (ASCII OFF, optional `scale`) or `box` geometry; `inertial` is ignored.
- `joint` of type `prismatic` or `revolute` with `parent`, `child`, `origin`,
  `axis` and `limit lower upper`. One `fixed` joint from a geometry-less
  `world` link places the root.

Link frames sit on the joint origin. Visual and collision origins carry the
offset back to the part frame, so that at joint value 0 every part frame
coincides with its parent's.
"""

from __future__ import annotations

__all__ = [
    "to_urdf",
    "from_urdf",
    "export_urdf",
    "load_urdf",
    "mesh_filename",
]

import pathlib
import re
import typing as t
import xml.etree.ElementTree as ET

import numpy as np
from scipy.spatial.transform import Rotation

from ..abc.generic import ConvexPiece, RigidTransform
from ..abc.modals import ArticulatedModel, Joint, Part
from ..core.errors import CyclicPartGraph, FileFormatError, TwinforgeError, UnsupportedJoint, UrdfParseError
from ..geometry.fileio import read_mesh, write_mesh

PathLike = t.Union[str, pathlib.Path]

WORLD_LINK = "world"
_PART_NAME = re.compile(r"^part_(\d+)$")
_IGNORED = {"material", "gazebo", "transmission"}
_EFFORT = "100"
_VELOCITY = "1"


def _fmt(value: float) -> str:
    text = format(float(value), ".17g")
    return "0" if text == "-0" else text


def _vec(values: t.Iterable[float]) -> str:
    return " ".join(_fmt(v) for v in values)


def _rpy(rotation: np.ndarray) -> np.ndarray:
    return Rotation.from_matrix(rotation).as_euler("xyz")


def mesh_filename(part_id: int, piece: int) -> str:
    """
    Relative path under which `export_urdf` stores a geometry piece.
    """
    return f"meshes/part_{part_id}_{piece}.off"


def _link_offsets(model: ArticulatedModel) -> t.List[np.ndarray]:
    # link frame of a part = its joint origin expressed in its own part frame
    return [np.zeros(3) if part.joint is None else np.asarray(part.joint.origin) for part in model.parts]


def to_urdf(model: ArticulatedModel, name: str = "twinforge_model") -> str:
    """
    Serializes a model as URDF text.

    Geometry piece `j` of part `i` is referenced as `meshes/part_{i}_{j}.off`;
    `export_urdf` writes those files next to the document.

    Parameters
    ----------
    model : ArticulatedModel
    name : str
        The `robot` name attribute.

    Returns
    -------
    str
        The XML document.
    """
    offsets = _link_offsets(model)
    robot = ET.Element("robot", name=name)
    ET.SubElement(robot, "link", name=WORLD_LINK)
    base = ET.SubElement(robot, "joint", name="base_joint", type="fixed")
    ET.SubElement(base, "parent", link=WORLD_LINK)
    ET.SubElement(base, "child", link=model.parts[0].label)
    ET.SubElement(
        base,
        "origin",
        xyz=_vec(model.base_pose.translation),
        rpy=_vec(_rpy(model.base_pose.rotation)),
    )
    for part in model.parts:
        link = ET.SubElement(robot, "link", name=part.label)
        for index, _ in enumerate(part.geometry):
            for tag in ("visual", "collision"):
                element = ET.SubElement(link, tag)
                ET.SubElement(element, "origin", xyz=_vec(-offsets[part.id]), rpy="0 0 0")
                geometry = ET.SubElement(element, "geometry")
                ET.SubElement(geometry, "mesh", filename=mesh_filename(part.id, index))
    for part in model.movable_parts:
        joint = part.joint
        assert joint is not None
        element = ET.SubElement(robot, "joint", name=f"joint_{part.id}", type=joint.kind)
        ET.SubElement(element, "parent", link=model.parts[part.parent].label)
        ET.SubElement(element, "child", link=part.label)
        ET.SubElement(element, "origin", xyz=_vec(offsets[part.id] - offsets[part.parent]), rpy="0 0 0")
        ET.SubElement(element, "axis", xyz=_vec(joint.axis))
        ET.SubElement(
            element,
            "limit",
            lower=_fmt(joint.lower),
            upper=_fmt(joint.upper),
            effort=_EFFORT,
            velocity=_VELOCITY,
        )
    ET.indent(robot, space="  ")
    return '<?xml version="1.0"?>\n' + ET.tostring(robot, encoding="unicode") + "\n"


def export_urdf(model: ArticulatedModel, directory: PathLike, filename: str = "model.urdf") -> pathlib.Path:
    """
    Writes the URDF document and its OFF meshes into `directory`.

    Returns
    -------
    pathlib.Path
        Path of the written document.
    """
    root = pathlib.Path(directory)
    (root / "meshes").mkdir(parents=True, exist_ok=True)
    for part in model.parts:
        for index, piece in enumerate(part.geometry):
            write_mesh(root / mesh_filename(part.id, index), piece)
    path = root / filename
    path.write_text(to_urdf(model), encoding="utf-8")
    return path


def load_urdf(path: PathLike) -> ArticulatedModel:
    """
    Reads a URDF file, resolving mesh references relative to its directory.
    """
    file = pathlib.Path(path)
    try:
        text = file.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc.strerror}") from exc
    return from_urdf(text, base_dir=file.parent)


class _Context:
    """
    Locates elements in the source text for error messages.
    """

    def __init__(self, text: str) -> None:
        self.text = text

    def describe(self, element: ET.Element) -> str:
        name = element.get("name")
        label = f'<{element.tag} name="{name}">' if name is not None else f"<{element.tag}>"
        if name is not None:
            match = re.search(rf'<{element.tag}\b[^>]*\bname\s*=\s*["\']{re.escape(name)}["\']', self.text)
            if match is not None:
                return f"{label} (line {self.text.count(chr(10), 0, match.start()) + 1})"
        return label

    def fail(self, element: ET.Element, message: str, kind: t.Type[UrdfParseError] = UrdfParseError) -> t.NoReturn:
        raise kind(f"{self.describe(element)}: {message}")


def _floats(ctx: _Context, element: ET.Element, attr: str, count: int, default: t.Optional[str] = None) -> np.ndarray:
    raw = element.get(attr, default)
    if raw is None:
        ctx.fail(element, f"missing attribute {attr!r}")
    try:
        values = np.array([float(v) for v in raw.split()], dtype=np.float64)
    except ValueError:
        ctx.fail(element, f"attribute {attr!r} is not numeric: {raw!r}")
    if values.shape != (count,) or not np.all(np.isfinite(values)):
        ctx.fail(element, f"attribute {attr!r} needs {count} finite values, got {raw!r}")
    return values


def _origin(ctx: _Context, parent: ET.Element) -> np.ndarray:
    element = parent.find("origin")
    h = np.eye(4)
    if element is None:
        return h
    h[:3, :3] = Rotation.from_euler("xyz", _floats(ctx, element, "rpy", 3, "0 0 0")).as_matrix()
    h[:3, 3] = _floats(ctx, element, "xyz", 3, "0 0 0")
    return h


def _geometry(
    ctx: _Context, link: ET.Element, base_dir: t.Optional[pathlib.Path]
) -> t.List[t.Tuple[np.ndarray, ConvexPiece]]:
    """
    Collision pieces of a link (visuals when there is no collision element),
    each with its origin in the link frame.
    """
    elements = link.findall("collision") or link.findall("visual")
    pieces = []
    for element in elements:
        geometry = element.find("geometry")
        if geometry is None or len(geometry) != 1:
            ctx.fail(link, f"<{element.tag}> needs exactly one geometry")
        shape = geometry[0]
        if shape.tag == "box":
            half = _floats(ctx, shape, "size", 3) / 2.0
            piece = ConvexPiece.box(-half, half)
        elif shape.tag == "mesh":
            filename = shape.get("filename")
            if not filename:
                ctx.fail(link, "mesh without filename")
            if base_dir is None:
                continue
            scale = _floats(ctx, shape, "scale", 3, "1 1 1")
            try:
                if filename.startswith("file://"):
                    filename = filename[len("file://") :]
                mesh = read_mesh(base_dir / filename)
            except FileFormatError as exc:
                ctx.fail(link, str(exc))
            piece = ConvexPiece(mesh.vertices * scale, mesh.triangles)
        else:
            ctx.fail(link, f"unsupported geometry <{shape.tag}>")
        pieces.append((_origin(ctx, element), piece))
    return pieces


def _part_ids(names: t.List[str], root_name: str) -> t.Dict[str, int]:
    matches = [_PART_NAME.match(name) for name in names]
    if all(matches):
        ids = {name: int(match.group(1)) for name, match in zip(names, matches) if match}
        if ids[root_name] == 0 and sorted(ids.values()) == list(range(len(ids))):
            return ids
    ids = {root_name: 0}
    for name in names:
        if name != root_name:
            ids[name] = len(ids)
    return ids


def from_urdf(text: str, base_dir: t.Optional[PathLike] = None) -> ArticulatedModel:
    """
    Parses URDF text into a model.

    Parameters
    ----------
    text : str
        Document in the supported subset.
    base_dir : Optional[PathLike]
        Directory that mesh filenames are relative to. Without it, mesh
        references are checked but not loaded and parts carry box geometry only.

    Returns
    -------
    ArticulatedModel
        Parts are numbered by their `part_<id>` link names when these are dense
        from 0 at the root, otherwise root first and then in document order.

    Raises
    ------
    UrdfParseError
        Malformed XML or a document outside the subset.
    UnsupportedJoint
        A joint type other than prismatic or revolute.
    CyclicPartGraph
        The links do not form a tree.
    """
    ctx = _Context(text)
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position
        raise UrdfParseError(f"malformed XML at line {line}, column {column}: {exc}") from exc
    if root.tag != "robot":
        raise UrdfParseError(f"expected a <robot> root element, got <{root.tag}>")
    directory = pathlib.Path(base_dir) if base_dir is not None else None

    links: t.Dict[str, ET.Element] = {}
    for link in root.findall("link"):
        name = link.get("name")
        if not name:
            raise UrdfParseError("<link> without a name")
        if name in links:
            ctx.fail(link, "duplicate link name")
        links[name] = link
    for child in root:
        if child.tag not in ("link", "joint") and child.tag not in _IGNORED:
            ctx.fail(child, "unsupported element")

    base_pose = np.eye(4)
    world_used = False
    edges: t.Dict[str, t.Tuple[str, ET.Element]] = {}
    for element in root.findall("joint"):
        kind = element.get("type")
        parent_el, child_el = element.find("parent"), element.find("child")
        if parent_el is None or child_el is None:
            ctx.fail(element, "needs <parent> and <child>")
        parent, child = parent_el.get("link", ""), child_el.get("link", "")
        for name in (parent, child):
            if name not in links:
                ctx.fail(element, f"references unknown link {name!r}")
        if parent == WORLD_LINK:
            if kind != "fixed" or world_used:
                ctx.fail(element, "only one fixed joint may attach to the world link")
            world_used = True
            base_pose = _origin(ctx, element)
            edges[child] = (WORLD_LINK, element)
            continue
        if kind not in ("prismatic", "revolute"):
            ctx.fail(element, f"unsupported joint type {kind!r}", UnsupportedJoint)
        if child in edges:
            ctx.fail(element, f"link {child!r} has more than one parent", CyclicPartGraph)
        edges[child] = (parent, element)

    world = links.get(WORLD_LINK)
    world_geometry = world is not None and (world.find("visual") is not None or world.find("collision") is not None)
    if (world is not None and not world_used) or world_geometry:
        raise UrdfParseError("the world link must be geometry-less and carry the fixed base joint")
    orphans = [name for name in links if name not in edges and name != WORLD_LINK]
    if world_used:
        root_name = next(name for name, (parent, _) in edges.items() if parent == WORLD_LINK)
        if orphans:
            raise UrdfParseError(f"links {orphans} are not connected to the world link")
    elif not orphans:
        raise CyclicPartGraph("no root link: the joint graph is cyclic")
    elif len(orphans) > 1:
        raise UrdfParseError(f"more than one root link: {orphans}")
    else:
        root_name = orphans[0]

    children: t.Dict[str, t.List[str]] = {}
    for child, (parent, _) in edges.items():
        if parent != WORLD_LINK:
            children.setdefault(parent, []).append(child)
    order = [root_name]
    for name in order:
        order.extend(children.get(name, []))
    unreachable = [name for name in links if name not in order and name != WORLD_LINK]
    if unreachable:
        raise CyclicPartGraph(f"links {unreachable} are on a cycle")
    ids = _part_ids([name for name in links if name in order], root_name)

    # link frame of every part, expressed in its own part frame
    link_frames: t.Dict[str, np.ndarray] = {root_name: np.eye(4)}
    parts: t.List[Part] = []
    for name in order:
        part_joint: t.Optional[Joint] = None
        parent_id = -1
        if name != root_name:
            parent, element = edges[name]
            local = link_frames[parent] @ _origin(ctx, element)
            link_frames[name] = local
            axis_el = element.find("axis")
            axis = _floats(ctx, axis_el, "xyz", 3) if axis_el is not None else np.array([1.0, 0.0, 0.0])
            limit = element.find("limit")
            if limit is None:
                ctx.fail(element, "needs a <limit> element")
            lower = float(_floats(ctx, limit, "lower", 1, "0")[0])
            upper = float(_floats(ctx, limit, "upper", 1, "0")[0])
            try:
                kind = element.get("type")
                part_joint = Joint(kind, local[:3, :3] @ axis, local[:3, 3], lower, upper)  # type: ignore[arg-type]
            except TwinforgeError as exc:
                ctx.fail(element, str(exc))
            parent_id = ids[parent]
        frame = link_frames[name]
        geometry = [
            piece.transformed(RigidTransform.from_matrix(frame @ offset))
            for offset, piece in _geometry(ctx, links[name], directory)
        ]
        label = "" if name == f"part_{ids[name]}" else name
        parts.append(Part(ids[name], parent_id, geometry, part_joint, label))

    try:
        return ArticulatedModel(parts, RigidTransform.from_matrix(base_pose))
    except TwinforgeError as exc:
        raise UrdfParseError(str(exc)) from exc
