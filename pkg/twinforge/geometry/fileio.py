"""
Readers and writers for the on-disk formats.

- Point cloud: ASCII, header `# apc v1 n=<N> labeled=<0|1>`, one `x y z [label]` per line.
- Depth map: binary PGM (P5), 16-bit big-endian millimeters, 0 = invalid.
- Mask: binary PBM (P4), 1 = inside.
- Camera: JSON `{fx, fy, cx, cy, width, height, H}` with H row-major (16 values).
- Mesh: ASCII OFF with triangle faces.
- Affordance, sub-part, contact, label, joint and pose files: JSON.
"""

from __future__ import annotations

__all__ = [
    "CameraFile",
    "AffordanceFile",
    "SubPartFile",
    "LabelsFile",
    "JointRecord",
    "JointsFile",
    "PoseFile",
    "read_cloud",
    "write_cloud",
    "read_depth",
    "write_depth",
    "read_mask",
    "write_mask",
    "read_camera",
    "write_camera",
    "read_mesh",
    "write_mesh",
    "read_affordance",
    "write_affordance",
    "read_subparts",
    "write_subparts",
    "read_contacts",
    "write_contacts",
    "read_labels",
    "write_labels",
    "read_joints",
    "write_joints",
    "read_pose",
    "write_pose",
]

import pathlib
import re
import typing as t

import msgspec
import numpy as np

from ..abc.generic import (
    CameraExtrinsics,
    CameraIntrinsics,
    ConvexPiece,
    DepthMap,
    Mask,
    PixelAffordance,
    PointCloud,
)
from ..abc.modals import JointEstimate, JointKind, PoseHypothesis, SegmentationLabels, SubPart
from ..core.codec import read_json, write_json
from ..core.errors import FileFormatError, TwinforgeError

PathLike = t.Union[str, pathlib.Path]

_APC_HEADER = re.compile(r"^#\s*apc\s+v1\s+n=(\d+)\s+labeled=([01])\s*$")


class CameraFile(msgspec.Struct, forbid_unknown_fields=True):
    """
    Camera JSON: intrinsics plus the 16 row-major entries of H (base to camera).
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    H: t.List[float]


class AffordanceFile(msgspec.Struct, forbid_unknown_fields=True):
    view: t.Literal["real", "virtual"]
    contact: t.Tuple[float, float]
    trajectory: t.Tuple[float, float]


class SubPartFile(msgspec.Struct, forbid_unknown_fields=True):
    subparts: t.List[t.List[int]]


class LabelsFile(msgspec.Struct, forbid_unknown_fields=True):
    """
    Final per-point labels plus the labels of every frame.
    """

    labels: t.List[int]
    history: t.List[t.List[int]] = msgspec.field(default_factory=list)


class JointRecord(msgspec.Struct, forbid_unknown_fields=True):
    """
    One fitted joint; `part` is the movable label it belongs to.
    """

    part: int
    kind: JointKind
    axis: t.Tuple[float, float, float]
    origin: t.Optional[t.Tuple[float, float, float]]
    displacements: t.List[float]
    residual: float


class JointsFile(msgspec.Struct, forbid_unknown_fields=True):
    joints: t.List[JointRecord]


class PoseFile(msgspec.Struct, forbid_unknown_fields=True):
    """
    Placement of a mesh: yaw about world z, camera-frame translation, scale and silhouette IoU.
    """

    yaw: float
    translation: t.Tuple[float, float, float]
    scale: float
    iou: float


def _read_text(path: PathLike) -> str:
    try:
        return pathlib.Path(path).read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def _read_bytes(path: PathLike) -> bytes:
    try:
        return pathlib.Path(path).read_bytes()
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc.strerror}") from exc


def read_cloud(path: PathLike) -> PointCloud:
    lines = _read_text(path).splitlines()
    if not lines:
        raise FileFormatError(f"{path}: empty point cloud file")
    header = _APC_HEADER.match(lines[0].strip())
    if header is None:
        raise FileFormatError(f"{path}: bad header {lines[0]!r}")
    count, labeled = int(header.group(1)), header.group(2) == "1"
    rows = [line.split() for line in lines[1:] if line.strip()]
    if len(rows) != count:
        raise FileFormatError(f"{path}: header announces {count} points, found {len(rows)}")
    width = 4 if labeled else 3
    if any(len(row) != width for row in rows):
        raise FileFormatError(f"{path}: every line needs {width} values")
    try:
        data = np.array(rows, dtype=np.float64).reshape(count, width)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    labels = data[:, 3].astype(np.int64) if labeled else None
    try:
        return PointCloud(data[:, :3], labels)
    except TwinforgeError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def write_cloud(path: PathLike, cloud: PointCloud) -> None:
    labeled = cloud.labels is not None
    lines = [f"# apc v1 n={len(cloud)} labeled={int(labeled)}"]
    for index, (x, y, z) in enumerate(cloud.points.tolist()):
        row = f"{x!r} {y!r} {z!r}"
        if labeled:
            assert cloud.labels is not None
            row += f" {int(cloud.labels[index])}"
        lines.append(row)
    pathlib.Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def _pnm_header(data: bytes, magic: bytes, path: PathLike, fields: int) -> t.Tuple[t.List[int], int]:
    """
    Parses `fields` integers after the magic number; returns them and the data offset.
    """
    if not data.startswith(magic):
        raise FileFormatError(f"{path}: expected {magic.decode()} data")
    values: t.List[int] = []
    pos = len(magic)
    while len(values) < fields:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise FileFormatError(f"{path}: truncated header")
        values.append(int(data[start:pos]))
    return values, pos + 1


def read_depth(path: PathLike) -> DepthMap:
    data = _read_bytes(path)
    (width, height, maxval), offset = _pnm_header(data, b"P5", path, 3)
    if maxval < 256:
        raise FileFormatError(f"{path}: depth maps must be 16-bit (maxval {maxval})")
    if len(data) - offset < 2 * width * height:
        raise FileFormatError(f"{path}: truncated pixel data")
    raw = np.frombuffer(data, dtype=">u2", count=width * height, offset=offset)
    return DepthMap(width, height, raw.astype(np.float64) / 1000.0)


def write_depth(path: PathLike, depth: DepthMap) -> None:
    millimeters = np.rint(depth.values * 1000.0)
    if np.any(millimeters > 65535):
        raise FileFormatError("depth beyond 65.535 m cannot be stored")
    header = f"P5\n{depth.width} {depth.height}\n65535\n".encode("ascii")
    pathlib.Path(path).write_bytes(header + millimeters.astype(">u2").tobytes())


def read_mask(path: PathLike) -> Mask:
    data = _read_bytes(path)
    (width, height), offset = _pnm_header(data, b"P4", path, 2)
    row_bytes = (width + 7) // 8
    if len(data) - offset < row_bytes * height:
        raise FileFormatError(f"{path}: truncated pixel data")
    packed = np.frombuffer(data, dtype=np.uint8, count=row_bytes * height, offset=offset)
    bits = np.unpackbits(packed.reshape(height, row_bytes), axis=1)[:, :width]
    return Mask(width, height, bits.astype(bool))


def write_mask(path: PathLike, mask: Mask) -> None:
    packed = np.packbits(mask.bits.astype(np.uint8), axis=1)
    header = f"P4\n{mask.width} {mask.height}\n".encode("ascii")
    pathlib.Path(path).write_bytes(header + packed.tobytes())


def read_camera(path: PathLike) -> t.Tuple[CameraIntrinsics, CameraExtrinsics]:
    wire = read_json(path, CameraFile)
    if len(wire.H) != 16:
        raise FileFormatError(f"{path}: H must have 16 entries, got {len(wire.H)}")
    try:
        intr = CameraIntrinsics(wire.fx, wire.fy, wire.cx, wire.cy, wire.width, wire.height)
        extr = CameraExtrinsics(np.asarray(wire.H, dtype=np.float64).reshape(4, 4))
    except TwinforgeError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    return intr, extr


def write_camera(path: PathLike, intr: CameraIntrinsics, extr: CameraExtrinsics) -> None:
    wire = CameraFile(
        intr.fx, intr.fy, intr.cx, intr.cy, intr.width, intr.height, extr.matrix.reshape(-1).tolist()
    )
    write_json(path, wire)


def read_mesh(path: PathLike) -> ConvexPiece:
    tokens = [
        token
        for line in _read_text(path).splitlines()
        for token in line.split("#", 1)[0].split()
    ]
    if not tokens or tokens[0] != "OFF":
        raise FileFormatError(f"{path}: missing OFF header")
    try:
        n_vertices, n_faces = int(tokens[1]), int(tokens[2])
        pos = 4
        vertices = np.array(tokens[pos : pos + 3 * n_vertices], dtype=np.float64).reshape(n_vertices, 3)
        pos += 3 * n_vertices
        faces: t.List[t.List[int]] = []
        for _ in range(n_faces):
            size = int(tokens[pos])
            polygon = [int(v) for v in tokens[pos + 1 : pos + 1 + size]]
            pos += 1 + size
            if len(polygon) != size or size < 3:
                raise FileFormatError(f"{path}: malformed face")
            faces.extend([polygon[0], polygon[i], polygon[i + 1]] for i in range(1, size - 1))
    except (IndexError, ValueError) as exc:
        raise FileFormatError(f"{path}: truncated or malformed OFF data") from exc
    try:
        return ConvexPiece(vertices, np.array(faces, dtype=np.int64).reshape(-1, 3))
    except TwinforgeError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def write_mesh(path: PathLike, piece: ConvexPiece) -> None:
    lines = ["OFF", f"{len(piece.vertices)} {len(piece.triangles)} 0"]
    lines += [f"{x!r} {y!r} {z!r}" for x, y, z in piece.vertices.tolist()]
    lines += [f"3 {a} {b} {c}" for a, b, c in piece.triangles.tolist()]
    pathlib.Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_affordance(path: PathLike) -> t.Tuple[str, PixelAffordance]:
    wire = read_json(path, AffordanceFile)
    try:
        return wire.view, PixelAffordance(wire.contact, wire.trajectory)
    except TwinforgeError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def write_affordance(path: PathLike, view: t.Literal["real", "virtual"], aff: PixelAffordance) -> None:
    write_json(path, AffordanceFile(view, aff.contact, aff.trajectory))


def read_subparts(path: PathLike, cloud_size: t.Optional[int] = None) -> t.List[SubPart]:
    """
    Reads sub-part proposals; with `cloud_size`, checks that they partition the cloud.
    """
    wire = read_json(path, SubPartFile)
    subparts = [SubPart(index, np.asarray(indices, dtype=np.int64)) for index, indices in enumerate(wire.subparts)]
    if cloud_size is not None:
        flat = np.concatenate([sp.point_indices for sp in subparts]) if subparts else np.zeros(0, np.int64)
        if flat.size != cloud_size or not np.array_equal(np.sort(flat), np.arange(cloud_size)):
            raise FileFormatError(f"{path}: sub-parts do not partition a cloud of {cloud_size} points")
    return subparts


def write_subparts(path: PathLike, subparts: t.Sequence[SubPart]) -> None:
    write_json(path, SubPartFile([sp.point_indices.tolist() for sp in subparts]))


def read_contacts(path: PathLike) -> t.List[np.ndarray]:
    points = read_json(path, t.List[t.Tuple[float, float, float]])
    return [np.asarray(p, dtype=np.float64) for p in points]


def write_contacts(path: PathLike, contacts: t.Sequence[np.ndarray]) -> None:
    write_json(path, [[float(v) for v in p] for p in contacts])


def read_labels(path: PathLike) -> SegmentationLabels:
    wire = read_json(path, LabelsFile)
    if any(label < 0 for label in wire.labels):
        raise FileFormatError(f"{path}: labels must be non-negative")
    return SegmentationLabels(np.asarray(wire.labels, dtype=np.int64), [np.asarray(h) for h in wire.history])


def write_labels(path: PathLike, segmentation: SegmentationLabels) -> None:
    write_json(path, LabelsFile(segmentation.labels.tolist(), [h.tolist() for h in segmentation.history]))


def read_joints(path: PathLike) -> t.Dict[int, JointEstimate]:
    """
    Reads fitted joints keyed by movable label.
    """
    wire = read_json(path, JointsFile)
    joints: t.Dict[int, JointEstimate] = {}
    for record in wire.joints:
        if record.part in joints:
            raise FileFormatError(f"{path}: part {record.part} has two joints")
        try:
            joints[record.part] = JointEstimate(
                record.kind,
                np.asarray(record.axis),
                None if record.origin is None else np.asarray(record.origin),
                list(record.displacements),
                record.residual,
            )
        except TwinforgeError as exc:
            raise FileFormatError(f"{path}: part {record.part}: {exc}") from exc
    return joints


def write_joints(path: PathLike, joints: t.Mapping[int, JointEstimate]) -> None:
    records = [
        JointRecord(
            part,
            joint.kind,
            tuple(joint.axis.tolist()),  # type: ignore[arg-type]
            None if joint.origin is None else tuple(joint.origin.tolist()),  # type: ignore[arg-type]
            [float(v) for v in joint.observed_displacement],
            float(joint.residual),
        )
        for part, joint in sorted(joints.items())
    ]
    write_json(path, JointsFile(records))


def read_pose(path: PathLike) -> PoseHypothesis:
    wire = read_json(path, PoseFile)
    try:
        return PoseHypothesis(wire.yaw, np.asarray(wire.translation), wire.scale, wire.iou)
    except TwinforgeError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def write_pose(path: PathLike, pose: PoseHypothesis) -> None:
    translation = tuple(float(v) for v in pose.translation)
    wire = PoseFile(float(pose.yaw), translation, float(pose.scale), float(pose.score))  # type: ignore[arg-type]
    write_json(path, wire)
