from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from twinforge.abc.generic import (
    CameraExtrinsics,
    CameraIntrinsics,
    ConvexPiece,
    DepthMap,
    Mask,
    PixelAffordance,
    PointCloud,
)
from twinforge.abc.modals import JointEstimate, PoseHypothesis, SegmentationLabels, SubPart
from twinforge.core.errors import FileFormatError
from twinforge.geometry import fileio
from twinforge.geometry.camera import look_at_extrinsics


def test_cloud_text_layout(tmp_path):
    path = tmp_path / "frame.apc"
    fileio.write_cloud(path, PointCloud([[0.5, 0.25, 1.0], [0.0, -1.0, 2.0]], labels=[0, 3]))
    lines = path.read_text().splitlines()
    assert lines[0] == "# apc v1 n=2 labeled=1"
    assert lines[1] == "0.5 0.25 1.0 0"
    cloud = fileio.read_cloud(path)
    assert cloud.labels.tolist() == [0, 3]
    assert_allclose(cloud.points[1], [0.0, -1.0, 2.0])


def test_cloud_values_survive_exactly(tmp_path, rng):
    points = rng.normal(size=(50, 3))
    path = tmp_path / "noisy.apc"
    fileio.write_cloud(path, PointCloud(points))
    assert_array_equal(fileio.read_cloud(path).points, points)


@pytest.mark.parametrize(
    "text",
    [
        "",
        "# xyz\n1 2 3\n",
        "# apc v1 n=2 labeled=0\n1 2 3\n",
        "# apc v1 n=1 labeled=1\n1 2 3\n",
        "# apc v1 n=1 labeled=0\n1 2 zebra\n",
        "# apc v1 n=1 labeled=1\n1 2 3 -4\n",
    ],
)
def test_bad_cloud_files(tmp_path, text):
    path = tmp_path / "bad.apc"
    path.write_text(text)
    with pytest.raises(FileFormatError):
        fileio.read_cloud(path)


def test_missing_file_is_a_format_error(tmp_path):
    with pytest.raises(FileFormatError):
        fileio.read_cloud(tmp_path / "nowhere.apc")


def test_depth_is_stored_in_millimeters(tmp_path):
    path = tmp_path / "depth.pgm"
    fileio.write_depth(path, DepthMap(3, 2, [0.0, 1.0, 0.5, 0.0012, 2.5, 65.0]))
    data = path.read_bytes()
    assert data.startswith(b"P5\n3 2\n65535\n")
    depth = fileio.read_depth(path)
    assert_allclose(depth.values, [[0.0, 1.0, 0.5], [0.001, 2.5, 65.0]])


def test_depth_header_comments_are_skipped(tmp_path):
    path = tmp_path / "depth.pgm"
    pixels = np.array([1000, 2000], dtype=">u2").tobytes()
    path.write_bytes(b"P5\n# made by hand\n2 1\n65535\n" + pixels)
    assert_allclose(fileio.read_depth(path).values, [[1.0, 2.0]])


def test_eight_bit_depth_is_rejected(tmp_path):
    path = tmp_path / "depth.pgm"
    path.write_bytes(b"P5\n2 1\n255\n\x01\x02")
    with pytest.raises(FileFormatError):
        fileio.read_depth(path)


def test_too_deep_for_sixteen_bits(tmp_path):
    with pytest.raises(FileFormatError):
        fileio.write_depth(tmp_path / "d.pgm", DepthMap(1, 1, [70.0]))


def test_mask_rows_are_padded_to_bytes(tmp_path):
    bits = np.zeros((2, 10), dtype=bool)
    bits[0, 0] = bits[1, 9] = True
    path = tmp_path / "mask.pbm"
    fileio.write_mask(path, Mask(10, 2, bits))
    assert path.read_bytes() == b"P4\n10 2\n" + bytes([0x80, 0x00, 0x00, 0x40])
    assert_array_equal(fileio.read_mask(path).bits, bits)


def test_truncated_mask(tmp_path):
    path = tmp_path / "mask.pbm"
    path.write_bytes(b"P4\n16 2\n\x00")
    with pytest.raises(FileFormatError):
        fileio.read_mask(path)


def test_camera_file(tmp_path):
    intr = CameraIntrinsics(300.0, 310.0, 160.0, 120.0, 320, 240)
    extr = look_at_extrinsics([0.0, 0.0, 1.0], [0.5, 0.0, 0.2])
    path = tmp_path / "camera.json"
    fileio.write_camera(path, intr, extr)
    read_intr, read_extr = fileio.read_camera(path)
    assert read_intr == intr
    assert_allclose(read_extr.matrix, extr.matrix)


def test_camera_with_short_matrix(tmp_path):
    path = tmp_path / "camera.json"
    path.write_text('{"fx": 1, "fy": 1, "cx": 0, "cy": 0, "width": 2, "height": 2, "H": [1, 0, 0]}')
    with pytest.raises(FileFormatError):
        fileio.read_camera(path)


def test_camera_with_unknown_field(tmp_path):
    path = tmp_path / "camera.json"
    path.write_text(
        '{"fx": 1, "fy": 1, "cx": 0, "cy": 0, "width": 2, "height": 2, '
        '"H": [1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1], "skew": 0}'
    )
    with pytest.raises(FileFormatError):
        fileio.read_camera(path)


def test_off_polygons_are_fanned(tmp_path):
    path = tmp_path / "quad.off"
    path.write_text("OFF\n# a unit square\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n")
    piece = fileio.read_mesh(path)
    assert piece.triangles.tolist() == [[0, 1, 2], [0, 2, 3]]


def test_off_mesh_written_and_read(tmp_path):
    box = ConvexPiece.box([0.0, 0.0, 0.0], [0.1, 0.2, 0.3])
    path = tmp_path / "box.off"
    fileio.write_mesh(path, box)
    piece = fileio.read_mesh(path)
    assert_array_equal(piece.vertices, box.vertices)
    assert_array_equal(piece.triangles, box.triangles)


def test_truncated_off(tmp_path):
    path = tmp_path / "bad.off"
    path.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n")
    with pytest.raises(FileFormatError):
        fileio.read_mesh(path)


def test_affordance_file(tmp_path):
    path = tmp_path / "aff.json"
    fileio.write_affordance(path, "virtual", PixelAffordance((10.5, 20.0), (3.0, -4.0)))
    view, aff = fileio.read_affordance(path)
    assert view == "virtual"
    assert aff.trajectory == (3.0, -4.0)


def test_zero_affordance_file(tmp_path):
    path = tmp_path / "aff.json"
    path.write_text('{"view": "real", "contact": [1, 2], "trajectory": [0, 0]}')
    with pytest.raises(FileFormatError):
        fileio.read_affordance(path)


def test_subparts_must_partition(tmp_path):
    path = tmp_path / "subparts.json"
    fileio.write_subparts(path, [SubPart(0, [0, 2]), SubPart(1, [1])])
    assert [sp.point_indices.tolist() for sp in fileio.read_subparts(path, 3)] == [[0, 2], [1]]
    with pytest.raises(FileFormatError):
        fileio.read_subparts(path, 4)


def test_contacts(tmp_path):
    path = tmp_path / "contacts.json"
    fileio.write_contacts(path, [np.array([0.1, 0.2, 0.3])])
    assert_allclose(fileio.read_contacts(path)[0], [0.1, 0.2, 0.3])


def test_labels_keep_their_history(tmp_path):
    path = tmp_path / "labels.json"
    fileio.write_labels(path, SegmentationLabels([0, 1, 1], [[0, 0, 0], [0, 1, 1]]))
    labels = fileio.read_labels(path)
    assert labels.part_count == 1
    assert [h.tolist() for h in labels.history] == [[0, 0, 0], [0, 1, 1]]


def test_negative_labels(tmp_path):
    path = tmp_path / "labels.json"
    path.write_text('{"labels": [0, -1]}')
    with pytest.raises(FileFormatError):
        fileio.read_labels(path)


def test_joints_are_written_in_part_order(tmp_path):
    path = tmp_path / "joints.json"
    joints = {
        2: JointEstimate("revolute", [0.0, 0.0, 1.0], [0.1, 0.2, 0.0], [0.0, 0.5], 0.001),
        1: JointEstimate("prismatic", [1.0, 0.0, 0.0], None, [0.0, 0.08], 0.0),
    }
    fileio.write_joints(path, joints)
    text = path.read_text()
    assert text.index('"part": 1') < text.index('"part": 2')
    read = fileio.read_joints(path)
    assert read[1].origin is None
    assert read[2].kind == "revolute"
    assert read[2].observed_displacement == [0.0, 0.5]


def test_duplicate_joint(tmp_path):
    record = (
        '{"part": 1, "kind": "prismatic", "axis": [1, 0, 0], '
        '"origin": null, "displacements": [0], "residual": 0}'
    )
    path = tmp_path / "joints.json"
    path.write_text('{"joints": [' + record + ", " + record + "]}")
    with pytest.raises(FileFormatError):
        fileio.read_joints(path)


def test_unknown_joint_kind(tmp_path):
    path = tmp_path / "joints.json"
    path.write_text(
        '{"joints": [{"part": 1, "kind": "spherical", "axis": [1, 0, 0], '
        '"origin": null, "displacements": [0], "residual": 0}]}'
    )
    with pytest.raises(FileFormatError):
        fileio.read_joints(path)


def test_pose_file(tmp_path):
    path = tmp_path / "pose.json"
    fileio.write_pose(path, PoseHypothesis(0.3, [0.1, 0.0, 0.8], 1.2, 0.9))
    pose = fileio.read_pose(path)
    assert pose.yaw == pytest.approx(0.3)
    assert pose.scale == pytest.approx(1.2)
    assert pose.score == pytest.approx(0.9)


def test_pose_with_zero_scale(tmp_path):
    path = tmp_path / "pose.json"
    path.write_text('{"yaw": 0, "translation": [0, 0, 0], "scale": 0, "iou": 0}')
    with pytest.raises(FileFormatError):
        fileio.read_pose(path)
