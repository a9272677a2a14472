from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from twinforge.abc.generic import RigidTransform
from twinforge.core.errors import InvalidInput, RankDeficiency
from twinforge.geometry.cloud import (
    CloudIndex,
    chamfer_directed,
    fit_rigid_transform,
    nearest_neighbors,
    transform_error,
)


def _plane(step: float = 0.01, size: int = 30) -> np.ndarray:
    xs, ys = np.meshgrid(np.arange(size) * step, np.arange(size) * step)
    return np.stack([xs.ravel(), ys.ravel(), np.zeros(xs.size)], axis=1)


def test_chamfer_of_a_lifted_plane():
    target = _plane()
    source = target[100:200] + [0.0, 0.0, 0.03]
    assert_allclose(chamfer_directed(source, target), 0.03, atol=1e-12)


def test_ties_resolve_to_the_lowest_index():
    target = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 5.0, 0.0]])
    indices, distances = nearest_neighbors([[0.0, 0.0, 0.0]], target)
    assert indices.tolist() == [0]
    assert distances[0] == 1.0


def test_ties_beyond_the_first_candidates():
    far = [[3.0, 3.0, 3.0], [-3.0, 3.0, 3.0], [3.0, -3.0, 3.0], [3.0, 3.0, -3.0], [-3.0, -3.0, -3.0]]
    edges = [[a, b, 0.0] for a in (1.0, -1.0) for b in (1.0, -1.0)]
    edges += [[a, 0.0, b] for a in (1.0, -1.0) for b in (1.0, -1.0)]
    edges += [[0.0, a, b] for a in (1.0, -1.0) for b in (1.0, -1.0)]
    target = np.array(far + edges)
    for shift in range(12):
        rolled = np.concatenate([target[:5], np.roll(target[5:], shift, axis=0)])
        indices, distances = CloudIndex(rolled).query([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        assert indices.tolist() == [5, 5]
        assert distances[0] == pytest.approx(np.sqrt(2.0))


def test_index_is_reusable():
    index = CloudIndex(_plane())
    first, _ = index.query([[0.0, 0.0, 0.1]])
    second, _ = index.query([[0.29, 0.29, 0.0]])
    assert first.tolist() == [0]
    assert second.tolist() == [899]


def test_empty_cloud():
    with pytest.raises(InvalidInput):
        nearest_neighbors(np.zeros((0, 3)), _plane())


def test_fit_recovers_a_known_motion(rng):
    source = rng.uniform(-0.2, 0.2, (200, 3))
    truth = RigidTransform.from_rotvec([0.2, -0.1, 0.4], [0.05, 0.3, -0.1])
    estimate = fit_rigid_transform(source, truth.apply(source))
    angle, distance = transform_error(estimate, truth)
    assert angle < 1e-6
    assert distance < 1e-9


def test_fit_rejects_collinear_points():
    line = np.outer(np.linspace(0.0, 1.0, 10), [1.0, 2.0, 3.0])
    with pytest.raises(RankDeficiency):
        fit_rigid_transform(line, line)
    with pytest.raises(InvalidInput):
        fit_rigid_transform(line[:2], line[:2])


def test_transform_error_of_a_quarter_turn():
    a = RigidTransform.identity()
    b = RigidTransform.from_rotvec([0.0, 0.0, np.pi / 2], [0.0, 0.3, 0.4])
    angle, distance = transform_error(a, b)
    assert angle == pytest.approx(np.pi / 2)
    assert distance == pytest.approx(0.5)
