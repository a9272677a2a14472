"""
Eigengrasps: principal components of hand postures.

A basis keeps the mean posture and the first m eigenvectors of the posture
covariance. Coefficients map to postures by `mean + E a` (or `E a` in strict
mode), clamped to the joint limits.
"""

from __future__ import annotations

__all__ = [
    "DatasetMeta",
    "fit_pca",
    "reconstruct",
    "project",
    "synth_grasp_dataset",
    "normalized_curve",
    "write_dataset",
    "read_dataset",
    "write_basis",
    "read_basis",
]

import pathlib
import typing as t

import msgspec
import numpy as np
import numpy.typing as npt

from ..abc.configs import EffectorSpec
from ..abc.modals import EigengraspBasis, GraspDataset
from ..core.codec import read_json, write_json
from ..core.console import Console, silent
from ..core.errors import ConfigError, FileFormatError, InvalidInput

PathLike = t.Union[str, pathlib.Path]

_MAGIC = b"EGDS"
_HEADER = np.dtype([("magic", "S4"), ("rows", "<u4"), ("cols", "<u4")])
_ZERO_VARIANCE = 1e-12


class DatasetMeta(msgspec.Struct, forbid_unknown_fields=True):
    """
    JSON sidecar of an EGDS posture matrix.
    """

    hand: str
    lower: t.List[float]
    upper: t.List[float]
    format: str = "EGDS"


def fit_pca(data: GraspDataset, m: int, console: Console = silent) -> EigengraspBasis:
    """
    Principal components of the postures.

    The covariance is normalized by N and eigen-decomposed; eigenvalues are
    sorted in descending order and each eigenvector is signed so that its
    largest-magnitude component is positive.

    Parameters
    ----------
    data : GraspDataset
    m : int
        Number of eigengrasps kept, `1 <= m <= d_hand`.
    console : Console

    Returns
    -------
    EigengraspBasis
        All eigenvalues and cumulative ratios, the first m eigenvectors.
        Retained components without variance are listed in `flagged`.

    Raises
    ------
    InvalidInput
        `m` outside `[1, d_hand]`.

    Example
    -------
    ```python
    basis = fit_pca(synth_grasp_dataset(four_finger_hand(), 2000, seed=0), m=2)
    basis.accumulated_ratio[1]  # -> 0.9...
    ```
    """
    d = data.dof
    if not 1 <= m <= d:
        raise InvalidInput(f"m must lie in [1, {d}], got {m}")
    postures = data.postures
    mean = postures.mean(axis=0)
    centered = postures - mean
    covariance = centered.T @ centered / postures.shape[0]
    values, vectors = np.linalg.eigh(covariance)
    order = np.argsort(values, kind="stable")[::-1]
    values = np.clip(values[order], 0.0, None)
    vectors = vectors[:, order]
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[pivots, np.arange(d)] < 0, -1.0, 1.0)
    vectors = vectors * signs

    total = float(values.sum())
    if total > 0:
        ratio = np.minimum(np.maximum.accumulate(np.cumsum(values) / total), 1.0)
        ratio[-1] = 1.0
    else:
        ratio = np.ones(d)
    floor = _ZERO_VARIANCE * max(float(values[0]), 1.0)
    flagged = [int(i) for i in np.flatnonzero(values[:m] <= floor)]
    if flagged:
        rank = d - int((values <= floor).sum())
        console.warning(f"eigengrasps {flagged} carry no variance; the postures have rank {rank}")
    console.log(f"fitted {m} eigengrasps over {postures.shape[0]} postures, ratio {ratio[m - 1]:.4f}")
    return EigengraspBasis(
        mean=mean,
        eigenvectors=vectors[:, :m],
        eigenvalues=values,
        accumulated_ratio=ratio,
        lower=data.lower,
        upper=data.upper,
        hand=data.hand,
        flagged=flagged,
    )


def reconstruct(
    basis: EigengraspBasis, coeffs: npt.ArrayLike, include_mean: bool = True, clip: bool = True
) -> np.ndarray:
    """
    Hand posture from eigengrasp coefficients.

    Parameters
    ----------
    basis : EigengraspBasis
    coeffs : ArrayLike
        m coefficients.
    include_mean : bool
        `False` gives the strict linear combination without the mean posture.
    clip : bool
        Clamp to the joint limits.
    """
    a = np.asarray(coeffs, dtype=np.float64).reshape(-1)
    if a.shape != (basis.m,):
        raise InvalidInput(f"{a.shape[0]} coefficients for {basis.m} eigengrasps")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("coefficients must be finite")
    posture = basis.eigenvectors @ a
    if include_mean:
        posture = posture + basis.mean
    return np.clip(posture, basis.lower, basis.upper) if clip else posture


def project(basis: EigengraspBasis, q: npt.ArrayLike) -> np.ndarray:
    posture = np.asarray(q, dtype=np.float64).reshape(-1)
    if posture.shape != (basis.dof,):
        raise InvalidInput(f"posture has {posture.shape[0]} joints, expected {basis.dof}")
    return basis.eigenvectors.T @ (posture - basis.mean)


def synth_grasp_dataset(hand: EffectorSpec, count: int, seed: int = 0) -> GraspDataset:
    """
    Coordinated-closure postures.

    A global closure level is drawn per posture, every finger closes around
    it with its own noise, and each joint gets a small jitter; joints of one
    finger follow the finger's closure across their ranges.

    Raises
    ------
    ConfigError
        `hand` is not a multi-finger hand.
    InvalidInput
        `count` is smaller than the hand's joint count.
    """
    if hand.kind != "hand":
        raise ConfigError("grasp postures need a hand effector")
    lower, upper = hand.hand_limits()
    d = lower.shape[0]
    if count < d:
        raise InvalidInput(f"need at least {d} postures, got {count}")
    rng = np.random.default_rng(seed)
    finger_of_joint = np.repeat(np.arange(len(hand.fingers)), [finger.dof for finger in hand.fingers])
    span = upper - lower
    overall = rng.uniform(0.0, 1.0, size=(count, 1))
    closure = np.clip(overall + 0.1 * rng.standard_normal((count, len(hand.fingers))), 0.0, 1.0)
    postures = lower + closure[:, finger_of_joint] * span + 0.02 * span * rng.standard_normal((count, d))
    return GraspDataset(np.clip(postures, lower, upper), hand.name or "hand", lower, upper)


def normalized_curve(basis: EigengraspBasis) -> t.Tuple[np.ndarray, np.ndarray]:
    """
    Accumulated ratio against `m / d_hand`, comparable across hands.
    """
    d = basis.eigenvalues.shape[0]
    return np.arange(1, d + 1) / d, basis.accumulated_ratio.copy()


def _sidecar(path: pathlib.Path) -> pathlib.Path:
    return path.with_name(path.name + ".json")


def write_dataset(path: PathLike, data: GraspDataset) -> None:
    """
    Writes the EGDS matrix (12-byte header, little-endian f64 rows) and its
    JSON sidecar `<path>.json`.
    """
    target = pathlib.Path(path)
    rows, cols = data.postures.shape
    header = np.array([(_MAGIC, rows, cols)], dtype=_HEADER)
    target.write_bytes(header.tobytes() + data.postures.astype("<f8").tobytes())
    write_json(_sidecar(target), DatasetMeta(data.hand, data.lower.tolist(), data.upper.tolist()))


def read_dataset(path: PathLike) -> GraspDataset:
    """
    Raises
    ------
    FileFormatError
        Wrong magic, truncated body or a missing sidecar.
    """
    source = pathlib.Path(path)
    try:
        raw = source.read_bytes()
    except OSError as exc:
        raise FileFormatError(f"{source}: {exc.strerror}") from exc
    if len(raw) < _HEADER.itemsize:
        raise FileFormatError(f"{source}: truncated header")
    header = np.frombuffer(raw[: _HEADER.itemsize], dtype=_HEADER)[0]
    if bytes(header["magic"]) != _MAGIC:
        raise FileFormatError(f"{source}: not an EGDS file")
    rows, cols = int(header["rows"]), int(header["cols"])
    if len(raw) != _HEADER.itemsize + 8 * rows * cols:
        raise FileFormatError(f"{source}: expected {rows}×{cols} values")
    postures = np.frombuffer(raw, dtype="<f8", offset=_HEADER.itemsize).reshape(rows, cols).astype(np.float64)
    meta = read_json(_sidecar(source), DatasetMeta)
    try:
        return GraspDataset(postures, meta.hand, np.array(meta.lower), np.array(meta.upper))
    except InvalidInput as exc:
        raise FileFormatError(f"{source}: {exc}") from exc


def write_basis(path: PathLike, basis: EigengraspBasis) -> None:
    write_json(path, basis)


def read_basis(path: PathLike) -> EigengraspBasis:
    return read_json(path, EigengraspBasis)
