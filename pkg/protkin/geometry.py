"""
Homogeneous 4x4 rigid transform algebra.

A bond transform places a child frame relative to its parent frame:

    R(alpha, theta, d) = R_y(theta) @ T_x(d) @ R_x(alpha)

with right-handed rotations. The child origin lands at
(d cos(theta), 0, -d sin(theta)) in the parent frame and the child x axis runs
along the bond.
"""

import math

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict

from protkin.errors import DomainError

TransformMatrix = npt.NDArray[np.float64]
Point3H = npt.NDArray[np.float64]

RIGID_TOLERANCE = 1e-6


class TransformParams(BaseModel):
    """Fixed polar bond angle theta (radians) and bond length d (angstrom)."""

    model_config = ConfigDict(frozen=True)

    theta: float
    d: float


def identity(dtype: npt.DTypeLike = np.float64) -> TransformMatrix:
    return np.eye(4, dtype=dtype)


def point(x: float, y: float, z: float) -> Point3H:
    return np.array([x, y, z, 1.0])


def _check_params(params: TransformParams, alpha: float) -> None:
    if not (math.isfinite(params.theta) and math.isfinite(params.d) and math.isfinite(alpha)):
        raise DomainError(f"non-finite bond transform arguments {params!r}, alpha={alpha}")
    if params.d < 0:
        raise DomainError(f"bond length must not be negative, got d={params.d}")


def rotation_x(angle: float) -> TransformMatrix:
    c, s = math.cos(angle), math.sin(angle)
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, c, -s, 0.0],
            [0.0, s, c, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def rotation_y(angle: float) -> TransformMatrix:
    c, s = math.cos(angle), math.sin(angle)
    return np.array(
        [
            [c, 0.0, s, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [-s, 0.0, c, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def translation_x(d: float) -> TransformMatrix:
    m = np.eye(4)
    m[0, 3] = d
    return m


def bond_transforms(
    alpha: npt.ArrayLike,
    theta: npt.ArrayLike,
    d: npt.ArrayLike,
    dtype: npt.DTypeLike = np.float64,
) -> npt.NDArray[np.floating]:
    """
    Vectorized bond transforms, shape (..., 4, 4), one per element of the
    broadcast (alpha, theta, d).
    """
    alpha, theta, d = np.broadcast_arrays(
        np.asarray(alpha, dtype=dtype), np.asarray(theta, dtype=dtype), np.asarray(d, dtype=dtype)
    )
    ca, sa = np.cos(alpha), np.sin(alpha)
    ct, st = np.cos(theta), np.sin(theta)
    zero = np.zeros_like(alpha)
    one = np.ones_like(alpha)
    rows = [
        [ct, sa * st, ca * st, d * ct],
        [zero, ca, -sa, zero],
        [-st, sa * ct, ca * ct, -d * st],
        [zero, zero, zero, one],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def bond_transform_derivatives(
    alpha: npt.ArrayLike,
    theta: npt.ArrayLike,
    dtype: npt.DTypeLike = np.float64,
) -> npt.NDArray[np.floating]:
    """dR/dalpha for every element, shape (..., 4, 4); the bond length drops out."""
    alpha, theta = np.broadcast_arrays(
        np.asarray(alpha, dtype=dtype), np.asarray(theta, dtype=dtype)
    )
    ca, sa = np.cos(alpha), np.sin(alpha)
    ct, st = np.cos(theta), np.sin(theta)
    zero = np.zeros_like(alpha)
    rows = [
        [zero, ca * st, -sa * st, zero],
        [zero, -sa, -ca, zero],
        [zero, ca * ct, -sa * ct, zero],
        [zero, zero, zero, zero],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def bond_transform(params: TransformParams, alpha: float) -> TransformMatrix:
    _check_params(params, alpha)
    return bond_transforms(alpha, params.theta, params.d)


def bond_transform_derivative(params: TransformParams, alpha: float) -> TransformMatrix:
    _check_params(params, alpha)
    return bond_transform_derivatives(alpha, params.theta)


def compose(a: TransformMatrix, b: TransformMatrix) -> TransformMatrix:
    return a @ b


def apply_point(m: TransformMatrix, p: Point3H) -> Point3H:
    return m @ p


def is_rigid(m: TransformMatrix, tol: float = RIGID_TOLERANCE) -> bool:
    if m.shape != (4, 4):
        return False
    rot = m[:3, :3]
    if not np.allclose(m[3], (0.0, 0.0, 0.0, 1.0), rtol=0.0, atol=tol):
        return False
    if not np.allclose(rot.T @ rot, np.eye(3), rtol=0.0, atol=tol):
        return False
    return bool(np.linalg.det(rot) > 0)


def invert_rigid(m: TransformMatrix) -> TransformMatrix:
    """Inverse of a rigid transform from its structure: [R^T, -R^T t]."""
    if not is_rigid(m):
        raise DomainError("matrix is not a rigid transform")
    return invert_rigid_batch(m)


def invert_rigid_batch(m: npt.NDArray[np.floating]) -> npt.NDArray[np.floating]:
    """Structural inverse of a stack (..., 4, 4) of rigid transforms, unchecked."""
    rot_t = np.swapaxes(m[..., :3, :3], -1, -2)
    out = np.zeros_like(m)
    out[..., :3, :3] = rot_t
    out[..., :3, 3] = -np.einsum("...ij,...j->...i", rot_t, m[..., :3, 3])
    out[..., 3, 3] = 1.0
    return out
