"""
Least RMSD between two point sets by the quaternion eigen method: the optimal
rotation is the top eigenvector of a symmetric 4x4 built from the correlation
matrix of the centered sets.
"""

import math
from typing import Sequence

import numpy as np
import numpy.typing as npt
import structlog
from pydantic import BaseModel, ConfigDict

from protkin import batch
from protkin.errors import DegenerateError, DomainError, InputError
from protkin.instrumentation import PASS_DURATION
from protkin.metrics import timed
from protkin.models import AtomicCoordinates

log = structlog.get_logger(__name__)

SYMMETRY_TOLERANCE = 1e-9
UNIT_TOLERANCE = 1e-8
JACOBI_MAX_SWEEPS = 50
JACOBI_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
# radicands this small relative to the spread are recomputed from the residual
CANCELLATION_RATIO = 1e-8
DEGENERATE_LRMSD = 1e-10

Points = AtomicCoordinates | npt.ArrayLike


class Alignment(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    centroid_x: np.ndarray
    centroid_y: np.ndarray
    correlation: np.ndarray
    t_matrix: np.ndarray
    lambda_max: float
    quaternion: np.ndarray
    rotation: np.ndarray
    n_atoms: int
    lrmsd_value: float


def as_points(coords: Points) -> np.ndarray:
    if isinstance(coords, AtomicCoordinates):
        arr = np.asarray(coords.positions, dtype=np.float64)
    else:
        arr = np.asarray(coords, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise InputError(f"expected an (N, 3) point set, got shape {arr.shape}")
    return arr


def center(coords: Points) -> tuple[np.ndarray, np.ndarray]:
    pts = as_points(coords)
    if len(pts) == 0:
        raise InputError("cannot center an empty point set")
    centroid = pts.mean(axis=0)
    return pts - centroid, centroid


def correlation(x: npt.ArrayLike, y: npt.ArrayLike) -> np.ndarray:
    """R[a, b] = sum_i x_i[a] * y_i[b]."""
    xs, ys = as_points(x), as_points(y)
    if len(xs) != len(ys):
        raise InputError(f"point sets differ in size: {len(xs)} vs {len(ys)}")
    if len(xs) == 0:
        raise InputError("empty point sets")
    return xs.T @ ys


def build_t(r: npt.ArrayLike) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    (r00, r01, r02), (r10, r11, r12), (r20, r21, r22) = r
    return np.array(
        [
            [r00 + r11 + r22, r12 - r21, r20 - r02, r01 - r10],
            [r12 - r21, r00 - r11 - r22, r01 + r10, r02 + r20],
            [r20 - r02, r01 + r10, -r00 + r11 - r22, r12 + r21],
            [r01 - r10, r02 + r20, r12 + r21, -r00 - r11 + r22],
        ]
    )


def _jacobi_rotation(a: np.ndarray, p: int, q: int) -> np.ndarray | None:
    apq = a[p, q]
    if apq == 0.0:
        return None
    tau = (a[q, q] - a[p, p]) / (2.0 * apq)
    if tau >= 0.0:
        t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
    else:
        t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = t * c
    j = np.eye(4)
    j[p, p] = j[q, q] = c
    j[p, q] = s
    j[q, p] = -s
    return j


def jacobi_eigh(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Full spectrum of a symmetric 4x4 by cyclic Jacobi sweeps in fixed pair
    order. Returns eigenvalues and eigenvectors as columns.
    """
    a = np.array(t, dtype=np.float64)
    v = np.eye(4)
    scale = np.linalg.norm(a)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)))
        if off <= 1e-15 * scale or off == 0.0:
            break
        for p, q in JACOBI_PAIRS:
            j = _jacobi_rotation(a, p, q)
            if j is None:
                continue
            a = j.T @ a @ j
            v = v @ j
    return np.diag(a).copy(), v


def max_eigenpair(t: npt.ArrayLike) -> tuple[float, np.ndarray]:
    t = np.asarray(t, dtype=np.float64)
    if t.shape != (4, 4) or not np.all(np.isfinite(t)):
        raise DomainError("expected a finite 4x4 matrix")
    if np.max(np.abs(t - t.T)) > SYMMETRY_TOLERANCE:
        raise DomainError("matrix is not symmetric")
    values, vectors = jacobi_eigh((t + t.T) / 2.0)
    # argmax keeps the first of tied eigenvalues
    best = int(np.argmax(values))
    q = vectors[:, best] / np.linalg.norm(vectors[:, best])
    for component in q:
        if abs(component) > 1e-12:
            if component < 0:
                q = -q
            break
    return float(values[best]), q


def quaternion_to_rotation(q: npt.ArrayLike) -> np.ndarray:
    q0, q1, q2, q3 = np.asarray(q, dtype=np.float64)
    w, x, y, z = q0 * q0, q1 * q1, q2 * q2, q3 * q3
    if abs(math.sqrt(w + x + y + z) - 1.0) > UNIT_TOLERANCE:
        raise DomainError("quaternion is not of unit length")
    return np.array(
        [
            [w + x - y - z, 2 * (q1 * q2 - q0 * q3), 2 * (q1 * q3 + q0 * q2)],
            [2 * (q1 * q2 + q0 * q3), w - x + y - z, 2 * (q2 * q3 - q0 * q1)],
            [2 * (q1 * q3 - q0 * q2), 2 * (q2 * q3 + q0 * q1), w - x - y + z],
        ]
    )


@timed(PASS_DURATION, op="lrmsd", phase="forward")
def lrmsd(x: Points, y: Points) -> tuple[float, Alignment]:
    xs, ys = as_points(x), as_points(y)
    if len(xs) != len(ys):
        raise InputError(f"point sets differ in size: {len(xs)} vs {len(ys)}")
    xc, cx = center(xs)
    yc, cy = center(ys)
    r = correlation(xc, yc)
    t = build_t(r)
    lam, q = max_eigenpair(t)
    u = quaternion_to_rotation(q)
    n = len(xs)
    spread = float(np.sum(xc * xc) + np.sum(yc * yc))
    radicand = (spread - 2.0 * lam) / n
    if radicand < CANCELLATION_RATIO * spread / n:
        radicand = float(np.sum((xc - yc @ u) ** 2)) / n
    value = math.sqrt(max(0.0, radicand))
    alignment = Alignment(
        centroid_x=cx,
        centroid_y=cy,
        correlation=r,
        t_matrix=t,
        lambda_max=lam,
        quaternion=q,
        rotation=u,
        n_atoms=n,
        lrmsd_value=value,
    )
    return value, alignment


def _centered_pair(x: Points, y: Points, alignment: Alignment) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = as_points(x), as_points(y)
    if len(xs) != alignment.n_atoms or len(ys) != alignment.n_atoms:
        raise InputError("alignment was computed for different point sets")
    return xs - alignment.centroid_x, ys - alignment.centroid_y


def pre_gradient(x: Points, y: Points, alignment: Alignment) -> np.ndarray:
    """Unscaled per-atom direction x~_i - U^T y~_i in the centered frame."""
    xc, yc = _centered_pair(x, y, alignment)
    return xc - yc @ alignment.rotation


@timed(PASS_DURATION, op="lrmsd", phase="backward")
def lrmsd_gradient(x: Points, y: Points, alignment: Alignment) -> np.ndarray:
    """Exact dLRMSD/dx_i, shape (N, 3)."""
    if alignment.lrmsd_value <= DEGENERATE_LRMSD:
        raise DegenerateError("LRMSD is zero, its gradient is undefined")
    pre = pre_gradient(x, y, alignment)
    pre = pre - pre.mean(axis=0)
    return pre / (alignment.n_atoms * alignment.lrmsd_value)


def superpose(x: Points, y: Points, alignment: Alignment) -> np.ndarray:
    """y rigidly moved onto x."""
    _, yc = _centered_pair(x, y, alignment)
    return yc @ alignment.rotation + alignment.centroid_x


def lrmsd_batch(
    xs: Sequence[Points], ys: Sequence[Points], threads: int = 1
) -> list[tuple[float, Alignment]]:
    if len(xs) != len(ys):
        raise InputError(f"{len(xs)} structures paired with {len(ys)}")
    return batch.map_items(lambda pair: lrmsd(*pair), zip(xs, ys), threads)
