"""
Reference computations that share no code with the analytic passes: central
finite differences, LRMSD by direct search over rotations, and the largest
eigenvalue of a symmetric matrix by inertia bisection.
"""

from typing import Callable

import numpy as np
import numpy.typing as npt
import scipy.linalg
import structlog
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial.transform import Rotation

from protkin import config
from protkin.errors import EvaluationError, InputError

log = structlog.get_logger(__name__)

MIN_GRID = 16


class FdConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: float = Field(default=config.FD_STEP, gt=0)
    relative_tolerance: float = Field(default=config.FD_RELATIVE_TOLERANCE, gt=0)
    absolute_floor: float = Field(default=config.FD_ABSOLUTE_FLOOR, gt=0)

    def agrees(self, analytic: npt.ArrayLike, numeric: npt.ArrayLike) -> bool:
        return relative_error(analytic, numeric, self.absolute_floor) <= self.relative_tolerance


def _evaluate(f: Callable[[np.ndarray], npt.ArrayLike], x: np.ndarray, k: int) -> np.ndarray:
    value = np.asarray(f(x), dtype=np.float64)
    if not np.all(np.isfinite(value)):
        raise EvaluationError(f"function is not finite when perturbing component {k}")
    return value


def finite_difference_gradient(
    f: Callable[[np.ndarray], npt.ArrayLike],
    at: npt.ArrayLike,
    cfg: FdConfig | None = None,
) -> np.ndarray:
    """
    Central differences (f(x + h e_k) - f(x - h e_k)) / 2h. A vector-valued f
    yields one column per output, shape (parameters, outputs).
    """
    cfg = cfg or FdConfig()
    x = np.array(at, dtype=np.float64).reshape(-1)
    h = cfg.step
    columns: list[np.ndarray] = []
    for k in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        columns.append((_evaluate(f, xp, k) - _evaluate(f, xm, k)) / (2.0 * h))
    if not columns:
        return np.zeros(0)
    return np.stack(columns)


def relative_error(
    analytic: npt.ArrayLike, numeric: npt.ArrayLike, floor: float = config.FD_ABSOLUTE_FLOOR
) -> float:
    """max |a - n| scaled by the largest magnitude on either side, never below floor."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if a.shape != n.shape:
        raise InputError(f"gradient shapes differ: {a.shape} vs {n.shape}")
    if a.size == 0:
        return 0.0
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(n))), floor)
    return float(np.max(np.abs(a - n))) / scale


def _rmsd_at(x: np.ndarray, y: np.ndarray, rotvec: np.ndarray) -> float:
    rotated = Rotation.from_rotvec(rotvec).apply(y)
    return float(np.sqrt(np.mean(np.sum((x - rotated) ** 2, axis=1))))


def brute_force_lrmsd(
    x: npt.ArrayLike, y: npt.ArrayLike, grid: int = 32, refine_steps: int = 60
) -> float:
    """
    Scan a grid of axis-angle rotation vectors over [-pi, pi)^3, then refine
    the best cell by coordinate descent with step halving.
    """
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 2 or xs.shape[1] != 3:
        raise InputError(f"point sets differ in shape: {xs.shape} vs {ys.shape}")
    if len(xs) == 0:
        raise InputError("empty point sets")
    if grid < MIN_GRID:
        raise InputError(f"grid must have at least {MIN_GRID} rotations per axis, got {grid}")
    xs = xs - xs.mean(axis=0)
    ys = ys - ys.mean(axis=0)

    axis = np.linspace(-np.pi, np.pi, grid, endpoint=False)
    rotvecs = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    matrices = Rotation.from_rotvec(rotvecs).as_matrix()
    # sum_i x_i . (Q y_i) = sum_ab Q_ab (x^T y)_ab
    overlap = np.einsum("gab,ab->g", matrices, xs.T @ ys)
    msd = (np.sum(xs * xs) + np.sum(ys * ys) - 2.0 * overlap) / len(xs)
    best = rotvecs[int(np.argmin(msd))].copy()
    value = _rmsd_at(xs, ys, best)

    step = 2.0 * np.pi / grid
    for _ in range(refine_steps):
        improved = False
        for k in range(3):
            for sign in (1.0, -1.0):
                trial = best.copy()
                trial[k] += sign * step
                candidate = _rmsd_at(xs, ys, trial)
                if candidate < value:
                    best, value, improved = trial, candidate, True
                    break
        if not improved:
            step /= 2.0
    log.debug("brute force lrmsd", atoms=len(xs), grid=grid, value=value, final_step=step)
    return value


def _negative_inertia(a: np.ndarray) -> int:
    """Number of negative eigenvalues of symmetric a, from its LDL^T block pivots."""
    _, d, _ = scipy.linalg.ldl(a, lower=True)
    n = len(d)
    count = 0
    i = 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0.0:
            p, q, r = d[i, i], d[i + 1, i], d[i + 1, i + 1]
            det = p * r - q * q
            if det < 0:
                count += 1
            elif p + r < 0:
                count += 2
            i += 2
        else:
            count += int(d[i, i] < 0)
            i += 1
    return count


def largest_eigenvalue_bisection(t: npt.ArrayLike, tol: float = 1e-13) -> float:
    a = np.asarray(t, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    n = len(a)
    radius = np.sum(np.abs(a), axis=1) - np.abs(np.diag(a))
    lo = float(np.min(np.diag(a) - radius))
    hi = float(np.max(np.diag(a) + radius))
    identity = np.eye(n)
    while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        # every eigenvalue below mid means the largest one is too
        if _negative_inertia(a - mid * identity) == n:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
