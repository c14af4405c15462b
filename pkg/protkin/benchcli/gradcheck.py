"""
Analytic gradients of the three models against central finite differences on
random instances. Each perturbed evaluation computes every loss at once.
"""

from typing import Callable

import numpy as np
import structlog

from protkin import backbone, lrmsd, sampling
from protkin.benchcli.models import GradcheckConfig, GradcheckReport, Model, WorstCase
from protkin.full_atom.graph import build_graph
from protkin.full_atom.passes import fa_backward, fa_forward, gradient_vector
from protkin.models import BackboneAngles
from protkin.oracle import FdConfig, finite_difference_gradient, relative_error
from protkin.topology.library import load_default_library

log = structlog.get_logger(__name__)

LOSS_NAMES = ("sum_squares", "lrmsd", "projection")
GRADIENT_SUM_TOLERANCE = 1e-10
ROTATION_DERIVATIVE_TOLERANCE = 1e-7

# a function of the parameter vector returning positions, and its pullback
Forward = Callable[[np.ndarray], np.ndarray]
Pullback = Callable[[np.ndarray, np.ndarray], np.ndarray]


class _Losses:
    """Sum of squares, LRMSD to a random target and one coordinate."""

    def __init__(self, gen: np.random.Generator, n_atoms: int):
        self.target = gen.normal(scale=5.0, size=(n_atoms, 3))
        self.atom = int(gen.integers(n_atoms))
        self.axis = int(gen.integers(3))

    def values(self, coords: np.ndarray) -> np.ndarray:
        value, _ = lrmsd.lrmsd(coords, self.target)
        return np.array([np.sum(coords * coords), value, coords[self.atom, self.axis]])

    def coordinate_gradients(self, coords: np.ndarray) -> list[np.ndarray]:
        _, alignment = lrmsd.lrmsd(coords, self.target)
        projection = np.zeros_like(coords)
        projection[self.atom, self.axis] = 1.0
        return [
            2.0 * coords,
            lrmsd.lrmsd_gradient(coords, self.target, alignment),
            projection,
        ]


def _compare(
    seed: int,
    analytic: list[np.ndarray],
    numeric: np.ndarray,
    floor: float,
    names: tuple[str, ...] = LOSS_NAMES,
) -> list[WorstCase]:
    """Largest discrepancy of every loss, one case per loss."""
    cases: list[WorstCase] = []
    for k, name in enumerate(names[: len(analytic)]):
        a, n = analytic[k], numeric[:, k]
        index = int(np.argmax(np.abs(a - n)))
        cases.append(
            WorstCase(
                seed=seed,
                loss=name,
                index=index,
                analytic=float(a[index]),
                numeric=float(n[index]),
                error=relative_error(a, n, floor),
            )
        )
    return cases


def _check_chain(
    seed: int, params: np.ndarray, forward: Forward, pullback: Pullback, fd: FdConfig
) -> list[WorstCase]:
    gen = sampling.rng(seed + 1)
    coords = forward(params)
    losses = _Losses(gen, len(coords))
    numeric = finite_difference_gradient(lambda p: losses.values(forward(p)), params, fd)
    analytic = [pullback(params, g) for g in losses.coordinate_gradients(coords)]
    return _compare(seed, analytic, numeric, fd.absolute_floor)


def _backbone_trial(seed: int, length: int, fd: FdConfig) -> list[WorstCase]:
    gen = sampling.rng(seed)
    params = gen.uniform(-np.pi, np.pi, size=2 * length)

    def forward(p: np.ndarray) -> np.ndarray:
        coords, _ = backbone.bb_forward_item(p[:length], p[length:])
        return np.asarray(coords.positions)

    def pullback(p: np.ndarray, grad: np.ndarray) -> np.ndarray:
        angles = BackboneAngles.from_items([p[:length]], [p[length:]])
        _, saved = backbone.bb_forward(angles)
        (g,) = backbone.bb_backward(saved, [grad])
        return np.concatenate([g.phi, g.psi])

    return _check_chain(seed, params, forward, pullback, fd)


def _fullatom_trial(seed: int, length: int, fd: FdConfig) -> list[WorstCase]:
    gen = sampling.rng(seed)
    graph = build_graph(sampling.random_sequence(gen, length), load_default_library())
    params = graph.flatten(sampling.random_full_atom_angles(gen, graph))

    def forward(p: np.ndarray) -> np.ndarray:
        coords, _ = fa_forward(graph, graph.unflatten(p))
        return np.asarray(coords.positions)

    def pullback(p: np.ndarray, grad: np.ndarray) -> np.ndarray:
        _, saved = fa_forward(graph, graph.unflatten(p))
        return gradient_vector(graph, fa_backward(saved, grad))

    return _check_chain(seed, params, forward, pullback, fd)


def _lrmsd_trial(seed: int, length: int, fd: FdConfig) -> tuple[list[WorstCase], float, float]:
    """Also returns |sum of atom gradients| and the derivative along a rigid rotation."""
    gen = sampling.rng(seed)
    x = gen.normal(scale=5.0, size=(length, 3))
    y = gen.normal(scale=5.0, size=(length, 3))
    _, alignment = lrmsd.lrmsd(x, y)
    grad = lrmsd.lrmsd_gradient(x, y, alignment)
    numeric = finite_difference_gradient(
        lambda p: lrmsd.lrmsd(p.reshape(-1, 3), y)[0], x.reshape(-1), fd
    )
    cases = _compare(
        seed, [grad.reshape(-1)], numeric.reshape(-1, 1), fd.absolute_floor, names=("lrmsd",)
    )

    axis = gen.normal(size=3)
    axis /= np.linalg.norm(axis)
    rotated = np.cross(axis, x - x.mean(axis=0))
    return cases, float(np.max(np.abs(grad.sum(axis=0)))), abs(float(np.vdot(grad, rotated)))


def run_gradcheck(cfg: GradcheckConfig, fd: FdConfig | None = None) -> GradcheckReport:
    fd = fd or FdConfig()
    seeds = sampling.rng(cfg.seed).integers(0, 2**31 - 1, size=cfg.trials).tolist()
    cases: list[WorstCase] = []
    max_sum: float | None = None
    max_rotation: float | None = None
    for seed in seeds:
        if cfg.model == Model.backbone:
            trial = _backbone_trial(seed, cfg.length, fd)
        elif cfg.model == Model.fullatom:
            trial = _fullatom_trial(seed, cfg.length, fd)
        else:
            trial, grad_sum, rotation = _lrmsd_trial(seed, cfg.length, fd)
            max_sum = max(max_sum or 0.0, grad_sum)
            max_rotation = max(max_rotation or 0.0, rotation)
        errors = {c.loss: c.error for c in trial}
        log.debug("gradcheck trial", model=str(cfg.model), seed=seed, **errors)
        cases.extend(trial)

    worst = max(cases, key=lambda c: c.error)
    loss_errors: dict[str, float] = {}
    for c in cases:
        loss_errors[c.loss] = max(loss_errors.get(c.loss, 0.0), c.error)
    passed = worst.error < cfg.tol
    if max_sum is not None and max_sum >= GRADIENT_SUM_TOLERANCE:
        passed = False
    if max_rotation is not None and max_rotation >= ROTATION_DERIVATIVE_TOLERANCE:
        passed = False
    return GradcheckReport(
        model=cfg.model,
        trials=cfg.trials,
        max_error=worst.error,
        worst=worst,
        loss_errors=loss_errors,
        max_gradient_sum=max_sum,
        max_rotation_derivative=max_rotation,
        passed=passed,
    )
