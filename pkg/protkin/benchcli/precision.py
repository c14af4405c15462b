"""
Single-precision drift of the backbone chain: positions from the float32
backbone pass against the double-precision full-atom N, CA and C atoms on the
same angles.
"""

import numpy as np
import structlog
from scipy import stats

from protkin import backbone, sampling
from protkin.benchcli.models import PrecisionConfig, PrecisionReport, PrecisionRow
from protkin.constants import BACKBONE_ATOMS
from protkin.full_atom.graph import build_graph
from protkin.full_atom.passes import fa_forward
from protkin.models import BackboneAngles, FullAtomAngles, ResidueAngles
from protkin.topology.library import load_default_library

log = structlog.get_logger(__name__)


def per_atom_errors(cfg: PrecisionConfig) -> np.ndarray:
    """(reps, atoms) distances between the two models, one row per random angle set."""
    # one residue past max_len so backbone atom 3 * max_len exists
    n = cfg.max_len + 1
    graph = build_graph("G" * n, load_default_library())
    gen = sampling.rng(cfg.seed)
    errors = np.empty((cfg.reps, 3 * n))
    for rep in range(cfg.reps):
        phi = gen.uniform(-np.pi, np.pi, size=n)
        psi = gen.uniform(-np.pi, np.pi, size=n)
        single, _ = backbone.bb_forward_f32(BackboneAngles.from_items([phi], [psi]))
        angles = FullAtomAngles(
            residues=[ResidueAngles(phi=float(a), psi=float(b)) for a, b in zip(phi, psi)]
        )
        reference, _ = fa_forward(graph, angles)
        reference = reference.select(BACKBONE_ATOMS)
        diff = single[0].positions.astype(np.float64) - reference.positions
        errors[rep] = np.linalg.norm(diff, axis=1)
    return errors


def summarize(errors: np.ndarray) -> list[PrecisionRow]:
    reps = len(errors)
    mean = errors.mean(axis=0)
    if reps > 1:
        half = stats.t.ppf(0.975, reps - 1) * errors.std(axis=0, ddof=1) / np.sqrt(reps)
    else:
        half = np.zeros_like(mean)
    return [
        PrecisionRow(
            atom_index=i,
            mean_error=float(m),
            ci95_low=float(max(0.0, m - h)),
            ci95_high=float(m + h),
        )
        for i, (m, h) in enumerate(zip(mean.tolist(), half.tolist()))
    ]


def trend_slope(mean_errors: np.ndarray, bins: int) -> float:
    """Slope of a line through the mean error of contiguous atom-index bins."""
    chunks = [c for c in np.array_split(mean_errors, bins) if len(c)]
    if len(chunks) < 2:
        return 0.0
    centers = np.cumsum([len(c) for c in chunks]) - np.array([len(c) for c in chunks]) / 2.0
    slope, _ = np.polyfit(centers, [float(c.mean()) for c in chunks], 1)
    return float(slope)


def run_precision_experiment(cfg: PrecisionConfig) -> PrecisionReport:
    errors = per_atom_errors(cfg)
    rows = summarize(errors)
    mean = np.array([r.mean_error for r in rows])
    probe = 3 * cfg.max_len
    max_mean = float(mean.max())
    slope = trend_slope(mean, cfg.bins)
    report = PrecisionReport(
        rows=rows,
        max_mean_error=max_mean,
        probe_index=probe,
        probe_error=float(mean[probe]),
        trend_slope=slope,
        passed=max_mean < cfg.threshold and slope >= 0.0,
    )
    log.info(
        "precision experiment",
        max_len=cfg.max_len,
        reps=cfg.reps,
        max_mean_error=max_mean,
        trend_slope=slope,
    )
    return report
