"""
Timing of batched forward and backward passes over a range of sequence
lengths, and the log-log complexity fit over the recorded rows.
"""

import time
from abc import ABC, abstractmethod
from typing import Any, Optional

import numpy as np
import pandas as pd
import structlog

from protkin import backbone, lrmsd, sampling
from protkin.benchcli.models import BenchRow, FitResult, Pass, ScalingConfig
from protkin.errors import InputError, UsageError
from protkin.full_atom.graph import build_graph
from protkin.full_atom.passes import fa_backward_batch, fa_forward_batch
from protkin.topology.library import load_default_library

log = structlog.get_logger(__name__)

MIN_FIT_LENGTHS = 3


class BenchOp(ABC):
    """A model whose passes can be timed. Input generation is never timed."""

    def __str__(self) -> str:
        return self.name()

    @abstractmethod
    def name(self) -> str: ...

    @abstractmethod
    def prepare(self, gen: np.random.Generator, length: int, batch_size: int) -> Any: ...

    @abstractmethod
    def forward(self, inputs: Any, threads: int) -> Any: ...

    @abstractmethod
    def backward(self, inputs: Any, saved: Any, threads: int) -> None: ...


class BackboneOp(BenchOp):
    def name(self) -> str:
        return "backbone"

    def prepare(self, gen: np.random.Generator, length: int, batch_size: int) -> Any:
        angles = sampling.random_backbone_angles(gen, [length] * batch_size)
        grads = [gen.normal(size=(3 * length, 3)) for _ in range(batch_size)]
        return angles, grads

    def forward(self, inputs: Any, threads: int) -> Any:
        _, saved = backbone.bb_forward(inputs[0], threads)
        return saved

    def backward(self, inputs: Any, saved: Any, threads: int) -> None:
        backbone.bb_backward(saved, inputs[1], threads)


class FullAtomOp(BenchOp):
    def name(self) -> str:
        return "fullatom"

    def prepare(self, gen: np.random.Generator, length: int, batch_size: int) -> Any:
        lib = load_default_library()
        # fresh random sequences for every measurement
        graphs = [
            build_graph(sampling.random_sequence(gen, length), lib) for _ in range(batch_size)
        ]
        angles = [sampling.random_full_atom_angles(gen, g) for g in graphs]
        grads = [gen.normal(size=(g.atom_count, 3)) for g in graphs]
        return graphs, angles, grads

    def forward(self, inputs: Any, threads: int) -> Any:
        results = fa_forward_batch(inputs[0], inputs[1], threads)
        return [s for _, s in results]

    def backward(self, inputs: Any, saved: Any, threads: int) -> None:
        fa_backward_batch(saved, inputs[2], threads)


class LrmsdOp(BenchOp):
    """Point sets of one backbone model size, 3 atoms per residue."""

    def name(self) -> str:
        return "lrmsd"

    def prepare(self, gen: np.random.Generator, length: int, batch_size: int) -> Any:
        xs = [gen.normal(scale=10.0, size=(3 * length, 3)) for _ in range(batch_size)]
        ys = [gen.normal(scale=10.0, size=(3 * length, 3)) for _ in range(batch_size)]
        return xs, ys

    def forward(self, inputs: Any, threads: int) -> Any:
        return lrmsd.lrmsd_batch(inputs[0], inputs[1], threads)

    def backward(self, inputs: Any, saved: Any, threads: int) -> None:
        for x, y, (_, alignment) in zip(inputs[0], inputs[1], saved):
            lrmsd.lrmsd_gradient(x, y, alignment)


_ops: list[BenchOp] = [BackboneOp(), FullAtomOp(), LrmsdOp()]


def register_op(op: BenchOp) -> None:
    _ops.append(op)


def list_ops() -> list[str]:
    return [op.name() for op in _ops]


def get_op(name: str) -> Optional[BenchOp]:
    for op in _ops:
        if op.name() == name:
            return op
    return None


def _elapsed(start: int) -> float:
    return max(time.perf_counter_ns() - start, 1) / 1e9


def run_scaling_benchmark(cfg: ScalingConfig) -> list[BenchRow]:
    op = get_op(cfg.op)
    if op is None:
        raise UsageError(f"unknown op {cfg.op!r}, expected one of {list_ops()}")
    gen = sampling.rng(cfg.seed)
    rows: list[BenchRow] = []
    for length in cfg.lengths():
        times: dict[Pass, list[float]] = {Pass.forward: [], Pass.backward: []}
        for _ in range(cfg.reps):
            inputs = op.prepare(gen, length, cfg.batch)
            start = time.perf_counter_ns()
            saved = op.forward(inputs, cfg.threads)
            times[Pass.forward].append(_elapsed(start))
            start = time.perf_counter_ns()
            op.backward(inputs, saved, cfg.threads)
            times[Pass.backward].append(_elapsed(start))
        for phase, measured in times.items():
            rows.extend(
                BenchRow(
                    op_name=op.name(),
                    sequence_length=length,
                    batch_size=cfg.batch,
                    pass_=phase,
                    replicate=rep,
                    wall_time=wall,
                    threads=cfg.threads,
                )
                for rep, wall in enumerate(measured, start=1)
            )
        log.info(
            "benchmarked length",
            op=op.name(),
            length=length,
            forward_median=float(np.median(times[Pass.forward])),
            backward_median=float(np.median(times[Pass.backward])),
        )
    return rows


def fit_complexity(frame: pd.DataFrame) -> list[FitResult]:
    """
    Least-squares line through log(median wall time) against log(length),
    one fit per (op, pass).
    """
    results: list[FitResult] = []
    for (op_name, phase), group in frame.groupby(["op_name", "pass"], sort=True):
        medians = group.groupby("sequence_length")["wall_time"].median().sort_index()
        if len(medians) < MIN_FIT_LENGTHS:
            raise InputError(
                f"op {op_name} pass {phase}: {len(medians)} distinct lengths, "
                f"at least {MIN_FIT_LENGTHS} are needed"
            )
        lengths = medians.index.to_numpy(dtype=np.float64)
        slope, intercept = np.polyfit(np.log(lengths), np.log(medians.to_numpy()), 1)
        results.append(
            FitResult(
                op_name=str(op_name),
                pass_=str(phase),
                slope=float(slope),
                intercept=float(intercept),
                lengths=len(medians),
            )
        )
    if not results:
        raise InputError("no benchmark rows to fit")
    return results
