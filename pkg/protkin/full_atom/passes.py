"""
Forward kinematics over the full-atom transform tree and its reverse pass.

Every node i carries M_i = M_parent @ [R'] @ R(alpha_i). Moving alpha_i moves
every atom k below i by F_i r_k with

    F_i = M_parent @ [R'] @ dR(alpha_i) @ inv(M_i)

so dL/dalpha_i is the sum over the subtree of (dL/dr_k) . (F_i r_k).
"""

from typing import Sequence

import numpy as np
import numpy.typing as npt
import structlog
from pydantic import BaseModel, ConfigDict

from protkin import batch
from protkin.errors import InputError
from protkin.full_atom.graph import MoleculeGraph
from protkin.geometry import bond_transform_derivatives, bond_transforms, invert_rigid_batch
from protkin.instrumentation import PASS_DURATION
from protkin.metrics import timed
from protkin.models import (
    AtomicCoordinates,
    FullAtomAngles,
    FullAtomGradient,
    ResidueGradient,
)

log = structlog.get_logger(__name__)


class FullAtomSaved(BaseModel):
    """Forward-pass state needed by fa_backward. Arrays are read-only."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    graph: MoleculeGraph
    transforms: np.ndarray
    sandwiches: np.ndarray
    homogeneous: np.ndarray

    @property
    def coordinates(self) -> np.ndarray:
        return self.homogeneous[:, :3]


def _freeze(*arrays: np.ndarray) -> None:
    for a in arrays:
        a.flags.writeable = False


@timed(PASS_DURATION, op="fullatom", phase="forward")
def fa_forward(
    graph: MoleculeGraph, angles: FullAtomAngles
) -> tuple[AtomicCoordinates, FullAtomSaved]:
    alpha = graph.node_angles(angles)
    local = bond_transforms(alpha, graph.theta, graph.d)
    local[0] = np.eye(4)
    pre = graph.pre_mask
    local[pre] = graph.pre_rotation @ local[pre]

    parents = graph.parents.tolist()
    transforms = np.empty_like(local)
    transforms[0] = local[0]
    for i in range(1, len(parents)):
        transforms[i] = transforms[parents[i]] @ local[i]

    homogeneous = np.einsum("aij,aj->ai", transforms[graph.atom_node], graph.standard)

    sandwiches = np.zeros_like(transforms)
    nodes = np.array([v.node for v in graph.variables], dtype=np.int64)
    if len(nodes):
        derivative = bond_transform_derivatives(alpha[nodes], graph.theta[nodes])
        on_pre = graph.pre_mask[nodes]
        derivative[on_pre] = graph.pre_rotation @ derivative[on_pre]
        sandwiches[nodes] = (
            transforms[graph.parents[nodes]] @ derivative @ invert_rigid_batch(transforms[nodes])
        )
    _freeze(transforms, sandwiches, homogeneous)

    coords = AtomicCoordinates(
        positions=homogeneous[:, :3],
        atom_names=graph.atom_names,
        residue_indices=graph.atom_residues,
        residue_codes=[graph.residue_codes[r] for r in graph.atom_residues],
    )
    saved = FullAtomSaved(
        graph=graph, transforms=transforms, sandwiches=sandwiches, homogeneous=homogeneous
    )
    return coords, saved


@timed(PASS_DURATION, op="fullatom", phase="backward")
def fa_backward(saved: FullAtomSaved, grad_coords: npt.ArrayLike) -> FullAtomGradient:
    graph = saved.graph
    grad = np.asarray(grad_coords, dtype=np.float64)
    if grad.shape != (graph.atom_count, 3):
        raise InputError(
            f"gradient shape {grad.shape} does not match {graph.atom_count} atoms"
        )
    records: list[dict[str, float]] = [{} for _ in graph.sequence]
    for v in graph.variables:
        node = graph.nodes[v.node]
        start, stop = node.atom_start, int(graph.subtree_stop[v.node])
        moved = saved.homogeneous[start:stop] @ saved.sandwiches[v.node, :3].T
        records[v.residue_index][v.slot] = float(np.vdot(grad[start:stop], moved))
    return FullAtomGradient(residues=[ResidueGradient(**rec) for rec in records])


def fa_forward_batch(
    graphs: Sequence[MoleculeGraph], angles: Sequence[FullAtomAngles], threads: int = 1
) -> list[tuple[AtomicCoordinates, FullAtomSaved]]:
    if len(graphs) != len(angles):
        raise InputError(f"{len(graphs)} graphs for {len(angles)} angle sets")
    return batch.map_items(lambda item: fa_forward(*item), zip(graphs, angles), threads)


def fa_backward_batch(
    saved: Sequence[FullAtomSaved], grads: Sequence[npt.ArrayLike], threads: int = 1
) -> list[FullAtomGradient]:
    if len(saved) != len(grads):
        raise InputError(f"{len(saved)} saved states for {len(grads)} gradients")
    return batch.map_items(lambda item: fa_backward(*item), zip(saved, grads), threads)


def gradient_vector(graph: MoleculeGraph, gradient: FullAtomGradient) -> np.ndarray:
    """Gradient entries in the order of graph.variables."""
    return np.array(
        [gradient.residues[v.residue_index].get(v.slot) for v in graph.variables],
        dtype=np.float64,
    )
