import math

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict

from protkin.constants import CHI_SLOTS, FIXED_SLOT
from protkin.errors import InputError
from protkin.geometry import TransformMatrix, rotation_x
from protkin.models import FullAtomAngles, ResidueAngles
from protkin.topology.models import BondEdge, ChainLink, ResidueTopology, TopologyLibrary

log = structlog.get_logger(__name__)

ROOT_SLOT = "root"


class GraphNode(BaseModel):
    """One rigid group of one residue, attached to its parent by a bond transform."""

    model_config = ConfigDict(frozen=True)

    residue_index: int
    group_id: int
    parent: int
    slot: str
    variable: bool
    theta: float
    d: float
    fixed_angle: float
    pre: bool
    atom_start: int
    atom_stop: int
    children: list[int]


class VariableAngle(BaseModel):
    model_config = ConfigDict(frozen=True)

    residue_index: int
    slot: str
    node: int


class MoleculeGraph(BaseModel):
    """
    Transform tree of a whole chain in depth-first order. Atoms of a node's
    subtree occupy the contiguous range [atom_start, subtree_stop).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    sequence: str
    residue_codes: list[str]
    chi_slots: list[list[str]]
    nodes: list[GraphNode]
    variables: list[VariableAngle]
    variable_omega: bool
    atom_names: list[str]
    atom_residues: list[int]
    atom_node: np.ndarray
    standard: np.ndarray
    subtree_stop: np.ndarray
    parents: np.ndarray
    theta: np.ndarray
    d: np.ndarray
    base_alpha: np.ndarray
    pre_mask: np.ndarray
    pre_rotation: np.ndarray

    @property
    def atom_count(self) -> int:
        return len(self.atom_names)

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def _check(self, angles: FullAtomAngles) -> None:
        if len(angles) != len(self.sequence):
            raise InputError(
                f"{len(angles)} residue angle records for a sequence of {len(self.sequence)}"
            )
        for r, (res, want) in enumerate(zip(angles.residues, self.chi_slots)):
            got = res.chi_slots()
            if got != want:
                raise InputError(
                    f"residue {r} ({self.residue_codes[r]}) expects chi slots {want}, got {got}"
                )

    def node_angles(self, angles: FullAtomAngles) -> np.ndarray:
        """Dihedral angle of every node edge, fixed edges included."""
        self._check(angles)
        alpha = self.base_alpha.copy()
        for v in self.variables:
            alpha[v.node] = angles.residues[v.residue_index].get(v.slot)
        return alpha

    def flatten(self, angles: FullAtomAngles) -> np.ndarray:
        self._check(angles)
        return np.array(
            [angles.residues[v.residue_index].get(v.slot) for v in self.variables],
            dtype=np.float64,
        )

    def unflatten(self, values: np.ndarray) -> FullAtomAngles:
        if len(values) != len(self.variables):
            raise InputError(f"{len(values)} values for {len(self.variables)} variable angles")
        records: list[dict[str, float]] = [{} for _ in self.sequence]
        for v, value in zip(self.variables, values):
            records[v.residue_index][v.slot] = float(value)
        return FullAtomAngles(residues=[ResidueAngles(**rec) for rec in records])


def _resolve(sequence: str, lib: TopologyLibrary) -> list[ResidueTopology]:
    if not sequence:
        raise InputError("empty sequence")
    residues: list[ResidueTopology] = []
    for pos, code in enumerate(sequence):
        try:
            residues.append(lib.lookup(code))
        except KeyError:
            raise InputError(f"unknown residue code {code!r} at position {pos}") from None
    return residues


def build_graph(
    sequence: str, lib: TopologyLibrary, variable_omega: bool = False
) -> MoleculeGraph:
    """
    Chain the residue trees of sequence through their peptide links. Nodes are
    emitted in depth-first preorder, so a residue's atoms precede those of all
    later residues.
    """
    residues = _resolve(sequence, lib)
    nodes: list[dict[str, object]] = []
    variables: list[VariableAngle] = []
    atom_names: list[str] = []
    atom_residues: list[int] = []
    atom_node: list[int] = []
    standard: list[tuple[float, float, float, float]] = []

    stack: list[tuple[int, int, int, BondEdge | ChainLink | None]] = [
        (0, residues[0].root_group(), -1, None)
    ]
    while stack:
        r, gid, parent, edge = stack.pop()
        res = residues[r]
        index = len(nodes)
        if edge is None:
            slot, variable, theta, d, fixed, pre = ROOT_SLOT, False, 0.0, 0.0, 0.0, False
        elif isinstance(edge, ChainLink):
            slot, variable = edge.slot, variable_omega
            theta, d, fixed, pre = edge.params.theta, edge.params.d, math.pi, False
        else:
            slot, variable = edge.slot, edge.slot != FIXED_SLOT
            theta, d = edge.params.theta, edge.params.d
            fixed, pre = edge.fixed_angle or 0.0, edge.pre is not None
        if variable:
            variables.append(VariableAngle(residue_index=r, slot=slot, node=index))
        start = len(atom_names)
        for atom in res.group(gid).atoms:
            atom_names.append(atom.name)
            atom_residues.append(r)
            atom_node.append(index)
            standard.append((*atom.position, 1.0))
        nodes.append(
            {
                "residue_index": r,
                "group_id": gid,
                "parent": parent,
                "slot": slot,
                "variable": variable,
                "theta": theta,
                "d": d,
                "fixed_angle": fixed,
                "pre": pre,
                "atom_start": start,
                "atom_stop": len(atom_names),
                "children": [],
            }
        )
        if parent >= 0:
            nodes[parent]["children"].append(index)  # type: ignore[union-attr]

        pending: list[tuple[int, int, int, BondEdge | ChainLink | None]] = [
            (r, e.child_group, index, e) for e in res.child_edges(gid)
        ]
        link = res.link
        if link is not None and gid == link.out_group and r + 1 < len(residues):
            pending.append((r + 1, residues[r + 1].root_group(), index, link))
        stack.extend(reversed(pending))

    subtree_stop = np.array([n["atom_stop"] for n in nodes], dtype=np.int64)
    parents = np.array([n["parent"] for n in nodes], dtype=np.int64)
    for i in range(len(nodes) - 1, 0, -1):
        p = parents[i]
        subtree_stop[p] = max(subtree_stop[p], subtree_stop[i])

    base_alpha = np.array(
        [0.0 if n["variable"] else n["fixed_angle"] for n in nodes], dtype=np.float64
    )
    # right-handed about the CA frame x axis; the negative sign gives L chirality
    pre_rotation: TransformMatrix = rotation_x(-math.radians(lib.sidechain_rotation_deg))
    graph = MoleculeGraph(
        sequence=sequence.upper(),
        residue_codes=[res.three_letter for res in residues],
        chi_slots=[[s for s in CHI_SLOTS if s in res.chi_slots()] for res in residues],
        nodes=[GraphNode(**n) for n in nodes],  # type: ignore[arg-type]
        variables=variables,
        variable_omega=variable_omega,
        atom_names=atom_names,
        atom_residues=atom_residues,
        atom_node=np.array(atom_node, dtype=np.int64),
        standard=np.array(standard, dtype=np.float64),
        subtree_stop=subtree_stop,
        parents=parents,
        theta=np.array([n["theta"] for n in nodes], dtype=np.float64),
        d=np.array([n["d"] for n in nodes], dtype=np.float64),
        base_alpha=base_alpha,
        pre_mask=np.array([n["pre"] for n in nodes], dtype=bool),
        pre_rotation=pre_rotation,
    )
    log.debug(
        "built molecule graph",
        residues=len(residues),
        nodes=graph.node_count,
        atoms=graph.atom_count,
        variables=len(variables),
    )
    return graph
