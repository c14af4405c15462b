from pydantic import BaseModel, ConfigDict, Field

from protkin import config
from protkin.constants import DIHEDRAL_SLOTS, FIXED_SLOT
from protkin.geometry import TransformParams

SIDECHAIN_PRE = "sidechain"


class TopologyAtom(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    position: tuple[float, float, float]


class RigidGroup(BaseModel):
    """Atoms that move as one unit; the first atom sits at the group origin."""

    model_config = ConfigDict(frozen=True)

    group_id: int
    atoms: list[TopologyAtom] = Field(default_factory=list)


class BondEdge(BaseModel):
    """
    Transform from a parent group frame to a child group frame. The slot names
    the dihedral angle that drives it, or "fixed" with a constant angle.
    """

    model_config = ConfigDict(frozen=True)

    parent_group: int
    child_group: int
    params: TransformParams
    slot: str
    fixed_angle: float | None = None
    pre: str | None = None

    @property
    def is_variable(self) -> bool:
        return self.slot != FIXED_SLOT


class ChainLink(BaseModel):
    """Peptide connector from this residue's out group to the next residue's root."""

    model_config = ConfigDict(frozen=True)

    out_group: int
    in_group: int
    params: TransformParams
    slot: str = "omega"


class ResidueTopology(BaseModel):
    model_config = ConfigDict(frozen=True)

    three_letter: str
    one_letter: str
    groups: list[RigidGroup] = Field(default_factory=list)
    edges: list[BondEdge] = Field(default_factory=list)
    link: ChainLink | None = None

    def group(self, group_id: int) -> RigidGroup:
        for g in self.groups:
            if g.group_id == group_id:
                return g
        raise KeyError(f"{self.three_letter} has no group {group_id}")

    def root_group(self) -> int:
        children = {e.child_group for e in self.edges}
        roots = [g.group_id for g in self.groups if g.group_id not in children]
        if len(roots) != 1:
            raise KeyError(f"{self.three_letter} has {len(roots)} root groups")
        return roots[0]

    def child_edges(self, group_id: int) -> list[BondEdge]:
        return [e for e in self.edges if e.parent_group == group_id]

    def variable_slots(self) -> list[str]:
        """Dihedral slots driving this residue, including the inbound omega."""
        slots = [e.slot for e in self.edges if e.is_variable]
        if self.link is not None:
            slots.append(self.link.slot)
        return sorted(slots, key=_slot_order)

    def chi_slots(self) -> list[str]:
        return [s for s in self.variable_slots() if s.startswith("chi")]

    @property
    def atom_count(self) -> int:
        return sum(len(g.atoms) for g in self.groups)

    def atom_names(self) -> list[str]:
        return [a.name for g in self.groups for a in g.atoms]


class TopologyLibrary(BaseModel):
    model_config = ConfigDict(frozen=True)

    residues: dict[str, ResidueTopology] = Field(default_factory=dict)
    sidechain_rotation_deg: float = config.SIDECHAIN_ROTATION_DEG

    def lookup(self, code: str) -> ResidueTopology:
        """Residue by 3-letter or 1-letter code, case-insensitive."""
        key = code.upper()
        if key in self.residues:
            return self.residues[key]
        for res in self.residues.values():
            if res.one_letter == key:
                return res
        raise KeyError(code)

    def __contains__(self, code: object) -> bool:
        if not isinstance(code, str):
            return False
        try:
            self.lookup(code)
        except KeyError:
            return False
        return True


def _slot_order(slot: str) -> int:
    if slot in DIHEDRAL_SLOTS:
        return DIHEDRAL_SLOTS.index(slot)
    return len(DIHEDRAL_SLOTS)
