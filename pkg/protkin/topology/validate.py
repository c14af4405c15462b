import math
from collections import Counter

from protkin.constants import (
    BACKBONE_PARAMS,
    DIHEDRAL_SLOTS,
    FIXED_SLOT,
    MAX_DIHEDRAL_SLOTS,
    STANDARD_RESIDUES,
)
from protkin.topology.models import SIDECHAIN_PRE, BondEdge, ResidueTopology, TopologyLibrary

ORIGIN_TOLERANCE = 1e-9


def _violation(residue: str, group: int | str, rule: str, detail: str) -> str:
    return f"{residue} group {group}: {rule}: {detail}"


def _check_params(res: ResidueTopology, group: int, theta: float, d: float) -> list[str]:
    out: list[str] = []
    if not (math.isfinite(d) and d > 0):
        out.append(_violation(res.three_letter, group, "positive-bond-length", f"d={d}"))
    if not (math.isfinite(theta) and 0 < theta < 2 * math.pi):
        out.append(_violation(res.three_letter, group, "polar-angle-range", f"theta={theta}"))
    return out


def _check_edge(res: ResidueTopology, edge: BondEdge, ids: set[int]) -> list[str]:
    name = res.three_letter
    out: list[str] = []
    for gid in (edge.parent_group, edge.child_group):
        if gid not in ids:
            out.append(_violation(name, gid, "unknown-group", "edge references a missing group"))
    param_errors = _check_params(res, edge.child_group, edge.params.theta, edge.params.d)
    out.extend(param_errors)
    if edge.slot == FIXED_SLOT:
        if edge.fixed_angle is None or not math.isfinite(edge.fixed_angle):
            out.append(
                _violation(name, edge.child_group, "fixed-angle", "fixed edge needs a constant")
            )
    elif edge.slot not in DIHEDRAL_SLOTS:
        out.append(
            _violation(
                name,
                edge.child_group,
                "max-dihedral-slots",
                f"slot {edge.slot} is not one of the {MAX_DIHEDRAL_SLOTS} dihedral slots",
            )
        )
    if edge.pre is not None and edge.pre != SIDECHAIN_PRE:
        out.append(_violation(name, edge.child_group, "pre-transform", f"unknown pre={edge.pre}"))
    canonical = BACKBONE_PARAMS.get(edge.slot)
    if canonical is not None and not param_errors and edge.params != canonical:
        out.append(
            _violation(name, edge.child_group, "backbone-constants", f"{edge.slot} {edge.params}")
        )
    return out


def _check_tree(res: ResidueTopology, ids: set[int]) -> list[str]:
    name = res.three_letter
    out: list[str] = []
    for e in res.edges:
        if e.parent_group == e.child_group:
            out.append(_violation(name, e.child_group, "tree", "edge forms a cycle onto itself"))
    parents = Counter(e.child_group for e in res.edges)
    for gid, n in parents.items():
        if n > 1:
            out.append(_violation(name, gid, "tree", f"group has {n} parent edges"))
    if len(res.edges) != len(ids) - 1:
        out.append(
            _violation(name, "-", "tree", f"{len(res.edges)} edges for {len(ids)} groups")
        )
    roots = [gid for gid in ids if gid not in parents]
    if len(roots) != 1:
        out.append(_violation(name, "-", "tree", f"expected one root group, found {len(roots)}"))
        return out
    seen = {roots[0]}
    stack = [roots[0]]
    while stack:
        gid = stack.pop()
        for e in res.child_edges(gid):
            if e.child_group in seen:
                out.append(_violation(name, e.child_group, "tree", "group reached twice (cycle)"))
                continue
            seen.add(e.child_group)
            stack.append(e.child_group)
    for gid in sorted(ids - seen):
        out.append(_violation(name, gid, "tree", "group unreachable from the root"))
    return out


def _check_slots(res: ResidueTopology) -> list[str]:
    name = res.three_letter
    out: list[str] = []
    slots = [e.slot for e in res.edges if e.is_variable]
    if res.link is not None:
        slots.append(res.link.slot)
    for slot, n in Counter(slots).items():
        if n > 1:
            out.append(_violation(name, "-", "duplicate-slot", f"{slot} appears {n} times"))
    if len(slots) > MAX_DIHEDRAL_SLOTS:
        out.append(
            _violation(name, "-", "max-dihedral-slots", f"{len(slots)} variable dihedral slots")
        )
    chis = sorted(s for s in slots if s.startswith("chi") and s in DIHEDRAL_SLOTS)
    expected = [f"chi{i}" for i in range(1, len(chis) + 1)]
    if chis != expected:
        out.append(_violation(name, "-", "chi-prefix", f"chi slots {chis} are not {expected}"))
    return out


def _check_link(res: ResidueTopology, ids: set[int]) -> list[str]:
    name = res.three_letter
    link = res.link
    if link is None:
        return [_violation(name, "-", "chain-link", "residue has no peptide connector")]
    out: list[str] = []
    if link.out_group not in ids:
        out.append(_violation(name, link.out_group, "chain-link", "out group does not exist"))
    try:
        root = res.root_group()
    except KeyError:
        root = None
    if root is not None and link.in_group != root:
        out.append(_violation(name, link.in_group, "chain-link", "in group is not the root"))
    if link.slot != "omega":
        out.append(_violation(name, "-", "chain-link", f"connector slot {link.slot}"))
    param_errors = _check_params(res, link.in_group, link.params.theta, link.params.d)
    out.extend(param_errors)
    if not param_errors and link.params != BACKBONE_PARAMS["omega"]:
        out.append(
            _violation(name, link.in_group, "backbone-constants", f"omega {link.params}")
        )
    return out


def validate_residue(res: ResidueTopology) -> list[str]:
    name = res.three_letter
    out: list[str] = []
    counts = Counter(g.group_id for g in res.groups)
    for gid, n in counts.items():
        if n > 1:
            out.append(_violation(name, gid, "duplicate-group", f"group id used {n} times"))
    ids = set(counts)
    if not ids:
        return [*out, _violation(name, "-", "tree", "residue has no groups")]
    for g in res.groups:
        if not g.atoms:
            out.append(_violation(name, g.group_id, "nonempty-group", "group has no atoms"))
            continue
        first = g.atoms[0]
        if math.dist(first.position, (0.0, 0.0, 0.0)) >= ORIGIN_TOLERANCE:
            out.append(
                _violation(name, g.group_id, "origin-first-atom", f"{first.name} is off origin")
            )
    for e in res.edges:
        out.extend(_check_edge(res, e, ids))
    out.extend(_check_tree(res, ids))
    out.extend(_check_slots(res))
    out.extend(_check_link(res, ids))
    return out


def validate(lib: TopologyLibrary, require_standard: bool = True) -> list[str]:
    """
    Every violated invariant as "<residue> group <id>: <rule>: <detail>";
    an empty list means the library is usable.
    """
    out: list[str] = []
    owners: dict[str, list[str]] = {}
    for key in sorted(lib.residues):
        out.extend(validate_residue(lib.residues[key]))
        owners.setdefault(lib.residues[key].one_letter, []).append(key)
    for code, keys in sorted(owners.items()):
        if len(keys) > 1:
            detail = f"{code} used by " + ", ".join(keys)
            out.append(_violation("library", "-", "unique-one-letter", detail))
    if require_standard:
        present = {r.one_letter for r in lib.residues.values()}
        missing = [c for c in STANDARD_RESIDUES if c not in present]
        if missing:
            out.append(
                _violation("library", "-", "standard-residues", "missing " + "".join(missing))
            )
    return out
