"""
Line-oriented residue topology format.

    RESIDUE <three-letter> <one-letter>
    GROUP <id>
    ATOM <group-id> <atom-name> <x> <y> <z>
    EDGE <parent-id> <child-id> <slot|fixed=<rad>> theta=<rad> d=<angstrom> [pre=sidechain]
    LINK <out-group-id> <in-group-id> omega theta=<rad> d=<angstrom>

'#' starts a comment. LINK declares the peptide connector from this residue
to the root group of the next residue in a chain.
"""

import math
import re
import structlog
from pydantic import BaseModel, ConfigDict, Field

from protkin.constants import BACKBONE_PARAMS, DIHEDRAL_SLOTS, FIXED_SLOT
from protkin.errors import ParseError, TopologyError
from protkin.geometry import TransformParams
from protkin.topology.models import (
    SIDECHAIN_PRE,
    BondEdge,
    ChainLink,
    ResidueTopology,
    RigidGroup,
    TopologyAtom,
    TopologyLibrary,
)
from protkin.topology.validate import validate

log = structlog.get_logger(__name__)

HEADER = "# protkin residue topology v1"
SNAP_TOLERANCE = 5e-7
TOKEN = re.compile(r"\S+")


class _Token(BaseModel):
    model_config = ConfigDict(frozen=True)

    text: str
    column: int


class _ResidueDraft(BaseModel):
    three_letter: str
    one_letter: str
    line: int
    groups: dict[int, list[TopologyAtom]] = Field(default_factory=dict)
    edges: list[BondEdge] = Field(default_factory=list)
    link: ChainLink | None = None

    def build(self) -> ResidueTopology:
        return ResidueTopology(
            three_letter=self.three_letter,
            one_letter=self.one_letter,
            groups=[RigidGroup(group_id=gid, atoms=atoms) for gid, atoms in self.groups.items()],
            edges=self.edges,
            link=self.link,
        )


def _tokens(line: str) -> list[_Token]:
    return [_Token(text=m.group(0), column=m.start() + 1) for m in TOKEN.finditer(line)]


def _number(tok: _Token, lineno: int, what: str) -> float:
    try:
        value = float(tok.text)
    except ValueError:
        raise ParseError(f"{what} is not a number: {tok.text!r}", lineno, tok.column) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} is not finite: {tok.text!r}", lineno, tok.column)
    return value


def _integer(tok: _Token, lineno: int, what: str) -> int:
    try:
        return int(tok.text)
    except ValueError:
        raise ParseError(f"{what} is not an integer: {tok.text!r}", lineno, tok.column) from None


def _keyvalues(toks: list[_Token], lineno: int, allowed: set[str]) -> dict[str, _Token]:
    out: dict[str, _Token] = {}
    for tok in toks:
        key, sep, value = tok.text.partition("=")
        if not sep or key not in allowed:
            raise ParseError(f"unexpected field {tok.text!r}", lineno, tok.column)
        if key in out:
            raise ParseError(f"field {key} given twice", lineno, tok.column)
        out[key] = _Token(text=value, column=tok.column + len(key) + 1)
    return out


def _snap(slot: str, params: TransformParams) -> TransformParams:
    canonical = BACKBONE_PARAMS.get(slot)
    if canonical is None:
        return params
    if (
        abs(params.theta - canonical.theta) <= SNAP_TOLERANCE
        and abs(params.d - canonical.d) <= SNAP_TOLERANCE
    ):
        return canonical
    return params


def _params(fields: dict[str, _Token], head: _Token, lineno: int) -> TransformParams:
    for key in ("theta", "d"):
        if key not in fields:
            raise ParseError(f"missing {key}=", lineno, head.column)
    return TransformParams(
        theta=_number(fields["theta"], lineno, "theta"), d=_number(fields["d"], lineno, "d")
    )


def _parse_edge(args: list[_Token], head: _Token, lineno: int) -> BondEdge:
    if len(args) < 5:
        raise ParseError("EDGE needs parent, child, slot, theta= and d=", lineno, head.column)
    parent = _integer(args[0], lineno, "parent group")
    child = _integer(args[1], lineno, "child group")
    slot_tok = args[2]
    fixed_angle: float | None = None
    if slot_tok.text.startswith(FIXED_SLOT + "="):
        slot = FIXED_SLOT
        value = _Token(
            text=slot_tok.text[len(FIXED_SLOT) + 1 :],
            column=slot_tok.column + len(FIXED_SLOT) + 1,
        )
        fixed_angle = _number(value, lineno, "fixed angle")
    elif slot_tok.text in DIHEDRAL_SLOTS:
        slot = slot_tok.text
    else:
        raise ParseError(f"unknown angle slot {slot_tok.text!r}", lineno, slot_tok.column)
    fields = _keyvalues(args[3:], lineno, {"theta", "d", "pre"})
    pre = None
    if "pre" in fields:
        if fields["pre"].text != SIDECHAIN_PRE:
            raise ParseError(f"unknown pre={fields['pre'].text}", lineno, fields["pre"].column)
        pre = SIDECHAIN_PRE
    return BondEdge(
        parent_group=parent,
        child_group=child,
        params=_snap(slot, _params(fields, head, lineno)),
        slot=slot,
        fixed_angle=fixed_angle,
        pre=pre,
    )


def _parse_link(args: list[_Token], head: _Token, lineno: int) -> ChainLink:
    if len(args) != 5:
        raise ParseError("LINK needs out, in, omega, theta= and d=", lineno, head.column)
    if args[2].text != "omega":
        raise ParseError(f"LINK slot must be omega, got {args[2].text!r}", lineno, args[2].column)
    fields = _keyvalues(args[3:], lineno, {"theta", "d"})
    return ChainLink(
        out_group=_integer(args[0], lineno, "out group"),
        in_group=_integer(args[1], lineno, "in group"),
        params=_snap("omega", _params(fields, head, lineno)),
    )


def _parse_lines(text: str) -> list[_ResidueDraft]:
    drafts: list[_ResidueDraft] = []
    current: _ResidueDraft | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = _tokens(raw.split("#", 1)[0])
        if not toks:
            continue
        head, args = toks[0], toks[1:]
        keyword = head.text
        if keyword == "RESIDUE":
            if len(args) != 2 or len(args[0].text) != 3 or len(args[1].text) != 1:
                raise ParseError("RESIDUE needs a 3-letter and a 1-letter code", lineno, 1)
            if any(d.three_letter == args[0].text.upper() for d in drafts):
                raise ParseError(f"duplicate residue {args[0].text}", lineno, args[0].column)
            for d in drafts:
                if d.one_letter == args[1].text.upper():
                    raise ParseError(
                        f"one-letter code {args[1].text} already used by {d.three_letter} "
                        f"on line {d.line}",
                        lineno,
                        args[1].column,
                    )
            current = _ResidueDraft(
                three_letter=args[0].text.upper(), one_letter=args[1].text.upper(), line=lineno
            )
            drafts.append(current)
            continue
        if keyword not in ("GROUP", "ATOM", "EDGE", "LINK"):
            raise ParseError(f"unknown record {keyword!r}", lineno, head.column)
        if current is None:
            raise ParseError(f"{keyword} before any RESIDUE", lineno, head.column)
        if keyword == "GROUP":
            if len(args) != 1:
                raise ParseError("GROUP needs exactly one id", lineno, head.column)
            gid = _integer(args[0], lineno, "group id")
            if gid in current.groups:
                raise ParseError(f"duplicate group id {gid}", lineno, args[0].column)
            current.groups[gid] = []
        elif keyword == "ATOM":
            if len(args) != 5:
                raise ParseError("ATOM needs group, name, x, y, z", lineno, head.column)
            gid = _integer(args[0], lineno, "group id")
            if gid not in current.groups:
                raise ParseError(f"ATOM in undeclared group {gid}", lineno, args[0].column)
            xyz = tuple(_number(t, lineno, "coordinate") for t in args[2:5])
            atom = TopologyAtom(name=args[1].text, position=xyz)  # type: ignore[arg-type]
            current.groups[gid].append(atom)
        elif keyword == "EDGE":
            current.edges.append(_parse_edge(args, head, lineno))
        else:
            if current.link is not None:
                raise ParseError("second LINK in residue", lineno, head.column)
            current.link = _parse_link(args, head, lineno)
    return drafts


def parse_topology(text: str, require_standard: bool = True) -> TopologyLibrary:
    """
    Parse and validate a topology file. Syntax problems raise ParseError with
    the line and column; structural problems (cycles, atoms off the group
    origin, missing residues) raise TopologyError listing every violation.
    """
    drafts = _parse_lines(text)
    lib = TopologyLibrary(residues={d.three_letter: d.build() for d in drafts})
    violations = validate(lib, require_standard=require_standard)
    if violations:
        raise TopologyError(violations)
    log.debug("parsed topology", residues=len(lib.residues))
    return lib


def _fmt(value: float) -> str:
    return f"{value + 0.0:.6f}"


def _serialize_residue(res: ResidueTopology) -> list[str]:
    lines = [f"RESIDUE {res.three_letter} {res.one_letter}"]
    for g in res.groups:
        lines.append(f"GROUP {g.group_id}")
        for a in g.atoms:
            x, y, z = (_fmt(v) for v in a.position)
            lines.append(f"ATOM {g.group_id} {a.name} {x} {y} {z}")
    for e in res.edges:
        slot = e.slot if e.slot != FIXED_SLOT else f"fixed={_fmt(e.fixed_angle or 0.0)}"
        line = (
            f"EDGE {e.parent_group} {e.child_group} {slot} "
            f"theta={_fmt(e.params.theta)} d={_fmt(e.params.d)}"
        )
        if e.pre is not None:
            line += f" pre={e.pre}"
        lines.append(line)
    if res.link is not None:
        link = res.link
        lines.append(
            f"LINK {link.out_group} {link.in_group} {link.slot} "
            f"theta={_fmt(link.params.theta)} d={_fmt(link.params.d)}"
        )
    return lines


def serialize_topology(lib: TopologyLibrary) -> str:
    lines = [HEADER]
    for key in sorted(lib.residues):
        lines.append("")
        lines.extend(_serialize_residue(lib.residues[key]))
    return "\n".join(lines) + "\n"
