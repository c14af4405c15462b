"""
Dihedral angle files, one residue per line, radians throughout:

    # protkin angles v1
    0 phi=-1.0471975511965976 psi=-0.78539816339744828 omega=3.1415926535897931
    1 phi=... psi=... omega=... chi1=...

Residue indices start at 0 and are contiguous. Omega defaults to trans.
"""

import math

from protkin.constants import DIHEDRAL_SLOTS
from protkin.errors import ParseError
from protkin.models import FullAtomAngles, ResidueAngles

HEADER = "# protkin angles v1"


def _fmt(value: float) -> str:
    return format(value, ".17g")


def write_angles(angles: FullAtomAngles) -> str:
    lines = [HEADER]
    for index, res in enumerate(angles.residues):
        fields = [str(index)]
        for slot in DIHEDRAL_SLOTS:
            value = res.get(slot)
            if value is not None:
                fields.append(f"{slot}={_fmt(value)}")
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def _parse_line(line: str, lineno: int) -> tuple[int, dict[str, float]]:
    tokens = line.split()
    try:
        index = int(tokens[0])
    except ValueError:
        raise ParseError(f"malformed residue index {tokens[0]!r}", lineno, 1) from None
    values: dict[str, float] = {}
    column = len(tokens[0]) + 2
    for token in tokens[1:]:
        key, sep, raw = token.partition("=")
        if not sep:
            raise ParseError(f"expected key=value, got {token!r}", lineno, column)
        if key not in DIHEDRAL_SLOTS:
            raise ParseError(f"unknown key {key!r}", lineno, column)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno, column)
        try:
            value = float(raw)
        except ValueError:
            raise ParseError(f"malformed number {raw!r} for {key}", lineno, column) from None
        if not math.isfinite(value):
            raise ParseError(f"non-finite value for {key}", lineno, column)
        values[key] = value
        column += len(token) + 1
    for required in ("phi", "psi"):
        if required not in values:
            raise ParseError(f"missing {required}", lineno)
    return index, values


def read_angles(text: str) -> FullAtomAngles:
    residues: list[ResidueAngles] = []
    seen: set[int] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        index, values = _parse_line(line, lineno)
        if index in seen:
            raise ParseError(f"duplicate residue index {index}", lineno, 1)
        if index != len(residues):
            raise ParseError(
                f"residue index {index} out of order, expected {len(residues)}", lineno, 1
            )
        seen.add(index)
        residues.append(ResidueAngles(**values))
    return FullAtomAngles(residues=residues)
