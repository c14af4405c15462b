"""
Fixed-column PDB (v3.3) ATOM records. Only what structure inspection needs:
one model, no alternate locations, no insertion codes.
"""

import math

import structlog

from protkin.errors import FormatError, InputError, ParseError
from protkin.models import AtomicCoordinates
from protkin.structio.models import AtomRecord

log = structlog.get_logger(__name__)

DEFAULT_CHAIN = "A"
OCCUPANCY = 1.00
TEMP_FACTOR = 0.00
RECORD_WIDTH = 80

# 0-based [start, stop) columns of the ATOM fields that are read back
SERIAL = (6, 11)
NAME = (12, 16)
RESIDUE = (17, 20)
CHAIN = (21, 22)
RESIDUE_SEQ = (22, 26)
X, Y, Z = (30, 38), (38, 46), (46, 54)


def atom_records(coords: AtomicCoordinates, chain_id: str = DEFAULT_CHAIN) -> list[AtomRecord]:
    """Metadata for every atom; residues numbered from 1 in order of appearance."""
    seq_of: dict[int, int] = {}
    records: list[AtomRecord] = []
    for i, (pos, name, res, code) in enumerate(
        zip(
            coords.positions.tolist(),
            coords.atom_names,
            coords.residue_indices,
            coords.residue_codes,
        )
    ):
        seq = seq_of.setdefault(res, len(seq_of) + 1)
        records.append(
            AtomRecord(
                serial=i + 1,
                atom_name=name,
                residue_code=code,
                chain_id=chain_id,
                residue_seq=seq,
                position=(pos[0], pos[1], pos[2]),
            )
        )
    return records


def _name_field(name: str) -> str:
    # names shorter than four characters start in column 14
    return f" {name:<3}" if len(name) < 4 else name


def _fixed(value: float | int, spec: str, width: int, what: str, serial: int) -> str:
    text = format(value, spec)
    if len(text) > width:
        raise FormatError(f"atom {serial}: {what} {text} does not fit in {width} columns")
    return text


def format_atom(record: AtomRecord) -> str:
    serial = record.serial
    if not all(math.isfinite(v) for v in record.position):
        raise FormatError(f"atom {serial}: non-finite coordinate {record.position}")
    x, y, z = (_fixed(v, "8.3f", 8, "coordinate", serial) for v in record.position)
    return (
        f"ATOM  {_fixed(serial, '5d', 5, 'serial', serial)} "
        f"{_name_field(record.atom_name)} {record.residue_code:>3} {record.chain_id}"
        f"{_fixed(record.residue_seq, '4d', 4, 'residue number', serial)}    "
        f"{x}{y}{z}{OCCUPANCY:6.2f}{TEMP_FACTOR:6.2f}          {record.element:>2}"
    )


def format_records(records: list[AtomRecord]) -> str:
    lines = [format_atom(r) for r in records]
    if records:
        last = records[-1]
        lines.append(
            f"TER   {last.serial + 1:5d}      {last.residue_code:>3} {last.chain_id}"
            f"{last.residue_seq:4d}"
        )
    lines.append("END")
    return "\n".join(lines) + "\n"


def write_pdb(coords: AtomicCoordinates, chain_id: str = DEFAULT_CHAIN) -> str:
    text = format_records(atom_records(coords, chain_id))
    log.debug("formatted pdb", atoms=len(coords))
    return text


def _field(line: str, cols: tuple[int, int]) -> str:
    return line[cols[0] : cols[1]]


def _number(line: str, lineno: int, cols: tuple[int, int], kind: type[int] | type[float]) -> float:
    raw = _field(line, cols).strip()
    try:
        value = kind(raw)
    except ValueError:
        raise ParseError(f"malformed number {raw!r}", lineno, cols[0] + 1) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite number {raw!r}", lineno, cols[0] + 1)
    return value


def read_pdb(text: str) -> tuple[AtomicCoordinates, list[AtomRecord]]:
    """Parse ATOM records by column; every other record type is skipped."""
    records: list[AtomRecord] = []
    residue_index: dict[tuple[str, int], int] = {}
    indices: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.startswith("ATOM  "):
            continue
        line = raw.ljust(RECORD_WIDTH)
        serial = int(_number(line, lineno, SERIAL, int))
        seq = int(_number(line, lineno, RESIDUE_SEQ, int))
        position = (
            _number(line, lineno, X, float),
            _number(line, lineno, Y, float),
            _number(line, lineno, Z, float),
        )
        name = _field(line, NAME).strip()
        if not name:
            raise ParseError("blank atom name", lineno, NAME[0] + 1)
        chain = _field(line, CHAIN).strip() or DEFAULT_CHAIN
        try:
            record = AtomRecord(
                serial=serial,
                atom_name=name,
                residue_code=_field(line, RESIDUE).strip() or "UNK",
                chain_id=chain,
                residue_seq=seq,
                position=position,
            )
        except ValueError as e:
            raise ParseError(str(e), lineno) from None
        records.append(record)
        indices.append(residue_index.setdefault((chain, seq), len(residue_index)))

    if not records:
        raise InputError("no ATOM records found")
    coords = AtomicCoordinates(
        positions=[r.position for r in records],
        atom_names=[r.atom_name for r in records],
        residue_indices=indices,
        residue_codes=[r.residue_code for r in records],
    )
    return coords, records
