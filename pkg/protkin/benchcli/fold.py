import argparse
import os
import sys

import numpy as np
import structlog

from protkin import backbone, config, sampling
from protkin.errors import EXIT_OK, InputError
from protkin.full_atom.graph import build_graph
from protkin.full_atom.passes import fa_forward
from protkin.models import AtomicCoordinates, FullAtomAngles
from protkin.structio.angles import read_angles
from protkin.structio.pdb import write_pdb
from protkin.structio.text import read_text
from protkin.topology.library import load_default_library
from protkin.topology.models import TopologyLibrary

log = structlog.get_logger(__name__)

DEFAULT_PDB = "structure.pdb"


def add_parser(subparsers: "argparse._SubParsersAction[argparse.ArgumentParser]") -> None:
    p = subparsers.add_parser("fold", help="build a structure from dihedral angles")
    seq = p.add_mutually_exclusive_group(required=True)
    seq.add_argument("--seq", help="one-letter amino acid sequence")
    seq.add_argument("--seq-len", type=int, help="length of a random sequence")
    p.add_argument("--random-seed", type=int, default=0)
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--angles", help="angle file, one residue per line")
    source.add_argument("--random", action="store_true", help="uniform random angles")
    p.add_argument("--model", choices=["backbone", "fullatom"], default="fullatom")
    p.add_argument("--out", help=f"PDB output path (default {DEFAULT_PDB} in the output dir)")
    p.set_defaults(handler=run)


def _check_codes(sequence: str, lib: TopologyLibrary) -> list[str]:
    codes: list[str] = []
    for pos, code in enumerate(sequence):
        try:
            codes.append(lib.lookup(code).three_letter)
        except KeyError:
            raise InputError(f"unknown residue code {code!r} at position {pos}") from None
    return codes


def _backbone(
    codes: list[str], angles: FullAtomAngles | None, gen: np.random.Generator
) -> AtomicCoordinates:
    n = len(codes)
    if angles is None:
        phi = gen.uniform(-np.pi, np.pi, size=n)
        psi = gen.uniform(-np.pi, np.pi, size=n)
        omega = np.full(n, config.TRANS_OMEGA)
    else:
        if len(angles) != n:
            raise InputError(f"{len(angles)} residue angle records for a sequence of {n}")
        phi = np.array([r.phi for r in angles.residues])
        psi = np.array([r.psi for r in angles.residues])
        omega = np.array([r.omega for r in angles.residues])
    coords, _ = backbone.bb_forward_item(phi, psi, omega)
    return coords.with_residue_codes(codes)


def run(args: argparse.Namespace) -> int:
    if args.seq_len is not None and args.seq_len < 1:
        raise InputError(f"--seq-len must be positive, got {args.seq_len}")
    lib = load_default_library()
    gen = sampling.rng(args.random_seed)
    sequence = args.seq.upper() if args.seq else sampling.random_sequence(gen, args.seq_len)
    if not sequence:
        raise InputError("empty sequence")
    codes = _check_codes(sequence, lib)
    angles: FullAtomAngles | None = None
    if args.angles:
        angles = read_angles(read_text(args.angles))

    if args.model == "backbone":
        coords = _backbone(codes, angles, gen)
    else:
        # omega from an angle file drives the peptide links, as in the backbone model
        graph = build_graph(sequence, lib, variable_omega=angles is not None)
        if angles is None:
            angles = sampling.random_full_atom_angles(gen, graph)
        coords, _ = fa_forward(graph, angles)

    out = args.out or os.path.join(config.OUTPUT_DIR, DEFAULT_PDB)
    with open(out, "w", encoding="utf-8") as f:
        f.write(write_pdb(coords))
    log.info("wrote structure", path=out, model=args.model, residues=len(sequence))
    sys.stdout.write(f"{len(coords)}\n")
    return EXIT_OK
