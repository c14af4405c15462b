import argparse
import sys

import numpy as np
import structlog

from protkin import lrmsd
from protkin.errors import EXIT_OK, InputError
from protkin.models import AtomicCoordinates
from protkin.oracle import brute_force_lrmsd
from protkin.structio.pdb import read_pdb, write_pdb
from protkin.structio.text import read_text

log = structlog.get_logger(__name__)

GRADIENT_HEADER = "protkin lrmsd gradient v1: dLRMSD/dx per atom of the first structure"


def add_parser(subparsers: "argparse._SubParsersAction[argparse.ArgumentParser]") -> None:
    p = subparsers.add_parser("rmsd", help="least RMSD between two PDB files")
    p.add_argument("pdb_a")
    p.add_argument("pdb_b")
    p.add_argument("--grad", help="write the per-atom gradient with respect to pdb_a")
    p.add_argument("--superposed", help="write pdb_b rigidly moved onto pdb_a as a PDB file")
    p.add_argument(
        "--brute-force",
        action="store_true",
        help="also minimize over a rotation grid and print that value",
    )
    p.set_defaults(handler=run)


def _read(path: str) -> tuple[AtomicCoordinates, str]:
    coords, records = read_pdb(read_text(path))
    return coords, records[0].chain_id


def run(args: argparse.Namespace) -> int:
    (a, _), (b, chain_b) = _read(args.pdb_a), _read(args.pdb_b)
    x = np.asarray(a.positions, dtype=np.float64)
    y = np.asarray(b.positions, dtype=np.float64)
    if len(x) != len(y):
        raise InputError(f"atom counts differ: {len(x)} in {args.pdb_a}, {len(y)} in {args.pdb_b}")
    value, alignment = lrmsd.lrmsd(x, y)
    sys.stdout.write(f"{value:.6f}\n")
    if args.brute_force:
        sys.stdout.write(f"brute_force={brute_force_lrmsd(x, y):.6f}\n")
    if args.grad:
        grad = lrmsd.lrmsd_gradient(x, y, alignment)
        np.savetxt(args.grad, grad, fmt="%.17g", header=GRADIENT_HEADER)
        log.info("wrote lrmsd gradient", path=args.grad, atoms=len(grad))
    if args.superposed:
        moved = b.model_copy(update={"positions": lrmsd.superpose(x, y, alignment)})
        with open(args.superposed, "w", encoding="utf-8") as f:
            f.write(write_pdb(moved, chain_id=chain_b))
        log.info("wrote superposed structure", path=args.superposed, atoms=len(moved))
    return EXIT_OK
