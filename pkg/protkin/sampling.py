"""Seeded random inputs for tests, gradient checks and benchmarks."""

import numpy as np
from scipy.spatial.transform import Rotation

from protkin.constants import STANDARD_RESIDUES
from protkin.full_atom.graph import MoleculeGraph
from protkin.models import BackboneAngles, FullAtomAngles


def rng(seed: int | None) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_sequence(
    gen: np.random.Generator, length: int, alphabet: str = STANDARD_RESIDUES
) -> str:
    return "".join(gen.choice(list(alphabet), size=length).tolist())


def random_full_atom_angles(gen: np.random.Generator, graph: MoleculeGraph) -> FullAtomAngles:
    """Uniform angles in [-pi, pi) for every variable angle of graph."""
    values = gen.uniform(-np.pi, np.pi, size=len(graph.variables))
    return graph.unflatten(values)


def random_backbone_angles(
    gen: np.random.Generator, lengths: list[int], omega: float = np.pi
) -> BackboneAngles:
    phis = [gen.uniform(-np.pi, np.pi, size=n) for n in lengths]
    psis = [gen.uniform(-np.pi, np.pi, size=n) for n in lengths]
    omegas = [np.full(n, omega) for n in lengths]
    return BackboneAngles.from_items(phis, psis, omegas)


def random_rotation(gen: np.random.Generator) -> np.ndarray:
    q = gen.normal(size=4)
    return Rotation.from_quat(q / np.linalg.norm(q)).as_matrix()


def random_rigid_motion(
    gen: np.random.Generator, max_shift: float = 10.0
) -> tuple[np.ndarray, np.ndarray]:
    return random_rotation(gen), gen.uniform(-max_shift, max_shift, size=3)
