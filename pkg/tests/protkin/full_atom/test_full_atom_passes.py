import math
import unittest

import numpy as np
import numpy.testing as npt
import pytest

from protkin.backbone import bb_forward_item
from protkin.constants import BACKBONE_ATOMS
from protkin.errors import InputError
from protkin.full_atom.graph import MoleculeGraph, build_graph
from protkin.full_atom.passes import (
    fa_backward,
    fa_backward_batch,
    fa_forward,
    fa_forward_batch,
    gradient_vector,
)
from protkin.lrmsd import lrmsd, lrmsd_gradient
from protkin.models import FullAtomAngles, ResidueAngles
from protkin.oracle import finite_difference_gradient, relative_error
from protkin.sampling import random_full_atom_angles, random_sequence, rng
from protkin.topology.library import load_default_library


def positions(graph: MoleculeGraph, values: np.ndarray) -> np.ndarray:
    coords, _ = fa_forward(graph, graph.unflatten(values))
    return np.asarray(coords.positions)


def atom(coords: np.ndarray, graph: MoleculeGraph, residue: int, name: str) -> np.ndarray:
    for i, (r, n) in enumerate(zip(graph.atom_residues, graph.atom_names)):
        if r == residue and n == name:
            return coords[i]
    raise KeyError(name)


class TestForward(unittest.TestCase):
    def setUp(self):
        self.lib = load_default_library()

    def test_glycine_at_zero_angles_has_n_at_origin(self):
        graph = build_graph("G", self.lib)
        coords, _ = fa_forward(graph, FullAtomAngles(residues=[ResidueAngles(phi=0, psi=0)]))
        npt.assert_array_equal(coords.positions[0], [0.0, 0.0, 0.0])
        self.assertEqual(coords.atom_names[0], "N")
        self.assertEqual(coords.residue_codes, ["GLY"] * 4)

    def test_threonine_groups_move_rigidly(self):
        graph = build_graph("T", self.lib)
        gen = rng(7)
        cg2 = np.linalg.norm([0.510725, -1.249018, 0.721121])
        for _ in range(20):
            coords, _ = fa_forward(graph, random_full_atom_angles(gen, graph))
            pos = np.asarray(coords.positions)
            cb = atom(pos, graph, 0, "CB")
            bond = float(np.linalg.norm(atom(pos, graph, 0, "OG1") - cb))
            self.assertAlmostEqual(bond, 1.42, delta=1e-9)
            bond = float(np.linalg.norm(atom(pos, graph, 0, "CG2") - cb))
            self.assertAlmostEqual(bond, cg2, delta=1e-9)

    def test_intra_group_distances_match_standard_frames(self):
        gen = rng(8)
        for _ in range(100):
            graph = build_graph(random_sequence(gen, int(gen.integers(1, 21))), self.lib)
            coords, _ = fa_forward(graph, random_full_atom_angles(gen, graph))
            pos = np.asarray(coords.positions)
            for node in graph.nodes:
                sl = slice(node.atom_start, node.atom_stop)
                got = np.linalg.norm(pos[sl, None] - pos[None, sl], axis=-1)
                std = graph.standard[sl, :3]
                want = np.linalg.norm(std[:, None] - std[None, :], axis=-1)
                npt.assert_allclose(got, want, rtol=0, atol=1e-9)

    def test_n_ca_bond_length(self):
        gen = rng(9)
        graph = build_graph(random_sequence(gen, 15), self.lib)
        coords, _ = fa_forward(graph, random_full_atom_angles(gen, graph))
        pos = np.asarray(coords.positions)
        for j in range(15):
            d = np.linalg.norm(atom(pos, graph, j, "CA") - atom(pos, graph, j, "N"))
            self.assertAlmostEqual(float(d), 1.460, delta=1e-9)

    def test_side_chains_are_l_amino_acids(self):
        seq = "ACDEFHIKLMNPQRSTVWY"
        gen = rng(10)
        graph = build_graph(seq, self.lib)
        for _ in range(5):
            coords, _ = fa_forward(graph, random_full_atom_angles(gen, graph))
            pos = np.asarray(coords.positions)
            for j in range(len(seq)):
                ca = atom(pos, graph, j, "CA")
                n, c, cb = (atom(pos, graph, j, a) - ca for a in ("N", "C", "CB"))
                self.assertGreater(float(np.dot(np.cross(n, c), cb)), 0.0, seq[j])

    def test_backbone_atoms_match_the_backbone_model(self):
        gen = rng(11)
        for length in (1, 2, 10, 50, 100, 100, 30, 7, 64, 99):
            graph = build_graph("G" * length, self.lib)
            phi = gen.uniform(-math.pi, math.pi, size=length)
            psi = gen.uniform(-math.pi, math.pi, size=length)
            angles = FullAtomAngles(
                residues=[ResidueAngles(phi=a, psi=b) for a, b in zip(phi, psi)]
            )
            full, _ = fa_forward(graph, angles)
            reduced, _ = bb_forward_item(phi, psi)
            npt.assert_allclose(
                full.select(BACKBONE_ATOMS).positions, reduced.positions, rtol=0, atol=1e-9
            )

    def test_saved_state_is_read_only(self):
        graph = build_graph("AG", self.lib)
        _, saved = fa_forward(graph, random_full_atom_angles(rng(12), graph))
        with self.assertRaises(ValueError):
            saved.transforms[0, 0, 0] = 2.0

    def test_deterministic(self):
        graph = build_graph("HEY", self.lib)
        angles = random_full_atom_angles(rng(13), graph)
        a, _ = fa_forward(graph, angles)
        b, _ = fa_forward(graph, angles)
        npt.assert_array_equal(a.positions, b.positions)


class TestBackward(unittest.TestCase):
    def setUp(self):
        self.lib = load_default_library()

    def _check(self, graph: MoleculeGraph, values: np.ndarray, weights: np.ndarray) -> float:
        _, saved = fa_forward(graph, graph.unflatten(values))
        grad = 2.0 * positions(graph, values) + weights
        analytic = gradient_vector(graph, fa_backward(saved, grad))
        numeric = finite_difference_gradient(
            lambda v: float(np.sum(positions(graph, v) ** 2 + weights * positions(graph, v))),
            values,
        )
        return relative_error(analytic, numeric)

    def test_zero_loss_gradient(self):
        graph = build_graph("RW", self.lib)
        _, saved = fa_forward(graph, random_full_atom_angles(rng(14), graph))
        grad = gradient_vector(graph, fa_backward(saved, np.zeros((graph.atom_count, 3))))
        npt.assert_array_equal(grad, np.zeros(len(graph.variables)))

    def test_matches_finite_differences(self):
        gen = rng(15)
        for length in (1, 3, 6):
            graph = build_graph(random_sequence(gen, length), self.lib)
            values = graph.flatten(random_full_atom_angles(gen, graph))
            weights = gen.normal(size=(graph.atom_count, 3))
            self.assertLess(self._check(graph, values, weights), 1e-5)

    def test_variable_omega_matches_finite_differences(self):
        gen = rng(16)
        graph = build_graph("SPKD", self.lib, variable_omega=True)
        values = graph.flatten(random_full_atom_angles(gen, graph))
        weights = gen.normal(size=(graph.atom_count, 3))
        self.assertLess(self._check(graph, values, weights), 1e-5)
        self.assertEqual(sum(v.slot == "omega" for v in graph.variables), 3)

    def test_lrmsd_loss_matches_finite_differences(self):
        gen = rng(17)
        graph = build_graph("YQT", self.lib)
        values = graph.flatten(random_full_atom_angles(gen, graph))
        target = gen.normal(scale=4.0, size=(graph.atom_count, 3))
        coords = positions(graph, values)
        _, alignment = lrmsd(coords, target)
        _, saved = fa_forward(graph, graph.unflatten(values))
        analytic = gradient_vector(
            graph, fa_backward(saved, lrmsd_gradient(coords, target, alignment))
        )
        numeric = finite_difference_gradient(
            lambda v: lrmsd(positions(graph, v), target)[0], values
        )
        self.assertLess(relative_error(analytic, numeric), 1e-5)

    def test_upstream_loss_gives_zero_downstream_gradients(self):
        gen = rng(18)
        graph = build_graph("KRTE", self.lib)
        _, saved = fa_forward(graph, random_full_atom_angles(gen, graph))
        grad = np.zeros((graph.atom_count, 3))
        first = [i for i, r in enumerate(graph.atom_residues) if r == 0]
        grad[first] = gen.normal(size=(len(first), 3))
        result = fa_backward(saved, grad)
        for res in result.residues[1:]:
            for slot in ("phi", "psi", "chi1", "chi2", "chi3", "chi4"):
                self.assertIn(res.get(slot), (0.0, None))
        self.assertNotEqual(result.residues[0].psi, 0.0)

    def test_gradient_shape_is_checked(self):
        graph = build_graph("A", self.lib)
        _, saved = fa_forward(graph, random_full_atom_angles(rng(19), graph))
        with self.assertRaises(InputError):
            fa_backward(saved, np.zeros((3, 3)))

    def test_batch_matches_single_items(self):
        gen = rng(20)
        graphs = [build_graph(random_sequence(gen, 4), self.lib) for _ in range(3)]
        angles = [random_full_atom_angles(gen, g) for g in graphs]
        grads = [gen.normal(size=(g.atom_count, 3)) for g in graphs]
        results = fa_forward_batch(graphs, angles, threads=2)
        batched = fa_backward_batch([s for _, s in results], grads, threads=2)
        for g, a, d, b in zip(graphs, angles, grads, batched):
            _, saved = fa_forward(g, a)
            npt.assert_array_equal(
                gradient_vector(g, b), gradient_vector(g, fa_backward(saved, d))
            )


@pytest.mark.integration
class TestAcceptanceGradients(unittest.TestCase):
    def test_random_chains_up_to_thirty_residues(self):
        gen = rng(21)
        lib = load_default_library()
        for _ in range(100):
            graph = build_graph(random_sequence(gen, int(gen.integers(1, 31))), lib)
            values = graph.flatten(random_full_atom_angles(gen, graph))
            _, saved = fa_forward(graph, graph.unflatten(values))
            analytic = gradient_vector(graph, fa_backward(saved, 2.0 * positions(graph, values)))
            numeric = finite_difference_gradient(
                lambda v, g=graph: float(np.sum(positions(g, v) ** 2)), values
            )
            self.assertLess(relative_error(analytic, numeric), 1e-5)
