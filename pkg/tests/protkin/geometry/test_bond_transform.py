import math
import unittest

import numpy as np
import numpy.testing as npt

from protkin.errors import DomainError
from protkin.geometry import (
    TransformParams,
    apply_point,
    bond_transform,
    bond_transform_derivative,
    compose,
    identity,
    invert_rigid,
    is_rigid,
    point,
    rotation_x,
    rotation_y,
    translation_x,
)

ORIGIN = point(0.0, 0.0, 0.0)


def random_params(gen: np.random.Generator) -> tuple[TransformParams, float]:
    params = TransformParams(theta=gen.uniform(0.0, np.pi), d=gen.uniform(0.5, 2.0))
    return params, gen.uniform(-np.pi, np.pi)


def dihedral(p0: np.ndarray, p1: np.ndarray, p2: np.ndarray, p3: np.ndarray) -> float:
    b1, b2, b3 = p1 - p0, p2 - p1, p3 - p2
    n1, n2 = np.cross(b1, b2), np.cross(b2, b3)
    return math.atan2(np.linalg.norm(b2) * np.dot(b1, n2), np.dot(n1, n2))


class TestBondTransform(unittest.TestCase):
    def test_zero_parameters_give_identity(self):
        m = bond_transform(TransformParams(theta=0.0, d=0.0), 0.0)
        npt.assert_array_equal(m, np.eye(4))

    def test_n_ca_translation_column(self):
        theta = math.pi - 1.9391
        m = bond_transform(TransformParams(theta=theta, d=1.460), 0.7)
        npt.assert_allclose(
            m[:, 3],
            [1.460 * math.cos(theta), 0.0, -1.460 * math.sin(theta), 1.0],
            atol=1e-15,
        )

    def test_equals_factored_triple_product(self):
        gen = np.random.default_rng(1)
        for _ in range(1000):
            params, alpha = random_params(gen)
            expected = rotation_y(params.theta) @ translation_x(params.d) @ rotation_x(alpha)
            npt.assert_allclose(bond_transform(params, alpha), expected, rtol=0, atol=1e-12)

    def test_rigid_with_exact_last_row(self):
        gen = np.random.default_rng(2)
        m = identity()
        for _ in range(10_000):
            params, alpha = random_params(gen)
            m = compose(m, bond_transform(params, alpha))
        npt.assert_array_equal(m[3], [0.0, 0.0, 0.0, 1.0])
        rot = m[:3, :3]
        npt.assert_allclose(rot.T @ rot, np.eye(3), atol=1e-9)
        self.assertAlmostEqual(float(np.linalg.det(rot)), 1.0, delta=1e-9)

    def test_negative_bond_length_is_rejected(self):
        with self.assertRaises(DomainError):
            bond_transform(TransformParams(theta=1.0, d=-0.1), 0.0)

    def test_non_finite_angle_is_rejected(self):
        with self.assertRaises(DomainError):
            bond_transform(TransformParams(theta=1.0, d=1.0), float("nan"))

    def test_rotation_angle_is_the_dihedral(self):
        params = TransformParams(theta=math.pi - 2.0, d=1.5)
        for alpha in (-2.5, -0.3, 0.0, 1.1, 3.0):
            m1 = bond_transform(params, 0.4)
            m2 = m1 @ bond_transform(params, -1.2)
            m3 = m2 @ bond_transform(params, alpha)
            atoms = [ORIGIN, m1 @ ORIGIN, m2 @ ORIGIN, m3 @ ORIGIN]
            got = dihedral(*(a[:3] for a in atoms))
            self.assertAlmostEqual(math.remainder(got - (-1.2), 2 * math.pi), 0.0, delta=1e-12)
            # alpha of the last transform orients the next atom
            m4 = m3 @ bond_transform(params, 0.0)
            got = dihedral(atoms[1][:3], atoms[2][:3], atoms[3][:3], (m4 @ ORIGIN)[:3])
            self.assertAlmostEqual(math.remainder(got - alpha, 2 * math.pi), 0.0, delta=1e-12)


class TestBondTransformDerivative(unittest.TestCase):
    def test_generator_at_zero(self):
        m = bond_transform_derivative(TransformParams(theta=0.0, d=0.0), 0.0)
        expected = np.zeros((4, 4))
        expected[1, 2] = -1.0
        expected[2, 1] = 1.0
        npt.assert_allclose(m, expected, atol=1e-15)

    def test_matches_central_differences(self):
        gen = np.random.default_rng(3)
        h = 1e-6
        for _ in range(1000):
            params, alpha = random_params(gen)
            numeric = (bond_transform(params, alpha + h) - bond_transform(params, alpha - h)) / (
                2 * h
            )
            analytic = bond_transform_derivative(params, alpha)
            npt.assert_allclose(analytic, numeric, rtol=0, atol=1e-7)
            npt.assert_array_equal(analytic[3], [0.0, 0.0, 0.0, 0.0])


class TestRigidAlgebra(unittest.TestCase):
    def setUp(self):
        gen = np.random.default_rng(4)
        self.a, self.b, self.c = (bond_transform(*random_params(gen)) for _ in range(3))

    def test_identity_is_neutral(self):
        npt.assert_array_equal(compose(identity(), self.a), self.a)
        npt.assert_array_equal(apply_point(identity(), point(1.0, 2.0, 3.0)), [1, 2, 3, 1])

    def test_associative(self):
        left = compose(compose(self.a, self.b), self.c)
        right = compose(self.a, compose(self.b, self.c))
        npt.assert_allclose(left, right, atol=1e-10)

    def test_inverse_is_two_sided(self):
        npt.assert_allclose(compose(self.a, invert_rigid(self.a)), np.eye(4), atol=1e-12)
        npt.assert_allclose(compose(invert_rigid(self.a), self.a), np.eye(4), atol=1e-12)
        npt.assert_array_equal(invert_rigid(identity()), np.eye(4))

    def test_inverse_of_product(self):
        npt.assert_allclose(
            invert_rigid(compose(self.a, self.b)),
            compose(invert_rigid(self.b), invert_rigid(self.a)),
            atol=1e-10,
        )

    def test_origin_maps_to_translation_column(self):
        npt.assert_array_equal(apply_point(self.a, ORIGIN), self.a[:, 3])

    def test_distances_are_preserved(self):
        p, q = point(1.0, -2.0, 0.5), point(-3.0, 0.25, 4.0)
        before = np.linalg.norm(p - q)
        after = np.linalg.norm(apply_point(self.a, p) - apply_point(self.a, q))
        self.assertAlmostEqual(after, before, delta=1e-10)

    def test_non_rigid_matrix_is_rejected(self):
        m = np.eye(4)
        m[0, 0] = 1.1
        self.assertFalse(is_rigid(m))
        with self.assertRaises(DomainError):
            invert_rigid(m)

    def test_reflection_is_not_rigid(self):
        m = np.diag([1.0, 1.0, -1.0, 1.0])
        self.assertFalse(is_rigid(m))
