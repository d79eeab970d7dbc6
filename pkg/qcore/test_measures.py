import unittest

import numpy as np

from qcore.channels import MixingChannel, apply_channel
from qcore.eigen import top_eigenpair
from qcore.layout import RegisterLayout
from qcore.measures import fidelity, trace_distance
from qcore.states import DensityOperator, HermitianOperator, StateVector, partial_trace
from utils.common import LayoutError, NumericalError
from utils.rng import random_density_matrix, random_state_vector

QUBIT = RegisterLayout.of(("A", 2))


def pure(layout, vec):
    return StateVector(layout, np.asarray(vec, dtype=complex) / np.linalg.norm(vec)).density()


class TestTraceDistance(unittest.TestCase):
    def test_orthogonal(self):
        self.assertAlmostEqual(trace_distance(pure(QUBIT, [1, 0]), pure(QUBIT, [0, 1])), 1.0)

    def test_identical(self):
        rho = DensityOperator(QUBIT, random_density_matrix(2, np.random.default_rng(0)))
        self.assertAlmostEqual(trace_distance(rho, rho), 0.0)

    def test_zero_plus(self):
        self.assertAlmostEqual(trace_distance(pure(QUBIT, [1, 0]), pure(QUBIT, [1, 1])), np.sqrt(0.5))

    def test_layout_mismatch(self):
        other = DensityOperator.maximally_mixed(RegisterLayout.of(("B", 3)))
        with self.assertRaises(LayoutError):
            trace_distance(DensityOperator.maximally_mixed(QUBIT), other)

    def test_contractive_under_partial_trace(self):
        rng = np.random.default_rng(5)
        layout = RegisterLayout.of(("A", 2), ("B", 3))
        for _ in range(50):
            rho = DensityOperator(layout, random_density_matrix(6, rng))
            sigma = DensityOperator(layout, random_density_matrix(6, rng))
            reduced = trace_distance(partial_trace(rho, ["A"]), partial_trace(sigma, ["A"]))
            self.assertLessEqual(reduced, trace_distance(rho, sigma) + 1e-9)

    def test_bounds_distinguishing_advantage(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            rho = DensityOperator(QUBIT.concat(RegisterLayout.of(("B", 2))), random_density_matrix(4, rng))
            sigma = DensityOperator(rho.layout, random_density_matrix(4, rng))
            u = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
            m = HermitianOperator(rho.layout, (u * rng.random(4)) @ u.conj().T)
            gap = abs(m.expectation(rho) - m.expectation(sigma))
            self.assertLessEqual(gap, trace_distance(rho, sigma) + 1e-9)


class TestFidelity(unittest.TestCase):
    def test_identical(self):
        rho = DensityOperator(QUBIT, random_density_matrix(2, np.random.default_rng(1)))
        self.assertAlmostEqual(fidelity(rho, rho), 1.0, places=9)

    def test_orthogonal(self):
        self.assertAlmostEqual(fidelity(pure(QUBIT, [1, 0]), pure(QUBIT, [0, 1])), 0.0)

    def test_pure_overlap(self):
        rng = np.random.default_rng(2)
        for trial in range(300):
            d = 2 + trial % 3
            a, b = random_state_vector(d, rng), random_state_vector(d, rng)
            layout = RegisterLayout.of(("A", d))
            self.assertAlmostEqual(fidelity(pure(layout, a), pure(layout, b)), abs(np.vdot(a, b)), delta=1e-9)

    def test_pure_against_mixed(self):
        rng = np.random.default_rng(3)
        layout = RegisterLayout.of(("A", 3))
        for _ in range(50):
            a = random_state_vector(3, rng)
            sigma = random_density_matrix(3, rng)
            expected = np.sqrt(max(0.0, np.vdot(a, sigma @ a).real))
            self.assertAlmostEqual(fidelity(pure(layout, a), DensityOperator(layout, sigma)), expected, delta=1e-9)

    def test_fuchs_van_de_graaf(self):
        rng = np.random.default_rng(4)
        layout = RegisterLayout.of(("A", 3))
        for trial in range(200):
            rank = 1 + trial % 3
            rho = DensityOperator(layout, random_density_matrix(3, rng, mixture=rank))
            sigma = DensityOperator(layout, random_density_matrix(3, rng))
            f, d = fidelity(rho, sigma), trace_distance(rho, sigma)
            self.assertLessEqual(1 - f, d + 1e-9)
            self.assertLessEqual(d, np.sqrt(max(0.0, 1 - f * f)) + 1e-9)


class TestApplyChannel(unittest.TestCase):
    def setUp(self):
        self.layout = RegisterLayout.of(("A", 2), ("B", 2))
        swap = np.eye(4)[[0, 2, 1, 3]]
        self.channel = MixingChannel(self.layout, ((0.5, np.eye(4)), (0.5, swap)))

    def test_identity_channel(self):
        rho = DensityOperator(self.layout, random_density_matrix(4, np.random.default_rng(0)))
        ident = MixingChannel(self.layout, ((1.0, np.eye(4)),))
        np.testing.assert_allclose(apply_channel(ident, rho).matrix, rho.matrix, atol=1e-12)

    def test_half_swap(self):
        out = apply_channel(self.channel, pure(self.layout, [0, 1, 0, 0]))
        np.testing.assert_allclose(out.matrix, np.diag([0, 0.5, 0.5, 0]), atol=1e-12)

    def test_adjoint_duality(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            rho = DensityOperator(self.layout, random_density_matrix(4, rng))
            m = random_density_matrix(4, rng)
            lhs = np.trace(m @ apply_channel(self.channel, rho).matrix)
            rhs = np.trace(self.channel.act_adjoint(m, [2, 2], [0, 1]) @ rho.matrix)
            self.assertAlmostEqual(lhs.real, rhs.real, places=9)
        self.assertTrue(self.channel.is_self_adjoint())

    def test_rejects_bad_probabilities(self):
        with self.assertRaises(NumericalError):
            MixingChannel(self.layout, ((0.6, np.eye(4)), (0.6, np.eye(4))))

    def test_rejects_non_unitary(self):
        with self.assertRaises(NumericalError):
            MixingChannel(self.layout, ((1.0, 2 * np.eye(4)),))


class TestTopEigenpair(unittest.TestCase):
    def test_diagonal(self):
        value, vec = top_eigenpair(HermitianOperator(QUBIT, np.diag([0.2, 0.9])))
        self.assertAlmostEqual(value, 0.9)
        self.assertAlmostEqual(abs(vec.amplitudes[1]), 1.0)

    def test_identity(self):
        value, vec = top_eigenpair(HermitianOperator.identity(RegisterLayout.of(("A", 5))))
        self.assertAlmostEqual(value, 1.0)
        self.assertAlmostEqual(np.linalg.norm(vec.amplitudes), 1.0)

    def test_non_hermitian(self):
        with self.assertRaises(NumericalError):
            HermitianOperator(QUBIT, np.array([[0, 1], [0, 0]]))

    def test_random_vectors_stay_below(self):
        rng = np.random.default_rng(10)
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        op = HermitianOperator(RegisterLayout.of(("A", 4)), (g + g.conj().T) / 2)
        value, _ = top_eigenpair(op)
        vs = rng.normal(size=(10 ** 4, 4)) + 1j * rng.normal(size=(10 ** 4, 4))
        vs /= np.linalg.norm(vs, axis=1, keepdims=True)
        best = np.max(np.einsum("ni,ij,nj->n", vs.conj(), op.matrix, vs).real)
        self.assertLessEqual(best, value + 1e-9)
        self.assertGreater(best, value - 0.5)


if __name__ == "__main__":
    unittest.main()
