import json
import unittest

import numpy as np
from scipy.stats import unitary_group

from adversary.attacks import (classical_fooling_attack, entangled_no_proof_attack, prefix_bits_family,
                               separable_cut_paste_attack)
from adversary.dma import ClassicalDmaProtocol, truncated_eq_dma
from adversary.strategies import (ProverStrategy, SeeSawOptions, StrategyKind, honest_proof, node_grouping,
                                  optimal_entangled_value, optimal_separable_value)
from fingerprint.scheme import FingerprintScheme
from network.compiler import compile
from network.sampler import simulate_sampled
from protocols.eq import EqPathParams, build_eq_path
from protocols.gt import GtParams, build_gt
from qcore.layout import Register, RegisterLayout
from qcore.states import HermitianOperator, StateVector
from utils.bits import all_bitstrings
from utils.common import LayoutError, ProtocolError
from utils.rng import random_state_vector

H1 = FingerprintScheme.hadamard(1)
H2 = FingerprintScheme.hadamard(2)


def eq_model(r=2, x="01", y="01", k=1, scheme=H2):
    return compile(build_eq_path(EqPathParams(r, scheme, x, y, k)))


def eq_fooling(n):
    return [(x, x) for x in all_bitstrings(n)]


def equal(x, y):
    return x == y


class TestStrategies(unittest.TestCase):
    def test_honest(self):
        model = eq_model(r=3)
        self.assertAlmostEqual(model.accept_probability(honest_proof(model.pipeline)), 1.0, places=9)

    def test_honest_missing(self):
        pipeline = build_gt(GtParams(2, H2, 1, 2, 2, index=1))
        with self.assertRaises(ProtocolError):
            honest_proof(pipeline)

    def test_entangled_yes_instance(self):
        value, vec = optimal_entangled_value(eq_model())
        self.assertAlmostEqual(value, 1.0, places=9)
        self.assertAlmostEqual(eq_model().accept_probability(vec), 1.0, places=9)

    def test_entangled_no_instance(self):
        value, _ = optimal_entangled_value(eq_model(x="01", y="10"))
        self.assertLessEqual(value, 1 - 1 / 81 + 1e-9)

    def test_tensor_power(self):
        single, _ = optimal_entangled_value(eq_model(x="00", y="11"))
        double, _ = optimal_entangled_value(eq_model(x="00", y="11", k=2))
        self.assertAlmostEqual(double, single ** 2, delta=1e-8)

    def test_brute_force_never_beats_eigenvalue(self):
        model = eq_model(x="00", y="10")
        value, _ = optimal_entangled_value(model)
        rng = np.random.default_rng(0)
        dims = model.proof_layout.dims
        best = 0.0
        for _ in range(2000):
            entangled = StateVector(model.proof_layout, random_state_vector(model.proof_dimension, rng))
            amps = np.ones(1, dtype=complex)
            for d in dims:
                amps = np.kron(amps, random_state_vector(d, rng))
            product = StateVector(model.proof_layout, amps)
            best = max(best, model.accept_probability(entangled), model.accept_probability(product))
        self.assertLessEqual(best, value + 1e-9)

    def test_separable_yes_instance(self):
        result = optimal_separable_value(eq_model(r=3), options=SeeSawOptions(restarts=2))
        self.assertAlmostEqual(result.value, 1.0, places=8)
        self.assertEqual(len(result.grouping), 2)

    def test_separable_product_operator(self):
        rng = np.random.default_rng(4)
        layout = RegisterLayout((Register("A", 2, "u"), Register("B", 3, "w")))
        factors = []
        for d in (2, 3):
            u = unitary_group.rvs(d, random_state=rng)
            factors.append(u @ np.diag(rng.uniform(0, 1, size=d)) @ u.conj().T)
        op = HermitianOperator(layout, np.kron(factors[0], factors[1]))
        expected = np.prod([np.linalg.eigvalsh(f)[-1] for f in factors])
        result = optimal_separable_value(op, options=SeeSawOptions(restarts=4))
        self.assertAlmostEqual(result.value, expected, places=7)
        self.assertEqual(node_grouping(layout), [["A"], ["B"]])

    def test_separable_below_entangled(self):
        model = eq_model(r=3, x="01", y="11")
        entangled, _ = optimal_entangled_value(model)
        result = optimal_separable_value(model, options=SeeSawOptions(restarts=4, seed=2))
        self.assertLessEqual(result.value, entangled + 1e-9)
        self.assertAlmostEqual(model.accept_probability(result.state()), result.value, places=8)

    def test_seesaw_deterministic(self):
        model = eq_model(r=3, x="01", y="11")
        options = SeeSawOptions(restarts=3, seed=7, threads=3)
        first = optimal_separable_value(model, options=options)
        second = optimal_separable_value(model, options=SeeSawOptions(restarts=3, seed=7))
        self.assertEqual(first.restart_values, second.restart_values)

    def test_bad_grouping(self):
        with self.assertRaises(LayoutError):
            optimal_separable_value(eq_model(r=3), grouping=[["R1,0"]])

    def test_strategy_kinds(self):
        model = eq_model()
        self.assertAlmostEqual(model.accept_probability(ProverStrategy(StrategyKind.HONEST).proof(model)), 1.0)
        wrong = StateVector(RegisterLayout.of(("A", 2)), np.array([1, 0]))
        with self.assertRaises(LayoutError):
            ProverStrategy(StrategyKind.EXPLICIT, state=wrong).proof(model)
        with self.assertRaises(ProtocolError):
            ProverStrategy(StrategyKind.ATTACK, attack="classical_fooling").proof(model)


class TestClassicalDma(unittest.TestCase):
    def test_truncated_complete(self):
        p = truncated_eq_dma(3, 4, 2)
        self.assertEqual(p.proof_bits, (0, 2, 0, 2, 0))
        self.assertEqual(p.completeness(), 1.0)
        self.assertEqual(p.best_proof("101", "100")[0], 1.0)

    def test_full_proofs_sound(self):
        self.assertEqual(truncated_eq_dma(2, 2, 2).soundness(), 0.0)

    def test_dp_matches_enumeration(self):
        rng = np.random.default_rng(1)
        cache = {}

        def node_accept(j, local, left, own, right):
            return cache.setdefault((j, local, left, own, right), float(rng.uniform()))

        p = ClassicalDmaProtocol("random", 3, 1, (1, 1, 2, 0), node_accept)
        for j in range(4):
            p.table(j)
        for x in ("0", "1"):
            for y in ("0", "1"):
                brute = max(p.accept_probability(x, y, w) for w in p.assignments())
                self.assertAlmostEqual(p.best_proof(x, y)[0], brute, places=12)

    def test_invalid_decision(self):
        p = ClassicalDmaProtocol("bad", 1, 1, (0, 0), lambda *view: 2.0)
        with self.assertRaises(ProtocolError):
            p.accept_probability("0", "0", ("", ""))


class TestAttacks(unittest.TestCase):
    def test_classical_fooling(self):
        result = classical_fooling_attack(truncated_eq_dma(3, 4, 2), equal, eq_fooling(3))
        self.assertEqual(result.status, "applied")
        self.assertTrue(result.pair_found)
        self.assertEqual(result.accept_prob, 1.0)
        self.assertTrue(result.meets_reference)
        x, y = result.witness["no_instance"]
        self.assertNotEqual(x, y)
        self.assertEqual(set(result.to_dict()),
                         {"attack", "cut_index", "pair_found", "accept_prob", "reference_line", "witness", "status"})
        json.loads(result.to_json())

    def test_classical_full_proofs(self):
        result = classical_fooling_attack(truncated_eq_dma(3, 4, 3), equal, eq_fooling(3))
        self.assertEqual(result.status, "not_applicable")

    def test_cut_paste_tiny_proofs(self):
        result = separable_cut_paste_attack(prefix_bits_family(3, H1, 1), equal, eq_fooling(3), 1, 0.5, threads=2)
        self.assertTrue(result.pair_found)
        self.assertTrue(result.meets_reference)
        stats = simulate_sampled(result.target, result.proof, shots=100000, seed=3)
        self.assertTrue(stats.agrees_with(result.accept_prob, sigmas=3))

    def test_cut_paste_orthogonal_proofs(self):
        def family(x, y):
            return build_eq_path(EqPathParams(3, H2, x, y))

        result = separable_cut_paste_attack(family, equal, eq_fooling(2), 1, 0.5)
        self.assertEqual(result.status, "no_pair")
        vacuous = separable_cut_paste_attack(family, equal, eq_fooling(2), 1, 3.0)
        self.assertTrue(vacuous.pair_found)
        self.assertLess(vacuous.reference_line, 0)
        self.assertTrue(vacuous.meets_reference)

    def test_entangled_no_proof(self):
        def family(x, y):
            return build_eq_path(EqPathParams(5, H1, x, y, gap=2))

        result = entangled_no_proof_attack(family, equal, eq_fooling(1), 2)
        self.assertEqual(result.status, "applied")
        self.assertAlmostEqual(result.accept_prob, 1.0, places=9)
        self.assertAlmostEqual(result.reference_line, 1.0, places=9)
        stats = simulate_sampled(result.target, result.proof, shots=100000, seed=4)
        self.assertTrue(stats.agrees_with(result.accept_prob, sigmas=3))

    def test_entangled_needs_gap(self):
        def family(x, y):
            return build_eq_path(EqPathParams(5, H1, x, y))

        result = entangled_no_proof_attack(family, equal, eq_fooling(1), 2)
        self.assertEqual(result.status, "not_applicable")


if __name__ == '__main__':
    unittest.main()
