import unittest

import networkx as nx
import numpy as np
from numpy.testing import assert_allclose

from fingerprint.scheme import FingerprintScheme
from network.compiler import compile, compile_factored, per_node_rejection, restrict_proof
from network.pipeline import ClassicalGuard, LocalTest, PreparedState, ProtocolPipeline, split_components
from network.sampler import simulate_sampled
from network.topology import Topology, TopologyKind, path_topology, spanning_tree, star_topology
from protocols.eq import EqPathParams, build_eq_path
from qcore.eigen import top_eigenpair
from qcore.layout import Register, RegisterLayout, Role
from qcore.states import StateVector
from swaptest.acceptance import swap_test_element
from utils.common import DimensionCapError, LayoutError, ProtocolError, dim_cap
from utils.rng import random_state_vector


def eq_path(r=2, n=1, x="0", y="0", k=1):
    return build_eq_path(EqPathParams(r, FingerprintScheme.hadamard(n), x, y, k))


def zero_vector(d=2):
    v = np.zeros(d, dtype=complex)
    v[0] = 1
    return v


def swap_against_zero():
    """v1 SWAP-tests a proof qubit against its own |0⟩."""
    layout = RegisterLayout((Register("P", 2, "v1"), Register("Z", 2, "v1", Role.PREPARED)))
    return ProtocolPipeline(
        name="swap0",
        layout=layout,
        nodes=("v0", "v1"),
        prepared=(PreparedState("Z", zero_vector()),),
        tests=(LocalTest("v1", ("P", "Z"), swap_test_element(2), "swap"),),
    )


class TestTopology(unittest.TestCase):
    def test_path(self):
        topo = path_topology(3, "01", "10")
        self.assertEqual(topo.nodes, ["v0", "v1", "v2", "v3"])
        self.assertEqual(topo.length, 3)
        self.assertEqual(topo.radius, 2)
        self.assertEqual(topo.inputs, {"v0": "01", "v3": "10"})

    def test_path_rejects_bad_terminals(self):
        graph = nx.path_graph(["v0", "v1", "v2"])
        with self.assertRaises(ProtocolError):
            Topology(TopologyKind.PATH, graph, (("v0", "0"), ("v1", "1")))

    def test_tree_rejects_cycle(self):
        graph = nx.cycle_graph(["a", "b", "c"])
        with self.assertRaises(ProtocolError):
            Topology(TopologyKind.TREE, graph, (("a", "0"),), "a")

    def test_star(self):
        topo = star_topology(["0", "1", "1"])
        self.assertEqual(topo.root, "u1")
        self.assertEqual(topo.depth["u3"], 2)
        self.assertEqual(topo.children("c"), ["u2", "u3"])

    def test_spanning_tree_prunes_and_adds_pendants(self):
        graph = nx.Graph([("a", "b"), ("b", "c"), ("c", "d"), ("b", "e")])
        tree = spanning_tree(graph, {"a": "0", "c": "1", "b": "1"}, "a")
        self.assertNotIn("d", tree.graph)
        self.assertNotIn("e", tree.graph)
        self.assertIn("b'", tree.inputs)
        self.assertNotIn("b", tree.inputs)
        for u in tree.inputs:
            self.assertTrue(u == tree.root or tree.is_leaf(u))

    def test_round_trip(self):
        topo = star_topology(["00", "01", "11"])
        again = Topology.from_dict(topo.to_dict())
        self.assertEqual(again.terminals, topo.terminals)
        self.assertEqual(sorted(map(sorted, again.edges)), sorted(map(sorted, topo.edges)))


class TestPipeline(unittest.TestCase):
    def test_overlapping_tests_rejected(self):
        layout = RegisterLayout((Register("A", 2, "v0"), Register("B", 2, "v0")))
        tests = (LocalTest("v0", ("A", "B"), swap_test_element(2)),
                 LocalTest("v0", ("B",), np.eye(2)))
        with self.assertRaises(LayoutError):
            ProtocolPipeline("bad", layout, ("v0",), tests=tests)

    def test_test_element_respects_dim_cap(self):
        layout = RegisterLayout((Register("A", 2, "v0"), Register("B", 2, "v0")))
        tests = (LocalTest("v0", ("A", "B"), swap_test_element(2)),)
        with dim_cap(3):
            with self.assertRaises(DimensionCapError):
                ProtocolPipeline("capped", layout, ("v0",), tests=tests)
        self.assertEqual(len(ProtocolPipeline("capped", layout, ("v0",), tests=tests).tests), 1)

    def test_unknown_owner_rejected(self):
        layout = RegisterLayout((Register("A", 2, "v9"),))
        with self.assertRaises(LayoutError):
            ProtocolPipeline("bad", layout, ("v0",))

    def test_json_round_trip(self):
        pipeline = eq_path(r=3, x="1", y="0")
        again = ProtocolPipeline.from_json(pipeline.to_json())
        self.assertEqual(again.to_dict(), pipeline.to_dict())
        assert_allclose(compile(again).accept_operator.matrix, compile(pipeline).accept_operator.matrix, atol=1e-12)

    def test_split_components(self):
        pipeline = eq_path(k=2, x="0", y="1")
        parts = split_components(pipeline)
        self.assertEqual(len(parts), 2)
        whole = top_eigenpair(compile(pipeline).accept_operator)[0]
        product = np.prod([top_eigenpair(m.accept_operator)[0] for m in compile_factored(pipeline)])
        self.assertAlmostEqual(whole, product, places=8)

    def test_channels_self_adjoint(self):
        for ch in eq_path(r=3).channels:
            self.assertTrue(ch.is_self_adjoint())


class TestCompile(unittest.TestCase):
    def test_no_tests_gives_identity(self):
        layout = RegisterLayout((Register("A", 3, "v0"),))
        model = compile(ProtocolPipeline("idle", layout, ("v0",)))
        assert_allclose(model.accept_operator.matrix, np.eye(3), atol=1e-12)

    def test_swap_against_prepared(self):
        model = compile(swap_against_zero())
        expected = (np.eye(2) + np.outer(zero_vector(), zero_vector())) / 2
        assert_allclose(model.accept_operator.matrix, expected, atol=1e-12)
        proof = StateVector(model.proof_layout, zero_vector())
        self.assertAlmostEqual(model.accept_probability(proof), 1.0, places=12)

    def test_honest_eq_path_accepts(self):
        pipeline = build_eq_path(EqPathParams(3, FingerprintScheme.hadamard(2), "10", "10"))
        model = compile(pipeline)
        self.assertAlmostEqual(model.accept_probability(pipeline.honest_state()), 1.0, places=9)

    def test_failed_guard_zeroes_operator(self):
        base = swap_against_zero()
        pipeline = ProtocolPipeline(base.name, base.layout, base.nodes, base.prepared, base.channels, base.tests,
                                    (ClassicalGuard("v0", "bit", False),))
        model = compile(pipeline)
        assert_allclose(model.accept_operator.matrix, np.zeros((2, 2)), atol=1e-12)
        proof = StateVector(model.proof_layout, zero_vector())
        self.assertAlmostEqual(per_node_rejection(model, proof)["v0"], 1.0)
        self.assertAlmostEqual(per_node_rejection(model, proof)["v1"], 0.0)

    def test_per_node_operators_dominate_joint(self):
        pipeline = eq_path(r=3, x="0", y="1")
        model = compile(pipeline)
        rng = np.random.default_rng(3)
        proof = StateVector(model.proof_layout, random_state_vector(model.proof_dimension, rng))
        joint = model.accept_probability(proof)
        for node, op in model.per_node_operators().items():
            self.assertLessEqual(joint, op.expectation(proof) + 1e-9, node)

    def test_restrict_proof(self):
        pipeline = eq_path(r=2, k=2)
        proof = pipeline.honest_state()
        part = split_components(pipeline)[1]
        restricted = restrict_proof(proof, part.proof_layout)
        self.assertIsNotNone(restricted)
        self.assertAlmostEqual(compile(part).accept_probability(restricted), 1.0, places=9)


class TestSampler(unittest.TestCase):
    def setUp(self):
        self.pipeline = eq_path(r=2, x="0", y="1")
        self.model = compile(self.pipeline)
        rng = np.random.default_rng(11)
        self.proof = StateVector(self.model.proof_layout, random_state_vector(self.model.proof_dimension, rng))

    def test_matches_exact(self):
        stats = simulate_sampled(self.pipeline, self.proof, shots=20000, seed=5)
        self.assertTrue(stats.agrees_with(self.model.accept_probability(self.proof), sigmas=4))

    def test_random_pairs_agree_with_exact(self):
        rng = np.random.default_rng(12)
        pipelines = [eq_path(r=2, x="0", y="1"), eq_path(r=3, x="1", y="1"), eq_path(r=2, n=2, x="01", y="10"),
                     eq_path(r=2, x="0", y="1", k=2)]
        outside, worst = 0, 0.0
        for trial in range(20):
            pipeline = pipelines[trial % len(pipelines)]
            model = compile(pipeline, per_node=False)
            proof = StateVector(model.proof_layout, random_state_vector(model.proof_dimension, rng))
            exact = model.accept_probability(proof)
            stats = simulate_sampled(pipeline, proof, shots=100000, seed=100 + trial)
            sigma = np.sqrt(max(exact * (1 - exact), 1e-12) / stats.shots)
            z = abs(stats.accept_frequency - exact) / sigma
            outside += not stats.agrees_with(exact, sigmas=3)
            worst = max(worst, z)
        # 20 draws at 3 sigma: more than two misses has probability ~1e-5
        self.assertLessEqual(outside, 2)
        self.assertLess(worst, 5.0)

    def test_node_rejection_matches(self):
        stats = simulate_sampled(self.pipeline, self.proof, shots=20000, seed=6)
        exact = per_node_rejection(self.model, self.proof)
        for node, p in exact.items():
            sigma = np.sqrt(max(p * (1 - p), 1e-12) / stats.shots)
            self.assertLessEqual(abs(stats.node_reject[node] - p), 4 * sigma + 1e-9, node)

    def test_thread_count_does_not_change_result(self):
        one = simulate_sampled(self.pipeline, self.proof, shots=30000, seed=9, threads=1, batch_size=4096)
        many = simulate_sampled(self.pipeline, self.proof, shots=30000, seed=9, threads=4, batch_size=4096)
        self.assertEqual(one.to_dict(), many.to_dict())

    def test_layout_mismatch(self):
        wrong = StateVector(RegisterLayout.of(("A", 2)), zero_vector())
        with self.assertRaises(LayoutError):
            simulate_sampled(self.pipeline, wrong, shots=10, seed=0)


if __name__ == '__main__':
    unittest.main()
