import itertools
import unittest

from numpy.testing import assert_allclose

from fingerprint.oneway import eq_one_way, exact_send_protocol, hamming_at_most, two_party_value, wrap_oneway_as_qma
from fingerprint.scheme import FingerprintScheme
from network.compiler import compile
from network.topology import path_topology, star_topology
from protocols.conversion import build_forall_f, build_from_oneway_qma, forall_f_holds, forall_f_value
from protocols.eq import (EqPathParams, FlowDirection, TreeProtocolParams, build_eq_path, build_eq_tree,
                          eq_path_soundness_bound, eq_tree_soundness_bound)
from protocols.gt import GtParams, GtVariant, build_gt, gt_adversary_value, gt_index_values, honest_index
from protocols.relay import RelayParams, build_eq_relay, relay_adversary_value, relay_honest_accept, relay_segments, \
    segment_soundness_bound, violating_segments
from protocols.rv import build_rv
from qcore.eigen import top_eigenpair
from utils.bits import all_bitstrings
from utils.common import DimensionCapError, ProtocolError


def lam(pipeline):
    return top_eigenpair(compile(pipeline, per_node=False).accept_operator)[0]


def honest_accept(pipeline):
    return compile(pipeline, per_node=False).accept_probability(pipeline.honest_state())


H1 = FingerprintScheme.hadamard(1)
H2 = FingerprintScheme.hadamard(2)


class TestEqPath(unittest.TestCase):
    def test_completeness(self):
        pipeline = build_eq_path(EqPathParams(3, H2, "10", "10"))
        self.assertAlmostEqual(honest_accept(pipeline), 1.0, places=9)
        self.assertEqual(len(pipeline.tests), 3)
        self.assertEqual(len(pipeline.channels), 2)

    def test_soundness_r2(self):
        value = lam(build_eq_path(EqPathParams(2, H2, "00", "11")))
        self.assertLessEqual(value, 1 - 4 / (81 * 4) + 1e-9)

    def test_soundness_exhaustive(self):
        for r in (2, 3):
            for x, y in itertools.permutations(all_bitstrings(2), 2):
                value = lam(build_eq_path(EqPathParams(r, H2, x, y)))
                self.assertLessEqual(value, eq_path_soundness_bound(r) + 1e-9, (r, x, y))

    def test_repetition_is_multiplicative(self):
        single = lam(build_eq_path(EqPathParams(2, H2, "01", "10")))
        double = lam(build_eq_path(EqPathParams(2, H2, "01", "10", k=2)))
        self.assertAlmostEqual(double, single ** 2, delta=1e-8)
        self.assertLessEqual(double, single + 1e-9)

    def test_cap(self):
        with self.assertRaises(DimensionCapError):
            EqPathParams(3, FingerprintScheme.hadamard(3), "000", "000", k=2)

    def test_gap(self):
        pipeline = build_eq_path(EqPathParams(5, H1, "1", "1", gap=2))
        owners = {r.owner for r in pipeline.proof_layout.registers}
        self.assertEqual(owners, {"v1", "v4"})
        self.assertAlmostEqual(honest_accept(pipeline), 1.0, places=9)
        with self.assertRaises(ProtocolError):
            EqPathParams(3, H1, "1", "1", gap=2)

    def test_weak_scheme_rejected(self):
        scheme = FingerprintScheme.from_generator([[1, 0], [0, 1]])
        with self.assertRaises(ProtocolError):
            build_eq_path(EqPathParams(2, scheme, "00", "01"))


class TestEqTree(unittest.TestCase):
    def test_star_completeness(self):
        p = TreeProtocolParams(star_topology(["1", "1", "1"]), scheme=H1)
        pipeline = build_eq_tree(p)
        self.assertAlmostEqual(honest_accept(pipeline), 1.0, places=9)

    def test_star_deviant_input(self):
        topo = star_topology(["0", "0", "1"])
        value = lam(build_eq_tree(TreeProtocolParams(topo, scheme=H1)))
        self.assertLessEqual(value, eq_tree_soundness_bound(topo) + 1e-9)

    def test_path_tree_equals_path(self):
        topo = path_topology(2, "0", "1")
        tree = build_eq_tree(TreeProtocolParams(topo, scheme=H1, direction=FlowDirection.ROOT_TO_LEAVES))
        path = build_eq_path(EqPathParams(2, H1, "0", "1"))
        assert_allclose(compile(tree).accept_operator.matrix, compile(path).accept_operator.matrix, atol=1e-10)
        upward = build_eq_tree(TreeProtocolParams(topo, scheme=H1, direction=FlowDirection.LEAVES_TO_ROOT))
        value = lam(upward)
        self.assertLessEqual(value, eq_path_soundness_bound(2) + 1e-9)
        self.assertLessEqual(value, 1 - 1 / 81 + 1e-9)
        yes = TreeProtocolParams(path_topology(2, "1", "1"), scheme=H1, direction=FlowDirection.LEAVES_TO_ROOT)
        self.assertAlmostEqual(honest_accept(build_eq_tree(yes)), 1.0, places=9)

    def test_degree_cap(self):
        with self.assertRaises(ProtocolError):
            build_eq_tree(TreeProtocolParams(star_topology(["0"] * 7), scheme=H1))


class TestRelay(unittest.TestCase):
    def test_no_relays_is_eq_path(self):
        relay = build_eq_relay(RelayParams(3, 1, H1, "0", "1", segment_length=3, reps_per_segment=1))
        path = build_eq_path(EqPathParams(3, H1, "0", "1"))
        self.assertEqual(relay.layout.ids, path.layout.ids)
        assert_allclose(compile(relay).accept_operator.matrix, compile(path).accept_operator.matrix, atol=1e-12)

    def test_completeness(self):
        p = RelayParams(4, 1, H1, "1", "1", segment_length=2, reps_per_segment=1)
        self.assertEqual(p.relays, [2])
        self.assertAlmostEqual(honest_accept(build_eq_relay(p)), 1.0, places=9)
        self.assertAlmostEqual(relay_honest_accept(p), 1.0, places=9)

    def test_violating_segment_is_sound(self):
        for relay in all_bitstrings(1):
            p = RelayParams(4, 1, H1, "0", "1", segment_length=2, reps_per_segment=1, relay_values=(relay,))
            bad = violating_segments(p)
            self.assertEqual(len(bad), 1)
            a, z, pipeline = relay_segments(p)[bad[0]]
            self.assertLessEqual(lam(pipeline), segment_soundness_bound(z - a, 1) + 1e-9)

    def test_adversary_value(self):
        p = RelayParams(4, 1, H1, "0", "1", segment_length=2, reps_per_segment=1)
        value, relays = relay_adversary_value(p, threads=2)
        self.assertLessEqual(value, segment_soundness_bound(2, 1) + 1e-9)
        self.assertEqual(len(relays), 1)
        same, _ = relay_adversary_value(RelayParams(4, 1, H1, "0", "0", segment_length=2, reps_per_segment=1))
        self.assertAlmostEqual(same, 1.0, places=9)

    def test_short_segments_rejected(self):
        with self.assertRaises(ProtocolError):
            RelayParams(4, 1, H1, "0", "1", segment_length=1)


class TestGt(unittest.TestCase):
    def test_honest_index(self):
        self.assertEqual(honest_index(GtVariant.GT, 5, 3, 3), 0)
        self.assertEqual(honest_index(GtVariant.GT, 6, 5, 3), 1)
        self.assertIsNone(honest_index(GtVariant.GT, 3, 5, 3))
        self.assertEqual(honest_index(GtVariant.GE, 4, 4, 3), 3)
        self.assertEqual(honest_index(GtVariant.LT, 3, 5, 3), 0)

    def test_completeness_bottom_prefix(self):
        pipeline = build_gt(GtParams(2, FingerprintScheme.hadamard(3), 5, 3, 3))
        self.assertEqual(pipeline.params["index"], 0)
        self.assertAlmostEqual(honest_accept(pipeline), 1.0, places=9)

    def test_variants_complete(self):
        cases = [(GtVariant.GT, 3, 2), (GtVariant.LT, 2, 3), (GtVariant.GE, 2, 2), (GtVariant.LE, 3, 3),
                 (GtVariant.GE, 3, 1)]
        for variant, x, y in cases:
            pipeline = build_gt(GtParams(2, H2, x, y, 2, variant=variant))
            self.assertAlmostEqual(honest_accept(pipeline), 1.0, places=9, msg=variant.name)

    def test_false_instance_needs_index(self):
        with self.assertRaises(ProtocolError):
            build_gt(GtParams(2, H2, 1, 2, 2))

    def test_guards_zero_failing_indices(self):
        values = gt_index_values(GtParams(2, H2, 1, 2, 2))
        self.assertEqual(values[0], 0.0)

    def test_soundness_exhaustive(self):
        for r in (2, 3):
            for x in range(4):
                for y in range(x, 4):
                    value = gt_adversary_value(GtParams(r, H2, x, y, 2), threads=2)
                    self.assertLessEqual(value, eq_path_soundness_bound(r) + 1e-9, (r, x, y))

    def test_yes_instance_value(self):
        self.assertAlmostEqual(gt_adversary_value(GtParams(2, H2, 3, 1, 2)), 1.0, places=9)


class TestRankingVerification(unittest.TestCase):
    def setUp(self):
        self.topology = star_topology(["000", "000", "000"])

    def test_rank_holds(self):
        model = build_rv(self.topology, [5, 2, 7], 1, 2, 3)
        self.assertTrue(model.holds())
        self.assertEqual(model.honest_directions(), (GtVariant.GE, GtVariant.LT))
        self.assertAlmostEqual(model.honest_accept(), 1.0, places=9)

    def test_rank_fails(self):
        model = build_rv(self.topology, [5, 2, 7], 1, 1, 3)
        self.assertFalse(model.holds())
        admissible = [d for d in model.assignments() if model.admissible(d)]
        self.assertEqual(admissible, [(GtVariant.GE, GtVariant.GE)])
        value, _ = model.value(threads=2)
        self.assertLessEqual(value, eq_path_soundness_bound(2) + 1e-9)
        with self.assertRaises(ProtocolError):
            model.honest_pipelines()

    def test_two_terminals(self):
        model = build_rv(path_topology(2, "00", "00"), [2, 1], 1, 1, 2)
        value, directions = model.value()
        self.assertEqual(directions, (GtVariant.GE,))
        self.assertAlmostEqual(value, 1.0, places=9)


class TestConversions(unittest.TestCase):
    def test_forall_eq_complete(self):
        p = TreeProtocolParams(star_topology(["01", "01", "01"]), protocol=eq_one_way(H2))
        pipelines = build_forall_f(p)
        self.assertEqual(len(pipelines), 3)
        for pipeline in pipelines:
            self.assertAlmostEqual(honest_accept(pipeline), 1.0, places=9)

    def test_forall_hamming_violated(self):
        protocol = exact_send_protocol(hamming_at_most(1), 2)
        p = TreeProtocolParams(star_topology(["00", "01", "11"]), protocol=protocol)
        self.assertFalse(forall_f_holds(p))
        self.assertLess(forall_f_value(build_forall_f(p), threads=2), 1.0 - 1e-6)

    def test_forall_hamming_every_triple(self):
        protocol = exact_send_protocol(hamming_at_most(1), 2)
        for xs in itertools.product(all_bitstrings(2), repeat=3):
            p = TreeProtocolParams(star_topology(list(xs)), protocol=protocol)
            pipelines = build_forall_f(p)
            if forall_f_holds(p):
                for pipeline in pipelines:
                    self.assertAlmostEqual(honest_accept(pipeline), 1.0, places=9, msg=xs)
            else:
                self.assertLess(forall_f_value(pipelines), 1.0 - 1e-6, xs)

    def test_path_forall_matches_qma_conversion(self):
        protocol = eq_one_way(H1)
        p = TreeProtocolParams(path_topology(2, "0", "1"), protocol=protocol)
        tree = build_forall_f(p)[0]
        qma = build_from_oneway_qma(wrap_oneway_as_qma(protocol), 2, "0", "1")
        self.assertEqual(tree.proof_dimension, qma.proof_dimension)
        assert_allclose(compile(tree).accept_operator.matrix, compile(qma).accept_operator.matrix, atol=1e-10)

    def test_qma_conversion_complete(self):
        q = wrap_oneway_as_qma(eq_one_way(H1))
        pipeline = build_from_oneway_qma(q, 3, "1", "1")
        self.assertAlmostEqual(honest_accept(pipeline), 1.0, places=9)

    def test_qma_conversion_sound(self):
        q = wrap_oneway_as_qma(eq_one_way(H1))
        self.assertLess(lam(build_from_oneway_qma(q, 2, "0", "1")), 1.0 - 1e-3)

    def test_single_edge_is_two_party(self):
        q = wrap_oneway_as_qma(eq_one_way(H2))
        for x, y in (("01", "01"), ("01", "10")):
            value = lam(build_from_oneway_qma(q, 1, x, y))
            self.assertAlmostEqual(value, two_party_value(q, x, y), places=10)


if __name__ == '__main__':
    unittest.main()
