"""
Built-in verification suite: the package's invariants re-checked at fixed seeds.
A check raises AssertionError on failure; DimensionCapError marks it skipped.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np
from scipy.stats import unitary_group

from adversary.attacks import (classical_fooling_attack, entangled_no_proof_attack, prefix_bits_family,
                               separable_cut_paste_attack)
from adversary.dma import truncated_eq_dma
from adversary.strategies import SeeSawOptions, honest_proof, optimal_entangled_value, optimal_separable_value
from fingerprint.oneway import (eq_one_way, exact_send_protocol, hamming_at_most, two_party_value,
                                wrap_oneway_as_qma)
from fingerprint.scheme import FingerprintScheme
from network.compiler import compile, compile_factored
from network.pipeline import split_components
from network.sampler import simulate_sampled
from network.topology import star_topology
from protocols.conversion import build_forall_f, build_from_oneway_qma, forall_f_holds, forall_f_value
from protocols.eq import (EqPathParams, TreeProtocolParams, build_eq_path, build_eq_tree, deviant_terminals,
                          eq_path_soundness_bound, eq_tree_soundness_bound)
from protocols.gt import GtParams, GtVariant, build_gt, gt_adversary_value
from protocols.relay import RelayParams, relay_adversary_value, relay_honest_accept, segment_soundness_bound
from protocols.rv import build_rv
from qcore.channels import MixingChannel, apply_channel
from qcore.layout import RegisterLayout
from qcore.measures import fidelity, trace_distance
from qcore.states import DensityOperator, HermitianOperator, StateVector, partial_trace, tensor
from reductions.cut import cut_report
from swaptest.acceptance import average_over_group, marginals, permutation_test_accept, swap_test_accept
from swaptest.projectors import register_layout
from utils.bits import all_bitstrings
from utils.common import DimensionCapError, fmt
from utils.rng import random_density_matrix, random_state_vector, reseed_everything

logger = logging.getLogger(__name__)

PASS, FAIL, SKIP = "pass", "fail", "skip"

# sampled frequencies outside 3 sigma tolerated among the 20 exact-vs-sampled pairs
SAMPLING_MISSES = 2
@dataclass(frozen=True)
class CheckResult:
    check: str
    status: str
    detail: str = ""

    def to_dict(self) -> dict:
        return {"check": self.check, "status": self.status, "detail": self.detail}


def _lam(pipeline) -> float:
    return optimal_entangled_value(compile(pipeline, per_node=False))[0]


def _honest(pipeline) -> float:
    return compile(pipeline, per_node=False).accept_probability(pipeline.honest_state())


def check_swap_test(seed: int, threads: int) -> str:
    rng = reseed_everything(seed)
    worst = 0.0
    for trial in range(100):
        d = 2 + trial % 3
        psi, phi = random_state_vector(d, rng), random_state_vector(d, rng)
        rho = StateVector(register_layout(2, d), np.kron(psi, phi)).density()
        expected = (1 + abs(np.vdot(psi, phi)) ** 2) / 2
        worst = max(worst, abs(swap_test_accept(rho) - expected))
    assert worst <= 1e-10, f"deviation {worst}"
    return f"max deviation {worst:.2e}"


def check_permutation_test(seed: int, threads: int) -> str:
    rng = reseed_everything(seed)
    worst = 0.0
    for k, d in [(2, 2), (2, 3), (3, 2), (3, 3), (4, 2), (4, 3)]:
        rho = DensityOperator(register_layout(k, d), random_density_matrix(d ** k, rng))
        worst = max(worst, abs(permutation_test_accept(rho) - average_over_group(rho)))
    assert worst <= 1e-10, f"deviation {worst}"
    return f"max deviation {worst:.2e}"


def check_marginal_closeness(seed: int, threads: int) -> str:
    rng = reseed_everything(seed)
    count = 0
    for k, d in itertools.product((2, 3, 4), (2, 3)):
        for _ in range(200):
            rho = DensityOperator(register_layout(k, d), random_density_matrix(d ** k, rng))
            eps = max(0.0, 1 - permutation_test_accept(rho))
            for a, b in itertools.combinations(marginals(rho), 2):
                assert trace_distance(a, b) <= 2 * math.sqrt(eps) + eps + 1e-9, f"(k={k}, d={d})"
                count += 1
    return f"{count} marginal pairs"


def check_eq_path_completeness(seed: int, threads: int) -> str:
    for n, r in ((1, 2), (1, 3), (2, 2), (2, 3), (3, 2)):
        scheme = FingerprintScheme.hadamard(n)
        for x in all_bitstrings(n):
            value = _honest(build_eq_path(EqPathParams(r, scheme, x, x)))
            assert abs(value - 1) <= 1e-9, f"n={n} r={r} x={x}: {value}"
    return "all x = y accepted"


def check_eq_path_soundness(seed: int, threads: int) -> str:
    scheme = FingerprintScheme.hadamard(2)
    worst = 0.0
    for r in (2, 3):
        bound = eq_path_soundness_bound(r)
        for x, y in itertools.permutations(all_bitstrings(2), 2):
            value = _lam(build_eq_path(EqPathParams(r, scheme, x, y)))
            assert value <= bound + 1e-9, f"r={r} ({x}, {y}): {value} > {bound}"
            worst = max(worst, value)
    return f"largest value {fmt(worst)}"


def check_repetition(seed: int, threads: int) -> str:
    scheme = FingerprintScheme.hadamard(1)
    single = _lam(build_eq_path(EqPathParams(2, scheme, "0", "1")))
    for k in (2, 3):
        value = _lam(build_eq_path(EqPathParams(2, scheme, "0", "1", k)))
        assert abs(value - single ** k) <= 1e-8, f"k={k}: {value} vs {single ** k}"
    return f"single-copy value {fmt(single)}"


def check_eq_tree(seed: int, threads: int) -> str:
    scheme = FingerprintScheme.hadamard(1)
    honest = _honest(build_eq_tree(TreeProtocolParams(star_topology(["1", "1", "1"]), scheme)))
    assert abs(honest - 1) <= 1e-9, f"completeness {honest}"
    topology = star_topology(["1", "1", "0"])
    value = _lam(build_eq_tree(TreeProtocolParams(topology, scheme)))
    bound = eq_tree_soundness_bound(topology)
    assert value <= bound + 1e-9, f"deviant star: {value} > {bound}"
    return f"deviant {','.join(deviant_terminals(topology))} value {fmt(value)}"


def check_gt(seed: int, threads: int) -> str:
    scheme = FingerprintScheme.hadamard(2)
    bound = eq_path_soundness_bound(2)
    for variant in GtVariant:
        for x, y in itertools.product(range(4), repeat=2):
            p = GtParams(2, scheme, x, y, 2, variant=variant)
            if variant.holds(x, y):
                value = _honest(build_gt(p))
                assert abs(value - 1) <= 1e-9, f"{variant.name}({x}, {y}) completeness {value}"
            else:
                value = gt_adversary_value(p, threads)
                assert value <= bound + 1e-9, f"{variant.name}({x}, {y}) soundness {value}"
    return "all variants, n=2"


def check_rv(seed: int, threads: int) -> str:
    topology = star_topology(["000"] * 3)
    model = build_rv(topology, [5, 2, 7], 1, 2, 3)
    assert model.holds() and abs(model.honest_accept() - 1) <= 1e-9, "rank 2 of 5 rejected"
    wrong = build_rv(topology, [5, 2, 7], 1, 1, 3)
    value, _ = wrong.value(threads)
    assert value < 1 - 1e-6, f"false rank accepted with {value}"
    return f"false rank value {fmt(value)}"


def check_relay(seed: int, threads: int) -> str:
    scheme = FingerprintScheme.hadamard(1)
    yes = RelayParams(4, 1, scheme, "1", "1", segment_length=2, reps_per_segment=1)
    assert abs(relay_honest_accept(yes) - 1) <= 1e-9, "relay completeness"
    no = RelayParams(4, 1, scheme, "0", "1", segment_length=2, reps_per_segment=1)
    value, _ = relay_adversary_value(no, threads)
    bound = segment_soundness_bound(2, 1)
    assert value <= bound + 1e-9, f"relay soundness {value} > {bound}"
    return f"no-instance value {fmt(value)}"


def check_conversion(seed: int, threads: int) -> str:
    q = wrap_oneway_as_qma(eq_one_way(FingerprintScheme.hadamard(2)))
    for x, y in (("01", "01"), ("01", "10")):
        value = _lam(build_from_oneway_qma(q, 1, x, y))
        assert abs(value - two_party_value(q, x, y)) <= 1e-10, f"({x}, {y})"
    return "single edge equals the two-party protocol"


def check_attacks(seed: int, threads: int) -> str:
    fooling = [(x, x) for x in all_bitstrings(3)]
    classical = classical_fooling_attack(truncated_eq_dma(3, 4, 2), lambda a, b: a == b, fooling)
    assert classical.pair_found and classical.meets_reference, f"classical fooling: {classical.status}"
    scheme = FingerprintScheme.hadamard(1)

    def gapped(x, y):
        return build_eq_path(EqPathParams(5, scheme, x, y, gap=2))

    quantum = entangled_no_proof_attack(gapped, lambda a, b: a == b, [("0", "0"), ("1", "1")], 2, threads)
    assert quantum.meets_reference, f"entangled no-proof: {quantum.status}"
    return f"classical {fmt(classical.accept_prob)}, entangled {fmt(quantum.accept_prob)}"


def check_cut(seed: int, threads: int) -> str:
    pipeline = build_eq_path(EqPathParams(3, FingerprintScheme.hadamard(2), "01", "10"))
    model = compile(pipeline, per_node=False)
    value = optimal_entangled_value(model)[0]
    for cut in cut_report(model, pipeline, threads):
        assert abs(cut["accept_value"] - value) <= 1e-10, f"cut {cut['i']}"
    return f"value {fmt(value)} at every cut"


def _random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng)


def _random_povm_element(d: int, rng: np.random.Generator) -> np.ndarray:
    u = _random_unitary(d, rng)
    return (u * rng.random(d)) @ u.conj().T


def check_partial_trace_of_tensor(seed: int, threads: int) -> str:
    rng = reseed_everything(seed)
    worst = 0.0
    for da, db in itertools.product((2, 3), (2, 3, 4)):
        a = RegisterLayout.of(("A", da))
        b = RegisterLayout.of(("B", db))
        for _ in range(10):
            rho = DensityOperator(a, random_density_matrix(da, rng))
            sigma = DensityOperator(b, random_density_matrix(db, rng))
            joint = tensor(rho, sigma)
            worst = max(worst, np.abs(partial_trace(joint, ["A"]).matrix - rho.matrix).max(),
                        np.abs(partial_trace(joint, ["B"]).matrix - sigma.matrix).max())
    assert worst <= 1e-12, f"deviation {worst}"
    return f"max deviation {worst:.2e}"


def check_channels(seed: int, threads: int) -> str:
    """Mixing channels keep states unit-trace PSD and never increase trace distance."""
    rng = reseed_everything(seed)
    channels = list(build_eq_path(EqPathParams(3, FingerprintScheme.hadamard(1), "0", "1")).channels)
    for d in (2, 3, 4):
        layout = RegisterLayout.of(("A", d))
        weights = rng.random(3)
        weights /= weights.sum()
        channels.append(MixingChannel(layout, tuple((float(w), _random_unitary(d, rng)) for w in weights)))
    count = 0
    for ch in channels:
        d = ch.layout.total_dimension
        for _ in range(20):
            rho = random_density_matrix(d, rng)
            out = ch.act(rho, ch.layout.dims, list(range(len(ch.layout))))
            assert abs(np.trace(out).real - 1) <= 1e-10, f"{ch.label}: trace {np.trace(out)}"
            lowest = np.linalg.eigvalsh((out + out.conj().T) / 2)[0]
            assert lowest >= -1e-10, f"{ch.label}: eigenvalue {lowest}"
            a = DensityOperator(ch.layout, rho)
            b = DensityOperator(ch.layout, random_density_matrix(d, rng))
            before, after = trace_distance(a, b), trace_distance(apply_channel(ch, a), apply_channel(ch, b))
            assert after <= before + 1e-9, f"{ch.label}: distance grew {before} -> {after}"
            count += 1
    return f"{len(channels)} channels, {count} inputs"


def check_fidelity(seed: int, threads: int) -> str:
    rng = reseed_everything(seed)
    worst = 0.0
    for trial in range(300):
        d = 2 + trial % 3
        layout = RegisterLayout.of(("A", d))
        a, b = random_state_vector(d, rng), random_state_vector(d, rng)
        pure_a = StateVector(layout, a).density()
        pure_b = StateVector(layout, b).density()
        worst = max(worst, abs(fidelity(pure_a, pure_b) - abs(np.vdot(a, b))))
        rho = DensityOperator(layout, random_density_matrix(d, rng))
        sigma = DensityOperator(layout, random_density_matrix(d, rng))
        f, dist = fidelity(rho, sigma), trace_distance(rho, sigma)
        assert 1 - f <= dist + 1e-9 and dist <= math.sqrt(max(0.0, 1 - f * f)) + 1e-9, \
            f"d={d}: F={f}, D={dist} outside the Fuchs-van de Graaf bounds"
    assert worst <= 1e-9, f"pure-state fidelity deviation {worst}"
    return f"pure-state deviation {worst:.2e}"


def check_distinguishability(seed: int, threads: int) -> str:
    rng = reseed_everything(seed)
    layout = RegisterLayout.of(("A", 2), ("B", 3))
    worst = 0.0
    for _ in range(100):
        rho = DensityOperator(layout, random_density_matrix(6, rng))
        sigma = DensityOperator(layout, random_density_matrix(6, rng))
        m = HermitianOperator(layout, _random_povm_element(6, rng))
        gap = abs(m.expectation(rho) - m.expectation(sigma))
        dist = trace_distance(rho, sigma)
        assert gap <= dist + 1e-9, f"POVM gap {gap} > trace distance {dist}"
        worst = max(worst, gap / dist if dist > 0 else 0.0)
    return f"largest gap/distance {fmt(worst)}"


def check_fingerprint_overlaps(seed: int, threads: int) -> str:
    schemes = [FingerprintScheme.code_based(n, seed=2) for n in range(1, 7)]
    schemes += [FingerprintScheme.hadamard(n) for n in range(1, 4)]
    worst = 0.0
    for scheme in schemes:
        states = {x: scheme.state(x) for x in all_bitstrings(scheme.n)}
        for x, y in itertools.combinations(states, 2):
            overlap = abs(np.vdot(states[x], states[y]))
            assert overlap <= scheme.overlap_bound + 1e-9, f"{scheme.kind.name} n={scheme.n} ({x}, {y}): {overlap}"
            worst = max(worst, overlap)
    return f"{len(schemes)} schemes, largest overlap {fmt(worst)}"


def _sample_pipelines():
    h1, h2 = FingerprintScheme.hadamard(1), FingerprintScheme.hadamard(2)
    return [build_eq_path(EqPathParams(2, h1, "0", "1")), build_eq_path(EqPathParams(3, h1, "1", "1")),
            build_eq_path(EqPathParams(2, h2, "01", "10")), build_eq_path(EqPathParams(2, h1, "0", "1", 2)),
            build_eq_tree(TreeProtocolParams(star_topology(["1", "0", "1"]), h1)),
            build_gt(GtParams(2, h2, 2, 1, 2))]


def check_accept_operators(seed: int, threads: int) -> str:
    pipelines = _sample_pipelines()
    for pipeline in pipelines:
        m = compile(pipeline, per_node=False).accept_operator.matrix
        assert np.abs(m - m.conj().T).max() <= 1e-10, f"{pipeline.name}: not self-adjoint"
        w = np.linalg.eigvalsh((m + m.conj().T) / 2)
        assert w[0] >= -1e-9 and w[-1] <= 1 + 1e-9, f"{pipeline.name}: spectrum [{w[0]}, {w[-1]}]"
    return f"{len(pipelines)} pipelines"


def check_tensor_disjoint(seed: int, threads: int) -> str:
    scheme = FingerprintScheme.hadamard(1)
    for k in (2, 3):
        pipeline = build_eq_path(EqPathParams(2, scheme, "0", "1", k))
        assert len(split_components(pipeline)) == k, f"k={k}: {len(split_components(pipeline))} components"
        whole = _lam(pipeline)
        product = float(np.prod([optimal_entangled_value(m)[0] for m in compile_factored(pipeline, per_node=False)]))
        assert abs(whole - product) <= 1e-8, f"k={k}: {whole} vs {product}"
    return "values multiply over components"


def check_prover_ordering(seed: int, threads: int) -> str:
    options = SeeSawOptions(restarts=4, seed=seed, threads=threads)
    cases = [build_eq_path(EqPathParams(3, FingerprintScheme.hadamard(1), "0", "1")),
             build_eq_path(EqPathParams(2, FingerprintScheme.hadamard(2), "01", "11")),
             build_eq_path(EqPathParams(3, FingerprintScheme.hadamard(1), "1", "1"))]
    for pipeline in cases:
        model = compile(pipeline, per_node=False)
        entangled = optimal_entangled_value(model)[0]
        separable = optimal_separable_value(model, options=options).value
        honest = model.accept_probability(honest_proof(pipeline))
        assert entangled + 1e-9 >= separable >= honest - 1e-9, \
            f"{pipeline.name}: entangled {entangled}, separable {separable}, honest {honest}"
    return f"{len(cases)} pipelines"


def check_brute_force(seed: int, threads: int) -> str:
    rng = reseed_everything(seed)
    model = compile(build_eq_path(EqPathParams(2, FingerprintScheme.hadamard(2), "00", "10")), per_node=False)
    value = optimal_entangled_value(model)[0]
    m = model.accept_operator.matrix
    vs = rng.normal(size=(5000, model.proof_dimension)) + 1j * rng.normal(size=(5000, model.proof_dimension))
    vs /= np.linalg.norm(vs, axis=1, keepdims=True)
    best = float(np.max(np.einsum("ni,ij,nj->n", vs.conj(), m, vs).real))
    assert best <= value + 1e-9, f"random proof {best} above the optimum {value}"
    return f"best random {fmt(best)} of {fmt(value)}"


def check_seesaw_threads(seed: int, threads: int) -> str:
    model = compile(build_eq_path(EqPathParams(3, FingerprintScheme.hadamard(2), "01", "11")), per_node=False)
    single = optimal_separable_value(model, options=SeeSawOptions(restarts=3, seed=seed, threads=1))
    many = optimal_separable_value(model, options=SeeSawOptions(restarts=3, seed=seed, threads=max(threads, 3)))
    assert single.restart_values == many.restart_values, "restart values depend on the thread count"
    return f"value {fmt(single.value)}"


def check_cut_paste(seed: int, threads: int) -> str:
    fooling = [(x, x) for x in all_bitstrings(3)]
    result = separable_cut_paste_attack(prefix_bits_family(3, FingerprintScheme.hadamard(1), 1), lambda a, b: a == b,
                                        fooling, 1, 0.5, threads)
    assert result.pair_found and result.meets_reference, f"cut-and-paste: {result.status}"
    return f"accept {fmt(result.accept_prob)} against line {fmt(result.reference_line)}"


def check_forall_f(seed: int, threads: int) -> str:
    protocol = exact_send_protocol(hamming_at_most(1), 2)
    yes = 0
    for xs in itertools.product(all_bitstrings(2), repeat=3):
        p = TreeProtocolParams(star_topology(list(xs)), protocol=protocol)
        pipelines = build_forall_f(p)
        if forall_f_holds(p):
            for pipeline in pipelines:
                assert abs(_honest(pipeline) - 1) <= 1e-9, f"{xs}: {pipeline.name} rejects"
            yes += 1
        else:
            value = forall_f_value(pipelines, threads)
            assert value < 1 - 1e-6, f"{xs}: violated triple accepted with {value}"
    return f"{yes} of 64 triples hold"


def check_sampling(seed: int, threads: int) -> str:
    rng = reseed_everything(seed)
    pipelines = _sample_pipelines()[:4]
    misses, worst = 0, 0.0
    for trial in range(20):
        pipeline = pipelines[trial % len(pipelines)]
        model = compile(pipeline, per_node=False)
        proof = StateVector(model.proof_layout, random_state_vector(model.proof_dimension, rng))
        exact = model.accept_probability(proof)
        stats = simulate_sampled(pipeline, proof, 100000, seed + trial, threads)
        sigma = math.sqrt(max(exact * (1 - exact), 1e-12) / stats.shots)
        worst = max(worst, abs(stats.accept_frequency - exact) / sigma)
        misses += not stats.agrees_with(exact, sigmas=3)
    assert misses <= SAMPLING_MISSES and worst < 5.0, f"{misses} pairs outside 3 sigma, worst {worst:.2f} sigma"
    return f"20 pairs, {misses} outside 3 sigma, worst {worst:.2f} sigma"


CHECKS: List[Tuple[str, Callable[[int, int], str]]] = [
    ("partial_trace_of_tensor", check_partial_trace_of_tensor),
    ("channel_trace_positivity_contractivity", check_channels),
    ("fidelity_bounds", check_fidelity),
    ("povm_distinguishability", check_distinguishability),
    ("fingerprint_overlaps", check_fingerprint_overlaps),
    ("swap_test_exact", check_swap_test),
    ("permutation_test_group_average", check_permutation_test),
    ("marginal_closeness", check_marginal_closeness),
    ("accept_operator_spectrum", check_accept_operators),
    ("tensor_disjoint_multiplicative", check_tensor_disjoint),
    ("entangled_separable_honest", check_prover_ordering),
    ("random_proofs_below_optimum", check_brute_force),
    ("seesaw_thread_independent", check_seesaw_threads),
    ("eq_path_completeness", check_eq_path_completeness),
    ("eq_path_soundness", check_eq_path_soundness),
    ("repetition_multiplicative", check_repetition),
    ("eq_tree", check_eq_tree),
    ("gt_variants", check_gt),
    ("ranking_verification", check_rv),
    ("relay_eq", check_relay),
    ("oneway_conversion", check_conversion),
    ("forall_f_triples", check_forall_f),
    ("attacks", check_attacks),
    ("cut_paste_attack", check_cut_paste),
    ("cut_reduction", check_cut),
    ("exact_vs_sampled", check_sampling),
]
def run_selftest(seed: int = 0, threads: int = 1) -> List[CheckResult]:
    results = []
    for name, check in CHECKS:
        try:
            detail = check(seed, threads)
            results.append(CheckResult(name, PASS, detail))
        except DimensionCapError as e:
            results.append(CheckResult(name, SKIP, str(e)))
        except AssertionError as e:
            results.append(CheckResult(name, FAIL, str(e)))
        logger.info("%s: %s", name, results[-1].status)
    return results
