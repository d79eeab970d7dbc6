"""
Lower-bound attack constructions: proofs for two accepted inputs are cut at an edge
(v_i, v_{i+1}) and pasted together to fool the verifier on a crossed no-instance.
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from adversary.dma import ClassicalDmaProtocol
from adversary.strategies import honest_proof, optimal_entangled_value
from fingerprint.scheme import FingerprintScheme
from network.compiler import AcceptanceModel, compile, restrict_proof
from network.pipeline import ProtocolPipeline
from protocols.eq import EqPathParams, build_eq_path
from qcore.layout import RegisterLayout
from qcore.measures import fidelity
from qcore.operators import permute_subsystems, permute_vector
from qcore.states import DensityOperator, StateVector, partial_trace
from utils.common import ProtocolError, fmt

logger = logging.getLogger(__name__)

Pair = Tuple[str, str]
Family = Callable[[str, str], ProtocolPipeline]

APPLIED = "applied"
NOT_APPLICABLE = "not_applicable"
NO_PAIR = "no_pair"


@dataclass(frozen=True)
class AttackResult:
    attack: str
    status: str
    cut_index: Optional[int] = None
    pair_found: bool = False
    accept_prob: Optional[float] = None
    reference_line: Optional[float] = None
    witness: Dict = field(default_factory=dict, compare=False)
    # proof and pipeline of the crossed no-instance, kept for re-running the attack
    proof: Optional[Union[StateVector, DensityOperator]] = field(default=None, compare=False, repr=False)
    target: Optional[ProtocolPipeline] = field(default=None, compare=False, repr=False)

    @property
    def meets_reference(self) -> bool:
        return self.accept_prob is not None and self.accept_prob >= self.reference_line - 1e-9

    def to_dict(self) -> dict:
        return {
            "attack": self.attack,
            "cut_index": self.cut_index,
            "pair_found": self.pair_found,
            "accept_prob": None if self.accept_prob is None else fmt(self.accept_prob),
            "reference_line": None if self.reference_line is None else fmt(self.reference_line),
            "witness": self.witness,
            "status": self.status,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _crossed(f: Callable[[str, str], bool], first: Pair, second: Pair) -> Optional[Pair]:
    """A 0-instance made of one pair's left input and the other's right input."""
    if not f(first[0], second[1]):
        return first[0], second[1]
    if not f(second[0], first[1]):
        return second[0], first[1]
    return None


def classical_fooling_attack(p: ClassicalDmaProtocol, f: Callable[[str, str], bool],
                             fooling_set: Sequence[Pair]) -> AttackResult:
    """
    Applicable at a cut i when 2^(c_i + c_{i+1}) < k, so two of the k fooling pairs must share
    the proof bits on v_i, v_{i+1}. Nodes v_0..v_i keep the first pair's proof, nodes v_{i+1}..v_r
    take the second's; every node then sees a view it accepted before.
    """
    k = len(fooling_set)
    name = "classical_fooling"
    cuts = [i for i in range(p.r) if 2 ** (p.proof_bits[i] + p.proof_bits[i + 1]) < k]
    threshold = math.floor(0.5 * math.log2(k - 1)) if k > 1 else 0
    if not cuts:
        return AttackResult(name, NOT_APPLICABLE, witness={"fooling_set_size": k, "log_threshold": threshold})
    i = min(cuts, key=lambda c: (p.proof_bits[c] + p.proof_bits[c + 1], c))
    best = {pair: p.best_proof(*pair) for pair in fooling_set}
    error = max(0.0, 1.0 - min(v for v, _ in best.values()))
    reference = 1.0 - 2.0 * error
    seen: Dict[Tuple[str, str], Pair] = {}
    for pair in fooling_set:
        w = best[pair][1]
        key = (w[i], w[i + 1])
        if key in seen:
            other = seen[key]
            crossed = _crossed(f, other, pair)
            if crossed is None:
                continue
            left, right = (other, pair) if crossed == (other[0], pair[1]) else (pair, other)
            stitched = best[left][1][:i + 1] + best[right][1][i + 1:]
            value = p.accept_probability(crossed[0], crossed[1], stitched)
            logger.debug("fooling pairs %s, %s collide at cut %d; stitched value %.12g", left, right, i, value)
            return AttackResult(name, APPLIED, i, True, value, reference, {
                "pairs": [list(left), list(right)],
                "no_instance": list(crossed),
                "proof": list(stitched),
                "log_threshold": threshold,
            })
        seen[key] = pair
    return AttackResult(name, NO_PAIR, i, False, None, reference, {"log_threshold": threshold})


def prefix_bits_family(r: int, scheme: FingerprintScheme, bits: int, k: int = 1) -> Family:
    """EQ path on the first `bits` input bits only: proofs too small to separate the fooling set."""
    def family(x: str, y: str) -> ProtocolPipeline:
        return build_eq_path(EqPathParams(r, scheme, x[:bits], y[:bits], k))

    return family


def _side_registers(pipeline: ProtocolPipeline, i: int) -> Tuple[List[str], List[str], List[str]]:
    """Proof registers of nodes v_0..v_i, of v_{i+1}..v_r, and of the cut nodes v_i, v_{i+1}."""
    if not pipeline.path:
        raise ProtocolError(f"{pipeline.name} is not a path protocol")
    nodes = list(pipeline.nodes)
    if not 0 <= i < len(nodes) - 1:
        raise ProtocolError(f"cut index {i} outside 0..{len(nodes) - 2}")
    left_nodes, right_nodes = set(nodes[:i + 1]), set(nodes[i + 1:])
    layout = pipeline.proof_layout
    left = [r.id for r in layout.registers if r.owner in left_nodes]
    right = [r.id for r in layout.registers if r.owner in right_nodes]
    cut = [r.id for r in layout.registers if r.owner in (nodes[i], nodes[i + 1])]
    return left, right, cut


def _accepting_proofs(family: Family, fooling_set: Sequence[Pair], threads: int) -> Dict[Pair, Tuple[AcceptanceModel, StateVector, float]]:
    def solve(pair: Pair):
        pipeline = family(*pair)
        model = compile(pipeline, per_node=False)
        if pipeline.honest is not None:
            proof = honest_proof(pipeline)
        else:
            proof = optimal_entangled_value(model)[1]
        return pair, (model, proof, model.accept_probability(proof))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return dict(pool.map(solve, fooling_set))
    return dict(map(solve, fooling_set))


def separable_cut_paste_attack(family: Family, f: Callable[[str, str], bool], fooling_set: Sequence[Pair],
                               i: int, delta: float, threads: int = 1) -> AttackResult:
    """
    Looks for fooling pairs whose accepting proofs, restricted to the cut nodes v_i, v_{i+1}, have
    fidelity above 1 - δ²/8, then runs |ψ_y⟩_L ⊗ |ψ_z⟩_R on the crossed no-instance.
    Proofs must be product across the cut.
    """
    name = "separable_cut_paste"
    proofs = _accepting_proofs(family, fooling_set, threads)
    error = max(0.0, 1.0 - min(v for _, _, v in proofs.values()))
    reference = 1.0 - 2.0 * error - delta
    threshold = 1.0 - delta ** 2 / 8
    sample = proofs[fooling_set[0]][0].pipeline
    left, right, cut = _side_registers(sample, i)

    def cut_state(proof: StateVector) -> Optional[DensityOperator]:
        if not cut:
            return None
        return partial_trace(proof.density(), cut)

    pairs = list(fooling_set)
    for a in range(len(pairs)):
        for b in range(a + 1, len(pairs)):
            first, second = pairs[a], pairs[b]
            crossed = _crossed(f, first, second)
            if crossed is None:
                continue
            if crossed != (first[0], second[1]):
                first, second = second, first
            rho, sigma = cut_state(proofs[first][1]), cut_state(proofs[second][1])
            overlap = 1.0 if rho is None else fidelity(rho, sigma)
            if overlap <= threshold:
                continue
            psi_left = restrict_proof(proofs[first][1], sample.proof_layout.sub(left))
            psi_right = restrict_proof(proofs[second][1], sample.proof_layout.sub(right))
            if psi_left is None or psi_right is None:
                raise ProtocolError("cut-and-paste needs proofs that are product across the cut")
            target = compile(family(*crossed), per_node=False)
            stitched = _join(psi_left, psi_right, target.proof_layout)
            value = target.accept_probability(stitched)
            logger.debug("cut-and-paste at %d: %s + %s, overlap %.6f, value %.12g", i, first, second, overlap, value)
            return AttackResult(name, APPLIED, i, True, value, reference, {
                "pairs": [list(first), list(second)],
                "no_instance": list(crossed),
                "overlap": fmt(overlap),
                "threshold": fmt(threshold),
            }, stitched, target.pipeline)
    return AttackResult(name, NO_PAIR, i, False, None, reference, {"threshold": fmt(threshold)})


def _join(left: StateVector, right: StateVector, layout: RegisterLayout) -> StateVector:
    joined = left.layout.concat(right.layout)
    amps = np.kron(left.amplitudes, right.amplitudes)
    return StateVector(layout, permute_vector(amps, joined.dims, joined.positions(layout.ids)))


def entangled_no_proof_attack(family: Family, f: Callable[[str, str], bool], fooling_set: Sequence[Pair],
                              i: int, threads: int = 1) -> AttackResult:
    """
    When v_i and v_{i+1} receive no proof, the left half of one accepting proof and the right
    half of another (each as a reduced state) combine into ρ ⊗ σ' for the crossed instance.
    """
    name = "entangled_no_proof"
    sample = family(*fooling_set[0])
    left, right, cut = _side_registers(sample, i)
    if cut:
        return AttackResult(name, NOT_APPLICABLE, i, witness={"cut_registers": cut})
    proofs = _accepting_proofs(family, fooling_set, threads)
    error = max(0.0, 1.0 - min(v for _, _, v in proofs.values()))
    reference = 1.0 - 2.0 * error
    pairs = list(fooling_set)
    for a in range(len(pairs)):
        for b in range(a + 1, len(pairs)):
            crossed = _crossed(f, pairs[a], pairs[b])
            if crossed is None:
                continue
            first, second = (pairs[a], pairs[b]) if crossed == (pairs[a][0], pairs[b][1]) else (pairs[b], pairs[a])
            rho = partial_trace(proofs[first][1].density(), left)
            sigma = partial_trace(proofs[second][1].density(), right)
            target = compile(family(*crossed), per_node=False)
            layout = target.proof_layout
            joined = rho.layout.concat(sigma.layout)
            matrix = permute_subsystems(np.kron(rho.matrix, sigma.matrix), joined.dims, joined.positions(layout.ids))
            state = DensityOperator(layout, matrix)
            value = target.accept_probability(state)
            logger.debug("no-proof cut at %d: %s + %s gives %.12g", i, first, second, value)
            return AttackResult(name, APPLIED, i, True, value, reference, {
                "pairs": [list(first), list(second)],
                "no_instance": list(crossed),
            }, state, target.pipeline)
    return AttackResult(name, NO_PAIR, i, False, None, reference)

