import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from network.pipeline import LocalTest, ProtocolPipeline
from qcore.operators import apply_local, conjugate_local, partial_trace_matrix, permute_subsystems
from qcore.states import DensityOperator, StateVector
from utils.common import LayoutError, check_dimension
from utils.rng import spawn_generators

logger = logging.getLogger(__name__)

BATCH_SIZE = 8192
MAX_BRANCHES = 4096

Proof = Union[StateVector, DensityOperator]


@dataclass(frozen=True)
class SampledStatistics:
    shots: int
    seed: int
    accept_frequency: float
    node_reject: Dict[str, float] = field(default_factory=dict)

    @property
    def accept_stderr(self) -> float:
        p = self.accept_frequency
        return math.sqrt(p * (1 - p) / self.shots)

    def agrees_with(self, probability: float, sigmas: float = 3.0) -> bool:
        """|frequency - probability| within `sigmas` standard errors of the exact value."""
        sigma = math.sqrt(max(probability * (1 - probability), 0.0) / self.shots)
        return abs(self.accept_frequency - probability) <= sigmas * sigma + 1e-12

    def to_dict(self) -> dict:
        return {"shots": self.shots, "seed": self.seed, "accept_frequency": self.accept_frequency,
                "accept_stderr": self.accept_stderr, "node_reject": dict(self.node_reject)}


def _initial_state(pipeline: ProtocolPipeline, proof: Proof) -> np.ndarray:
    layout = pipeline.layout
    proof_ids = pipeline.proof_layout.ids
    if proof.layout.dims != pipeline.proof_layout.dims:
        raise LayoutError("proof does not match the pipeline's proof registers")
    prepared = pipeline.prepared_map
    rho = proof.density().matrix if isinstance(proof, StateVector) else np.array(proof.matrix)
    order_ids = list(proof_ids)
    for reg_id in layout.ids:
        if reg_id in prepared:
            v = prepared[reg_id]
            rho = np.kron(rho, np.outer(v, v.conj()))
            order_ids.append(reg_id)
    dims = [layout.register(r).dimension for r in order_ids]
    return permute_subsystems(rho, dims, [order_ids.index(r) for r in layout.ids])


def _joint_outcomes(mat: np.ndarray, dims: List[int], ids: List[str], tests: Sequence[LocalTest]) -> Dict[Tuple[bool, ...], float]:
    """Pr[o_1 ... o_m] = tr((⊗ F_j) ρ) for disjoint tests, contracting one test at a time."""
    if not tests:
        return {(): float(np.trace(mat).real)}
    test = tests[0]
    positions = [ids.index(r) for r in test.registers]
    keep = [p for p in range(len(ids)) if p not in positions]
    out: Dict[Tuple[bool, ...], float] = {}
    element = np.array(test.element)
    for accepted, f in ((True, element), (False, np.eye(element.shape[0]) - element)):
        reduced = partial_trace_matrix(apply_local(mat, dims, positions, f), dims, keep)
        sub = _joint_outcomes(reduced, [dims[p] for p in keep], [ids[p] for p in keep], tests[1:])
        for key, prob in sub.items():
            out[(accepted,) + key] = prob
    return out


def outcome_distribution(pipeline: ProtocolPipeline, proof: Proof) -> Tuple[List[Tuple[Tuple[int, ...], Tuple[bool, ...]]], np.ndarray]:
    """
    Joint distribution over (unitary drawn from every channel, outcome of every test),
    evolving the full state in the Schrödinger picture.
    """
    layout = pipeline.layout
    check_dimension(layout.total_dimension, "sampled state")
    rho0 = _initial_state(pipeline, proof)
    dims = layout.dims
    choices = list(itertools.product(*[range(len(ch.terms)) for ch in pipeline.channels]))
    if len(choices) > MAX_BRANCHES:
        # draws are independent of the tests, so sample from the channel-averaged state
        logger.info("%d channel branches; sampling the averaged state", len(choices))
        rho = rho0
        for ch in pipeline.channels:
            rho = ch.act(rho, dims, layout.positions(ch.registers))
        branches = [((), 1.0, rho)]
    else:
        branches = []
        for choice in choices:
            rho = rho0
            weight = 1.0
            for ch, index in zip(pipeline.channels, choice):
                prob, u = ch.terms[index]
                weight *= prob
                rho = conjugate_local(rho, dims, layout.positions(ch.registers), u)
            branches.append((choice, weight, rho))
    events, probs = [], []
    for choice, weight, rho in branches:
        if weight == 0.0:
            continue
        for outcome, p in _joint_outcomes(rho, dims, layout.ids, list(pipeline.tests)).items():
            events.append((choice, outcome))
            probs.append(weight * max(p, 0.0))
    probs = np.array(probs)
    return events, probs / probs.sum()


def simulate_sampled(pipeline: ProtocolPipeline, proof: Proof, shots: int, seed: int, threads: int = 1,
                     batch_size: int = BATCH_SIZE) -> SampledStatistics:
    """
    Shot-by-shot execution: every shot draws one unitary per channel and one outcome per test.
    Batches use independent counter-based streams spawned from `seed`, so the result does not
    depend on `threads`.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    events, probs = outcome_distribution(pipeline, proof)
    batches = [min(batch_size, shots - start) for start in range(0, shots, batch_size)]
    streams = spawn_generators(seed, len(batches))

    def draw(args):
        count, rng = args
        return rng.multinomial(count, probs)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = sum(pool.map(draw, zip(batches, streams)))
    else:
        counts = sum(map(draw, zip(batches, streams)))

    failed = set(pipeline.failed_guard_nodes())
    node_of = [t.node for t in pipeline.tests]
    accepted = 0
    rejects = {node: 0 for node in pipeline.nodes}
    for (_, outcome), count in zip(events, counts):
        if count == 0:
            continue
        rejecting = {node for node, ok in zip(node_of, outcome) if not ok} | failed
        if not rejecting:
            accepted += int(count)
        for node in rejecting:
            rejects[node] += int(count)
    logger.debug("%s: %d/%d shots accepted", pipeline.name, accepted, shots)
    return SampledStatistics(shots, seed, accepted / shots, {v: c / shots for v, c in rejects.items()})
