"""
Two-party QMA* protocol from a path dQMA protocol cut at the edge (v_i, v_{i+1}).

Alice runs v_0..v_i on their proofs, Bob runs v_{i+1}..v_r on theirs, and the only
communication is what crosses the cut edge. The joint acceptance operator is unchanged.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Tuple, Union

from network.compiler import AcceptanceModel, group_operator
from network.pipeline import ProtocolPipeline
from qcore.eigen import top_eigenpair
from qcore.states import DensityOperator, HermitianOperator, StateVector
from utils.common import LayoutError, ProtocolError, fmt

logger = logging.getLogger(__name__)


def qubits(dimension: int) -> int:
    """Qubits needed for a register, padding its dimension up to a power of two."""
    q = math.ceil(math.log2(dimension)) if dimension > 1 else 0
    if 2 ** q != dimension:
        logger.info("dimension %d padded to %d for qubit accounting", dimension, 2 ** q)
    return q


@dataclass(frozen=True)
class TwoPartyQmaModel:
    cut_index: int
    alice_nodes: Tuple[str, ...]
    bob_nodes: Tuple[str, ...]
    alice_registers: Tuple[str, ...]
    bob_registers: Tuple[str, ...]
    crossing_registers: Tuple[str, ...]
    gamma1: int
    gamma2: int
    mu: int
    accept_operator: HermitianOperator = field(compare=False, repr=False)
    alice_operator: HermitianOperator = field(compare=False, repr=False)
    bob_operator: HermitianOperator = field(compare=False, repr=False)

    @property
    def total_cost(self) -> int:
        return self.gamma1 + self.gamma2 + self.mu

    def accept_probability(self, proof: Union[StateVector, DensityOperator]) -> float:
        return self.accept_operator.expectation(proof)

    def alice_accept(self, proof: Union[StateVector, DensityOperator]) -> float:
        return self.alice_operator.expectation(proof)

    def bob_accept(self, proof: Union[StateVector, DensityOperator]) -> float:
        return self.bob_operator.expectation(proof)

    def to_dict(self) -> dict:
        return {
            "i": self.cut_index,
            "alice_nodes": list(self.alice_nodes),
            "bob_nodes": list(self.bob_nodes),
            "crossing_registers": list(self.crossing_registers),
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "mu": self.mu,
            "total_cost": self.total_cost,
        }


def cut_to_two_party(model: AcceptanceModel, pipeline: ProtocolPipeline, i: int) -> TwoPartyQmaModel:
    if not pipeline.path:
        raise ProtocolError(f"{pipeline.name} is not a path protocol")
    nodes = list(pipeline.nodes)
    if not 0 <= i < len(nodes) - 1:
        raise ProtocolError(f"cut index {i} outside 0..{len(nodes) - 2}")
    alice_nodes, bob_nodes = nodes[:i + 1], nodes[i + 1:]
    layout = model.proof_layout
    alice = [r for r in layout.registers if r.owner in alice_nodes]
    bob = [r for r in layout.registers if r.owner in bob_nodes]
    if len(alice) + len(bob) != len(layout):
        stray = sorted(set(layout.ids) - {r.id for r in alice + bob})
        raise LayoutError(f"proof registers {stray} belong to no node of the path")

    edge = {nodes[i], nodes[i + 1]}
    crossing: List[str] = []
    for m in pipeline.messages:
        if {m.source, m.target} == edge:
            crossing.extend(r for r in m.registers if r not in crossing)
    full = pipeline.layout
    gamma1 = sum(qubits(r.dimension) for r in alice)
    gamma2 = sum(qubits(r.dimension) for r in bob)
    mu = sum(qubits(full.register(r).dimension) for r in crossing)
    logger.debug("cut %d of %s: gamma1=%d gamma2=%d mu=%d", i, pipeline.name, gamma1, gamma2, mu)
    return TwoPartyQmaModel(
        i, tuple(alice_nodes), tuple(bob_nodes), tuple(r.id for r in alice), tuple(r.id for r in bob),
        tuple(crossing), gamma1, gamma2, mu, model.accept_operator,
        group_operator(pipeline, alice_nodes).embed(layout), group_operator(pipeline, bob_nodes).embed(layout),
    )


def cut_report(model: AcceptanceModel, pipeline: ProtocolPipeline, threads: int = 1) -> List[dict]:
    """Costs and optimal acceptance of the two-party protocol at every cut, in cut order."""
    def one(i: int) -> dict:
        two = cut_to_two_party(model, pipeline, i)
        value, _ = top_eigenpair(two.accept_operator)
        out = {k: v for k, v in two.to_dict().items() if k in ("i", "gamma1", "gamma2", "mu", "total_cost")}
        out["accept_value"] = fmt(value)
        return out

    cuts = range(len(pipeline.nodes) - 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, cuts))
    return [one(i) for i in cuts]
