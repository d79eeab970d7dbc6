"""
Heisenberg-picture compilation of a pipeline into its acceptance operator.

The tests' accepting elements are pulled back through the mixing channels in reverse order,
prepared registers are contracted against their states, and what remains is an operator on
the proof registers with Pr[accept] = tr(A ρ).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from network.pipeline import LocalTest, ProtocolPipeline, split_components
from qcore.layout import RegisterLayout
from qcore.operators import contract_vector, embed, kron_all, partial_trace_matrix, permute_vector
from qcore.states import DensityOperator, HermitianOperator, StateVector
from utils.common import LayoutError, check_dimension

logger = logging.getLogger(__name__)

Proof = Union[StateVector, DensityOperator]


@dataclass(frozen=True)
class LocalOperator:
    """Operator on a subset of the proof registers (identity elsewhere)."""
    registers: Tuple[str, ...]
    dims: Tuple[int, ...]
    matrix: np.ndarray = field(compare=False)

    def embed(self, layout: RegisterLayout) -> HermitianOperator:
        positions = layout.positions(self.registers)
        full = embed(self.matrix, self.dims, positions, layout.dims)
        return HermitianOperator(layout, (full + full.conj().T) / 2)

    def expectation(self, proof: Proof) -> float:
        """tr((M ⊗ I) ρ) using only the reduced state on this operator's registers."""
        layout = proof.layout
        positions = layout.positions(self.registers)
        if isinstance(proof, StateVector):
            rest = [p for p in range(len(layout)) if p not in positions]
            psi = permute_vector(proof.amplitudes, layout.dims, positions + rest)
            m = psi.reshape(int(np.prod(self.dims, dtype=np.int64)) if self.dims else 1, -1)
            reduced = m @ m.conj().T
        else:
            reduced = partial_trace_matrix(proof.matrix, layout.dims, positions)
        return float(np.trace(self.matrix @ reduced).real)


@dataclass(frozen=True)
class AcceptanceModel:
    pipeline: ProtocolPipeline
    accept_operator: HermitianOperator
    per_node: Dict[str, LocalOperator] = field(default_factory=dict)

    @property
    def proof_layout(self) -> RegisterLayout:
        return self.accept_operator.layout

    @property
    def proof_dimension(self) -> int:
        return self.accept_operator.dimension

    def per_node_operators(self) -> Dict[str, HermitianOperator]:
        return {node: op.embed(self.proof_layout) for node, op in self.per_node.items()}

    def accept_probability(self, proof: Proof) -> float:
        _check_proof(self, proof)
        return self.accept_operator.expectation(proof)


def _check_proof(model: AcceptanceModel, proof: Proof) -> None:
    if proof.layout.dims != model.proof_layout.dims:
        raise LayoutError(f"proof of dimensions {proof.layout.dims} on a model with {model.proof_layout.dims}")


def _pullback(pipeline: ProtocolPipeline, tests: Sequence[LocalTest]) -> LocalOperator:
    layout = pipeline.layout
    prepared = pipeline.prepared_map
    touched = {r for ch in pipeline.channels for r in ch.registers}

    def dims_of(regs: Sequence[str]) -> List[int]:
        return [layout.register(r).dimension for r in regs]

    mats: List[np.ndarray] = []
    support: List[str] = []
    for test in tests:
        regs = list(test.registers)
        mat = np.array(test.element)
        for reg in list(regs):
            if reg in prepared and reg not in touched:
                pos = regs.index(reg)
                mat = contract_vector(mat, dims_of(regs), pos, prepared[reg])
                regs.pop(pos)
        mats.append(mat)
        support.extend(regs)
    check_dimension(int(np.prod(dims_of(support), dtype=np.int64)), "compile working space")
    op = kron_all(mats)

    for ch in reversed(pipeline.channels):
        if not set(ch.registers) & set(support):
            continue
        new = [r for r in ch.registers if r not in support]
        if new:
            extra = int(np.prod(dims_of(new), dtype=np.int64))
            check_dimension(op.shape[0] * extra, "compile working space")
            op = np.kron(op, np.eye(extra, dtype=complex))
            support.extend(new)
        op = ch.act_adjoint(op, dims_of(support), [support.index(r) for r in ch.registers])
        logger.debug("pulled back through %s; support now %d registers", ch.label, len(support))

    for reg in [r for r in support if r in prepared]:
        pos = support.index(reg)
        op = contract_vector(op, dims_of(support), pos, prepared[reg])
        support.pop(pos)
    return LocalOperator(tuple(support), tuple(dims_of(support)), (op + op.conj().T) / 2)


def group_operator(pipeline: ProtocolPipeline, nodes: Sequence[str]) -> LocalOperator:
    """Joint acceptance of a set of nodes, ignoring every other node's outcome."""
    if set(pipeline.failed_guard_nodes()) & set(nodes):
        return LocalOperator((), (), np.zeros((1, 1), dtype=complex))
    return _pullback(pipeline, [t for t in pipeline.tests if t.node in nodes])


def compile(pipeline: ProtocolPipeline, per_node: bool = True) -> AcceptanceModel:
    """
    Acceptance operator A on the proof registers with tr(A ρ) = Pr[all nodes accept].
    Per-node operators give each node's own acceptance (its rejection is 1 - tr(A_v ρ)).
    """
    proof_layout = pipeline.proof_layout
    check_dimension(proof_layout.total_dimension, "proof space")
    if pipeline.guards_pass:
        accept = _pullback(pipeline, pipeline.tests).embed(proof_layout)
    else:
        logger.debug("%s: failed guards at %s", pipeline.name, pipeline.failed_guard_nodes())
        accept = HermitianOperator.zero(proof_layout)
    nodes: Dict[str, LocalOperator] = {}
    if per_node:
        for node in pipeline.nodes:
            nodes[node] = group_operator(pipeline, [node])
    return AcceptanceModel(pipeline, accept, nodes)


def compile_factored(pipeline: ProtocolPipeline, per_node: bool = True) -> List[AcceptanceModel]:
    """Compiles each tensor-disjoint component separately; the overall value is the product."""
    return [compile(part, per_node) for part in split_components(pipeline)]


def per_node_rejection(model: AcceptanceModel, proof: Proof) -> Dict[str, float]:
    """Marginal rejection probability of every node (other nodes not conditioned on)."""
    _check_proof(model, proof)
    return {node: float(np.clip(1.0 - op.expectation(proof), 0.0, 1.0)) for node, op in model.per_node.items()}


def restrict_proof(proof: StateVector, layout: RegisterLayout) -> Optional[StateVector]:
    """Component of a product proof on `layout`, or None if the proof is entangled across it."""
    positions = proof.layout.positions(layout.ids)
    rest = [p for p in range(len(proof.layout)) if p not in positions]
    psi = permute_vector(proof.amplitudes, proof.layout.dims, positions + rest)
    m = psi.reshape(layout.total_dimension, -1)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size > 1 and s[1] > 1e-9:
        return None
    return StateVector(layout, u[:, 0] * s[0] / np.linalg.norm(u[:, 0] * s[0]))
