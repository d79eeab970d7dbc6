import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from network.compiler import AcceptanceModel
from network.pipeline import ProtocolPipeline
from qcore.eigen import top_eigenpair
from qcore.layout import RegisterLayout
from qcore.operators import contract_vector, permute_subsystems, permute_vector
from qcore.states import DensityOperator, HermitianOperator, StateVector
from utils.common import ATOL, LayoutError, ProtocolError
from utils.rng import random_state_vector, spawn_generators

logger = logging.getLogger(__name__)

Proof = Union[StateVector, DensityOperator]


class StrategyKind(IntEnum):
    HONEST = 0
    ENTANGLED_OPT = 1
    SEPARABLE_OPT = 2
    EXPLICIT = 3
    ATTACK = 4


@dataclass(frozen=True)
class SeeSawOptions:
    restarts: int = 16
    max_iters: int = 200
    tol: float = 1e-9
    seed: int = 0
    threads: int = 1


@dataclass(frozen=True)
class ProverStrategy:
    """How the prover fills the proof registers."""
    kind: StrategyKind
    options: SeeSawOptions = field(default_factory=SeeSawOptions)
    state: Optional[Proof] = field(default=None, compare=False)
    attack: Optional[str] = None

    def __post_init__(self):
        if self.kind == StrategyKind.EXPLICIT and self.state is None:
            raise ProtocolError("explicit strategy needs a state")
        if self.kind == StrategyKind.ATTACK and not self.attack:
            raise ProtocolError("attack strategy needs an attack name")

    def proof(self, model: AcceptanceModel) -> Proof:
        if self.kind == StrategyKind.HONEST:
            return honest_proof(model.pipeline)
        if self.kind == StrategyKind.ENTANGLED_OPT:
            return optimal_entangled_value(model)[1]
        if self.kind == StrategyKind.SEPARABLE_OPT:
            return optimal_separable_value(model, options=self.options).state()
        if self.kind == StrategyKind.EXPLICIT:
            if self.state.layout.dims != model.proof_layout.dims:
                raise LayoutError(f"explicit proof of dimensions {self.state.layout.dims} does not match "
                                  f"{model.proof_layout.dims}")
            return self.state
        raise ProtocolError(f"attack {self.attack!r} builds its own proofs; run it through adversary.attacks")


def honest_proof(pipeline: ProtocolPipeline) -> StateVector:
    """The product proof of the protocol's completeness argument."""
    state = pipeline.honest_state()
    if state is None:
        raise ProtocolError(f"{pipeline.name} has no honest proof for these inputs")
    return state


def _operator(model: Union[AcceptanceModel, HermitianOperator]) -> HermitianOperator:
    return model.accept_operator if isinstance(model, AcceptanceModel) else model


def optimal_entangled_value(model: Union[AcceptanceModel, HermitianOperator]) -> Tuple[float, StateVector]:
    """sup over all proofs of tr(Aρ) is λ_max(A), attained by its top eigenvector."""
    return top_eigenpair(_operator(model))


def node_grouping(layout: RegisterLayout) -> List[List[str]]:
    """Proof registers grouped by owning node, in layout order."""
    groups = {}
    for reg in layout.registers:
        groups.setdefault(reg.owner, []).append(reg.id)
    return list(groups.values())


@dataclass(frozen=True)
class SeparableResult:
    """Best product proof found by see-saw; `value` is a lower bound on the separable optimum."""
    value: float
    layout: RegisterLayout
    grouping: Tuple[Tuple[str, ...], ...]
    parts: Tuple[np.ndarray, ...] = field(compare=False)
    converged: bool = True
    iterations: int = 0
    restart_values: Tuple[float, ...] = ()

    def state(self) -> StateVector:
        amps = np.ones(1, dtype=complex)
        for v in self.parts:
            amps = np.kron(amps, v)
        order = [r for g in self.grouping for r in g]
        grouped = self.layout.sub(order)
        positions = grouped.positions(self.layout.ids)
        return StateVector(self.layout, permute_vector(amps, grouped.dims, positions))


class _SeeSaw:
    def __init__(self, matrix: np.ndarray, group_dims: List[int], options: SeeSawOptions):
        self.matrix = matrix
        self.dims = group_dims
        self.options = options

    def effective(self, vectors: List[np.ndarray], g: int) -> np.ndarray:
        mat = self.matrix
        dims = list(self.dims)
        for h in reversed(range(len(dims))):
            if h == g:
                continue
            mat = contract_vector(mat, dims, h, vectors[h])
            dims.pop(h)
        return (mat + mat.conj().T) / 2

    def run(self, vectors: List[np.ndarray]) -> Tuple[float, List[np.ndarray], bool, int]:
        value = -np.inf
        vectors = list(vectors)
        for it in range(1, self.options.max_iters + 1):
            previous = value
            for g, d in enumerate(self.dims):
                eff = self.effective(vectors, g)
                value, vec = top_eigenpair(HermitianOperator(RegisterLayout.of(("g", d)), eff))
                vectors[g] = np.array(vec.amplitudes)
            if value - previous < self.options.tol:
                return float(value), vectors, True, it
        return float(value), vectors, False, self.options.max_iters


def _warm_starts(matrix: np.ndarray, group_dims: List[int], honest: Optional[List[np.ndarray]]) -> List[List[np.ndarray]]:
    starts = []
    if honest is not None:
        starts.append(honest)
    # marginals of the entangled optimum
    w, v = np.linalg.eigh(matrix)
    psi = v[:, -1]
    marg = []
    total = len(group_dims)
    for g, d in enumerate(group_dims):
        order = [g] + [h for h in range(total) if h != g]
        m = permute_vector(psi, group_dims, order).reshape(d, -1)
        u, _, _ = np.linalg.svd(m, full_matrices=False)
        marg.append(u[:, 0])
    starts.append(marg)
    return starts


def optimal_separable_value(model: Union[AcceptanceModel, HermitianOperator],
                            grouping: Optional[Sequence[Sequence[str]]] = None,
                            options: SeeSawOptions = SeeSawOptions()) -> SeparableResult:
    """
    See-saw over proofs that are products across `grouping` (default: one group per node).
    Each step fixes every group but one and replaces the free one by the top eigenvector of the
    resulting effective operator. Warm starts (honest proof, marginals of the entangled optimum)
    are followed by `options.restarts` random starts drawn from `options.seed`.
    """
    op = _operator(model)
    layout = op.layout
    grouping = [list(g) for g in (grouping or node_grouping(layout))]
    covered = [r for g in grouping for r in g]
    if sorted(covered) != sorted(layout.ids):
        raise LayoutError(f"grouping {grouping} does not partition the proof registers {layout.ids}")
    if not grouping:
        value = float(op.matrix[0, 0].real)
        return SeparableResult(value, layout, (), (), True, 0, (value,))

    order = layout.positions(covered)
    matrix = permute_subsystems(np.array(op.matrix), layout.dims, order)
    group_dims = [layout.dimension_of(g) for g in grouping]
    honest = None
    if isinstance(model, AcceptanceModel) and model.pipeline.honest is not None:
        honest = []
        for g in grouping:
            v = np.ones(1, dtype=complex)
            for r in g:
                v = np.kron(v, model.pipeline.honest[r])
            honest.append(v)
    starts = _warm_starts(matrix, group_dims, honest)
    for rng in spawn_generators(options.seed, options.restarts):
        starts.append([random_state_vector(d, rng) for d in group_dims])

    seesaw = _SeeSaw(matrix, group_dims, options)
    if options.threads > 1:
        with ThreadPoolExecutor(max_workers=options.threads) as pool:
            runs = list(pool.map(seesaw.run, starts))
    else:
        runs = [seesaw.run(s) for s in starts]

    best = max(range(len(runs)), key=lambda i: runs[i][0])
    value, vectors, converged, iterations = runs[best]
    if not converged:
        logger.warning("see-saw did not converge within %d iterations (best %.12g)", options.max_iters, value)
    logger.debug("separable value %.12g from start %d of %d", value, best, len(runs))
    entangled = top_eigenpair(op)[0]
    if value > entangled + ATOL:
        logger.warning("separable value %.12g above entangled optimum %.12g", value, entangled)
    return SeparableResult(min(value, 1.0), layout, tuple(tuple(g) for g in grouping), tuple(vectors), converged,
                           iterations, tuple(r[0] for r in runs))
