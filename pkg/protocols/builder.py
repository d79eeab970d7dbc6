import logging
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from network.pipeline import ClassicalGuard, LocalTest, Message, PreparedState, ProtocolPipeline
from network.topology import path_node
from qcore.channels import single_unitary
from qcore.layout import Register, RegisterLayout, Role
from swaptest.acceptance import permutation_test_element, swap_test_element, symmetrize_channel
from utils.common import LayoutError

logger = logging.getLogger(__name__)


class PipelineBuilder:
    """
    Incrementally collects registers, node-prepared states, channels, tests and messages,
    then freezes them into a ProtocolPipeline.
    """

    def __init__(self, nodes: Sequence[str]):
        self.nodes = list(nodes)
        self.registers: List[Register] = []
        self.prepared: List[PreparedState] = []
        self.channels = []
        self.tests: List[LocalTest] = []
        self.guards: List[ClassicalGuard] = []
        self.messages: List[Message] = []
        self.honest: Dict[str, np.ndarray] = {}
        self.honest_defined = True

    @property
    def layout(self) -> RegisterLayout:
        return RegisterLayout(tuple(self.registers))

    def _dim(self, reg_id: str) -> int:
        for reg in self.registers:
            if reg.id == reg_id:
                return reg.dimension
        raise LayoutError(f"unknown register {reg_id!r}")

    def proof(self, reg_id: str, dimension: int, owner: str, honest: Optional[np.ndarray] = None) -> str:
        self.registers.append(Register(reg_id, dimension, owner, Role.PROOF))
        if honest is None:
            self.honest_defined = False
        else:
            self.honest[reg_id] = honest
        return reg_id

    def prepare(self, reg_id: str, vector: np.ndarray, owner: str, label: str = "", role: Role = Role.PREPARED) -> str:
        self.registers.append(Register(reg_id, len(vector), owner, role))
        self.prepared.append(PreparedState(reg_id, vector, label))
        return reg_id

    def symmetrize(self, reg_ids: Sequence[str], label: str | None = None) -> None:
        sub = RegisterLayout(tuple(r for r in self.registers if r.id in reg_ids)).sub(list(reg_ids))
        self.channels.append(symmetrize_channel(sub, label))

    def unitary(self, reg_ids: Sequence[str], u: np.ndarray, label: str) -> None:
        sub = RegisterLayout(tuple(r for r in self.registers if r.id in reg_ids)).sub(list(reg_ids))
        self.channels.append(single_unitary(sub, u, label))

    def test(self, node: str, reg_ids: Sequence[str], element: np.ndarray, label: str) -> None:
        self.tests.append(LocalTest(node, tuple(reg_ids), element, label))

    def swap_test(self, node: str, left: Sequence[str], right: Sequence[str], label: str | None = None) -> None:
        """SWAP test between two register groups of equal total dimension."""
        d_left = int(np.prod([self._dim(r) for r in left]))
        d_right = int(np.prod([self._dim(r) for r in right]))
        if d_left != d_right:
            raise LayoutError(f"SWAP test on groups of dimension {d_left} and {d_right}")
        self.test(node, list(left) + list(right), swap_test_element(d_left), label or f"swap@{node}")

    def permutation_test(self, node: str, reg_ids: Sequence[str], label: str | None = None) -> None:
        dims = {self._dim(r) for r in reg_ids}
        if len(dims) != 1:
            raise LayoutError(f"permutation test on unequal registers {list(reg_ids)}")
        self.test(node, reg_ids, permutation_test_element(len(reg_ids), dims.pop()), label or f"perm@{node}")

    def guard(self, node: str, description: str, passed: bool) -> None:
        self.guards.append(ClassicalGuard(node, description, passed))

    def send(self, source: str, target: str, reg_ids: Sequence[str]) -> None:
        self.messages.append(Message(source, target, tuple(reg_ids)))

    def build(self, name: str, params: dict, path: bool = False) -> ProtocolPipeline:
        pipeline = ProtocolPipeline(
            name=name,
            layout=self.layout,
            nodes=tuple(self.nodes),
            prepared=tuple(self.prepared),
            channels=tuple(self.channels),
            tests=tuple(self.tests),
            guards=tuple(self.guards),
            messages=tuple(self.messages),
            params=params,
            honest=dict(self.honest) if self.honest_defined else None,
            path=path,
        )
        logger.debug("built %s: %d registers, %d channels, %d tests, proof dimension %d", name,
                     len(pipeline.layout), len(pipeline.channels), len(pipeline.tests), pipeline.proof_dimension)
        return pipeline


def forward_chain(b: PipelineBuilder, start: int, end: int, incoming: Optional[List[str]], dimension: int,
                  honest: Callable[[int], Optional[np.ndarray]], tag: str = "",
                  skip: Sequence[int] = ()) -> Optional[List[str]]:
    """
    Intermediate nodes v_{start+1} .. v_{end-1} of a path segment. Each holds two proof registers
    (R_{j,0}, R_{j,1}), symmetrizes them, SWAP-tests the register from its left neighbour against
    R_{j,0} and forwards R_{j,1}. Nodes listed in `skip` hold no proof and test nothing.
    Returns the register group arriving at v_end (None if the chain was cut).
    """
    if incoming is not None:
        b.send(path_node(start), path_node(start + 1), incoming)
    for j in range(start + 1, end):
        node = path_node(j)
        if j in skip:
            incoming = None
            continue
        r0 = b.proof(f"R{j},0{tag}", dimension, node, honest(j))
        r1 = b.proof(f"R{j},1{tag}", dimension, node, honest(j))
        b.symmetrize([r0, r1], f"sym@{node}{tag}")
        if incoming is not None:
            b.swap_test(node, incoming, [r0], f"swap@{node}{tag}")
        b.send(node, path_node(j + 1), [r1])
        incoming = [r1]
    return incoming


def rep_tag(i: int, k: int) -> str:
    return f"#{i}" if k > 1 else ""
