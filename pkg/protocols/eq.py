import logging
from dataclasses import dataclass
from enum import IntEnum
from typing import List, Optional

import numpy as np

from fingerprint.oneway import OneWayProtocol, eq_one_way
from fingerprint.scheme import FingerprintScheme
from network.pipeline import ProtocolPipeline
from network.topology import Topology, path_node
from protocols.builder import PipelineBuilder, forward_chain, rep_tag
from utils.bits import check_bits
from utils.common import MAX_PERMUTATION_REGISTERS, ProtocolError, check_dimension

logger = logging.getLogger(__name__)


def eq_path_soundness_bound(r: int, k: int = 1) -> float:
    """Upper bound on a no-instance's acceptance: (1 - 4/(81 r²))^k."""
    return (1.0 - 4.0 / (81.0 * r * r)) ** k


@dataclass(frozen=True)
class EqPathParams:
    """
    EQ on the path v0 .. vr. `gap`, when set, removes the proofs and tests of the two consecutive
    intermediate nodes v_gap, v_{gap+1} (and the SWAP test at v_{gap+2}); the chain to the right
    of the gap then carries |h_y⟩ honestly.
    """
    r: int
    scheme: FingerprintScheme
    x: str
    y: str
    k: int = 1
    gap: Optional[int] = None

    def __post_init__(self):
        if self.r < 1:
            raise ProtocolError("path length r must be at least 1")
        if self.k < 1:
            raise ProtocolError("repetitions k must be at least 1")
        check_bits(self.x, self.scheme.n)
        check_bits(self.y, self.scheme.n)
        if self.gap is not None and not 1 <= self.gap <= self.r - 2:
            raise ProtocolError(f"gap nodes v{self.gap}, v{self.gap + 1} must both be intermediate (r={self.r})")
        check_dimension(self.scheme.state_dimension ** (2 * (self.r - 1) * self.k), "proof space")

    @property
    def gap_nodes(self) -> tuple:
        return () if self.gap is None else (self.gap, self.gap + 1)

    def to_dict(self) -> dict:
        return {"protocol": "eq_path", "r": self.r, "n": self.scheme.n, "k": self.k, "x": self.x, "y": self.y,
                "scheme": self.scheme.to_dict(), "gap": self.gap}


def eq_segment(b: PipelineBuilder, scheme: FingerprintScheme, start: int, end: int, left: str, right: str,
               k: int, skip=(), honest_right_after: Optional[int] = None, prefix: str = "") -> None:
    """
    k repetitions of the EQ chain between v_start (prepares |h_left⟩) and v_end (accepts on
    |h_right⟩⟨h_right|). Intermediate proofs are |h_left⟩ honestly, or |h_right⟩ beyond
    `honest_right_after`.
    """
    m = scheme.state_dimension
    h_left = scheme.state(left)
    h_right = scheme.state(right)
    final = np.outer(h_right, h_right.conj())
    source, sink = path_node(start), path_node(end)

    def honest(j: int) -> np.ndarray:
        return h_right if honest_right_after is not None and j > honest_right_after else h_left

    for i in range(k):
        tag = prefix + rep_tag(i, k)
        reg = b.prepare(f"X{start}{tag}", h_left, source, label=f"h({left})")
        incoming = forward_chain(b, start, end, [reg], m, honest, tag, skip)
        if incoming is not None:
            b.test(sink, incoming, final, f"povm@{sink}{tag}")


def build_eq_path(p: EqPathParams) -> ProtocolPipeline:
    b = PipelineBuilder([path_node(j) for j in range(p.r + 1)])
    eq_one_way(p.scheme)  # rejects schemes whose overlap bound is too weak
    eq_segment(b, p.scheme, 0, p.r, p.x, p.y, p.k, skip=p.gap_nodes,
               honest_right_after=None if p.gap is None else p.gap + 1)
    name = "eq_path" if p.gap is None else f"eq_path[gap={p.gap}]"
    return b.build(name, p.to_dict(), path=True)


class FlowDirection(IntEnum):
    LEAVES_TO_ROOT = 0
    ROOT_TO_LEAVES = 1


@dataclass(frozen=True)
class TreeProtocolParams:
    """
    Protocol on a rooted tree whose terminals carry the inputs. EQ trees take a fingerprint
    scheme; the ∀f conversion takes a one-way protocol.
    """
    topology: Topology
    scheme: Optional[FingerprintScheme] = None
    protocol: Optional[OneWayProtocol] = None
    k: int = 1
    direction: FlowDirection = FlowDirection.LEAVES_TO_ROOT

    def __post_init__(self):
        if self.k < 1:
            raise ProtocolError("repetitions k must be at least 1")
        if self.scheme is None and self.protocol is None:
            raise ProtocolError("tree protocol needs a fingerprint scheme or a one-way protocol")
        n = self.scheme.n if self.scheme is not None else self.protocol.n
        for node, x in self.topology.terminals:
            check_bits(x, n)

    def to_dict(self) -> dict:
        out = {"k": self.k, "direction": self.direction.name.lower(), "topology": self.topology.to_dict()}
        if self.scheme is not None:
            out["scheme"] = self.scheme.to_dict()
        if self.protocol is not None:
            out["oneway"] = self.protocol.name
        return out


def _check_degree(topology: Topology, node: str, registers: int) -> None:
    if registers > MAX_PERMUTATION_REGISTERS:
        raise ProtocolError(f"node {node} needs {registers} symmetrized registers; the cap is {MAX_PERMUTATION_REGISTERS}")


def oneway_tree(b: PipelineBuilder, topology: Topology, protocol: OneWayProtocol, k: int) -> None:
    """
    Root-to-leaves flow: the root prepares its one-way message for every child, each internal node
    holds δ+1 registers (δ children) that it symmetrizes, SWAP-tests the parent's register against
    the kept one and forwards the rest; terminal leaves apply the protocol's accepting element.
    """
    inputs = topology.inputs
    root = topology.root
    if root not in inputs:
        raise ProtocolError(f"root {root} must hold an input")
    msg = protocol.message(inputs[root])
    dim = protocol.message_dimension
    for i in range(k):
        tag = rep_tag(i, k)
        incoming = {}
        for v in topology.nodes:
            children = topology.children(v)
            if v == root:
                for c in children:
                    reg = b.prepare(f"M{root}>{c}{tag}", msg, root, label=f"message({inputs[root]})")
                    b.send(root, c, [reg])
                    incoming[c] = reg
            elif children:
                _check_degree(topology, v, len(children) + 1)
                regs = [b.proof(f"R{v},{mu}{tag}", dim, v, msg) for mu in range(len(children) + 1)]
                b.symmetrize(regs, f"sym@{v}{tag}")
                b.swap_test(v, [incoming[v]], [regs[0]], f"swap@{v}{tag}")
                for reg, c in zip(regs[1:], children):
                    b.send(v, c, [reg])
                    incoming[c] = reg
            elif v in inputs:
                b.test(v, [incoming[v]], protocol.accept_element(inputs[v]), f"povm@{v}{tag}")
            else:
                raise ProtocolError(f"leaf {v} holds no input")


def is_path_shaped(topology: Topology) -> bool:
    g = topology.graph
    return g.degree[topology.root] <= 1 and all(g.degree[v] <= 2 for v in g.nodes)


def build_eq_tree(p: TreeProtocolParams) -> ProtocolPipeline:
    """
    EQ on a tree. Leaves-to-root: terminal leaves send |h_x⟩ upward, every other node symmetrizes
    its two proof registers, forwards one to its parent and permutation-tests the kept one with
    the registers of its children; the root tests its own |h_x⟩ with its children's registers.
    Root-to-leaves is the one-way EQ message flow (on a path it is the path protocol).
    """
    if p.scheme is None:
        raise ProtocolError("EQ tree needs a fingerprint scheme")
    topology = p.topology
    scheme = p.scheme
    b = PipelineBuilder(topology.nodes)
    params = {"protocol": "eq_tree", "n": scheme.n, **p.to_dict()}
    if p.direction == FlowDirection.ROOT_TO_LEAVES:
        oneway_tree(b, topology, eq_one_way(scheme), p.k)
        return b.build("eq_tree", params, path=is_path_shaped(topology))

    eq_one_way(scheme)
    inputs = topology.inputs
    root = topology.root
    if root not in inputs:
        raise ProtocolError(f"root {root} must hold an input")
    m = scheme.state_dimension
    h_root = scheme.state(inputs[root])
    check_dimension(m ** (2 * (len(topology.nodes) - len(inputs)) * p.k), "proof space")
    for i in range(p.k):
        tag = rep_tag(i, p.k)
        kept, sent = {}, {}
        for v in topology.nodes:
            if v in inputs:
                reg = b.prepare(f"F{v}{tag}", scheme.state(inputs[v]), v, label=f"h({inputs[v]})")
                if v == root:
                    kept[v] = reg
                else:
                    sent[v] = reg
            elif topology.is_leaf(v):
                raise ProtocolError(f"leaf {v} holds no input")
            else:
                kept[v] = b.proof(f"R{v},0{tag}", m, v, h_root)
                sent[v] = b.proof(f"R{v},1{tag}", m, v, h_root)
                b.symmetrize([kept[v], sent[v]], f"sym@{v}{tag}")
        for v in topology.nodes:
            children = topology.children(v)
            if not children:
                continue
            _check_degree(topology, v, len(children) + 1)
            for c in children:
                b.send(c, v, [sent[c]])
            b.permutation_test(v, [kept[v]] + [sent[c] for c in children], f"perm@{v}{tag}")
    return b.build("eq_tree", params, path=is_path_shaped(topology))


def eq_tree_soundness_bound(topology: Topology, k: int = 1) -> float:
    """The path bound for the longest root-to-terminal path."""
    r = max(topology.depth[u] for u in topology.inputs)
    return eq_path_soundness_bound(max(r, 1), k)


def deviant_terminals(topology: Topology) -> List[str]:
    """Terminals whose input differs from the root's."""
    inputs = topology.inputs
    return [u for u, x in inputs.items() if x != inputs[topology.root]]
