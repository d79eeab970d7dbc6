import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List

import numpy as np

from fingerprint.oneway import OneWayQmaProtocol
from network.compiler import compile
from network.pipeline import ProtocolPipeline
from network.topology import path_node, spanning_tree
from protocols.builder import PipelineBuilder, forward_chain, rep_tag
from protocols.eq import TreeProtocolParams, is_path_shaped, oneway_tree
from qcore.eigen import top_eigenpair
from qcore.layout import Role
from utils.bits import check_bits
from utils.common import ProtocolError, check_dimension

logger = logging.getLogger(__name__)


def build_forall_f(p: TreeProtocolParams) -> List[ProtocolPipeline]:
    """
    ∀f over the terminals: one tree per terminal, rooted there, each running the one-way protocol
    from the root towards the other terminals. All trees must accept.
    """
    if p.protocol is None:
        raise ProtocolError("∀f needs a one-way protocol")
    topology = p.topology
    out = []
    for root, _ in topology.terminals:
        tree = spanning_tree(topology.graph, topology.inputs, root)
        b = PipelineBuilder(tree.nodes)
        oneway_tree(b, tree, p.protocol, p.k)
        params = {"protocol": "forall_f", "root": root, "n": p.protocol.n, **p.to_dict()}
        out.append(b.build(f"forall_f[{root}]", params, path=is_path_shaped(tree)))
    logger.debug("∀f with %s: %d trees", p.protocol.name, len(out))
    return out


def forall_f_holds(p: TreeProtocolParams) -> bool:
    f = p.protocol.predicate
    if f is None:
        raise ProtocolError(f"{p.protocol.name} carries no predicate")
    xs = [x for _, x in p.topology.terminals]
    return all(f(xs[a], xs[b]) for a in range(len(xs)) for b in range(len(xs)) if a != b)


def forall_f_value(pipelines: List[ProtocolPipeline], threads: int = 1) -> float:
    """Optimal acceptance of the combined protocol: the trees are tensor-disjoint."""
    def solve(pipeline: ProtocolPipeline) -> float:
        return top_eigenpair(compile(pipeline, per_node=False).accept_operator)[0]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(solve, pipelines))
    else:
        values = [solve(p) for p in pipelines]
    return float(np.prod(values))


def build_from_oneway_qma(q: OneWayQmaProtocol, r: int, x: str, y: str, k: int = 1) -> ProtocolPipeline:
    """
    Path conversion of a one-way QMA protocol: v0 receives Alice's proof, applies U_x to it with a
    fresh ancilla and forwards both registers; intermediate nodes run the symmetrize-and-SWAP chain
    on the whole message; vr measures M'_y.
    """
    if r < 1 or k < 1:
        raise ProtocolError("need r >= 1 and k >= 1")
    check_bits(x, q.n)
    check_bits(y, q.n)
    gamma, a = q.proof_dimension, q.ancilla_dimension
    d = q.message_dimension
    check_dimension(d, "message")
    check_dimension(gamma ** k * d ** (2 * (r - 1) * k), "proof space")
    _, xi = q.optimal_proof(x, y)
    ancilla = np.zeros(a, dtype=complex)
    ancilla[0] = 1.0
    u = q.unitary(x)
    message = u @ np.kron(xi, ancilla)
    b = PipelineBuilder([path_node(j) for j in range(r + 1)])
    for i in range(k):
        tag = rep_tag(i, k)
        proof = b.proof(f"R0,0{tag}", gamma, path_node(0), xi)
        anc = b.prepare(f"A0{tag}", ancilla, path_node(0), label="|0>", role=Role.ANCILLA)
        b.unitary([proof, anc], u, f"U_{x}{tag}")
        incoming = forward_chain(b, 0, r, [proof, anc], d, lambda j: message, tag)
        b.test(path_node(r), incoming, q.accept_element(y), f"povm@{path_node(r)}{tag}")
    params = {"protocol": "oneway_qma", "oneway": q.name, "r": r, "n": q.n, "x": x, "y": y, "k": k}
    return b.build(f"oneway_qma[{q.name}]", params, path=True)
