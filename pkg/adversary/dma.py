import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from utils.bits import all_bitstrings, check_bits
from utils.common import ProtocolError

logger = logging.getLogger(__name__)

MAX_NODES = 7
MAX_PROOF_BITS = 3

# node_accept(j, local input or None, left proof, own proof, right proof) -> probability
Decision = Callable[[int, Optional[str], Optional[str], str, Optional[str]], float]


@dataclass(frozen=True)
class ClassicalDmaProtocol:
    """
    Classical dMA protocol on the path v0 .. vr: node v_j receives a proof of proof_bits[j] bits,
    sees its neighbours' proofs and (at v0, vr) its input, and accepts with probability
    node_accept(...). Nodes use independent randomness.
    """
    name: str
    r: int
    n: int
    proof_bits: Tuple[int, ...]
    node_accept: Decision = field(compare=False)
    predicate: Optional[Callable[[str, str], bool]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "proof_bits", tuple(self.proof_bits))
        if len(self.proof_bits) != self.r + 1:
            raise ProtocolError(f"{len(self.proof_bits)} proof lengths for {self.r + 1} nodes")
        if self.r + 1 > MAX_NODES or max(self.proof_bits) > MAX_PROOF_BITS:
            raise ProtocolError(f"classical protocols are enumerated up to {MAX_NODES} nodes and "
                                f"{MAX_PROOF_BITS} proof bits per node")

    def local_input(self, j: int, x: str, y: str) -> Optional[str]:
        return x if j == 0 else y if j == self.r else None

    def node_probability(self, j: int, x: str, y: str, w: Tuple[str, ...]) -> float:
        left = w[j - 1] if j > 0 else None
        right = w[j + 1] if j < self.r else None
        p = float(self.node_accept(j, self.local_input(j, x, y), left, w[j], right))
        if not 0.0 <= p <= 1.0:
            raise ProtocolError(f"node {j} decision {p} is not a probability")
        return p

    def table(self, j: int) -> Dict[Tuple, float]:
        """Node j's decision table over its whole local view."""
        inputs = list(all_bitstrings(self.n)) if j in (0, self.r) else [None]
        left = list(all_bitstrings(self.proof_bits[j - 1])) if j > 0 else [None]
        own = list(all_bitstrings(self.proof_bits[j]))
        right = list(all_bitstrings(self.proof_bits[j + 1])) if j < self.r else [None]
        out = {}
        for view in itertools.product(inputs, left, own, right):
            p = float(self.node_accept(j, *view))
            if not 0.0 <= p <= 1.0:
                raise ProtocolError(f"node {j} decision {p} at {view} is not a probability")
            out[view] = p
        return out

    def assignments(self) -> Iterator[Tuple[str, ...]]:
        return itertools.product(*[list(all_bitstrings(c)) for c in self.proof_bits])

    def accept_probability(self, x: str, y: str, w: Tuple[str, ...]) -> float:
        check_bits(x, self.n)
        check_bits(y, self.n)
        for j, (c, wj) in enumerate(zip(self.proof_bits, w)):
            check_bits(wj, c)
        return float(np.prod([self.node_probability(j, x, y, tuple(w)) for j in range(self.r + 1)]))

    def best_proof(self, x: str, y: str) -> Tuple[float, Tuple[str, ...]]:
        """
        Max over proof assignments of the acceptance probability. Node j depends on w_{j-1}, w_j,
        w_{j+1}, so a max-product recursion over consecutive pairs (w_{j-1}, w_j) is exact.
        """
        alphabets = [list(all_bitstrings(c)) for c in self.proof_bits]
        if self.r == 0:
            return max(((self.node_probability(0, x, y, (w,)), (w,)) for w in alphabets[0]), key=lambda t: t[0])
        # state after deciding w_0 .. w_j: (w_{j-1}, w_j) -> (value of nodes 0..j-1, assignment)
        best: Dict[Tuple[str, str], Tuple[float, Tuple[str, ...]]] = {}
        for w0 in alphabets[0]:
            for w1 in alphabets[1]:
                best[(w0, w1)] = (1.0, (w0, w1))
        for j in range(1, self.r + 1):
            nxt: Dict[Tuple[str, str], Tuple[float, Tuple[str, ...]]] = {}
            following = alphabets[j + 1] if j < self.r else [None]
            for (prev, cur), (value, path) in best.items():
                if j == 1:
                    value = value * self.node_probability(0, x, y, path + ("",) * (self.r - 1))
                for after in following:
                    view = list(path) + ([after] if after is not None else [])
                    view += [""] * (self.r + 1 - len(view))
                    p = value * self.node_probability(j, x, y, tuple(view))
                    key = (cur, after)
                    if key not in nxt or p > nxt[key][0]:
                        nxt[key] = (p, path + ((after,) if after is not None else ()))
            best = nxt
        value, path = max(best.values(), key=lambda t: t[0])
        return value, path

    def completeness(self) -> float:
        """Min over yes-instances of the best acceptance."""
        if self.predicate is None:
            raise ProtocolError(f"{self.name} carries no predicate")
        values = [self.best_proof(x, y)[0] for x in all_bitstrings(self.n) for y in all_bitstrings(self.n)
                  if self.predicate(x, y)]
        return min(values) if values else 1.0

    def soundness(self) -> float:
        if self.predicate is None:
            raise ProtocolError(f"{self.name} carries no predicate")
        values = [self.best_proof(x, y)[0] for x in all_bitstrings(self.n) for y in all_bitstrings(self.n)
                  if not self.predicate(x, y)]
        return max(values) if values else 0.0


def truncated_eq_dma(n: int, r: int, bits: int) -> ClassicalDmaProtocol:
    """
    EQ verifier with undersized proofs: odd-index nodes hold the first `bits` bits of the input,
    v0 checks w_1 = x[:bits], even intermediate nodes check their neighbours agree and vr checks
    w_{r-1} = y[:bits]. Perfectly complete; sound only when bits = n.
    """
    if r < 2 or r % 2:
        raise ProtocolError("truncated EQ verifier needs an even path length r >= 2")
    if not 0 <= bits <= n:
        raise ProtocolError(f"proof length {bits} outside 0..{n}")
    proof_bits = tuple(bits if j % 2 else 0 for j in range(r + 1))

    def node_accept(j: int, local: Optional[str], left: Optional[str], own: str, right: Optional[str]) -> float:
        if j == 0:
            return float(right == local[:bits])
        if j == r:
            return float(left == local[:bits])
        if j % 2 == 0:
            return float(left == right)
        return 1.0

    return ClassicalDmaProtocol(f"eq_truncated[{bits}]", r, n, proof_bits, node_accept, lambda x, y: x == y)
