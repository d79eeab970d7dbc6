import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, Optional

import numpy as np

from fingerprint.scheme import FingerprintScheme
from network.compiler import compile
from network.pipeline import ProtocolPipeline
from network.topology import path_node
from protocols.builder import PipelineBuilder, forward_chain, rep_tag
from qcore.eigen import top_eigenpair
from utils.bits import to_bits
from utils.common import ProtocolError, check_dimension

logger = logging.getLogger(__name__)


class GtVariant(IntEnum):
    """
    Comparison computed on (x, y). Strict variants look for the first differing bit with the
    required polarity; the non-strict ones also accept equality via the index value n.
    """
    GT = 0
    LT = 1
    GE = 2
    LE = 3

    @property
    def x_bit(self) -> str:
        return "1" if self in (GtVariant.GT, GtVariant.GE) else "0"

    @property
    def y_bit(self) -> str:
        return "0" if self in (GtVariant.GT, GtVariant.GE) else "1"

    @property
    def allows_equal(self) -> bool:
        return self in (GtVariant.GE, GtVariant.LE)

    def holds(self, x: int, y: int) -> bool:
        return {GtVariant.GT: x > y, GtVariant.LT: x < y, GtVariant.GE: x >= y, GtVariant.LE: x <= y}[self]


def index_domain(variant: GtVariant, n: int) -> range:
    return range(n + 1) if variant.allows_equal else range(n)


def honest_index(variant: GtVariant, x: int, y: int, n: int) -> Optional[int]:
    """First differing bit (MSB first) if it has the variant's polarity, n for equality, else None."""
    xb, yb = to_bits(x, n), to_bits(y, n)
    for i in range(n):
        if xb[i] != yb[i]:
            return i if xb[i] == variant.x_bit else None
    return n if variant.allows_equal else None


@dataclass(frozen=True)
class GtParams:
    """
    Comparison of n-bit integers x (at v0) and y (at vr), MSB first. `index` is the classical
    index all nodes receive; None means the honest index (which must exist).
    """
    r: int
    scheme: FingerprintScheme
    x: int
    y: int
    n: int
    k: int = 1
    index: Optional[int] = None
    variant: GtVariant = GtVariant.GT

    def __post_init__(self):
        if self.r < 1:
            raise ProtocolError("path length r must be at least 1")
        if self.n < 1:
            raise ProtocolError("inputs need at least one bit")
        if self.k < 1:
            raise ProtocolError("repetitions k must be at least 1")
        for name, value in (("x", self.x), ("y", self.y)):
            if not 0 <= value < 2 ** self.n:
                raise ProtocolError(f"{name}={value} does not fit in {self.n} bits")
        object.__setattr__(self, "variant", GtVariant(self.variant))
        if self.index is not None and self.index not in index_domain(self.variant, self.n):
            raise ProtocolError(f"index {self.index} outside {list(index_domain(self.variant, self.n))}")

    @property
    def resolved_index(self) -> int:
        if self.index is not None:
            return self.index
        i = honest_index(self.variant, self.x, self.y, self.n)
        if i is None:
            raise ProtocolError(f"{self.variant.name}({self.x}, {self.y}) is false: no honest index, pass one")
        return i

    def with_index(self, index: int) -> "GtParams":
        return GtParams(self.r, self.scheme, self.x, self.y, self.n, self.k, index, self.variant)

    def to_dict(self) -> dict:
        return {"protocol": self.variant.name.lower(), "r": self.r, "n": self.n, "x": self.x, "y": self.y,
                "k": self.k, "index": self.index, "scheme": self.scheme.to_dict()}


def prefix_state(scheme: FingerprintScheme, bits: str, i: int) -> np.ndarray:
    """|h_{bits[:i]}⟩ padded by one dimension; i = 0 gives the ⊥ vector (last basis state)."""
    sub = scheme.resized(i)
    out = np.zeros(sub.state_dimension + 1, dtype=complex)
    if i == 0:
        out[-1] = 1.0
    else:
        out[:-1] = sub.state(bits[:i])
    return out


def build_gt(p: GtParams) -> ProtocolPipeline:
    """
    Fixed-index comparison. The index bit guards run at v0 (x[i]) and vr (y[i]); the fingerprints
    of the prefixes x[:i] and y[:i] are compared by the EQ chain, with vr SWAP-testing the arriving
    register against its own prefix fingerprint.
    """
    i = p.resolved_index
    xb, yb = to_bits(p.x, p.n), to_bits(p.y, p.n)
    b = PipelineBuilder([path_node(j) for j in range(p.r + 1)])
    if i < p.n:
        b.guard(path_node(0), f"x[{i}] = {p.variant.x_bit}", xb[i] == p.variant.x_bit)
        b.guard(path_node(p.r), f"y[{i}] = {p.variant.y_bit}", yb[i] == p.variant.y_bit)
    hx = prefix_state(p.scheme, xb, i)
    hy = prefix_state(p.scheme, yb, i)
    dim = hx.shape[0]
    check_dimension(dim ** (2 * (p.r - 1) * p.k), "proof space")
    honest = p.index is None or p.index == honest_index(p.variant, p.x, p.y, p.n)
    for rep in range(p.k):
        tag = rep_tag(rep, p.k)
        src = b.prepare(f"X0{tag}", hx, path_node(0), label=f"h({xb[:i] or '⊥'})")
        incoming = forward_chain(b, 0, p.r, [src], dim, lambda j: hx if honest else None, tag)
        own = b.prepare(f"Y{p.r}{tag}", hy, path_node(p.r), label=f"h({yb[:i] or '⊥'})")
        b.swap_test(path_node(p.r), incoming, [own], f"swap@{path_node(p.r)}{tag}")
    params = {**p.to_dict(), "index": i}
    return b.build(f"{p.variant.name.lower()}[i={i}]", params, path=True)


def gt_index_values(p: GtParams, threads: int = 1) -> Dict[int, float]:
    """Optimal acceptance for every index the prover may send (0 where a bit guard fails)."""
    xb, yb = to_bits(p.x, p.n), to_bits(p.y, p.n)

    def solve(i: int) -> float:
        if i < p.n and (xb[i] != p.variant.x_bit or yb[i] != p.variant.y_bit):
            return 0.0
        model = compile(build_gt(p.with_index(i)), per_node=False)
        return top_eigenpair(model.accept_operator)[0]

    indices = list(index_domain(p.variant, p.n))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(solve, indices))
    else:
        values = [solve(i) for i in indices]
    return dict(zip(indices, values))


def gt_adversary_value(p: GtParams, threads: int = 1) -> float:
    """Max over indices of the fixed-index optimal acceptance."""
    values = gt_index_values(p, threads)
    best = max(values, key=values.get)
    logger.debug("%s(%d, %d): best index %d with %.12g", p.variant.name, p.x, p.y, best, values[best])
    return values[best]
