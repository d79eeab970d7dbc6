"""
EQ with relay points: every segment_length-th intermediate node receives a classical n-bit copy
of the input and the path splits into independently verified EQ segments between relays.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from fingerprint.oneway import eq_one_way
from fingerprint.scheme import FingerprintScheme
from network.compiler import compile
from network.pipeline import ProtocolPipeline
from network.topology import path_node
from protocols.builder import PipelineBuilder
from protocols.eq import eq_path_soundness_bound, eq_segment
from qcore.eigen import top_eigenpair
from utils.bits import all_bitstrings, check_bits
from utils.common import ProtocolError, check_dimension

logger = logging.getLogger(__name__)


def default_segment_length(n: int) -> int:
    return max(2, math.ceil(round(n ** (1 / 3), 9)))


def default_reps(n: int) -> int:
    return 42 * math.ceil(round(n ** (1 / 3), 9)) ** 2


def relay_positions(r: int, segment_length: int) -> List[int]:
    """Indices of relay nodes: every segment_length-th node strictly inside the path."""
    if segment_length < 2:
        raise ProtocolError("segment_length must be at least 2")
    return list(range(segment_length, r, segment_length))


def segment_bounds(r: int, segment_length: int) -> List[Tuple[int, int]]:
    points = [0] + relay_positions(r, segment_length) + [r]
    return list(zip(points[:-1], points[1:]))


def segment_soundness_bound(length: int, reps: int) -> float:
    return eq_path_soundness_bound(length, reps)


@dataclass(frozen=True)
class RelayParams:
    r: int
    n: int
    scheme: FingerprintScheme
    x: str
    y: str
    segment_length: Optional[int] = None
    reps_per_segment: Optional[int] = None
    relay_values: Optional[Tuple[str, ...]] = field(default=None)

    def __post_init__(self):
        if self.r < 1:
            raise ProtocolError("path length r must be at least 1")
        if self.scheme.n != self.n:
            raise ProtocolError(f"segment scheme is for {self.scheme.n}-bit inputs, not {self.n}")
        check_bits(self.x, self.n)
        check_bits(self.y, self.n)
        if self.segment_length is None:
            object.__setattr__(self, "segment_length", default_segment_length(self.n))
        if self.reps_per_segment is None:
            object.__setattr__(self, "reps_per_segment", default_reps(self.n))
        if self.reps_per_segment < 1:
            raise ProtocolError("reps_per_segment must be at least 1")
        relays = relay_positions(self.r, self.segment_length)
        if relays:
            check_dimension(2 ** self.n, "relay proof register")
        if self.relay_values is None:
            object.__setattr__(self, "relay_values", tuple(self.x for _ in relays))
        else:
            values = tuple(check_bits(v, self.n) for v in self.relay_values)
            if len(values) != len(relays):
                raise ProtocolError(f"{len(relays)} relays but {len(values)} relay values")
            object.__setattr__(self, "relay_values", values)

    @property
    def relays(self) -> List[int]:
        return relay_positions(self.r, self.segment_length)

    def endpoint_strings(self) -> List[str]:
        return [self.x] + list(self.relay_values) + [self.y]

    def to_dict(self) -> dict:
        return {"protocol": "eq_relay", "r": self.r, "n": self.n, "x": self.x, "y": self.y,
                "segment_length": self.segment_length, "reps_per_segment": self.reps_per_segment,
                "relays": self.relays, "relay_values": list(self.relay_values), "scheme": self.scheme.to_dict()}


def _add_segment(b: PipelineBuilder, p: RelayParams, a: int, z: int, left: str, right: str) -> None:
    eq_segment(b, p.scheme, a, z, left, right, p.reps_per_segment)


def build_eq_relay(p: RelayParams) -> ProtocolPipeline:
    """
    One pipeline holding every segment for the given relay values. Relays measure their proof in
    the computational basis; the measured string is what the neighbouring segment endpoints use,
    so the relay registers enter the model as classical values.
    """
    eq_one_way(p.scheme)
    b = PipelineBuilder([path_node(j) for j in range(p.r + 1)])
    strings = p.endpoint_strings()
    for index, (a, z) in enumerate(segment_bounds(p.r, p.segment_length)):
        _add_segment(b, p, a, z, strings[index], strings[index + 1])
    for relay, value in zip(p.relays, p.relay_values):
        b.guard(path_node(relay), f"relay string {value}", True)
    name = "eq_path" if not p.relays else "eq_relay"
    return b.build(name, p.to_dict(), path=True)


def relay_segments(p: RelayParams) -> List[Tuple[int, int, ProtocolPipeline]]:
    """Each segment as its own pipeline (nodes v_a .. v_z), for the given relay values."""
    eq_one_way(p.scheme)
    strings = p.endpoint_strings()
    out = []
    for index, (a, z) in enumerate(segment_bounds(p.r, p.segment_length)):
        b = PipelineBuilder([path_node(j) for j in range(a, z + 1)])
        _add_segment(b, p, a, z, strings[index], strings[index + 1])
        params = {**p.to_dict(), "segment": [a, z]}
        out.append((a, z, b.build(f"eq_relay[{a}:{z}]", params, path=True)))
    return out


def relay_honest_accept(p: RelayParams) -> float:
    """Product of the segments' honest acceptance (segments are tensor-disjoint)."""
    value = 1.0
    for _, _, pipeline in relay_segments(p):
        proof = pipeline.honest_state()
        value *= compile(pipeline, per_node=False).accept_probability(proof)
    return value


def _segment_value(p: RelayParams, a: int, z: int, left: str, right: str) -> float:
    b = PipelineBuilder([path_node(j) for j in range(a, z + 1)])
    _add_segment(b, p, a, z, left, right)
    model = compile(b.build(f"eq_relay[{a}:{z}]", {}, path=True), per_node=False)
    return top_eigenpair(model.accept_operator)[0]


def relay_adversary_value(p: RelayParams, threads: int = 1) -> Tuple[float, Tuple[str, ...]]:
    """
    Optimal acceptance over every relay assignment and all (entangled) segment proofs, with the
    maximizing relay strings. Segments given fixed relay strings are tensor-disjoint, so the value
    is a max-product over relay strings, solved by dynamic programming along the path.
    """
    bounds = segment_bounds(p.r, p.segment_length)
    candidates = list(all_bitstrings(p.n))
    cache: Dict[Tuple[int, str, str], float] = {}
    jobs = []
    for index, (a, z) in enumerate(bounds):
        lefts = [p.x] if index == 0 else candidates
        rights = [p.y] if index == len(bounds) - 1 else candidates
        for left in lefts:
            for right in rights:
                key = (z - a, left, right)
                if key not in cache:
                    cache[key] = math.nan
                    jobs.append((a, z, left, right))

    def solve(job):
        a, z, left, right = job
        return (z - a, left, right), _segment_value(p, a, z, left, right)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cache.update(pool.map(solve, jobs))
    else:
        cache.update(map(solve, jobs))
    logger.debug("relay DP over %d segments with %d distinct segment solves", len(bounds), len(jobs))

    # best[s] = best value of the segments so far with the current relay holding s
    best: Dict[str, Tuple[float, Tuple[str, ...]]] = {p.x: (1.0, ())}
    for index, (a, z) in enumerate(bounds):
        rights = [p.y] if index == len(bounds) - 1 else candidates
        nxt: Dict[str, Tuple[float, Tuple[str, ...]]] = {}
        for right in rights:
            options = [(value * cache[(z - a, left, right)], path) for left, (value, path) in best.items()]
            value, path = max(options, key=lambda item: item[0])
            nxt[right] = (value, path if index == len(bounds) - 1 else path + (right,))
        best = nxt
    value, relays = best[p.y]
    return float(value), relays


def violating_segments(p: RelayParams) -> List[int]:
    """Indices of segments whose endpoint strings differ."""
    strings = p.endpoint_strings()
    return [i for i in range(len(strings) - 1) if strings[i] != strings[i + 1]]
