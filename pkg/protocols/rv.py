import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from fingerprint.scheme import FingerprintScheme
from network.compiler import compile
from network.pipeline import ProtocolPipeline
from network.topology import Topology, spanning_tree
from protocols.gt import GtParams, GtVariant, build_gt, gt_adversary_value
from utils.common import ProtocolError

logger = logging.getLogger(__name__)

GE, LT = GtVariant.GE, GtVariant.LT


@dataclass(frozen=True)
class RankingModel:
    """
    Ranking verification: does the root's value x_i have rank j among the t inputs?
    The tree is rooted at terminal u_i; every other terminal u_k sits at the end of a path of
    length r_k on which GT_≥(x_i, x_k) or GT_<(x_i, x_k) runs, as announced by the prover's
    direction for that path. The root accepts only if 1 + #(≥) equals t - j + 1.
    """
    tree: Topology
    values: Dict[str, int]
    i: int
    j: int
    n: int
    scheme: FingerprintScheme
    reps: int = 1
    leaves: Tuple[Tuple[str, int], ...] = field(default=())

    @property
    def t(self) -> int:
        return len(self.values)

    @property
    def root_value(self) -> int:
        return self.values[self.tree.root]

    def gt_params(self, leaf: str, direction: GtVariant, index: Optional[int] = None) -> GtParams:
        r = dict(self.leaves)[leaf]
        return GtParams(r, self.scheme, self.root_value, self.values[leaf], self.n, self.reps, index, direction)

    def admissible(self, directions: Sequence[GtVariant]) -> bool:
        return 1 + sum(d == GE for d in directions) == self.t - self.j + 1

    def assignments(self) -> List[Tuple[GtVariant, ...]]:
        return list(itertools.product((GE, LT), repeat=len(self.leaves)))

    def holds(self) -> bool:
        """x_i is the j-th largest: exactly t - j + 1 inputs (itself included) are at most x_i."""
        return sum(self.root_value >= v for v in self.values.values()) == self.t - self.j + 1

    def honest_directions(self) -> Tuple[GtVariant, ...]:
        return tuple(GE if self.root_value >= self.values[leaf] else LT for leaf, _ in self.leaves)

    def path_values(self, threads: int = 1) -> Dict[Tuple[str, GtVariant], float]:
        """Optimal acceptance of every (path, direction) subprotocol."""
        jobs = [(leaf, d) for leaf, _ in self.leaves for d in (GE, LT)]

        def solve(job):
            leaf, d = job
            return job, gt_adversary_value(self.gt_params(leaf, d))

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return dict(pool.map(solve, jobs))
        return dict(map(solve, jobs))

    def value(self, threads: int = 1) -> Tuple[float, Optional[Tuple[GtVariant, ...]]]:
        """
        Best acceptance over direction assignments and proofs. Paths are tensor-disjoint, so an
        admissible assignment scores the product of its paths' values.
        """
        values = self.path_values(threads)
        best, best_d = 0.0, None
        for d in self.assignments():
            if not self.admissible(d):
                continue
            score = 1.0
            for (leaf, _), direction in zip(self.leaves, d):
                score *= values[(leaf, direction)]
            if best_d is None or score > best:
                best, best_d = score, d
        return best, best_d

    def honest_pipelines(self) -> List[ProtocolPipeline]:
        directions = self.honest_directions()
        if not self.admissible(directions):
            raise ProtocolError(f"x_{self.i} does not have rank {self.j}: no honest proof")
        return [build_gt(self.gt_params(leaf, d)) for (leaf, _), d in zip(self.leaves, directions)]

    def honest_accept(self) -> float:
        value = 1.0
        for pipeline in self.honest_pipelines():
            value *= compile(pipeline, per_node=False).accept_probability(pipeline.honest_state())
        return value

    def to_dict(self) -> dict:
        return {"protocol": "rv", "t": self.t, "i": self.i, "j": self.j, "n": self.n, "k": self.reps,
                "inputs": [self.values[u] for u, _ in self.tree.terminals],
                "paths": [{"leaf": leaf, "r": r} for leaf, r in self.leaves]}


def build_rv(topology: Topology, inputs: Sequence[int], i: int, j: int, n: int,
             scheme: Optional[FingerprintScheme] = None, reps: int = 1) -> RankingModel:
    """
    :param topology: network whose terminals u_1 .. u_t (in order) hold `inputs`
    :param i: 1-based index of the terminal whose rank is verified (the tree root)
    :param j: claimed rank, 1 = largest
    """
    terminals = [u for u, _ in topology.terminals]
    t = len(terminals)
    if len(inputs) != t:
        raise ProtocolError(f"{t} terminals but {len(inputs)} inputs")
    if t < 2:
        raise ProtocolError("ranking needs at least two terminals")
    if not 1 <= i <= t or not 1 <= j <= t:
        raise ProtocolError(f"i={i}, j={j} must lie in 1..{t}")
    for value in inputs:
        if not 0 <= value < 2 ** n:
            raise ProtocolError(f"input {value} does not fit in {n} bits")
    scheme = scheme or FingerprintScheme.hadamard(n)
    labels = {u: format(v, f"0{n}b") for u, v in zip(terminals, inputs)}
    tree = spanning_tree(topology.graph, labels, terminals[i - 1])
    values = {u: int(x, 2) for u, x in tree.terminals}
    depth = tree.depth
    leaves = tuple((u, depth[u]) for u, _ in tree.terminals if u != tree.root)
    logger.debug("ranking tree rooted at %s with paths %s", tree.root, leaves)
    return RankingModel(tree, values, i, j, n, scheme, reps, leaves)
