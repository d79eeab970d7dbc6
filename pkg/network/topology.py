import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from utils.common import ProtocolError

logger = logging.getLogger(__name__)


class TopologyKind(IntEnum):
    PATH = 0
    TREE = 1


def path_node(j: int) -> str:
    return f"v{j}"


@dataclass(frozen=True)
class Topology:
    """
    Network graph with terminals (nodes holding inputs).
    Path topologies are v0 - v1 - ... - vr with terminals v0 and vr; tree topologies are rooted.
    """
    kind: TopologyKind
    graph: nx.Graph = field(compare=False)
    terminals: Tuple[Tuple[str, str], ...]
    root: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "terminals", tuple((str(u), str(x)) for u, x in self.terminals))
        g = self.graph
        if g.number_of_nodes() == 0 or not nx.is_connected(g):
            raise ProtocolError("topology must be a non-empty connected graph")
        for node, _ in self.terminals:
            if node not in g:
                raise ProtocolError(f"terminal {node!r} is not a node")
        if self.kind == TopologyKind.PATH:
            r = g.number_of_nodes() - 1
            expected = {(path_node(j), path_node(j + 1)) for j in range(r)}
            actual = {tuple(sorted(e, key=lambda v: int(v[1:]))) for e in g.edges}
            if set(g.nodes) != {path_node(j) for j in range(r + 1)} or actual != expected:
                raise ProtocolError("path topology must be v0 - v1 - ... - vr")
            if [u for u, _ in self.terminals] != [path_node(0), path_node(r)]:
                raise ProtocolError("path terminals must be v0 and vr")
            object.__setattr__(self, "root", path_node(0))
        else:
            if not nx.is_tree(g):
                raise ProtocolError("tree topology contains a cycle")
            if self.root is None or self.root not in g:
                raise ProtocolError("tree topology needs a root node")
            for node, _ in self.terminals:
                if node != self.root and g.degree[node] != 1:
                    raise ProtocolError(f"terminal {node!r} is not a leaf")

    @property
    def nodes(self) -> List[str]:
        if self.kind == TopologyKind.PATH:
            return [path_node(j) for j in range(self.graph.number_of_nodes())]
        return [self.root] + [v for _, v in nx.bfs_edges(self.graph, self.root)]

    @property
    def edges(self) -> List[Tuple[str, str]]:
        return [(self.parent[v], v) for v in self.nodes[1:]]

    @property
    def inputs(self) -> Dict[str, str]:
        return dict(self.terminals)

    @property
    def radius(self) -> int:
        """Minimum over nodes of the largest distance to any node."""
        return nx.radius(self.graph)

    @property
    def length(self) -> int:
        """Path length r (edges), or the depth of the rooted tree."""
        return max(self.depth.values())

    @property
    def parent(self) -> Dict[str, str]:
        return dict(nx.bfs_predecessors(self.graph, self.root))

    @property
    def depth(self) -> Dict[str, int]:
        return nx.single_source_shortest_path_length(self.graph, self.root)

    def children(self, node: str) -> List[str]:
        parent = self.parent
        return sorted((v for v in self.graph.neighbors(node) if parent.get(node) != v), key=self.nodes.index)

    def is_leaf(self, node: str) -> bool:
        return node != self.root and self.graph.degree[node] == 1

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.name.lower(),
            "edges": [list(e) for e in self.edges],
            "terminals": [list(t) for t in self.terminals],
            "root": self.root,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Topology":
        kind = d.get("kind", "tree")
        if kind == "star":
            return star_topology(d["inputs"])
        if kind == "path":
            return path_topology(int(d["r"]), d["x"], d["y"])
        terminals = {u: x for u, x in d["terminals"]}
        graph = nx.Graph()
        graph.add_edges_from(tuple(e) for e in d["edges"])
        root = d.get("root") or next(iter(terminals))
        if d.get("truncate", False):
            return spanning_tree(graph, terminals, root)
        return Topology(TopologyKind.TREE, graph, tuple(terminals.items()), root)


def path_topology(r: int, x: str, y: str) -> Topology:
    if r < 1:
        raise ProtocolError("path length must be at least 1")
    return Topology(TopologyKind.PATH, nx.path_graph([path_node(j) for j in range(r + 1)]),
                    ((path_node(0), x), (path_node(r), y)))


def star_topology(inputs: Sequence[str], center: str = "c") -> Topology:
    """Center node plus one terminal leaf u1..ut per input, rooted at u1."""
    graph = nx.star_graph([center] + [f"u{i + 1}" for i in range(len(inputs))])
    terminals = tuple((f"u{i + 1}", x) for i, x in enumerate(inputs))
    return Topology(TopologyKind.TREE, graph, terminals, "u1")


def tree_topology(edges: Sequence[Tuple[str, str]], inputs: Mapping[str, str], root: str) -> Topology:
    graph = nx.Graph()
    graph.add_edges_from(edges)
    return Topology(TopologyKind.TREE, graph, tuple(inputs.items()), root)


def spanning_tree(graph: nx.Graph, inputs: Mapping[str, str], root: str) -> Topology:
    """
    Breadth-first spanning tree from `root`, with branches holding no terminal pruned and every
    non-root terminal that is not a leaf given a pendant copy u' carrying its input.
    """
    if root not in inputs:
        raise ProtocolError(f"root {root!r} must be a terminal")
    bfs = nx.bfs_tree(graph, root)
    tree = nx.Graph(bfs.to_undirected())
    terminals = set(inputs)
    pruned = True
    while pruned:
        pruned = False
        for v in list(tree.nodes):
            if v != root and v not in terminals and tree.degree[v] == 1:
                tree.remove_node(v)
                pruned = True
    placed: Dict[str, str] = {}
    for u, x in inputs.items():
        if u != root and tree.degree[u] > 1:
            copy = f"{u}'"
            tree.add_edge(u, copy)
            placed[copy] = x
            logger.debug("terminal %s is internal; input moved to pendant %s", u, copy)
        else:
            placed[u] = x
    ordered = [(root, placed[root])] + [(u, x) for u, x in placed.items() if u != root]
    return Topology(TopologyKind.TREE, tree, tuple(ordered), root)
