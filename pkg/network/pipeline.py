import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from qcore.channels import MixingChannel
from qcore.layout import RegisterLayout, Role
from qcore.states import StateVector
from utils.common import ATOL, LayoutError, NumericalError, check_dimension

logger = logging.getLogger(__name__)


def _readonly(array, dtype=complex) -> np.ndarray:
    out = np.array(array, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PreparedState:
    """A state a node generates itself (fingerprints, ancillas)."""
    register: str
    vector: np.ndarray = field(compare=False)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "vector", _readonly(self.vector).reshape(-1))


@dataclass(frozen=True)
class LocalTest:
    """Two-outcome measurement by `node`; `element` is the accepting POVM element on `registers`."""
    node: str
    registers: Tuple[str, ...]
    element: np.ndarray = field(compare=False)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "registers", tuple(self.registers))
        object.__setattr__(self, "element", _readonly(self.element))


@dataclass(frozen=True)
class ClassicalGuard:
    """A deterministic check on classical proof fields, already evaluated."""
    node: str
    description: str
    passed: bool


@dataclass(frozen=True)
class Message:
    source: str
    target: str
    registers: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "registers", tuple(self.registers))


@dataclass(frozen=True)
class ProtocolPipeline:
    """
    One-round dQMA protocol: the prover fills the proof registers, nodes prepare their own
    states, registers move along `messages`, the mixing channels run in order and finally
    every node performs its local tests. A node accepts iff its guards pass and all its tests accept.
    """
    name: str
    layout: RegisterLayout
    nodes: Tuple[str, ...]
    prepared: Tuple[PreparedState, ...] = ()
    channels: Tuple[MixingChannel, ...] = ()
    tests: Tuple[LocalTest, ...] = ()
    guards: Tuple[ClassicalGuard, ...] = ()
    messages: Tuple[Message, ...] = ()
    params: Mapping[str, Any] = field(default_factory=dict, compare=False)
    honest: Optional[Mapping[str, np.ndarray]] = field(default=None, compare=False)
    path: bool = False

    def __post_init__(self):
        for name in ("nodes", "prepared", "channels", "tests", "guards", "messages"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.honest is not None:
            object.__setattr__(self, "honest", {k: _readonly(v).reshape(-1) for k, v in self.honest.items()})
        self.validate()

    def validate(self) -> None:
        layout = self.layout
        nodes = set(self.nodes)
        for reg in layout.registers:
            if reg.owner not in nodes:
                raise LayoutError(f"register {reg.id} owned by unknown node {reg.owner!r}")
        prepared_ids = {ps.register for ps in self.prepared}
        for reg in layout.registers:
            if reg.role != Role.PROOF and reg.id not in prepared_ids:
                raise LayoutError(f"register {reg.id} is not a proof register and has no prepared state")
        for ps in self.prepared:
            reg = layout.register(ps.register)
            if reg.role == Role.PROOF:
                raise LayoutError(f"proof register {reg.id} cannot be prepared by a node")
            if ps.vector.shape[0] != reg.dimension or abs(np.linalg.norm(ps.vector) - 1) > ATOL:
                raise NumericalError(f"prepared state for {reg.id} is not a unit vector of dimension {reg.dimension}")
        used: Dict[str, str] = {}
        for test in self.tests:
            if test.node not in nodes:
                raise LayoutError(f"test at unknown node {test.node!r}")
            for reg_id in test.registers:
                if reg_id in used:
                    raise LayoutError(f"register {reg_id} measured by both {used[reg_id]} and {test.label or test.node}")
                used[reg_id] = test.label or test.node
            d = layout.dimension_of(test.registers)
            if test.element.shape != (d, d):
                raise LayoutError(f"test {test.label} element shape {test.element.shape} on dimension {d}")
            check_dimension(d, f"test {test.label or test.node}")
            w = np.linalg.eigvalsh((test.element + test.element.conj().T) / 2)
            if w[0] < -ATOL or w[-1] > 1 + ATOL:
                raise NumericalError(f"test {test.label} is not a POVM element")
        for ch in self.channels:
            for reg in ch.layout.registers:
                if layout.register(reg.id).dimension != reg.dimension:
                    raise LayoutError(f"channel {ch.label} disagrees on dimension of {reg.id}")
        for guard in self.guards:
            if guard.node not in nodes:
                raise LayoutError(f"guard at unknown node {guard.node!r}")

    @property
    def proof_layout(self) -> RegisterLayout:
        return self.layout.select(role=Role.PROOF)

    @property
    def proof_dimension(self) -> int:
        return self.proof_layout.total_dimension

    @property
    def prepared_map(self) -> Dict[str, np.ndarray]:
        return {ps.register: ps.vector for ps in self.prepared}

    @property
    def guards_pass(self) -> bool:
        return all(g.passed for g in self.guards)

    def failed_guard_nodes(self) -> List[str]:
        return [g.node for g in self.guards if not g.passed]

    def honest_state(self) -> Optional[StateVector]:
        if self.honest is None:
            return None
        return StateVector.product(self.proof_layout, self.honest)

    # serialisation

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "path": self.path,
            "nodes": list(self.nodes),
            "params": dict(self.params),
            "registers": self.layout.to_list(),
            "prepared": [{"register": ps.register, "label": ps.label, **_encode(ps.vector)} for ps in self.prepared],
            "channels": [{
                "label": ch.label,
                "registers": ch.registers,
                "terms": [{"p": p, **_encode(u)} for p, u in ch.terms],
            } for ch in self.channels],
            "tests": [{"node": t.node, "registers": list(t.registers), "label": t.label, **_encode(t.element)}
                      for t in self.tests],
            "guards": [{"node": g.node, "description": g.description, "passed": g.passed} for g in self.guards],
            "messages": [{"source": m.source, "target": m.target, "registers": list(m.registers)}
                         for m in self.messages],
            "honest": None if self.honest is None else {k: _encode(v) for k, v in self.honest.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProtocolPipeline":
        layout = RegisterLayout.from_list(d["registers"])
        return cls(
            name=d["name"],
            layout=layout,
            nodes=tuple(d["nodes"]),
            prepared=tuple(PreparedState(p["register"], _decode(p), p.get("label", "")) for p in d["prepared"]),
            channels=tuple(MixingChannel(layout.sub(c["registers"]),
                                         tuple((t["p"], _decode(t)) for t in c["terms"]), c["label"])
                           for c in d["channels"]),
            tests=tuple(LocalTest(t["node"], tuple(t["registers"]), _decode(t), t.get("label", "")) for t in d["tests"]),
            guards=tuple(ClassicalGuard(g["node"], g["description"], bool(g["passed"])) for g in d["guards"]),
            messages=tuple(Message(m["source"], m["target"], tuple(m["registers"])) for m in d["messages"]),
            params=d.get("params", {}),
            honest=None if d.get("honest") is None else {k: _decode(v) for k, v in d["honest"].items()},
            path=bool(d.get("path", False)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ProtocolPipeline":
        return cls.from_dict(json.loads(text))


def _encode(array: np.ndarray) -> dict:
    array = np.asarray(array)
    return {"shape": list(array.shape), "re": array.real.reshape(-1).tolist(), "im": array.imag.reshape(-1).tolist()}


def _decode(d: dict) -> np.ndarray:
    return (np.array(d["re"], dtype=float) + 1j * np.array(d["im"], dtype=float)).reshape(d["shape"])


def split_components(pipeline: ProtocolPipeline) -> List[ProtocolPipeline]:
    """
    Splits a pipeline into tensor-disjoint parts: registers linked by a test or a channel stay together.
    Guards go with the first part. The acceptance operator of the whole is the tensor product of the parts'.
    """
    ids = pipeline.layout.ids
    parent = {r: r for r in ids}

    def find(r: str) -> str:
        while parent[r] != r:
            parent[r] = parent[parent[r]]
            r = parent[r]
        return r

    def union(group: Sequence[str]) -> None:
        for other in group[1:]:
            parent[find(other)] = find(group[0])

    for test in pipeline.tests:
        union(list(test.registers))
    for ch in pipeline.channels:
        union(ch.registers)
    roots: List[str] = []
    for r in ids:
        if find(r) not in roots:
            roots.append(find(r))
    parts = []
    for index, root in enumerate(roots):
        members = [r for r in ids if find(r) == root]
        member_set = set(members)
        tests = tuple(t for t in pipeline.tests if set(t.registers) <= member_set)
        owners = {pipeline.layout.register(r).owner for r in members} | {t.node for t in tests}
        guards = pipeline.guards if index == 0 else ()
        owners |= {g.node for g in guards}
        parts.append(ProtocolPipeline(
            name=f"{pipeline.name}#{index}",
            layout=pipeline.layout.sub(members),
            nodes=tuple(n for n in pipeline.nodes if n in owners),
            prepared=tuple(p for p in pipeline.prepared if p.register in member_set),
            channels=tuple(c for c in pipeline.channels if set(c.registers) <= member_set),
            tests=tests,
            guards=guards,
            messages=tuple(Message(m.source, m.target, tuple(r for r in m.registers if r in member_set))
                           for m in pipeline.messages if set(m.registers) & member_set),
            params=pipeline.params,
            honest=None if pipeline.honest is None else {k: v for k, v in pipeline.honest.items() if k in member_set},
            path=pipeline.path,
        ))
    return parts
