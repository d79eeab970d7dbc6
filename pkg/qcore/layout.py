import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, List, Sequence, Tuple

from utils.common import LayoutError, check_dimension


class Role(IntEnum):
    PROOF = 0
    PREPARED = 1
    ANCILLA = 2


PROVER = "prover"


@dataclass(frozen=True)
class Register:
    id: str
    dimension: int
    owner: str = PROVER
    role: Role = Role.PROOF

    def __post_init__(self):
        if self.dimension < 1:
            raise LayoutError(f"register {self.id} has dimension {self.dimension}")

    def to_dict(self) -> dict:
        return {"id": self.id, "dimension": self.dimension, "owner": self.owner, "role": self.role.name.lower()}

    @classmethod
    def from_dict(cls, d: dict) -> "Register":
        return cls(d["id"], int(d["dimension"]), d["owner"], Role[d["role"].upper()])


@dataclass(frozen=True)
class RegisterLayout:
    """
    Ordered factorisation H_1 ⊗ ... ⊗ H_n of a joint Hilbert space.
    Register order is canonical: tensor products concatenate and never reorder.
    A layout may describe more than dim_cap allows (a pipeline's full register set, say);
    every vector or matrix built over it goes through checked_dimension first.
    """
    registers: Tuple[Register, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "registers", tuple(self.registers))
        seen = set()
        for reg in self.registers:
            if reg.id in seen:
                raise LayoutError(f"duplicate register id {reg.id!r}")
            seen.add(reg.id)

    @classmethod
    def of(cls, *specs: Tuple) -> "RegisterLayout":
        """Shorthand: RegisterLayout.of(("A", 2), ("B", 2, "v1"))."""
        return cls(tuple(Register(*spec) for spec in specs))

    @property
    def ids(self) -> List[str]:
        return [reg.id for reg in self.registers]

    @property
    def dims(self) -> List[int]:
        return [reg.dimension for reg in self.registers]

    @property
    def total_dimension(self) -> int:
        return math.prod(self.dims)

    def checked_dimension(self, what: str = "space") -> int:
        """total_dimension, after checking it against the configured dim_cap."""
        d = self.total_dimension
        check_dimension(d, what)
        return d

    def __len__(self) -> int:
        return len(self.registers)

    def __contains__(self, reg_id: str) -> bool:
        return any(reg.id == reg_id for reg in self.registers)

    def register(self, reg_id: str) -> Register:
        for reg in self.registers:
            if reg.id == reg_id:
                return reg
        raise LayoutError(f"unknown register id {reg_id!r}")

    def index(self, reg_id: str) -> int:
        for pos, reg in enumerate(self.registers):
            if reg.id == reg_id:
                return pos
        raise LayoutError(f"unknown register id {reg_id!r}")

    def positions(self, reg_ids: Iterable[str]) -> List[int]:
        return [self.index(r) for r in reg_ids]

    def sub(self, reg_ids: Sequence[str]) -> "RegisterLayout":
        """Layout restricted to reg_ids, in the order given."""
        return RegisterLayout(tuple(self.register(r) for r in reg_ids))

    def select(self, role: Role | None = None, owner: str | None = None) -> "RegisterLayout":
        return RegisterLayout(tuple(
            reg for reg in self.registers
            if (role is None or reg.role == role) and (owner is None or reg.owner == owner)
        ))

    def concat(self, other: "RegisterLayout") -> "RegisterLayout":
        return RegisterLayout(self.registers + other.registers)

    def dimension_of(self, reg_ids: Iterable[str]) -> int:
        return math.prod(self.register(r).dimension for r in reg_ids)

    @property
    def owners(self) -> List[str]:
        out: List[str] = []
        for reg in self.registers:
            if reg.owner not in out:
                out.append(reg.owner)
        return out

    def to_list(self) -> List[dict]:
        return [reg.to_dict() for reg in self.registers]

    @classmethod
    def from_list(cls, items: List[dict]) -> "RegisterLayout":
        return cls(tuple(Register.from_dict(d) for d in items))
