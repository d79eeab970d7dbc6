from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from qcore.layout import RegisterLayout
from qcore.operators import kron_all, partial_trace_matrix, permute_subsystems, permute_vector
from utils.common import ATOL, LayoutError, NumericalError


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=complex)
    out.setflags(write=False)
    return out


def _check_square(layout: RegisterLayout, matrix: np.ndarray, kind: str) -> None:
    d = layout.total_dimension
    if matrix.shape != (d, d):
        raise LayoutError(f"{kind} of shape {matrix.shape} does not match layout dimension {d}")


def is_hermitian(matrix: np.ndarray, atol: float = ATOL) -> bool:
    return bool(np.allclose(matrix, matrix.conj().T, atol=atol, rtol=0.0))


@dataclass(frozen=True)
class StateVector:
    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        self.layout.checked_dimension("state vector")
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.shape[0] != self.layout.total_dimension:
            raise LayoutError(f"{amps.shape[0]} amplitudes for layout dimension {self.layout.total_dimension}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > ATOL:
            raise NumericalError(f"state vector norm {norm} differs from 1")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, layout: RegisterLayout, index: int) -> "StateVector":
        amps = np.zeros(layout.checked_dimension("state vector"), dtype=complex)
        amps[index] = 1.0
        return cls(layout, amps)

    @classmethod
    def product(cls, layout: RegisterLayout, parts: Mapping[str, np.ndarray]) -> "StateVector":
        """Product state with parts[reg_id] on each register of the layout."""
        layout.checked_dimension("state vector")
        missing = [r for r in layout.ids if r not in parts]
        if missing:
            raise LayoutError(f"no vector given for registers {missing}")
        amps = np.ones(1, dtype=complex)
        for reg_id in layout.ids:
            amps = np.kron(amps, np.asarray(parts[reg_id], dtype=complex))
        return cls(layout, amps)

    @property
    def dimension(self) -> int:
        return self.layout.total_dimension

    def density(self) -> "DensityOperator":
        return DensityOperator(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))

    def inner(self, other: "StateVector") -> complex:
        if self.layout.dims != other.layout.dims:
            raise LayoutError("inner product across different layouts")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def reorder(self, reg_ids: Sequence[str]) -> "StateVector":
        order = self.layout.positions(reg_ids)
        return StateVector(self.layout.sub(reg_ids), permute_vector(self.amplitudes, self.layout.dims, order))


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, PSD, unit-trace matrix over a register layout."""
    layout: RegisterLayout
    matrix: np.ndarray

    def __post_init__(self):
        self.layout.checked_dimension("density operator")
        mat = _frozen(self.matrix)
        _check_square(self.layout, mat, "density matrix")
        if not is_hermitian(mat):
            raise NumericalError("density matrix is not Hermitian")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > ATOL:
            raise NumericalError(f"density matrix trace {tr} differs from 1")
        lowest = np.linalg.eigvalsh(mat)[0] if mat.shape[0] else 0.0
        if lowest < -ATOL:
            raise NumericalError(f"density matrix has negative eigenvalue {lowest}")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def maximally_mixed(cls, layout: RegisterLayout) -> "DensityOperator":
        d = layout.checked_dimension("density operator")
        return cls(layout, np.eye(d, dtype=complex) / d)

    @property
    def dimension(self) -> int:
        return self.layout.total_dimension

    def reorder(self, reg_ids: Sequence[str]) -> "DensityOperator":
        order = self.layout.positions(reg_ids)
        return DensityOperator(self.layout.sub(reg_ids), permute_subsystems(self.matrix, self.layout.dims, order))


@dataclass(frozen=True)
class HermitianOperator:
    layout: RegisterLayout
    matrix: np.ndarray

    def __post_init__(self):
        self.layout.checked_dimension("operator")
        mat = _frozen(self.matrix)
        _check_square(self.layout, mat, "operator")
        if not is_hermitian(mat):
            raise NumericalError("operator is not Hermitian")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def identity(cls, layout: RegisterLayout) -> "HermitianOperator":
        return cls(layout, np.eye(layout.checked_dimension("operator"), dtype=complex))

    @classmethod
    def zero(cls, layout: RegisterLayout) -> "HermitianOperator":
        d = layout.checked_dimension("operator")
        return cls(layout, np.zeros((d, d), dtype=complex))

    @property
    def dimension(self) -> int:
        return self.layout.total_dimension

    def is_povm_element(self, atol: float = ATOL) -> bool:
        """0 ≤ M ≤ I."""
        if self.dimension == 0:
            return True
        w = np.linalg.eigvalsh(self.matrix)
        return bool(w[0] >= -atol and w[-1] <= 1.0 + atol)

    def expectation(self, state: Union[StateVector, DensityOperator]) -> float:
        if state.layout.dims != self.layout.dims:
            raise LayoutError("state and operator layouts differ")
        if isinstance(state, StateVector):
            v = state.amplitudes
            return float(np.vdot(v, self.matrix @ v).real)
        return float(np.trace(self.matrix @ state.matrix).real)

    def reorder(self, reg_ids: Sequence[str]) -> "HermitianOperator":
        order = self.layout.positions(reg_ids)
        return HermitianOperator(self.layout.sub(reg_ids), permute_subsystems(self.matrix, self.layout.dims, order))


Operator = Union[DensityOperator, HermitianOperator]


def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product in layout order; the result has a's registers followed by b's."""
    if type(a) is not type(b):
        raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")
    layout = a.layout.concat(b.layout)
    layout.checked_dimension("tensor product")
    return type(a)(layout, np.kron(a.matrix, b.matrix))


def tensor_all(ops: Sequence[Operator]) -> Operator:
    if not ops:
        raise ValueError("tensor_all needs at least one operator")
    layout = RegisterLayout(tuple(reg for op in ops for reg in op.layout.registers))
    layout.checked_dimension("tensor product")
    return type(ops[0])(layout, kron_all([op.matrix for op in ops]))


def partial_trace(op: Operator, keep: Sequence[str]) -> Operator:
    """Keeps the registers in `keep` (returned in layout order) and traces out the rest."""
    keep_set = set(keep)
    for reg_id in keep_set:
        op.layout.index(reg_id)
    positions = [p for p, reg in enumerate(op.layout.registers) if reg.id in keep_set]
    matrix = partial_trace_matrix(op.matrix, op.layout.dims, positions)
    layout = RegisterLayout(tuple(op.layout.registers[p] for p in positions))
    if isinstance(op, DensityOperator):
        matrix = (matrix + matrix.conj().T) / 2
    return type(op)(layout, matrix)
