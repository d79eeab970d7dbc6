import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from qcore.layout import RegisterLayout
from qcore.operators import conjugate_local
from qcore.states import DensityOperator, HermitianOperator
from utils.common import ATOL, PROB_ATOL, LayoutError, NumericalError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MixingChannel:
    """
    Random-unitary channel ρ ↦ Σ_i p_i U_i ρ U_i† acting on `registers` (in that order).
    `layout` describes the registers the unitaries act on.
    """
    layout: RegisterLayout
    terms: Tuple[Tuple[float, np.ndarray], ...]
    label: str = field(default="mixing", compare=False)

    def __post_init__(self):
        d = self.layout.total_dimension
        terms = []
        for prob, unitary in self.terms:
            u = np.array(unitary, dtype=complex)
            u.setflags(write=False)
            if u.shape != (d, d):
                raise LayoutError(f"channel unitary of shape {u.shape} on registers of dimension {d}")
            if not np.allclose(u.conj().T @ u, np.eye(d), atol=ATOL, rtol=0.0):
                raise NumericalError(f"channel term of {self.label} is not unitary")
            if prob < -PROB_ATOL or prob > 1 + PROB_ATOL:
                raise NumericalError(f"channel probability {prob} outside [0, 1]")
            terms.append((float(prob), u))
        total = sum(p for p, _ in terms)
        if abs(total - 1.0) > PROB_ATOL:
            raise NumericalError(f"channel probabilities sum to {total}")
        object.__setattr__(self, "terms", tuple(terms))

    @property
    def registers(self) -> List[str]:
        return self.layout.ids

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for p, _ in self.terms])

    def act(self, mat: np.ndarray, dims: Sequence[int], positions: Sequence[int]) -> np.ndarray:
        """Σ p U mat U† with the channel placed on `positions` of a larger space."""
        out = np.zeros_like(mat, dtype=complex)
        for prob, u in self.terms:
            out += prob * conjugate_local(mat, dims, positions, u)
        return out

    def act_adjoint(self, mat: np.ndarray, dims: Sequence[int], positions: Sequence[int]) -> np.ndarray:
        """Heisenberg picture Σ p U† X U."""
        out = np.zeros_like(mat, dtype=complex)
        for prob, u in self.terms:
            out += prob * conjugate_local(mat, dims, positions, u.conj().T)
        return out

    def is_self_adjoint(self) -> bool:
        # holds whenever the set of terms is closed under inversion with equal weights
        for prob, u in self.terms:
            inverse = u.conj().T
            if not any(abs(q - prob) <= PROB_ATOL and np.allclose(v, inverse, atol=ATOL) for q, v in self.terms):
                return False
        return True


def single_unitary(layout: RegisterLayout, unitary: np.ndarray, label: str = "unitary") -> MixingChannel:
    return MixingChannel(layout, ((1.0, unitary),), label)


def apply_channel(ch: MixingChannel, rho: DensityOperator) -> DensityOperator:
    """Applies ch to the registers of rho it names; rho may carry further registers."""
    positions = rho.layout.positions(ch.registers)
    if [rho.layout.dims[p] for p in positions] != ch.layout.dims:
        raise LayoutError("channel and state register dimensions differ")
    out = ch.act(np.array(rho.matrix), rho.layout.dims, positions)
    return DensityOperator(rho.layout, (out + out.conj().T) / 2)


def apply_channel_adjoint(ch: MixingChannel, op: HermitianOperator) -> HermitianOperator:
    positions = op.layout.positions(ch.registers)
    out = ch.act_adjoint(np.array(op.matrix), op.layout.dims, positions)
    return HermitianOperator(op.layout, (out + out.conj().T) / 2)
