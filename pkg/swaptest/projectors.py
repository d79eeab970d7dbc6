"""
Permutation unitaries on k equal registers and the projector onto their symmetric subspace,
Π_sym = (1/k!) Σ_π U_π.
"""

import functools
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from qcore.layout import RegisterLayout
from qcore.states import HermitianOperator
from utils.common import MAX_PERMUTATION_REGISTERS, ProtocolError, check_dimension

logger = logging.getLogger(__name__)

Permutation = Tuple[int, ...]


def check_permutation(perm: Sequence[int]) -> Permutation:
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(len(perm))):
        raise ValueError(f"{perm} is not a permutation of 0..{len(perm) - 1}")
    return perm


def compose(pi: Sequence[int], sigma: Sequence[int]) -> Permutation:
    """(πσ)(i) = π(σ(i))."""
    return tuple(pi[s] for s in sigma)


def inverse(pi: Sequence[int]) -> Permutation:
    out = [0] * len(pi)
    for i, p in enumerate(pi):
        out[p] = i
    return tuple(out)


def permutation_unitary(perm: Sequence[int], d: int) -> np.ndarray:
    """
    U_π |i_1 ... i_k⟩ = |i_{π⁻¹(1)} ... i_{π⁻¹(k)}⟩, i.e. the content of register i moves to register π(i).
    Satisfies U_π U_σ = U_{πσ}.
    """
    perm = check_permutation(perm)
    k = len(perm)
    if k < 1 or d < 1:
        raise ValueError("permutation_unitary needs k >= 1 and d >= 1")
    dim = d ** k
    check_dimension(dim, "permutation unitary")
    digits = np.indices([d] * k).reshape(k, -1)
    out = digits[list(inverse(perm))]
    rows = np.ravel_multi_index(tuple(out), [d] * k)
    u = np.zeros((dim, dim), dtype=complex)
    u[rows, np.arange(dim)] = 1.0
    return u


def all_permutation_unitaries(k: int, d: int):
    if k > MAX_PERMUTATION_REGISTERS:
        raise ProtocolError(f"permutations over {k} registers exceed the cap of {MAX_PERMUTATION_REGISTERS}")
    for perm in itertools.permutations(range(k)):
        yield perm, permutation_unitary(perm, d)


def register_layout(k: int, d: int, prefix: str = "S") -> RegisterLayout:
    return RegisterLayout.of(*[(f"{prefix}{i}", d) for i in range(k)])


@dataclass(frozen=True)
class SymmetricProjector:
    k: int
    d: int
    operator: HermitianOperator

    @property
    def matrix(self) -> np.ndarray:
        return self.operator.matrix

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))

    @property
    def expected_rank(self) -> int:
        return math.comb(self.d + self.k - 1, self.k)


def symmetric_matrix(k: int, d: int) -> np.ndarray:
    """Read-only Π_sym on k registers of dimension d, cached per (k, d) once it fits under the cap."""
    check_dimension(d ** k, "symmetric projector")
    return _symmetric_matrix(k, d)


@functools.lru_cache(maxsize=64)
def _symmetric_matrix(k: int, d: int) -> np.ndarray:
    total = np.zeros((d ** k, d ** k), dtype=complex)
    for _, u in all_permutation_unitaries(k, d):
        total += u
    total /= math.factorial(k)
    total.setflags(write=False)
    logger.debug("built symmetric projector k=%d d=%d", k, d)
    return total


def symmetric_projector(k: int, d: int) -> SymmetricProjector:
    if k < 1:
        raise ValueError("symmetric_projector needs k >= 1")
    return SymmetricProjector(k, d, HermitianOperator(register_layout(k, d), symmetric_matrix(k, d)))
