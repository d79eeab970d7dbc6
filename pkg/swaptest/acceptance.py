import math
from typing import Sequence

import numpy as np

from qcore.channels import MixingChannel
from qcore.layout import RegisterLayout
from qcore.states import DensityOperator, partial_trace
from swaptest.projectors import symmetric_matrix, all_permutation_unitaries
from utils.common import LayoutError, MAX_PERMUTATION_REGISTERS, ProtocolError


def _equal_dimension(layout: RegisterLayout, k_min: int) -> int:
    dims = layout.dims
    if len(dims) < k_min:
        raise LayoutError(f"need at least {k_min} registers, got {len(dims)}")
    if len(set(dims)) != 1:
        raise LayoutError(f"registers have unequal dimensions {dims}")
    return dims[0]


def swap_test_element(d: int) -> np.ndarray:
    """Accepting POVM element (I + SWAP)/2 on two d-dimensional registers."""
    return np.array(symmetric_matrix(2, d))


def permutation_test_element(k: int, d: int) -> np.ndarray:
    if k > MAX_PERMUTATION_REGISTERS:
        raise ProtocolError(f"permutation test on {k} registers exceeds the cap of {MAX_PERMUTATION_REGISTERS}")
    return np.array(symmetric_matrix(k, d))


def swap_test_accept(rho: DensityOperator) -> float:
    """tr(Π_sym ρ) on exactly two equal registers; (1 + |⟨ψ|φ⟩|²)/2 for pure products."""
    if len(rho.layout) != 2:
        raise LayoutError(f"SWAP test takes two registers, got {len(rho.layout)}")
    d = _equal_dimension(rho.layout, 2)
    return float(np.trace(swap_test_element(d) @ rho.matrix).real)


def permutation_test_accept(rho: DensityOperator) -> float:
    d = _equal_dimension(rho.layout, 2)
    k = len(rho.layout)
    return float(np.trace(permutation_test_element(k, d) @ rho.matrix).real)


def symmetrize_channel(layout: RegisterLayout, label: str | None = None) -> MixingChannel:
    """
    Uniform mixture of all register permutations of `layout`.
    For a pair this is {(1/2, I), (1/2, SWAP)}.
    """
    d = _equal_dimension(layout, 2)
    k = len(layout)
    weight = 1.0 / math.factorial(k)
    terms = tuple((weight, u) for _, u in all_permutation_unitaries(k, d))
    return MixingChannel(layout, terms, label or f"symmetrize({','.join(layout.ids)})")


def average_over_group(rho: DensityOperator) -> float:
    """(1/k!) Σ_π tr(U_π ρ), computed without the projector."""
    d = _equal_dimension(rho.layout, 2)
    k = len(rho.layout)
    total = sum(np.trace(u @ rho.matrix) for _, u in all_permutation_unitaries(k, d))
    return float((total / math.factorial(k)).real)


def marginals(rho: DensityOperator) -> Sequence[DensityOperator]:
    return [partial_trace(rho, [reg_id]) for reg_id in rho.layout.ids]
