from swaptest.projectors import SymmetricProjector, compose, permutation_unitary, symmetric_projector
from swaptest.acceptance import (
    permutation_test_accept,
    permutation_test_element,
    swap_test_accept,
    swap_test_element,
    symmetrize_channel,
)
