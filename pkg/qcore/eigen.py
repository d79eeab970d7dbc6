import logging
from typing import Tuple

import numpy as np
import scipy.linalg

from qcore.states import HermitianOperator, StateVector, is_hermitian
from utils.common import EIG_ATOL, NumericalError

logger = logging.getLogger(__name__)


def top_eigenpair(op: HermitianOperator) -> Tuple[float, StateVector]:
    """
    Largest eigenvalue and a unit eigenvector of a Hermitian operator.
    :param op: HermitianOperator
    :return: (λ_max, eigenvector as StateVector on op.layout)
    """
    matrix = np.asarray(op.matrix)
    if not is_hermitian(matrix):
        raise NumericalError("top_eigenpair needs a Hermitian operator")
    d = matrix.shape[0]
    matrix = (matrix + matrix.conj().T) / 2
    w, v = scipy.linalg.eigh(matrix, subset_by_index=[d - 1, d - 1])
    value = float(w[0])
    vec = v[:, 0]
    vec = vec / np.linalg.norm(vec)
    residual = float(np.linalg.norm(matrix @ vec - value * vec))
    if residual > EIG_ATOL:
        raise NumericalError(f"eigen residual {residual} above {EIG_ATOL}")
    logger.debug("top eigenpair of dimension %d: %.12g (residual %.2e)", d, value, residual)
    return value, StateVector(op.layout, vec)
