import numpy as np

from qcore.states import DensityOperator
from utils.common import ATOL, LayoutError, NumericalError


def _same_layout(rho: DensityOperator, sigma: DensityOperator) -> None:
    if rho.layout.dims != sigma.layout.dims:
        raise LayoutError("states live on different layouts")


def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """
    Square root of a PSD matrix by Hermitian eigendecomposition.
    Eigenvalues below the rounding floor of the spectrum are taken as exact zeros; anything
    below -ATOL is an error.
    """
    w, v = np.linalg.eigh((matrix + matrix.conj().T) / 2)
    if not w.size:
        return np.zeros_like(matrix, dtype=complex)
    if w[0] < -ATOL:
        raise NumericalError(f"matrix is not PSD (eigenvalue {w[0]})")
    floor = max(w[-1], 0.0) * w.size * np.finfo(float).eps * 10
    w = np.where(w > floor, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def trace_norm(matrix: np.ndarray) -> float:
    """‖X‖₁ for Hermitian X."""
    return float(np.abs(np.linalg.eigvalsh((matrix + matrix.conj().T) / 2)).sum())


def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    _same_layout(rho, sigma)
    return float(np.clip(0.5 * trace_norm(rho.matrix - sigma.matrix), 0.0, 1.0))


def fidelity(rho: DensityOperator, sigma: DensityOperator) -> float:
    """F(ρ,σ) = ‖sqrt(ρ) sqrt(σ)‖₁, the nuclear norm of the product of square roots."""
    _same_layout(rho, sigma)
    product = psd_sqrt(rho.matrix) @ psd_sqrt(sigma.matrix)
    return float(np.clip(np.linalg.svd(product, compute_uv=False).sum(), 0.0, 1.0))
