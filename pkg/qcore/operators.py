# Register-local matrix algebra.
# Every helper takes a dense matrix over the product space with subsystem dimensions `dims`
# and acts on a subset of subsystems given by their positions, without building
# identity-padded full matrices.

from typing import List, Sequence

import numpy as np


def _prod(dims: Sequence[int]) -> int:
    return int(np.prod(dims, dtype=np.int64)) if len(dims) else 1


def apply_local(mat: np.ndarray, dims: Sequence[int], positions: Sequence[int], local: np.ndarray) -> np.ndarray:
    """
    Computes (local ⊗ I) @ mat where local acts on the subsystems at `positions` (in that order).
    :param mat: matrix with prod(dims) rows (any number of columns).
    :param dims: subsystem dimensions of the row space.
    :param positions: subsystem positions the local operator acts on.
    :param local: square matrix of size prod(dims[p] for p in positions).
    :return: matrix of the same shape as mat.
    """
    dims = list(dims)
    n, k = len(dims), len(positions)
    if k == 0:
        return complex(local.reshape(-1)[0]) * mat
    cols = mat.shape[1]
    local_dims = [dims[p] for p in positions]
    t = mat.reshape(dims + [cols])
    lt = local.reshape(local_dims + local_dims)
    res = np.tensordot(lt, t, axes=(list(range(k, 2 * k)), list(positions)))
    res = np.moveaxis(res, list(range(k)), list(positions))
    return res.reshape(_prod(dims), cols)


def conjugate_local(mat: np.ndarray, dims: Sequence[int], positions: Sequence[int], unitary: np.ndarray) -> np.ndarray:
    """U mat U† with U acting locally."""
    left = apply_local(mat, dims, positions, unitary)
    return apply_local(left.conj().T, dims, positions, unitary).conj().T


def permute_subsystems(mat: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorders a square operator so that new subsystem j is old subsystem order[j]."""
    dims = list(dims)
    n = len(dims)
    if list(order) == list(range(n)):
        return mat
    t = mat.reshape(dims + dims)
    axes = list(order) + [n + o for o in order]
    d = _prod(dims)
    return t.transpose(axes).reshape(d, d)


def permute_vector(vec: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    if list(order) == list(range(len(dims))):
        return vec
    return vec.reshape(list(dims)).transpose(list(order)).reshape(-1)


def contract_vector(mat: np.ndarray, dims: Sequence[int], position: int, phi: np.ndarray) -> np.ndarray:
    """(⟨φ| ⊗ I) mat (|φ⟩ ⊗ I) with φ on the subsystem at `position`; that subsystem disappears."""
    dims = list(dims)
    n = len(dims)
    t = mat.reshape(dims + dims)
    t = np.tensordot(phi.conj(), t, axes=([0], [position]))
    t = np.tensordot(t, phi, axes=([n - 1 + position], [0]))
    rest = dims[:position] + dims[position + 1:]
    d = _prod(rest)
    return t.reshape(d, d)


def partial_trace_matrix(mat: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Traces out every subsystem not in `keep`; kept subsystems stay in `keep` order."""
    dims = list(dims)
    n = len(dims)
    keep = list(keep)
    drop = [p for p in range(n) if p not in keep]
    dk = _prod([dims[p] for p in keep])
    dd = _prod([dims[p] for p in drop])
    t = mat.reshape(dims + dims)
    perm = keep + drop + [n + p for p in keep] + [n + p for p in drop]
    t = t.transpose(perm).reshape(dk, dd, dk, dd)
    return np.einsum("ijkj->ik", t)


def embed(local: np.ndarray, local_dims: Sequence[int], positions: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """local ⊗ I placed on `positions` of a space with subsystem dims `dims`."""
    dims = list(dims)
    rest = [p for p in range(len(dims)) if p not in positions]
    full = np.kron(local, np.eye(_prod([dims[p] for p in rest]), dtype=complex))
    current = list(positions) + rest
    # current[j] is the original position of subsystem j; invert to restore layout order
    order = [current.index(p) for p in range(len(dims))]
    return permute_subsystems(full, list(local_dims) + [dims[p] for p in rest], order)


def kron_all(mats: List[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out
