"""Dense multilinear algebra on numpy arrays.

Tensors are plain ``numpy.ndarray`` objects of dtype float64. The flat
(vectorized) layout is dimension-0-fastest, i.e. Fortran order, so that

    vectorize(T x_0 A_0 x_1 A_1 ... x_{N-1} A_{N-1})
        == kron(A_{N-1}, ..., A_1, A_0) @ vectorize(T)

holds with no permutation of the Kronecker factors. Modes are 0-based.
"""

from functools import reduce

import numpy as np

from .exceptions import ShapeError

MAX_NDIM = 8


def as_tensor(T):
    """Return ``T`` as a float64 array with at least one dimension."""
    T = np.asarray(T, dtype=np.float64)
    if T.ndim == 0:
        T = T.reshape(1)
    if T.ndim > MAX_NDIM:
        raise ShapeError(f"tensors of rank {T.ndim} exceed the supported rank {MAX_NDIM}")
    return T


def _check_mode(ndim, mode):
    if not 0 <= mode < ndim:
        raise ShapeError(f"mode {mode} is out of range for a tensor of rank {ndim}")


def unfold(T, mode):
    """Mode-``mode`` matricization.

    Rows are indexed by dimension ``mode``; columns run over the remaining
    dimensions in increasing order with the lowest one varying fastest.
    """
    T = as_tensor(T)
    _check_mode(T.ndim, mode)
    return np.reshape(np.moveaxis(T, mode, 0), (T.shape[mode], -1), order="F")


def fold(M, mode, dims):
    """Inverse of :func:`unfold` for a tensor of shape ``dims``."""
    dims = tuple(int(d) for d in dims)
    _check_mode(len(dims), mode)
    M = np.asarray(M, dtype=np.float64)
    rest = dims[:mode] + dims[mode + 1:]
    expected = (dims[mode], int(np.prod(rest, dtype=np.int64)))
    if M.shape != expected:
        raise ShapeError(f"cannot fold a {M.shape} matrix into dims {dims} along mode {mode}")
    full = np.reshape(M, (dims[mode],) + rest, order="F")
    return np.moveaxis(full, 0, mode)


def nmode_product(T, M, mode):
    """Multiply tensor ``T`` by matrix ``M`` along ``mode``.

    result[..., j, ...] = sum_k M[j, k] * T[..., k, ...]
    """
    T = as_tensor(T)
    M = np.asarray(M, dtype=np.float64)
    _check_mode(T.ndim, mode)
    if M.ndim != 2 or M.shape[1] != T.shape[mode]:
        raise ShapeError(
            f"mode {mode}: matrix has {M.shape[-1] if M.ndim else 0} columns "
            f"but the tensor extent is {T.shape[mode]}"
        )
    dims = list(T.shape)
    dims[mode] = M.shape[0]
    return fold(M @ unfold(T, mode), mode, dims)


def multi_mode_product(T, matrices, transpose=False):
    """Apply ``T x_0 M_0 x_1 M_1 ...`` for every non-None entry of ``matrices``.

    With ``transpose=True`` each factor is used as ``M.T``.
    """
    T = as_tensor(T)
    if len(matrices) != T.ndim:
        raise ShapeError(f"{len(matrices)} matrices given for a tensor of rank {T.ndim}")
    for mode, M in enumerate(matrices):
        if M is None:
            continue
        T = nmode_product(T, M.T if transpose else M, mode)
    return T


def kron(*factors):
    """Kronecker product ``factors[0] (x) factors[1] (x) ...``."""
    if not factors:
        raise ShapeError("kron needs at least one factor")
    mats = [np.atleast_2d(np.asarray(F, dtype=np.float64)) for F in factors]
    return reduce(np.kron, mats)


def kron_modes(matrices):
    """Flatten per-mode factors into the operator acting on vectorized tensors.

    ``matrices`` is given in mode order (mode 0 first); the product is taken
    as ``M_{N-1} (x) ... (x) M_0``.
    """
    return kron(*reversed(list(matrices)))


def vectorize(T):
    """Flatten with dimension 0 varying fastest."""
    return np.ravel(as_tensor(T), order="F")


def devectorize(v, dims):
    v = np.asarray(v, dtype=np.float64).ravel()
    dims = tuple(int(d) for d in dims)
    n = int(np.prod(dims, dtype=np.int64))
    if v.size != n:
        raise ShapeError(f"vector of length {v.size} does not match dims {dims} ({n} entries)")
    return np.reshape(v, dims, order="F")
