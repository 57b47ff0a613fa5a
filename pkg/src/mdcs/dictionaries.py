"""Separable orthogonal sparsifying bases.

Two sources are provided: the analytical orthonormal DCT-II, and a learned
basis obtained per mode from the leading left singular vectors of the
training patches' mode unfoldings (HOSVD style). The learned basis is a
single separable dictionary, not a clustered ensemble.
"""

import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .exceptions import FormatError, OperatorTooLargeError, ShapeError, ValidationError
from .sensing import DEFAULT_OPERATOR_CAP
from .tensor import as_tensor, kron_modes, multi_mode_product, unfold

ORTHO_TOL = 1e-8
DICT_MAGIC = b"MDCSDICT"
DICT_VERSION = 1
KINDS = ("dct", "learned", "loaded")


def dct_dictionary(n):
    """Orthonormal DCT-II synthesis matrix; column k is the k-th cosine atom."""
    if n < 1:
        raise ValidationError(f"DCT size must be >= 1, got {n}")
    i = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    D = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    D[:, 0] = 1.0 / np.sqrt(n)
    return D


def orthogonality_error(D):
    D = np.asarray(D, dtype=np.float64)
    return float(np.max(np.abs(D.T @ D - np.eye(D.shape[1]))))


@dataclass(frozen=True)
class SeparableDictionary:
    factors: tuple
    kind: str = "dct"

    def __post_init__(self):
        factors = tuple(np.asarray(F, dtype=np.float64) for F in self.factors)
        object.__setattr__(self, "factors", factors)
        if self.kind not in KINDS:
            raise ValidationError(f"unknown dictionary kind {self.kind!r}")
        for mode, F in enumerate(factors):
            if F.ndim != 2 or F.shape[0] != F.shape[1]:
                raise ValidationError(f"factor of mode {mode} is not square: {F.shape}")
            err = orthogonality_error(F)
            if err > ORTHO_TOL:
                raise ValidationError(
                    f"factor of mode {mode} is not orthogonal (max |D^T D - I| = {err:.3g})"
                )

    @property
    def dims(self):
        return tuple(F.shape[0] for F in self.factors)

    def synthesize(self, S):
        """Coefficients -> signal: S x_0 D_0 ... x_{N-1} D_{N-1}."""
        return multi_mode_product(S, self.factors)

    def analyze(self, P):
        """Signal -> coefficients using the transposed factors."""
        return multi_mode_product(P, self.factors, transpose=True)

    def element_count(self):
        return sum(F.size for F in self.factors)


def dct_separable(dims):
    return SeparableDictionary(tuple(dct_dictionary(d) for d in dims), kind="dct")


def _fix_signs(U):
    # make the largest-magnitude entry of each column positive
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def learn_separable_dictionary(patches, dims=None):
    """Per-mode left singular vectors of all training patches' unfoldings.

    Singular vectors are ordered by decreasing singular value. The Gram
    matrix of the concatenated unfoldings is accumulated patch by patch so
    the training set is never concatenated in memory.
    """
    patches = [as_tensor(p) for p in patches]
    if not patches:
        raise ValidationError("cannot learn a dictionary from an empty training set")
    dims = tuple(dims) if dims is not None else patches[0].shape
    for p in patches:
        if p.shape != dims:
            raise ShapeError(f"training patch has dims {p.shape}, expected {dims}")
    factors = []
    for mode, n in enumerate(dims):
        gram = np.zeros((n, n))
        for p in patches:
            X = unfold(p, mode)
            gram += X @ X.T
        evals, evecs = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1]
        factors.append(_fix_signs(evecs[:, order]))
    return SeparableDictionary(tuple(factors), kind="learned")


def kron_dictionary(D, cap_bytes=DEFAULT_OPERATOR_CAP):
    """Materialized 1D dictionary D_{N-1} (x) ... (x) D_0."""
    n = int(np.prod(D.dims, dtype=np.int64))
    if 8 * n * n > cap_bytes:
        raise OperatorTooLargeError((n, n), cap_bytes)
    return kron_modes(D.factors)


def memory_ratio(dims):
    """Element-count ratio of the Kronecker dictionary to its separable factors."""
    dims = [int(d) for d in dims]
    if min(dims) < 1:
        raise ValidationError(f"extents must be >= 1, got {dims}")
    total = 1
    for d in dims:
        total *= d
    return Fraction(total * total, sum(d * d for d in dims))


def save_dictionary(D, path):
    buf = [DICT_MAGIC, struct.pack("<IB", DICT_VERSION, len(D.factors))]
    for F in D.factors:
        buf.append(struct.pack("<I", F.shape[0]))
        buf.append(np.ravel(F, order="F").astype("<f8").tobytes())
    Path(path).write_bytes(b"".join(buf))


def load_dictionary(path):
    data = Path(path).read_bytes()
    head = len(DICT_MAGIC)
    if data[:head] != DICT_MAGIC:
        raise FormatError(f"{path}: bad magic at byte 0")
    if len(data) < head + 5:
        raise FormatError(f"{path}: truncated header at byte {len(data)}")
    version, n_modes = struct.unpack_from("<IB", data, head)
    if version != DICT_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte {head}")
    pos = head + 5
    factors = []
    for mode in range(n_modes):
        if len(data) < pos + 4:
            raise FormatError(f"{path}: truncated extent of mode {mode} at byte {pos}")
        (n,) = struct.unpack_from("<I", data, pos)
        pos += 4
        nbytes = 8 * n * n
        if n < 1 or len(data) < pos + nbytes:
            raise FormatError(f"{path}: truncated factor of mode {mode} at byte {pos}")
        F = np.frombuffer(data, dtype="<f8", count=n * n, offset=pos).reshape((n, n), order="F")
        factors.append(F.astype(np.float64))
        pos += nbytes
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes at byte {pos}")
    return SeparableDictionary(tuple(factors), kind="loaded")
