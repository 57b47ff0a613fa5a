"""Separable one-hot sensing operators for 5D light-field patches.

A patch of shape (s, t, u, v, n) is measured as

    I = L x_0 P_0 x_1 P_1 x_2 P_2 x_3 P_3 x_4 H

where P_0..P_3 are row-shuffled identities and H is a K x n matrix whose
rows are one-hot band selectors, one row per snapshot. The flattened
operator is ``H (x) P_3 (x) P_2 (x) P_1 (x) P_0``.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import FormatError, OperatorTooLargeError, ShapeError, ValidationError
from .tensor import as_tensor, kron_modes, multi_mode_product

#: Largest dense operator (in bytes) that ``kron_flatten`` will build by default.
DEFAULT_OPERATOR_CAP = 1 << 30

_PERM_TAG = 1
_BAND_TAG = 2


def derive_seed(*keys):
    """Deterministic 64-bit seed from a tuple of non-negative integers."""
    ss = np.random.SeedSequence([int(k) for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_permutation(dim, seed):
    """Row-shuffled ``dim x dim`` identity, uniform over all permutations."""
    if dim < 1:
        raise ValidationError(f"permutation size must be >= 1, got {dim}")
    perm = np.random.default_rng(seed).permutation(dim)
    return np.eye(dim)[perm]


def make_onehot(n_bands, K, seed):
    """K x n_bands binary matrix selecting K distinct bands, one per row."""
    if not 1 <= K <= n_bands:
        raise ValidationError(f"need 1 <= K <= n_bands, got K={K}, n_bands={n_bands}")
    bands = np.random.default_rng(seed).choice(n_bands, size=K, replace=False)
    H = np.zeros((K, n_bands))
    H[np.arange(K), bands] = 1.0
    return H


@dataclass(frozen=True)
class MaskSpec:
    patch_dims: tuple
    snapshots: int = 1
    master_seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        dims = tuple(int(d) for d in self.patch_dims)
        object.__setattr__(self, "patch_dims", dims)
        if len(dims) != 5 or min(dims) < 1:
            raise ValidationError(f"patch_dims must be five positive extents, got {dims}")
        if not 1 <= self.snapshots <= dims[4]:
            raise ValidationError(
                f"snapshot count must lie in [1, {dims[4]}], got {self.snapshots}"
            )

    @property
    def n_bands(self):
        return self.patch_dims[4]


@dataclass(frozen=True)
class SeparableSensingOperator:
    """Per-mode sensing matrices of one patch.

    ``phi[0..3]`` are permutation matrices, ``phi[4]`` is K x n one-hot.
    ``perm_seeds`` are the seeds that generated ``phi[0..3]`` (None when
    shuffling is disabled) and ``bands`` the band sampled by each snapshot.
    """

    phi: tuple
    patch_index: int = 0
    perm_seeds: tuple = (None, None, None, None)
    bands: tuple = field(default=())

    def __post_init__(self):
        phi = tuple(np.asarray(P, dtype=np.float64) for P in self.phi)
        object.__setattr__(self, "phi", phi)
        if len(phi) != 5:
            raise ValidationError(f"expected 5 sensing matrices, got {len(phi)}")
        for i, P in enumerate(phi[:4]):
            if not _is_permutation(P):
                raise ValidationError(f"sensing matrix of mode {i} is not a permutation matrix")
        H = phi[4]
        if H.ndim != 2 or not np.all((H == 0) | (H == 1)) or not np.all(H.sum(axis=1) == 1):
            raise ValidationError("spectral sensing matrix rows must be one-hot")
        sel = tuple(int(b) for b in np.argmax(H, axis=1))
        if len(set(sel)) != len(sel):
            raise ValidationError(f"snapshots must sample distinct bands, got {sel}")
        if not self.bands:
            object.__setattr__(self, "bands", sel)

    @property
    def snapshot_count(self):
        return self.phi[4].shape[0]

    @property
    def patch_dims(self):
        return tuple(P.shape[1] for P in self.phi)

    @property
    def measurement_dims(self):
        return tuple(P.shape[0] for P in self.phi)

    def snapshot(self, k):
        """Operator restricted to snapshot ``k`` (a single one-hot row)."""
        return SeparableSensingOperator(
            phi=self.phi[:4] + (self.phi[4][k:k + 1],),
            patch_index=self.patch_index,
            perm_seeds=self.perm_seeds,
            bands=(self.bands[k],),
        )

    def element_count(self):
        return sum(P.size for P in self.phi)


def _is_permutation(P):
    return (
        P.ndim == 2
        and P.shape[0] == P.shape[1]
        and np.all((P == 0) | (P == 1))
        and np.all(P.sum(axis=0) == 1)
        and np.all(P.sum(axis=1) == 1)
    )


def build_operator(spec, patch_index=0):
    """Sensing operator for one patch, reproducible from (master seed, patch index)."""
    if patch_index < 0:
        raise ValidationError(f"patch index must be >= 0, got {patch_index}")
    phi = []
    seeds = []
    for mode, dim in enumerate(spec.patch_dims[:4]):
        if spec.shuffle:
            seed = derive_seed(spec.master_seed, patch_index, _PERM_TAG, mode)
            phi.append(make_permutation(dim, seed))
            seeds.append(seed)
        else:
            phi.append(np.eye(dim))
            seeds.append(None)
    band_seed = derive_seed(spec.master_seed, patch_index, _BAND_TAG)
    phi.append(make_onehot(spec.n_bands, spec.snapshots, band_seed))
    return SeparableSensingOperator(phi=tuple(phi), patch_index=patch_index, perm_seeds=tuple(seeds))


def sense(L, op):
    """Measurements of patch ``L``; shape (s, t, u, v, K)."""
    L = as_tensor(L)
    if L.shape != op.patch_dims:
        raise ShapeError(f"patch has dims {L.shape}, operator expects {op.patch_dims}")
    return multi_mode_product(L, op.phi)


def kron_flatten(op, cap_bytes=DEFAULT_OPERATOR_CAP):
    """Dense equivalent of ``op`` acting on vectorized patches."""
    rows = int(np.prod(op.measurement_dims, dtype=np.int64))
    cols = int(np.prod(op.patch_dims, dtype=np.int64))
    if 8 * rows * cols > cap_bytes:
        raise OperatorTooLargeError((rows, cols), cap_bytes)
    return kron_modes(op.phi)


def compression_ratio(spec):
    return spec.snapshots / spec.n_bands


# -- mask manifest -----------------------------------------------------------

MANIFEST_HEADER = "# patch snapshot band perm_seed_0 perm_seed_1 perm_seed_2 perm_seed_3"


def manifest_lines(operators):
    lines = []
    for op in operators:
        seeds = ["-" if s is None else str(s) for s in op.perm_seeds]
        for k, band in enumerate(op.bands):
            lines.append(" ".join([str(op.patch_index), str(k), str(band)] + seeds))
    return lines


def write_manifest(path, operators):
    """One line per (patch, snapshot): indices, selected band and the four permutation seeds."""
    text = "\n".join([MANIFEST_HEADER] + manifest_lines(operators)) + "\n"
    Path(path).write_text(text)


def read_manifest(path):
    """Parse a manifest into a list of (patch, snapshot, band, seeds) tuples."""
    entries = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 7:
            raise FormatError(f"{path}:{lineno}: expected 7 fields, got {len(parts)}")
        try:
            patch, snap, band = (int(p) for p in parts[:3])
            seeds = tuple(None if p == "-" else int(p) for p in parts[3:])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
        entries.append((patch, snap, band, seeds))
    return entries
