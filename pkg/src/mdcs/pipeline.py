"""Patch-wise acquisition and reconstruction of whole light fields."""

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .dictionaries import dct_separable, kron_dictionary, load_dictionary
from .exceptions import FormatError, ValidationError
from .sensing import (
    DEFAULT_OPERATOR_CAP,
    MaskSpec,
    build_operator,
    kron_flatten,
    read_manifest,
    sense,
    write_manifest,
)
from .sl0 import SL0Params, column_scales, pseudo_inverse, sl0_1d, sl0_nd
from .tensor import as_tensor, devectorize, vectorize

MODES = ("nd", "1d")
BASES = ("dct", "learned", "file")


@dataclass(frozen=True)
class PatchGrid:
    """Non-overlapping tiling of a (S, T, U, V, L) field by (s, t, u, v, L) patches.

    Extents that are not a multiple of the patch extent are padded at the
    high end by symmetric reflection; ``pad`` records how much.
    """

    field_dims: tuple
    patch_dims: tuple

    def __post_init__(self):
        fd = tuple(int(d) for d in self.field_dims)
        pd = tuple(int(d) for d in self.patch_dims)
        object.__setattr__(self, "field_dims", fd)
        object.__setattr__(self, "patch_dims", pd)
        if len(fd) != 5 or len(pd) != 5:
            raise ValidationError("field and patch dims must both have five extents")
        if min(pd) < 1 or min(fd) < 1:
            raise ValidationError(f"zero-extent dimension in field {fd} or patch {pd}")
        if fd[4] != pd[4]:
            raise ValidationError(
                f"the spectral extent is not tiled: patch has {pd[4]} bands, field has {fd[4]}"
            )

    @property
    def counts(self):
        return tuple(-(-f // p) for f, p in zip(self.field_dims, self.patch_dims))

    @property
    def padded_dims(self):
        return tuple(c * p for c, p in zip(self.counts, self.patch_dims))

    @property
    def pad(self):
        return tuple(q - f for q, f in zip(self.padded_dims, self.field_dims))

    @property
    def n_patches(self):
        return int(np.prod(self.counts[:4]))

    def corners(self):
        """Lower corner of every patch, in row-major grid order over (s, t, u, v)."""
        return [
            tuple(i * p for i, p in zip(idx, self.patch_dims[:4])) + (0,)
            for idx in np.ndindex(*self.counts[:4])
        ]

    def slices(self, corner):
        return tuple(slice(c, c + p) for c, p in zip(corner, self.patch_dims))


def extract_patches(L, grid):
    L = as_tensor(L)
    if L.shape != grid.field_dims:
        raise ValidationError(f"field has dims {L.shape}, grid expects {grid.field_dims}")
    if any(grid.pad):
        L = np.pad(L, [(0, p) for p in grid.pad], mode="symmetric")
    return [L[grid.slices(c)].copy() for c in grid.corners()]


def assemble_patches(patches, grid):
    if len(patches) != grid.n_patches:
        raise ValidationError(f"got {len(patches)} patches, grid has {grid.n_patches}")
    out = np.empty(grid.padded_dims)
    for c, p in zip(grid.corners(), patches):
        out[grid.slices(c)] = p
    return out[tuple(slice(0, f) for f in grid.field_dims)]


@dataclass(frozen=True)
class ReconstructionConfig:
    patch_dims: tuple = (5, 5, 4, 4, 13)
    snapshots: int = 1
    master_seed: int = 0
    basis: str = "dct"
    dictionary_path: str = ""
    sl0: SL0Params = field(default_factory=SL0Params)
    threads: int = 1
    shuffle: bool = True

    def __post_init__(self):
        object.__setattr__(self, "patch_dims", tuple(int(d) for d in self.patch_dims))
        if self.basis not in BASES:
            raise ValidationError(f"basis must be one of {BASES}, got {self.basis!r}")
        if self.basis != "dct" and not self.dictionary_path:
            raise ValidationError(f"basis {self.basis!r} needs a dictionary path")
        if self.threads < 1:
            raise ValidationError(f"threads must be >= 1, got {self.threads}")
        self.mask_spec()

    def mask_spec(self):
        return MaskSpec(self.patch_dims, self.snapshots, self.master_seed, self.shuffle)

    def load_dictionary(self):
        if self.basis == "dct":
            return dct_separable(self.patch_dims)
        D = load_dictionary(self.dictionary_path)
        if D.dims != self.patch_dims:
            raise ValidationError(f"dictionary dims {D.dims} do not match patch dims {self.patch_dims}")
        return D

    # key=value text form; ``threads`` is excluded from the hash since it
    # never changes results
    def to_text(self):
        items = {k: v for k, v in asdict(self).items() if k != "sl0"}
        items.update({f"sl0.{k}": v for k, v in asdict(self.sl0).items()})
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in items.items())

    def digest(self):
        text = "".join(l for l in self.to_text().splitlines(True) if not l.startswith("threads"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @classmethod
    def from_mapping(cls, values):
        values = dict(values)
        sl0_kw = {}
        for f in fields(SL0Params):
            key = f"sl0.{f.name}"
            if key in values:
                sl0_kw[f.name] = _parse(values.pop(key), f.type)
        kw = {}
        for f in fields(cls):
            if f.name in values and f.name != "sl0":
                kw[f.name] = _parse(values.pop(f.name), f.type)
        return cls(sl0=SL0Params(**sl0_kw), **kw)


def _fmt(v):
    if isinstance(v, (tuple, list)):
        return ",".join(str(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def _parse(value, typ):
    if not isinstance(value, str):
        return value
    typ = typ if isinstance(typ, str) else typ.__name__
    if typ == "tuple":
        return tuple(int(x) for x in value.split(","))
    if typ == "bool":
        if value.lower() not in ("true", "false", "1", "0"):
            raise ValidationError(f"not a boolean: {value!r}")
        return value.lower() in ("true", "1")
    if typ == "int":
        return int(value)
    if typ == "float":
        return float(value)
    return value


def parse_kv_text(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"line {lineno}: expected key = value, got {raw!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


@dataclass
class MeasurementSet:
    grid: PatchGrid
    operators: list
    measurements: list

    @property
    def sample_count(self):
        return sum(m.size for m in self.measurements)


def sense_lightfield(L, config):
    L = as_tensor(L)
    grid = PatchGrid(L.shape, config.patch_dims)
    spec = config.mask_spec()
    patches = extract_patches(L, grid)
    ops = [build_operator(spec, i) for i in range(len(patches))]
    meas = [sense(p, op) for p, op in zip(patches, ops)]
    return MeasurementSet(grid, ops, meas)


def write_bundle(directory, mset, config):
    """Measurement bundle: manifest, per-snapshot tensors and a config snapshot."""
    from .lfio import write_tensor

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_manifest(d / "manifest.txt", mset.operators)
    for i, m in enumerate(mset.measurements):
        for k in range(m.shape[4]):
            write_tensor(d / f"patch_{i}_snap_{k}.tns", m[..., k:k + 1])
    text = config.to_text() + f"field_dims = {_fmt(mset.grid.field_dims)}\n"
    (d / "config.txt").write_text(text)


def read_bundle(directory, threads=None):
    from .lfio import read_tensor

    d = Path(directory)
    values = parse_kv_text((d / "config.txt").read_text())
    try:
        field_dims = _parse(values.pop("field_dims"), "tuple")
    except KeyError:
        raise FormatError(f"{d / 'config.txt'}: missing field_dims") from None
    config = ReconstructionConfig.from_mapping(values)
    if threads is not None:
        config = replace(config, threads=threads)
    grid = PatchGrid(field_dims, config.patch_dims)
    spec = config.mask_spec()
    ops = [build_operator(spec, i) for i in range(grid.n_patches)]
    entries = read_manifest(d / "manifest.txt")
    expected = {(op.patch_index, k): (b, op.perm_seeds) for op in ops for k, b in enumerate(op.bands)}
    got = {(p, k): (b, s) for p, k, b, s in entries}
    if got != expected:
        raise ValidationError("mask manifest does not match the operators implied by config.txt")
    meas = []
    for i in range(grid.n_patches):
        snaps = [read_tensor(d / f"patch_{i}_snap_{k}.tns") for k in range(config.snapshots)]
        meas.append(np.concatenate(snaps, axis=4))
    return MeasurementSet(grid, ops, meas), config


def reconstruct_patch(I_p, op, dictionary, params=None, mode="nd", cap_bytes=DEFAULT_OPERATOR_CAP, kron_dict=None):
    """Recover one patch: sparse coefficients by SL0, then synthesis."""
    params = params or SL0Params()
    if mode == "nd":
        A = [P @ F for P, F in zip(op.phi, dictionary.factors)]
        S = sl0_nd(I_p, A, params)
        return dictionary.synthesize(S)
    if mode == "1d":
        Dk = kron_dict if kron_dict is not None else kron_dictionary(dictionary, cap_bytes)
        A = kron_flatten(op, cap_bytes) @ Dk
        if params.normalize_columns:
            A_eff = A / column_scales(A)
        else:
            A_eff = A
        s = sl0_1d(vectorize(I_p), A, params, pinv=pseudo_inverse(A_eff))
        return devectorize(Dk @ s, op.patch_dims)
    raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")


@dataclass
class Reconstruction:
    field: np.ndarray
    patch_times: list
    total_time: float
    mode: str


def reconstruct_lightfield(mset, config, dictionary=None, mode="nd", cap_bytes=DEFAULT_OPERATOR_CAP):
    """Reconstruct every patch and reassemble.

    Patches are independent and results are written by position, so the
    output is identical for any ``config.threads``.
    """
    if len(mset.operators) != mset.grid.n_patches or len(mset.measurements) != mset.grid.n_patches:
        raise ValidationError("measurement set does not cover the patch grid")
    for op in mset.operators:
        if op.patch_dims != config.patch_dims or op.snapshot_count != config.snapshots:
            raise ValidationError(f"operator of patch {op.patch_index} does not match the config")
    dictionary = dictionary or config.load_dictionary()
    kron_dict = kron_dictionary(dictionary, cap_bytes) if mode == "1d" else None

    def work(i):
        t0 = time.perf_counter()
        rec = reconstruct_patch(
            mset.measurements[i], mset.operators[i], dictionary, config.sl0, mode, cap_bytes, kron_dict
        )
        return rec, time.perf_counter() - t0

    start = time.perf_counter()
    idx = range(len(mset.operators))
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(work, idx))
    else:
        results = [work(i) for i in idx]
    total = time.perf_counter() - start
    field_ = assemble_patches([r for r, _ in results], mset.grid)
    return Reconstruction(field_, [t for _, t in results], total, mode)


def snapshot_sweep(L, config, K_list, dictionary=None, peak=1.0):
    """PSNR/SSIM/SA of the full pipeline for each snapshot count in ``K_list``."""
    from .metrics import psnr, spectral_angle, ssim

    rows = []
    for K in K_list:
        if K < 1:
            raise ValidationError(f"snapshot counts must be >= 1, got {K}")
        cfg = replace(config, snapshots=int(K))
        mset = sense_lightfield(L, cfg)
        rec = reconstruct_lightfield(mset, cfg, dictionary)
        rows.append(
            {
                "K": int(K),
                "psnr_db": psnr(L, rec.field, peak),
                "ssim": ssim(L, rec.field),
                "sa_deg": spectral_angle(L, rec.field),
                "time_s": rec.total_time,
            }
        )
    return rows
