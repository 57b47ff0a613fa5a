"""Tensor files, synthetic light fields and spectral-to-RGB export."""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import FormatError, ValidationError
from .tensor import MAX_NDIM, as_tensor

TNS_MAGIC = b"MDCS"
TNS_VERSION = 1
_DTYPES = {4: np.dtype("<f4"), 8: np.dtype("<f8")}

#: 400-700 nm in 25 nm steps, the band grid of 13-band data.
DEFAULT_WAVELENGTHS = tuple(range(400, 701, 25))


def write_tensor(path, T, dtype="f8"):
    """Write ``T`` as a ``.tns`` file (little-endian, dimension 0 fastest)."""
    T = as_tensor(T)
    dt = np.dtype(dtype).newbyteorder("<")
    if dt.itemsize not in _DTYPES or dt.kind != "f":
        raise ValidationError(f"unsupported dtype {dtype!r}; use f4 or f8")
    header = TNS_MAGIC + struct.pack("<IB", TNS_VERSION, T.ndim)
    header += struct.pack(f"<{T.ndim}Q", *T.shape) + struct.pack("<B", dt.itemsize)
    Path(path).write_bytes(header + np.ravel(T, order="F").astype(dt).tobytes())


def read_tensor(path):
    data = Path(path).read_bytes()
    if len(data) < 9:
        raise FormatError(f"{path}: short header, file ends at byte {len(data)}")
    if data[:4] != TNS_MAGIC:
        raise FormatError(f"{path}: bad magic at byte 0")
    version, ndim = struct.unpack_from("<IB", data, 4)
    if version != TNS_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte 4")
    if not 1 <= ndim <= MAX_NDIM:
        raise FormatError(f"{path}: rank {ndim} at byte 8 outside [1, {MAX_NDIM}]")
    pos = 9
    if len(data) < pos + 8 * ndim + 1:
        raise FormatError(f"{path}: short header, file ends at byte {len(data)}")
    dims = struct.unpack_from(f"<{ndim}Q", data, pos)
    pos += 8 * ndim
    (tag,) = struct.unpack_from("<B", data, pos)
    if tag not in _DTYPES:
        raise FormatError(f"{path}: unknown dtype tag {tag} at byte {pos}")
    pos += 1
    n = int(np.prod(dims, dtype=np.int64))
    expected = pos + n * tag
    if len(data) != expected:
        raise FormatError(
            f"{path}: header declares {expected} bytes but the file has {len(data)} (payload starts at byte {pos})"
        )
    flat = np.frombuffer(data, dtype=_DTYPES[tag], count=n, offset=pos)
    return np.reshape(flat.astype(np.float64), dims, order="F")


# -- synthetic data -----------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSceneSpec:
    dims: tuple = (20, 20, 4, 4, 13)
    primitives: int = 8
    disparity: float = 0.5
    seed: int = 0

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) != 5 or min(dims) < 1:
            raise ValidationError(f"scene dims must be five positive extents, got {dims}")
        if not np.isfinite(self.disparity):
            raise ValidationError("disparity must be finite")
        if self.primitives < 0:
            raise ValidationError("primitive count must be >= 0")


def synth_scene(spec):
    """Sum of Gaussian blobs with Gaussian spectra and linear parallax.

    A blob centred at (cs, ct) in the central view appears at
    (cs + d * (u - uc), ct + d * (v - vc)) in view (u, v). The result is
    scaled to a maximum of 1.
    """
    S, T, U, V, L = spec.dims
    rng = np.random.default_rng(spec.seed)
    out = np.zeros(spec.dims)
    if spec.primitives == 0:
        return out
    uc, vc = (U - 1) / 2.0, (V - 1) / 2.0
    s = np.arange(S)[:, None]
    t = np.arange(T)[None, :]
    bands = np.arange(L)
    max_shift = abs(spec.disparity) * max(uc, vc)
    for _ in range(spec.primitives):
        width = rng.uniform(1.0, max(1.0, min(S, T) / 6.0))
        margin = 3.0 * width + max_shift
        cs = _draw_centre(rng, S, margin)
        ct = _draw_centre(rng, T, margin)
        band_c = rng.uniform(0, L - 1)
        band_w = rng.uniform(1.0, max(1.0, L / 3.0))
        amp = rng.uniform(0.5, 1.0)
        spectrum = amp * np.exp(-((bands - band_c) ** 2) / (2 * band_w ** 2))
        for u in range(U):
            for v in range(V):
                ps = cs + spec.disparity * (u - uc)
                pt = ct + spec.disparity * (v - vc)
                blob = np.exp(-((s - ps) ** 2 + (t - pt) ** 2) / (2 * width ** 2))
                out[:, :, u, v, :] += blob[:, :, None] * spectrum
    return out / out.max()


def _draw_centre(rng, extent, margin):
    lo, hi = margin, extent - 1 - margin
    if lo >= hi:
        return rng.uniform(0, extent - 1)
    return rng.uniform(lo, hi)


def synth_sparse_field(field_dims, patch_dims, dictionary, nonzeros, seed=0):
    """Field whose every patch has ``nonzeros`` non-zero coefficients in ``dictionary``.

    Coefficient magnitudes are uniform in [0.5, 1.5] with random signs. The
    field is scaled to a maximum absolute value of 1.
    """
    from .pipeline import PatchGrid, assemble_patches

    grid = PatchGrid(field_dims, patch_dims)
    if any(grid.pad):
        raise ValidationError("sparse fields require patch dims that divide the field dims")
    rng = np.random.default_rng(seed)
    size = int(np.prod(patch_dims))
    patches = []
    for _ in range(grid.n_patches):
        S = np.zeros(size)
        idx = rng.choice(size, size=nonzeros, replace=False)
        S[idx] = rng.choice([-1.0, 1.0], size=nonzeros) * rng.uniform(0.5, 1.5, size=nonzeros)
        patches.append(dictionary.synthesize(S.reshape(patch_dims, order="F")))
    field_ = assemble_patches(patches, grid)
    peak = np.max(np.abs(field_))
    return field_ / peak if peak > 0 else field_


# -- colour ---------------------------------------------------------------------

# CIE 1931 2-degree colour matching functions, 400-700 nm at 10 nm
_CMF = np.array([
    [0.01431, 0.000396, 0.06785],
    [0.04351, 0.00121, 0.2074],
    [0.13438, 0.004, 0.6456],
    [0.2839, 0.0116, 1.3856],
    [0.34828, 0.023, 1.74706],
    [0.3362, 0.038, 1.77211],
    [0.2908, 0.06, 1.6692],
    [0.19536, 0.09098, 1.28764],
    [0.09564, 0.13902, 0.81295],
    [0.03201, 0.20802, 0.46518],
    [0.0049, 0.323, 0.272],
    [0.0093, 0.503, 0.1582],
    [0.06327, 0.71, 0.07825],
    [0.1655, 0.862, 0.04216],
    [0.2904, 0.954, 0.0203],
    [0.43345, 0.99495, 0.00875],
    [0.5945, 0.995, 0.0039],
    [0.7621, 0.952, 0.0021],
    [0.9163, 0.87, 0.00165],
    [1.0263, 0.757, 0.0011],
    [1.0622, 0.631, 0.0008],
    [1.0026, 0.503, 0.00034],
    [0.85445, 0.381, 0.00019],
    [0.6424, 0.265, 0.00005],
    [0.4479, 0.175, 0.00002],
    [0.2835, 0.107, 0.0],
    [0.1649, 0.061, 0.0],
    [0.0874, 0.032, 0.0],
    [0.04677, 0.017, 0.0],
    [0.0227, 0.00821, 0.0],
    [0.011359, 0.004102, 0.0],
])

# CIE standard illuminant D65 relative SPD, same grid
_D65 = np.array([
    82.7549, 91.486, 93.4318, 86.6823, 104.865, 117.008, 117.812, 114.861,
    115.923, 108.811, 109.354, 107.802, 104.790, 107.689, 104.405, 104.046,
    100.000, 96.3342, 95.788, 88.6856, 90.0062, 89.5991, 87.6987, 83.2886,
    83.6992, 80.0268, 80.2146, 82.2778, 78.2842, 69.7213, 71.6091,
])

_GRID = np.arange(400, 701, 10)

XYZ_TO_LINEAR_SRGB = np.array([
    [3.2404542, -1.5371385, -0.4985314],
    [-0.9692660, 1.8760108, 0.0415560],
    [0.0556434, -0.2040259, 1.0572252],
])


def band_weights(wavelengths):
    """Per-band XYZ weights (bands x 3), scaled so a flat unit spectrum has Y = 1."""
    wl = np.asarray(wavelengths, dtype=np.float64)
    if wl.ndim != 1 or wl.min() < _GRID[0] or wl.max() > _GRID[-1]:
        raise ValidationError(f"wavelengths must lie in [{_GRID[0]}, {_GRID[-1]}] nm")
    cmf = np.stack([np.interp(wl, _GRID, _CMF[:, c]) for c in range(3)], axis=1)
    w = cmf * np.interp(wl, _GRID, _D65)[:, None]
    return w / w[:, 1].sum()


def _resolve_wavelengths(n_bands, wavelengths):
    if wavelengths is None:
        if n_bands != len(DEFAULT_WAVELENGTHS):
            raise ValidationError(
                f"no default wavelength grid for {n_bands} bands; pass wavelengths explicitly"
            )
        return DEFAULT_WAVELENGTHS
    if len(wavelengths) != n_bands:
        raise ValidationError(f"{len(wavelengths)} wavelengths given for {n_bands} bands")
    return wavelengths


def spectral_to_linear_rgb(field, view=(0, 0), wavelengths=None):
    """Linear sRGB image (S x T x 3) of one view, before clipping."""
    field = as_tensor(field)
    if field.ndim != 5:
        raise ValidationError("expected a (S, T, U, V, bands) light field")
    img = field[:, :, view[0], view[1], :]
    w = band_weights(_resolve_wavelengths(img.shape[-1], wavelengths))
    return (img @ w) @ XYZ_TO_LINEAR_SRGB.T


def _srgb_encode(x):
    return np.where(x <= 0.0031308, 12.92 * x, 1.055 * np.power(x, 1 / 2.4) - 0.055)


def spectral_to_rgb(field, view=(0, 0), wavelengths=None):
    """8-bit sRGB rendering of one view under D65."""
    lin = np.clip(spectral_to_linear_rgb(field, view, wavelengths), 0.0, 1.0)
    return np.round(_srgb_encode(lin) * 255.0).astype(np.uint8)


def save_png(path, image):
    from PIL import Image

    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(path)
