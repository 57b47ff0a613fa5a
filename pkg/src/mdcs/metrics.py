"""Quality metrics (PSNR, SSIM, spectral angle) and operator benchmarks."""

import csv
import math
import statistics
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ShapeError

CSV_FIELDS = ("scene", "basis", "mode", "K", "psnr_db", "ssim", "sa_deg", "time_s", "operator_bytes")

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass
class MetricsReport:
    psnr_db: float
    ssim: float
    spectral_angle_deg: float
    wall_time_s: float = 0.0
    peak_operator_bytes: int = 0
    ssim_window_truncated: bool = False
    sa_skipped: int = 0


def _pair(ref, est):
    ref = np.asarray(ref, dtype=np.float64)
    est = np.asarray(est, dtype=np.float64)
    if ref.shape != est.shape:
        raise ShapeError(f"reference dims {ref.shape} differ from estimate dims {est.shape}")
    return ref, est


def psnr(ref, est, peak=1.0):
    """10 log10(peak^2 / MSE); ``math.inf`` for an exact match."""
    ref, est = _pair(ref, est)
    if peak <= 0:
        raise ValueError(f"peak must be > 0, got {peak}")
    mse = float(np.mean((ref - est) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def gaussian_window(length, sigma=SSIM_SIGMA):
    x = np.arange(length) - (length - 1) / 2.0
    w = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return w / w.sum()


def _filter_valid(X, wx, wy):
    # separable 'valid' correlation over the first two axes
    n0 = X.shape[0] - wx.size + 1
    n1 = X.shape[1] - wy.size + 1
    tmp = sum(wx[i] * X[i:i + n0] for i in range(wx.size))
    return sum(wy[j] * tmp[:, j:j + n1] for j in range(wy.size))


def ssim(ref, est, data_range=1.0, return_truncated=False):
    """Mean SSIM over all spatial slices.

    Inputs have spatial axes first (S, T, ...); every trailing index (view,
    band) is one slice. The 11x11 Gaussian window (sigma 1.5) is applied
    without padding; when a spatial extent is below 11 the window is
    shortened to that extent along that axis.
    """
    ref, est = _pair(ref, est)
    if ref.ndim < 2:
        raise ShapeError("SSIM needs at least two spatial dimensions")
    lx = min(SSIM_WINDOW, ref.shape[0])
    ly = min(SSIM_WINDOW, ref.shape[1])
    truncated = lx < SSIM_WINDOW or ly < SSIM_WINDOW
    wx, wy = gaussian_window(lx), gaussian_window(ly)
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2

    mx = _filter_valid(ref, wx, wy)
    my = _filter_valid(est, wx, wy)
    sxx = _filter_valid(ref * ref, wx, wy) - mx * mx
    syy = _filter_valid(est * est, wx, wy) - my * my
    sxy = _filter_valid(ref * est, wx, wy) - mx * my
    smap = ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2))
    value = float(np.mean(smap))
    return (value, truncated) if return_truncated else value


def spectral_angle(ref, est, eps=1e-12, return_skipped=False):
    """Mean angle in degrees between reference and estimated spectra (last axis).

    Positions where either spectrum has norm <= eps are skipped.
    """
    ref, est = _pair(ref, est)
    r = ref.reshape(-1, ref.shape[-1])
    e = est.reshape(-1, est.shape[-1])
    nr = np.linalg.norm(r, axis=1)
    ne = np.linalg.norm(e, axis=1)
    ok = (nr > eps) & (ne > eps)
    skipped = int(np.count_nonzero(~ok))
    if not np.any(ok):
        value = math.nan
    else:
        cos = np.sum(r[ok] * e[ok], axis=1) / (nr[ok] * ne[ok])
        value = float(np.degrees(np.mean(np.arccos(np.clip(cos, -1.0, 1.0)))))
    return (value, skipped) if return_skipped else value


def evaluate(ref, est, peak=1.0, wall_time_s=0.0, operator_bytes=0):
    s, truncated = ssim(ref, est, return_truncated=True)
    sa, skipped = spectral_angle(ref, est, return_skipped=True)
    return MetricsReport(psnr(ref, est, peak), s, sa, wall_time_s, operator_bytes, truncated, skipped)


# -- benchmarking -------------------------------------------------------------

def separable_operator_elements(patch_dims, K):
    """Elements held by the per-mode sensing matrices plus per-mode dictionary."""
    s = sum(d * d for d in patch_dims[:4]) + K * patch_dims[4]
    return s + sum(d * d for d in patch_dims)


def flattened_operator_elements(patch_dims, K):
    n = int(np.prod(patch_dims))
    m = n // patch_dims[4] * K
    return m * n + n * n


def operator_bytes(patch_dims, K, mode):
    if mode == "nd":
        return 8 * separable_operator_elements(patch_dims, K)
    return 8 * flattened_operator_elements(patch_dims, K)


@dataclass(frozen=True)
class BenchWorkload:
    scene: str
    field: np.ndarray
    basis: str = "dct"
    mode: str = "nd"
    K: int = 1
    patch_dims: tuple = (5, 5, 4, 4, 13)
    seed: int = 0
    dictionary: object = None
    repeats: int = 3


def bench(workloads, sl0_params=None):
    """Run each workload ``repeats`` times; rows carry the median wall time."""
    from .pipeline import ReconstructionConfig, reconstruct_lightfield, sense_lightfield
    from .sl0 import SL0Params

    rows = []
    for w in workloads:
        cfg = ReconstructionConfig(
            patch_dims=w.patch_dims, snapshots=w.K, master_seed=w.seed, sl0=sl0_params or SL0Params()
        )
        mset = sense_lightfield(w.field, cfg)
        times = []
        rec = None
        for _ in range(w.repeats):
            t0 = time.perf_counter()
            rec = reconstruct_lightfield(mset, cfg, w.dictionary, mode=w.mode)
            times.append(time.perf_counter() - t0)
        rep = evaluate(w.field, rec.field)
        rows.append(
            {
                "scene": w.scene,
                "basis": w.basis,
                "mode": w.mode,
                "K": w.K,
                "psnr_db": rep.psnr_db,
                "ssim": rep.ssim,
                "sa_deg": rep.spectral_angle_deg,
                "time_s": statistics.median(times),
                "operator_bytes": operator_bytes(w.patch_dims, w.K, w.mode),
            }
        )
    return rows


def write_csv(path, rows):
    """Write rows with the fixed column schema; an empty list writes the header only."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in CSV_FIELDS})
