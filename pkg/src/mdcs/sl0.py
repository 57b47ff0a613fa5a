"""Smoothed-l0 sparse recovery, multidimensional and vectorized.

Both solvers share one annealing loop and differ only in how the
measurement operator and its pseudo-inverse are applied: per mode
(n-mode products with small matrices) or as one dense matrix.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericError, ShapeError, ValidationError
from .tensor import as_tensor, multi_mode_product

PINV_RCOND = 1e-12
_ORTHO_ROWS_TOL = 1e-12
ASCENT_SCALINGS = ("sigma2", "raw")
INITIAL_SIGMAS = ("estimate", "measurements")


@dataclass(frozen=True)
class SL0Params:
    """Annealing schedule.

    ``sigma_min_factor`` sets the stopping width relative to the initial
    sigma. ``initial_sigma="estimate"`` starts at twice the largest entry
    of the minimum-norm estimate, ``"measurements"`` at the largest
    absolute measurement.

    ``ascent_scaling`` selects the gradient step: ``"sigma2"`` updates
    S <- S + step * sigma^2 * dS, ``"raw"`` replaces the estimate by
    step * dS before projection.

    With ``normalize_columns`` the solver runs on unit-norm columns
    (per mode for the separable solver) and rescales the result. The
    feasible set and the support of every solution are unchanged.
    """

    sigma_min_factor: float = 0.01
    sigma_decrease: float = 0.5
    inner_iterations: int = 3
    step: float = 2.0
    ascent_scaling: str = "sigma2"
    initial_sigma: str = "estimate"
    normalize_columns: bool = True

    def __post_init__(self):
        if not 0 < self.sigma_min_factor < 1:
            raise ValidationError(f"sigma_min_factor must lie in (0, 1), got {self.sigma_min_factor}")
        if not 0 < self.sigma_decrease < 1:
            raise ValidationError(f"sigma_decrease must lie in (0, 1), got {self.sigma_decrease}")
        if self.inner_iterations < 1:
            raise ValidationError(f"inner_iterations must be >= 1, got {self.inner_iterations}")
        if not self.step > 0:
            raise ValidationError(f"step must be > 0, got {self.step}")
        if self.ascent_scaling not in ASCENT_SCALINGS:
            raise ValidationError(f"ascent_scaling must be one of {ASCENT_SCALINGS}")
        if self.initial_sigma not in INITIAL_SIGMAS:
            raise ValidationError(f"initial_sigma must be one of {INITIAL_SIGMAS}")

    def expected_outer_iterations(self):
        return math.ceil(math.log(self.sigma_min_factor) / math.log(self.sigma_decrease))


@dataclass
class SolveReport:
    final_sigma: float
    outer_iterations: int
    residual_norm: float
    wall_time_seconds: float


def pseudo_inverse(M):
    """Moore-Penrose pseudo-inverse by SVD, dropping singular values below 1e-12 * max."""
    M = np.asarray(M, dtype=np.float64)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros(M.T.shape)
    keep = s > PINV_RCOND * s[0]
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def has_orthonormal_rows(M, tol=_ORTHO_ROWS_TOL):
    M = np.asarray(M, dtype=np.float64)
    return M.shape[0] <= M.shape[1] and np.max(np.abs(M @ M.T - np.eye(M.shape[0]))) <= tol


def mode_pseudo_inverse(M):
    """Pseudo-inverse of a per-mode matrix; the transpose when rows are orthonormal."""
    M = np.asarray(M, dtype=np.float64)
    if has_orthonormal_rows(M):
        return M.T.copy()
    return pseudo_inverse(M)


def column_scales(M):
    """Column norms of ``M``; numerically zero columns (norm <= 1e-12 * max) map to 1."""
    n = np.linalg.norm(np.asarray(M, dtype=np.float64), axis=0)
    top = n.max() if n.size else 0.0
    n[n <= PINV_RCOND * top] = 1.0
    return n


def _anneal(I, S, forward, back, params):
    start = time.perf_counter()
    if params.initial_sigma == "estimate":
        sigma = 2.0 * float(np.max(np.abs(S))) if S.size else 0.0
    else:
        sigma = float(np.max(np.abs(I))) if I.size else 0.0
    sigma_min = params.sigma_min_factor * sigma
    mu = params.step
    outer = 0
    while sigma > sigma_min:
        s2 = sigma * sigma
        if params.ascent_scaling == "sigma2":
            for _ in range(params.inner_iterations):
                S = S - mu * S * np.exp(-S * S / (2.0 * s2))
                S = S - back(forward(S) - I)
        else:
            grad = -(S / s2) * np.exp(-S * S / (2.0 * s2))
            for _ in range(params.inner_iterations):
                S_hat = mu * grad
                S_hat = S_hat - back(forward(S_hat) - I)
            S = S_hat
        outer += 1
        if not np.all(np.isfinite(S)):
            raise NumericError(f"non-finite estimate at outer iteration {outer} (sigma={sigma:.3g})")
        sigma *= params.sigma_decrease
    residual = float(np.linalg.norm(forward(S) - I))
    report = SolveReport(sigma, outer, residual, time.perf_counter() - start)
    return S, report


def sl0_nd(I, A, params=None, pinvs=None, return_report=False):
    """Sparse S with S x_0 A[0] ... x_{N-1} A[N-1] = I.

    ``pinvs`` may hold precomputed pseudo-inverses of the factors as the
    solver uses them (after column normalization, when enabled).
    """
    params = params or SL0Params()
    I = as_tensor(I)
    A = [np.asarray(M, dtype=np.float64) for M in A]
    if len(A) != I.ndim:
        raise ShapeError(f"{len(A)} factors given for a measurement tensor of rank {I.ndim}")
    for mode, M in enumerate(A):
        if M.ndim != 2 or M.shape[0] != I.shape[mode]:
            raise ShapeError(
                f"mode {mode}: factor has {M.shape[0]} rows but the measurement extent is {I.shape[mode]}"
            )
    if params.normalize_columns:
        scales = [column_scales(M) for M in A]
        A = [M / n for M, n in zip(A, scales)]
    if pinvs is None:
        pinvs = [mode_pseudo_inverse(M) for M in A]

    def forward(S):
        return multi_mode_product(S, A)

    def back(R):
        return multi_mode_product(R, pinvs)

    S, report = _anneal(I, back(I), forward, back, params)
    if params.normalize_columns:
        for mode, n in enumerate(scales):
            shape = [1] * S.ndim
            shape[mode] = n.size
            S = S / n.reshape(shape)
    return (S, report) if return_report else S


def sl0_1d(y, A, params=None, pinv=None, return_report=False):
    """Vectorized baseline: sparse s with A @ s = y.

    ``pinv``, when given, must be the pseudo-inverse of the operator as
    the solver uses it (after column normalization, when enabled).
    """
    params = params or SL0Params()
    y = np.asarray(y, dtype=np.float64).ravel()
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != y.size:
        raise ShapeError(f"operator has {A.shape[0]} rows but {y.size} measurements were given")
    if params.normalize_columns:
        scales = column_scales(A)
        A = A / scales
    if pinv is None:
        pinv = pseudo_inverse(A)

    def forward(s):
        return A @ s

    def back(r):
        return pinv @ r

    s, report = _anneal(y, back(y), forward, back, params)
    if params.normalize_columns:
        s = s / scales
    return (s, report) if return_report else s
