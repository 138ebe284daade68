"""Image/video quality metrics and the statistics behind the report tables.

SSIM follows the standard windowed formulation (11x11 Gaussian window,
sigma 1.5, K1=0.01, K2=0.03, L=1). The Fréchet distance consumes Gaussian
fits of externally produced embedding matrices; embedding networks themselves
are out of scope. All metric math runs in float64.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EigenFailure,
    EmptyInput,
    RangeError,
    ShapeMismatch,
    TooFewRows,
    TooSmall,
)
from .tensor import Tensor

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_L = 1.0


@dataclass(frozen=True)
class GaussianStats:
    """Mean vector and unbiased covariance of one embedding corpus."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if self.mu.ndim != 1 or self.sigma.shape != (self.mu.size, self.mu.size):
            raise ShapeMismatch(
                f"stats must be (D,) and (D, D), got {self.mu.shape}, "
                f"{self.sigma.shape}")
        if self.mu.size < 1:
            raise ShapeMismatch("dimension must be >= 1")
        if np.abs(self.sigma - self.sigma.T).max(initial=0.0) > 1e-9:
            raise ShapeMismatch("covariance must be symmetric within 1e-9")


@dataclass(frozen=True)
class MetricReport:
    """One benchmark run's metric values, mean ± std where applicable."""

    ssim_mean: float
    ssim_std: float
    psnr_mean: float
    psnr_std: float
    frechet: float
    delta_t_mean: float
    delta_t_std: float
    model_size_mb: float


def _gauss_kernel():
    half = SSIM_WINDOW // 2
    xs = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(xs ** 2) / (2.0 * SSIM_SIGMA ** 2))
    return k / k.sum()


_KERNEL_1D = _gauss_kernel()


def _as_image(x) -> np.ndarray:
    """Accept a Tensor or ndarray; compute in float64 either way."""
    arr = x.data if isinstance(x, Tensor) else np.asarray(x)
    return arr.astype(np.float64, copy=False)


def _filter_valid(plane: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation with the Gaussian window."""
    win = np.lib.stride_tricks.sliding_window_view(plane, SSIM_WINDOW, axis=0)
    rows = win @ _KERNEL_1D
    win = np.lib.stride_tricks.sliding_window_view(rows, SSIM_WINDOW, axis=1)
    return win @ _KERNEL_1D


def ssim(x, y) -> float:
    """Mean windowed structural similarity over channels; 1.0 for identity.

    Accepts CHW Tensors or ndarrays with values in [0, 1].
    """
    xa, ya = _as_image(x), _as_image(y)
    if xa.shape != ya.shape:
        raise ShapeMismatch(f"shapes differ: {xa.shape} vs {ya.shape}")
    if xa.ndim != 3:
        raise ShapeMismatch(f"ssim expects CHW tensors, got {xa.shape}")
    if xa.shape[1] < SSIM_WINDOW or xa.shape[2] < SSIM_WINDOW:
        raise TooSmall(
            f"image {xa.shape[1]}x{xa.shape[2]} smaller than the "
            f"{SSIM_WINDOW}x{SSIM_WINDOW} window")
    for name, arr in (("x", xa), ("y", ya)):
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise RangeError(f"{name} values must lie in [0, 1]")
    c1 = (SSIM_K1 * SSIM_L) ** 2
    c2 = (SSIM_K2 * SSIM_L) ** 2
    total = 0.0
    for ch in range(xa.shape[0]):
        a = xa[ch]
        b = ya[ch]
        mu_a = _filter_valid(a)
        mu_b = _filter_valid(b)
        var_a = _filter_valid(a * a) - mu_a ** 2
        var_b = _filter_valid(b * b) - mu_b ** 2
        cov = _filter_valid(a * b) - mu_a * mu_b
        num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
        den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
        total += float(np.mean(num / den))
    return total / xa.shape[0]


def psnr(x, y, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf when the images are identical.

    Accepts Tensors or ndarrays of matching shape.
    """
    xa, ya = _as_image(x), _as_image(y)
    if xa.shape != ya.shape:
        raise ShapeMismatch(f"shapes differ: {xa.shape} vs {ya.shape}")
    mse = float(np.mean((xa - ya) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def gaussian_stats(emb: np.ndarray) -> GaussianStats:
    """Column mean and unbiased (N-1) covariance of an [N, D] matrix."""
    emb = np.asarray(emb, dtype=np.float64)
    if emb.ndim != 2:
        raise ShapeMismatch(f"embeddings must be [N, D], got {emb.shape}")
    if emb.shape[0] < 2:
        raise TooFewRows(f"covariance needs >= 2 rows, got {emb.shape[0]}")
    mu = emb.mean(axis=0)
    centered = emb - mu
    sigma = (centered.T @ centered) / (emb.shape[0] - 1)
    sigma = (sigma + sigma.T) / 2.0
    return GaussianStats(mu=mu, sigma=sigma)


def _sqrt_psd(mat: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root; negative eigenvalues are clamped to zero."""
    try:
        vals, vecs = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"eigendecomposition failed: {exc}") from None
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    """Fréchet distance between two Gaussian fits, clamped to >= 0.

    Uses the symmetric product form
    ``||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2)``
    so every matrix square root is of a symmetric PSD matrix.
    """
    if a.mu.size != b.mu.size:
        raise DimensionMismatch(
            f"stats dimensions differ: {a.mu.size} vs {b.mu.size}")
    root_a = _sqrt_psd(a.sigma)
    inner = root_a @ b.sigma @ root_a
    cross = _sqrt_psd((inner + inner.T) / 2.0)
    diff = a.mu - b.mu
    dist = float(diff @ diff + np.trace(a.sigma + b.sigma - 2.0 * cross))
    return max(dist, 0.0)


def aggregate(values) -> tuple:
    """Arithmetic mean and population standard deviation of a list."""
    vals = [float(v) for v in values]
    if not vals:
        raise EmptyInput("aggregate of an empty list")
    mean = sum(vals) / len(vals)
    var = sum((v - mean) ** 2 for v in vals) / len(vals)
    return mean, math.sqrt(var)
