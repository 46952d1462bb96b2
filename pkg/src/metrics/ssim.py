"""Gaussian-windowed SSIM on C x H x W images in [0, 1].

Local statistics use population (biased) moments; the score of a colour
image is the mean of the per-channel maps.
"""
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from autodiff.tensor import Tensor
from metrics.exceptions import SsimInputError
from metrics.schemas import SsimParams

# Values are accepted this far outside [0, 1] to absorb float rounding.
RANGE_TOLERANCE = 1e-6


def gaussian_window(params: SsimParams) -> np.ndarray:
    radius = params.window // 2
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    profile = np.exp(-(offsets**2) / (2.0 * params.sigma**2))
    window = np.outer(profile, profile)
    return window / window.sum()


def _filter(image: np.ndarray, window: np.ndarray) -> np.ndarray:
    patches = sliding_window_view(image, window.shape, axis=(1, 2))
    return np.tensordot(patches, window, axes=([3, 4], [0, 1]))


def _check_pair(a: Tensor, b: Tensor, params: SsimParams) -> tuple[np.ndarray, np.ndarray]:
    if a.shape != b.shape:
        raise SsimInputError(f"shapes differ: {list(a.shape)} vs {list(b.shape)}")
    if a.ndim != 3:
        raise SsimInputError(f"expected C x H x W, got {list(a.shape)}")
    if min(a.shape[1:]) < params.window:
        raise SsimInputError(f"image {list(a.shape)} is smaller than the {params.window} window")
    for image in (a, b):
        if image.min() < -RANGE_TOLERANCE or image.max() > 1.0 + RANGE_TOLERANCE:
            raise SsimInputError("values must lie in [0, 1]")
    return np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)


def ssim_map(a: Tensor, b: Tensor, params: Optional[SsimParams] = None, pad: bool = False) -> np.ndarray:
    """Per-channel local SSIM.

    Args:
        a: First image.
        b: Second image.
        params: Window and stabilising constants.
        pad: Reflect-pad so the map covers every pixel; otherwise only
            positions where the window fits are scored.

    Returns:
        np.ndarray: C x H' x W' map.
    """
    params = params or SsimParams()
    a, b = _check_pair(a, b, params)
    window = gaussian_window(params)
    if pad:
        radius = params.window // 2
        widths = ((0, 0), (radius, radius), (radius, radius))
        a = np.pad(a, widths, mode="reflect")
        b = np.pad(b, widths, mode="reflect")

    mu_a = _filter(a, window)
    mu_b = _filter(b, window)
    var_a = _filter(a * a, window) - mu_a * mu_a
    var_b = _filter(b * b, window) - mu_b * mu_b
    cov = _filter(a * b, window) - mu_a * mu_b

    numerator = (2.0 * mu_a * mu_b + params.c1) * (2.0 * cov + params.c2)
    denominator = (mu_a * mu_a + mu_b * mu_b + params.c1) * (var_a + var_b + params.c2)
    return numerator / denominator


def ssim(a: Tensor, b: Tensor, params: Optional[SsimParams] = None) -> float:
    """Mean SSIM over valid window positions and channels.

    Raises:
        SsimInputError: On shape mismatch, out-of-range values or an
            image smaller than the window.
    """
    return float(ssim_map(a, b, params).mean())


def masked_ssim(a: Tensor, b: Tensor, mask: Tensor, params: Optional[SsimParams] = None) -> float:
    """Mean SSIM over the pixels where ``mask`` is set."""
    plane = mask[0] if mask.ndim == 3 else mask
    if plane.shape != a.shape[1:]:
        raise SsimInputError(f"mask {list(mask.shape)} does not match image {list(a.shape)}")
    selected = plane > 0.5
    if not selected.any():
        raise SsimInputError("mask selects no pixels")
    scores = ssim_map(a, b, params, pad=True).mean(axis=0)
    return float(scores[selected].mean())
