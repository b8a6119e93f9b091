"""Image and data fidelity measures."""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .geometry import Image, Sinogram


def _array(x):
    if isinstance(x, (Image, Sinogram)):
        return x.data
    return np.asarray(x, dtype=float)


def _same_shape(a, b):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def ssim(a, b, data_range: float | None = None, sigma: float = 1.5, k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean structural similarity of ``a`` against reference ``b``.

    Gaussian 11-tap window (sigma 1.5), reflective borders, and a 5-pixel
    border crop before averaging. ``data_range`` defaults to ``ptp(b)``;
    a zero range falls back to 1 so constant images stay well defined.
    """
    a, b = _array(a), _array(b)
    _same_shape(a, b)
    if data_range is None:
        data_range = float(np.ptp(b))
    if data_range <= 0:
        data_range = 1.0
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2

    def blur(x):
        return ndimage.gaussian_filter(x, sigma, mode="reflect", truncate=3.5)

    mu_a, mu_b = blur(a), blur(b)
    var_a = blur(a * a) - mu_a * mu_a
    var_b = blur(b * b) - mu_b * mu_b
    cov = blur(a * b) - mu_a * mu_b
    smap = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2))
    pad = int(3.5 * sigma + 0.5)
    if all(n > 2 * pad for n in smap.shape):
        smap = smap[pad:-pad, pad:-pad]
    return float(smap.mean())


def snr_db(reference, perturbed) -> float:
    """``20 log10(||ref|| / ||ref - perturbed||)``; ``inf`` when they coincide."""
    ref, per = _array(reference), _array(perturbed)
    _same_shape(ref, per)
    num = np.linalg.norm(ref)
    if num == 0:
        raise ValueError("SNR is undefined for an all-zero reference")
    den = np.linalg.norm(ref - per)
    if den == 0:
        return math.inf
    return float(20.0 * math.log10(num / den))


def max_abs_err(a, b) -> float:
    a, b = _array(a), _array(b)
    _same_shape(a, b)
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def relative_l2(estimate, truth) -> float:
    est, ref = _array(estimate), _array(truth)
    _same_shape(est, ref)
    return float(np.linalg.norm(est - ref) / np.linalg.norm(ref))
