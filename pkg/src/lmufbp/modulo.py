"""The 2*lambda-modulo operator and its use on sinograms."""

from __future__ import annotations

import numpy as np

from .geometry import ModuloSinogram, Sinogram


class InconsistentInputsError(ValueError):
    pass


def fold(x, lam):
    """Fold ``x`` into ``[-lam, lam)`` via ``x - 2 lam floor((x + lam) / (2 lam))``.

    ``lam`` may be an array broadcasting against ``x``.
    """
    if not np.all(np.asarray(lam) > 0):
        raise ValueError(f"modulo threshold must be positive, got {lam!r}")
    x = np.asarray(x, dtype=float)
    lam = lam if np.ndim(lam) == 0 else np.asarray(lam, dtype=float)
    y = x - 2.0 * lam * np.floor((x + lam) / (2.0 * lam))
    # (x + lam) / (2 lam) can round up onto an integer for x just below lam
    y = np.where(y >= lam, y - 2.0 * lam, y)
    y = np.where(y < -lam, y + 2.0 * lam, y)
    return y if y.ndim else float(y)


def fold_sinogram(p: Sinogram, lam: float) -> ModuloSinogram:
    return ModuloSinogram(p.with_data(fold(p.data, lam)), lam, 0.0)


def add_uniform_noise(mp: ModuloSinogram, delta: float, seed: int = 0) -> ModuloSinogram:
    """Add i.i.d. uniform noise on ``[-delta, delta]`` to folded data.

    The noisy samples are not re-folded. The accumulated noise bound is
    ``mp.delta + delta``.
    """
    if not delta >= 0:
        raise ValueError(f"noise level must be nonnegative, got {delta!r}")
    if delta == 0:
        return mp
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-delta, delta, size=mp.data.shape)
    return ModuloSinogram(mp.sinogram.with_data(mp.data + noise), mp.lam, mp.delta + delta)


def residual(p: Sinogram, p_folded: Sinogram, lam: float, tol: float = 1e-9) -> np.ndarray:
    """Integer field ``eps`` with ``p = p_folded + 2 lam eps``."""
    q = (p.data - p_folded.data) / (2.0 * lam)
    eps = np.round(q)
    bad = np.abs(q - eps) > tol * np.maximum(1.0, np.abs(q))
    if np.any(bad):
        m, n = np.argwhere(bad)[0]
        raise InconsistentInputsError(
            f"(p - p_folded) / (2 lambda) is not an integer at [{m}, {n}]: {q[m, n]!r}"
        )
    return eps.astype(np.int64)


def compression_factor(p, lam: float) -> float:
    """Ratio of the signal's peak magnitude to the detector range width ``2 lam``."""
    data = p.data if isinstance(p, Sinogram) else np.asarray(p)
    return float(np.max(np.abs(data)) / (2.0 * lam))
