"""First-order Unlimited Sampling unfolding along radial lines, then FBP."""

from __future__ import annotations

import numpy as np

from .geometry import Image, ModuloSinogram, Sinogram
from .lmu import round_half_away
from .modulo import fold
from .radon import FilterSpec, fbp_reconstruct


def us_unfold_lines(y: np.ndarray, lam: float, order: int = 1) -> np.ndarray:
    """Unfold each row of ``y`` (last axis) from its folded first differences.

    The first sample of every row is taken as already unfolded, which holds
    when the row starts outside the object's support.
    """
    if order != 1:
        raise NotImplementedError("only first-order differences are supported")
    y = np.asarray(y, dtype=float)
    if y.shape[-1] < 2:
        raise ValueError("need at least two samples per line")
    dy = np.diff(y, axis=-1)
    jumps = round_half_away((fold(dy, lam) - dy) / (2.0 * lam))
    r = np.zeros_like(y)
    r[..., 1:] = np.cumsum(jumps, axis=-1)
    return y + 2.0 * lam * r


def us_unfold_line(y, lam: float) -> np.ndarray:
    return us_unfold_lines(np.asarray(y, dtype=float)[None, :], lam)[0]


def us_unfold(mp: ModuloSinogram) -> Sinogram:
    return Sinogram(mp.grid, us_unfold_lines(mp.data, mp.lam))


def us_fbp(mp: ModuloSinogram, filt: FilterSpec, width: int = 512, height: int | None = None, workers: int = 1) -> Image:
    return fbp_reconstruct(us_unfold(mp), filt, width, height, workers=workers)
