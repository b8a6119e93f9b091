"""Discrete filtered back projection and a numeric forward projector.

Fourier convention: ``F g(S) = int g(t) exp(-i S t) dt`` with ``1/(2 pi)`` on the
inverse.  A low-pass filter with window ``W`` and bandwidth ``L`` has kernel

    k(t) = 1/(2 pi) int_{-L}^{L} |S| W(S / L) exp(i S t) dS,

and the reconstruction at a pixel is ``1/(2M) sum_m interp(h_m)(x . theta_m)``
where ``h_m = T sum_n k(t_i - t_n) p[m, n]``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import integrate, ndimage
from scipy.signal import fftconvolve

from .geometry import Image, SamplingGrid, Sinogram, image_coordinates


class Window(str, Enum):
    RAMLAK = "ramlak"
    COSINE = "cosine"
    SHEPPLOGAN = "shepplogan"

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        inside = np.abs(s) <= 1.0
        if self is Window.RAMLAK:
            w = np.ones_like(s)
        elif self is Window.COSINE:
            w = np.cos(0.5 * np.pi * s)
        else:
            w = np.sinc(0.5 * s)
        return np.where(inside, w, 0.0)


@dataclass(frozen=True)
class FilterSpec:
    window: Window = Window.COSINE
    bandwidth: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "window", Window(self.window))
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError(f"filter bandwidth must be positive, got {self.bandwidth!r}")

    def resolve(self, grid: SamplingGrid) -> FilterSpec:
        """Fill in the default bandwidth ``L = M``."""
        if self.bandwidth is not None:
            return self
        return FilterSpec(self.window, float(grid.M))

    @property
    def L(self) -> float:
        if self.bandwidth is None:
            raise ValueError("bandwidth unresolved; call FilterSpec.resolve(grid) first")
        return self.bandwidth


class ConfigurationError(ValueError):
    pass


def _ramp_moment(u):
    """``int_0^1 s cos(u s) ds`` = sin(u)/u + (cos(u) - 1)/u^2, stable near 0."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < 0.1
    us = np.where(small, 1.0, u)
    direct = np.sin(us) / us + (np.cos(us) - 1.0) / (us * us)
    u2 = u * u
    # sum_k (-1)^k u^(2k) / ((2k)! (2k + 2))
    series = 0.5 - u2 / 8.0 + u2**2 / 144.0 - u2**3 / 5760.0 + u2**4 / 403200.0 - u2**5 / 43545600.0
    return np.where(small, series, direct)


def _kernel_quad(window: Window, L: float, t: float) -> float:
    val, _ = integrate.quad(lambda s: s * window(s / L), 0.0, L, weight="cos", wvar=t, limit=200)
    return val / math.pi


def fbp_kernel(filt: FilterSpec, t):
    """Spatial filter kernel ``k(t)``; closed form for Ram-Lak and cosine windows."""
    L = filt.L
    t = np.asarray(t, dtype=float)
    if filt.window is Window.RAMLAK:
        out = L * L * _ramp_moment(L * t) / math.pi
    elif filt.window is Window.COSINE:
        shift = 0.5 * math.pi
        out = L * L * (_ramp_moment(L * t + shift) + _ramp_moment(L * t - shift)) / (2.0 * math.pi)
    else:
        out = np.vectorize(lambda tt: _kernel_quad(filt.window, L, float(tt)), otypes=[float])(t)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class KernelTable:
    """Kernel sampled at ``o * T`` for ``o = -half .. half``; read-only once built."""

    filt: FilterSpec
    T: float
    half: int
    values: np.ndarray

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.half, self.half + 1)


@lru_cache(maxsize=16)
def kernel_table(filt: FilterSpec, T: float, half: int) -> KernelTable:
    pos = np.asarray(fbp_kernel(filt, np.arange(half + 1) * T), dtype=float)
    values = np.concatenate([pos[:0:-1], pos])
    values.setflags(write=False)
    return KernelTable(filt, T, half, values)


def output_half_width(grid: SamplingGrid) -> int:
    """Half-size of the convolution output index set, reaching |t| = sqrt(2)."""
    return math.ceil(math.sqrt(2.0) / grid.T) + 1


@dataclass(frozen=True)
class FilteredTable:
    """Per-angle filtered projections ``h[m, i]`` at ``t_i = i T``, ``i = -half .. half``."""

    grid: SamplingGrid
    half: int
    values: np.ndarray


def _chunks(n: int, parts: int):
    parts = max(1, min(parts, n))
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


def _map_chunks(fn, n: int, workers: int):
    """Run ``fn(lo, hi)`` over row chunks; results are identical for any worker count."""
    chunks = _chunks(n, 64 if n >= 64 else n)
    if workers <= 1:
        return [fn(lo, hi) for lo, hi in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: fn(*c), chunks))


def convolve_rows(sino: Sinogram, filt: FilterSpec, half: int | None = None, workers: int = 1) -> FilteredTable:
    """Discrete convolution ``h(theta_m, t_i) = T sum_n k(t_i - t_n) p[m, n]``."""
    grid = sino.grid
    filt = filt.resolve(grid)
    half = output_half_width(grid) if half is None else half
    K = grid.K
    table = kernel_table(filt, grid.T, half + K)
    kern = table.values[None, :]
    data = sino.data

    # full convolution index r maps to output offset i = r - half - 2K
    def work(lo, hi):
        full = fftconvolve(data[lo:hi], kern, mode="full", axes=1)
        return full[:, 2 * K : 2 * K + 2 * half + 1]

    h = np.concatenate(_map_chunks(work, grid.M, workers), axis=0) * grid.T
    return FilteredTable(grid, half, h)


def back_project(
    h: FilteredTable,
    width: int,
    height: int | None = None,
    interpolation: str = "linear",
    zero_pad: bool = True,
    workers: int = 1,
    angles=None,
) -> Image:
    """Pixel value ``1/(2M) sum_m interp(h_m)(x cos(theta_m) + y sin(theta_m))``.

    ``angles`` overrides the grid's angles (one per row of ``h``); ``M`` is
    then the number of rows, so a full-circle table of 2M rows gets 1/(4M).
    """
    height = width if height is None else height
    if interpolation not in ("linear", "nearest"):
        raise ValueError(f"unknown interpolation {interpolation!r}")
    grid = h.grid
    T, half = grid.T, h.half
    angles = grid.angles if angles is None else np.asarray(angles, dtype=float)
    M = h.values.shape[0]
    if angles.shape != (M,):
        raise ValueError(f"need one angle per filtered row ({M}), got {angles.shape}")
    X, Y = image_coordinates(width, height)
    xs, ys = X.ravel(), Y.ravel()
    cos, sin = np.cos(angles), np.sin(angles)
    size = 2 * half + 1
    # one zero sample on each side makes out-of-range lookups read 0
    padded = np.zeros((M, size + 2))
    padded[:, 1:-1] = h.values

    def work(lo, hi):
        x, y = xs[lo:hi], ys[lo:hi]
        acc = np.zeros(hi - lo)
        for m in range(M):
            pos = (x * cos[m] + y * sin[m]) / T + half
            if interpolation == "nearest":
                idx = np.floor(pos + 0.5)
                out = (idx < 0) | (idx > size - 1)
                if out.any() and not zero_pad:
                    raise ConfigurationError("back-projection abscissa outside the filtered table")
                idx = np.clip(idx, -1, size).astype(np.intp) + 1
                acc += padded[m, idx]
            else:
                out = (pos < 0) | (pos > size - 1)
                if out.any() and not zero_pad:
                    raise ConfigurationError("back-projection abscissa outside the filtered table")
                pos = np.clip(pos, -1.0, float(size))
                i0 = np.floor(pos)
                frac = pos - i0
                i0 = i0.astype(np.intp)
                i1 = np.minimum(i0 + 1, size)
                row = padded[m]
                acc += (1.0 - frac) * row[i0 + 1] + frac * row[i1 + 1]
        return acc

    flat = np.concatenate(_map_chunks(work, xs.size, workers))
    return Image(flat.reshape(height, width) / (2.0 * M))


def fbp_reconstruct(
    sino: Sinogram,
    filt: FilterSpec,
    width: int = 512,
    height: int | None = None,
    interpolation: str = "linear",
    workers: int = 1,
) -> Image:
    h = convolve_rows(sino, filt, workers=workers)
    return back_project(h, width, height, interpolation=interpolation, workers=workers)


def forward_project_image(image: Image, grid: SamplingGrid, raysamples: int = 1024) -> Sinogram:
    """Trapezoidal line integrals of the bilinearly interpolated image.

    Rays are sampled on ``s in [-sqrt(2), sqrt(2)]``; the image is zero
    outside the half-pixel rim around its outermost pixel centres.
    """
    if raysamples < 2:
        raise ValueError("raysamples must be at least 2")
    H, W = image.data.shape
    s = np.linspace(-math.sqrt(2.0), math.sqrt(2.0), raysamples)
    weights = np.full(raysamples, s[1] - s[0])
    weights[[0, -1]] *= 0.5
    t = grid.radials
    out = np.empty(grid.shape)
    for m, th in enumerate(grid.angles):
        c, sn = math.cos(th), math.sin(th)
        x = t[:, None] * c - s[None, :] * sn
        y = t[:, None] * sn + s[None, :] * c
        col = (x + 1.0) * W / 2.0 - 0.5
        row = (y + 1.0) * H / 2.0 - 0.5
        vals = ndimage.map_coordinates(image.data, [row.ravel(), col.ravel()], order=1, mode="constant", cval=0.0)
        out[m] = vals.reshape(x.shape) @ weights
    return Sinogram(grid, out)
