"""Sampling grids and the array containers shared by every stage.

Sinograms are stored row-major by angle: ``data[m, n]`` is the sample at
angle ``m * pi / M`` and radial offset ``(n - K) * T``.  Images are stored as
``data[j, i]`` with ``i`` running along x and ``j`` along y, both increasing;
pixel centres sit at ``-1 + (2i + 1) / W`` so they never touch the boundary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np


class GridCoverageWarning(UserWarning):
    """The radial grid does not reach the unit ball's boundary (K*T < 1)."""


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SamplingGrid:
    M: int
    K: int
    T: float

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M!r}")
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K!r}")
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValueError(f"T must be positive and finite, got {self.T!r}")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "T", float(self.T))

    @property
    def N(self) -> int:
        return 2 * self.K + 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.M, self.N)

    @property
    def covers_unit_ball(self) -> bool:
        return self.K * self.T >= 1.0 - 1e-12

    def angle(self, m):
        return np.asarray(m) * (math.pi / self.M)

    def radial(self, n):
        return (np.asarray(n) - self.K) * self.T

    @property
    def angles(self) -> np.ndarray:
        return self.angle(np.arange(self.M))

    @property
    def radials(self) -> np.ndarray:
        return self.radial(np.arange(self.N))


def make_grid(M: int, K: int, T: float | None = None) -> SamplingGrid:
    """Build a parallel-beam grid; ``T`` defaults to ``1/K``.

    Warns (does not raise) when the radial samples stop short of |t| = 1,
    since externally normalised data may use another convention.
    """
    grid = SamplingGrid(M, K, 1.0 / K if T is None else T)
    if not grid.covers_unit_ball:
        warnings.warn(
            f"K*T = {grid.K * grid.T:.4g} < 1: radial grid does not cover [-1, 1]",
            GridCoverageWarning,
            stacklevel=2,
        )
    return grid


@dataclass(frozen=True)
class Sinogram:
    grid: SamplingGrid
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = _frozen(self.data)
        if data.shape != self.grid.shape:
            raise ValueError(f"sinogram shape {data.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("sinogram contains non-finite entries")
        object.__setattr__(self, "data", data)

    def with_data(self, data) -> Sinogram:
        return Sinogram(self.grid, data)


@dataclass(frozen=True)
class ModuloSinogram:
    """Folded, possibly noisy, sinogram with threshold ``lam`` and noise bound ``delta``."""

    sinogram: Sinogram
    lam: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"modulo threshold must be positive, got {self.lam!r}")
        if not self.delta >= 0:
            raise ValueError(f"noise level must be nonnegative, got {self.delta!r}")
        d = self.sinogram.data
        if self.delta == 0:
            ok = np.all((d >= -self.lam) & (d < self.lam))
        else:
            bound = self.lam + self.delta
            ok = np.all(np.abs(d) <= bound * (1 + 1e-12))
        if not ok:
            raise ValueError("modulo data outside [-lambda - delta, lambda + delta]")

    @property
    def grid(self) -> SamplingGrid:
        return self.sinogram.grid

    @property
    def data(self) -> np.ndarray:
        return self.sinogram.data


@dataclass(frozen=True)
class Image:
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 2 or 0 in data.shape:
            raise ValueError(f"image must be a non-empty 2-D array, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("image contains non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


def pixel_centers(n: int) -> np.ndarray:
    """Centres of ``n`` equal cells partitioning [-1, 1]."""
    return -1.0 + (2.0 * np.arange(n) + 1.0) / n


def image_coordinates(width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """Meshgrid ``(X, Y)`` of shape (height, width) matching ``Image.data`` layout."""
    return np.meshgrid(pixel_centers(width), pixel_centers(height))
