"""Laplacian modulo unfolding (LMU).

Folded data is extended to a doubled torus (even continuation in angle over
``[0, 2 pi)``, odd continuation in the radial variable about the two
zero columns), the Laplacian of the unfolded signal is recovered from the
folded one through

    Lap p = (lam / pi) [cos(pi p / lam) Lap sin(pi p / lam) - sin(pi p / lam) Lap cos(pi p / lam)],

which is blind to multiples of ``2 lam``, and a spectral Poisson solve
returns ``p``.  ``improve`` snaps the estimate onto the lattice
``p_folded + 2 lam Z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .geometry import ModuloSinogram, SamplingGrid, Sinogram


class NumericalSymmetryError(RuntimeError):
    """Inverse DFT left an imaginary part well above rounding level."""


def extend_array(base: np.ndarray) -> np.ndarray:
    """Extend an ``M x N`` array to ``2M x (2N + 2)``.

    Rows ``M..2M-1`` hold ``base[m - M, N - 1 - n]``; columns 0 and ``N + 1``
    are zero and columns ``N + 2 .. 2N + 1`` are the negated reversal of
    columns ``1 .. N``.
    """
    base = np.asarray(base, dtype=float)
    M, N = base.shape
    tilde = np.concatenate([base, base[:, ::-1]], axis=0)
    ext = np.zeros((2 * M, 2 * N + 2))
    ext[:, 1 : N + 1] = tilde
    ext[:, N + 2 :] = -tilde[:, ::-1]
    return ext


def restrict(ext: np.ndarray, M: int, N: int) -> np.ndarray:
    return ext[:M, 1 : N + 1]


@dataclass(frozen=True)
class ExtendedField:
    grid: SamplingGrid
    values: np.ndarray

    def restrict(self) -> np.ndarray:
        return restrict(self.values, self.grid.M, self.grid.N)


def extend(mp: ModuloSinogram | Sinogram) -> ExtendedField:
    sino = mp.sinogram if isinstance(mp, ModuloSinogram) else mp
    return ExtendedField(sino.grid, extend_array(sino.data))


@dataclass(frozen=True)
class SpectralMultiplier:
    """``-(2 pi |xi|)^2`` on the DFT grid of the doubled torus.

    The angle axis has period ``2 pi`` and the radial axis period
    ``(2N + 2) T``; frequencies are in cycles per unit of each axis.
    """

    values: np.ndarray
    period_angle: float
    period_radial: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def make_multiplier(M: int, N: int, T: float) -> SpectralMultiplier:
    rows, cols = 2 * M, 2 * N + 2
    p_angle, p_radial = 2.0 * math.pi, cols * T
    xi_a = sfft.fftfreq(rows, d=p_angle / rows)
    xi_t = sfft.fftfreq(cols, d=p_radial / cols)
    values = -((2.0 * math.pi) ** 2) * (xi_a[:, None] ** 2 + xi_t[None, :] ** 2)
    values.setflags(write=False)
    return SpectralMultiplier(values, p_angle, p_radial)


def grid_multiplier(grid: SamplingGrid) -> SpectralMultiplier:
    return make_multiplier(grid.M, grid.N, grid.T)


def _apply(field: np.ndarray, factor: np.ndarray, scale: float, workers: int) -> np.ndarray:
    spec = sfft.fft2(field, workers=workers)
    out = sfft.ifft2(spec * factor, workers=workers)
    limit = 1e-9 * scale * max(float(np.max(np.abs(field))), np.finfo(float).tiny)
    if np.max(np.abs(out.imag)) > limit:
        raise NumericalSymmetryError(
            f"imaginary residue {np.max(np.abs(out.imag)):.3e} exceeds {limit:.3e}"
        )
    return out.real


def spectral_laplacian(field: np.ndarray, multiplier: SpectralMultiplier, workers: int = 1) -> np.ndarray:
    field = np.asarray(field, dtype=float)
    if field.shape != multiplier.shape:
        raise ValueError(f"field shape {field.shape} does not match multiplier {multiplier.shape}")
    return _apply(field, multiplier.values, float(np.max(np.abs(multiplier.values))), workers)


def poisson_solve(rhs: np.ndarray, multiplier: SpectralMultiplier, workers: int = 1) -> np.ndarray:
    """Invert the multiplier away from zero frequency; the output has zero mean."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != multiplier.shape:
        raise ValueError(f"rhs shape {rhs.shape} does not match multiplier {multiplier.shape}")
    mult = multiplier.values
    inv = np.zeros_like(mult)
    nz = mult != 0.0
    inv[nz] = 1.0 / mult[nz]
    return _apply(rhs, inv, float(np.max(np.abs(inv))), workers)


def assemble_rhs(ext: np.ndarray, lam: float, multiplier: SpectralMultiplier, workers: int = 1) -> np.ndarray:
    """Laplacian of the unfolded field, computed from folded samples only."""
    phase = (math.pi / lam) * np.asarray(ext, dtype=float)
    s, c = np.sin(phase), np.cos(phase)
    lap_s = spectral_laplacian(s, multiplier, workers)
    lap_c = spectral_laplacian(c, multiplier, workers)
    return (lam / math.pi) * (c * lap_s - s * lap_c)


def lmu_unfold(mp: ModuloSinogram, workers: int = 1) -> Sinogram:
    grid = mp.grid
    multiplier = grid_multiplier(grid)
    ext = extend_array(mp.data)
    rhs = assemble_rhs(ext, mp.lam, multiplier, workers)
    solution = poisson_solve(rhs, multiplier, workers)
    return Sinogram(grid, restrict(solution, grid.M, grid.N))


def round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def improve(p_lmu: Sinogram, mp: ModuloSinogram) -> Sinogram:
    """Snap ``p_lmu`` to the nearest point of ``p_folded + 2 lam Z``."""
    if p_lmu.grid != mp.grid:
        raise ValueError("LMU estimate and modulo data live on different grids")
    lam = mp.lam
    k = round_half_away((p_lmu.data - mp.data) / (2.0 * lam))
    return Sinogram(mp.grid, mp.data + 2.0 * lam * k)
