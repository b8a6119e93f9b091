"""Analytic phantoms with closed-form line integrals.

Two component kinds are supported, both additive:

* :class:`Ellipse` - constant intensity on an ellipse (Shepp-Logan building block).
* :class:`SmoothBump` - ``intensity * (1 - |x - c|^2 / r^2)_+^nu``, which is
  ``floor(nu)`` times continuously differentiable and has Radon transform
  ``intensity * r * B(1/2, nu + 1) * (1 - s^2)_+^(nu + 1/2)`` with ``s`` the
  normalised distance of the line from the centre.

The Radon transform follows the convention
``Rf(theta, t) = int f(t cos(theta) - s sin(theta), t sin(theta) + s cos(theta)) ds``,
i.e. the line ``{x : x . (cos theta, sin theta) = t}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import betaln

from .geometry import Image, SamplingGrid, Sinogram, image_coordinates


@dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    a: float
    b: float
    rotation: float = 0.0
    intensity: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("ellipse semi-axes must be positive")
        if math.hypot(*self.center) + max(self.a, self.b) > 1.0 + 1e-12:
            raise ValueError(f"ellipse {self} is not contained in the unit ball")

    def value(self, x, y):
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        dx, dy = np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]
        u = (c * dx + s * dy) / self.a
        v = (-s * dx + c * dy) / self.b
        return np.where(u * u + v * v <= 1.0, self.intensity, 0.0)

    def radon(self, theta, t):
        phi = np.asarray(theta) - self.rotation
        A2 = (self.a * np.cos(phi)) ** 2 + (self.b * np.sin(phi)) ** 2
        u = np.asarray(t) - (self.center[0] * np.cos(theta) + self.center[1] * np.sin(theta))
        chord = np.sqrt(np.maximum(A2 - u * u, 0.0))
        return 2.0 * self.intensity * self.a * self.b * chord / A2


@dataclass(frozen=True)
class SmoothBump:
    center: tuple[float, float]
    radius: float
    intensity: float = 1.0
    nu: float = 2.5

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("bump radius must be positive")
        if not self.nu > 0:
            raise ValueError("smoothness parameter nu must be positive")
        # strict interior: the support must lie in the open unit ball
        if math.hypot(*self.center) + self.radius >= 1.0:
            raise ValueError(f"bump {self} touches or leaves the unit ball")

    def value(self, x, y):
        dx, dy = np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]
        q = np.maximum(1.0 - (dx * dx + dy * dy) / self.radius**2, 0.0)
        return self.intensity * q**self.nu

    def radon(self, theta, t):
        s = (np.asarray(t) - (self.center[0] * np.cos(theta) + self.center[1] * np.sin(theta))) / self.radius
        q = np.maximum(1.0 - s * s, 0.0)
        scale = self.intensity * self.radius * math.exp(betaln(0.5, self.nu + 1.0))
        return scale * q ** (self.nu + 0.5)


Component = Union[Ellipse, SmoothBump]


@dataclass(frozen=True)
class Phantom:
    components: tuple[Component, ...] = ()
    name: str = "custom"

    def __init__(self, components: Sequence[Component] = (), name: str = "custom"):
        object.__setattr__(self, "components", tuple(components))
        object.__setattr__(self, "name", name)


def phantom_value(phantom: Phantom, x, y):
    """Pointwise phantom value; broadcasts over array arguments."""
    out = np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)
    for comp in phantom.components:
        out = out + comp.value(x, y)
    return out if out.ndim else float(out)


def phantom_radon(phantom: Phantom, theta, t):
    """Closed-form Radon transform; broadcasts over ``theta`` and ``t``."""
    theta, t = np.asarray(theta, dtype=float), np.asarray(t, dtype=float)
    out = np.zeros(np.broadcast(theta, t).shape)
    for comp in phantom.components:
        out = out + comp.radon(theta, t)
    # |t| >= 1 misses the unit ball entirely; guards against rounding leaks
    out = np.where(np.abs(t) >= 1.0, 0.0, out)
    return out if out.ndim else float(out)


def radon_sinogram(phantom: Phantom, grid: SamplingGrid) -> Sinogram:
    theta = grid.angles[:, None]
    t = grid.radials[None, :]
    return Sinogram(grid, phantom_radon(phantom, theta, t))


def rasterize(phantom: Phantom, width: int, height: int | None = None) -> Image:
    height = width if height is None else height
    if width < 1 or height < 1:
        raise ValueError("raster dimensions must be positive")
    X, Y = image_coordinates(width, height)
    return Image(phantom_value(phantom, X, Y))


# Toft's modified intensities; geometry per Kak & Slaney. Rotation in degrees.
_SHEPP_LOGAN_TABLE = (
    # x0, y0, a, b, rotation, intensity
    (0.0, 0.0, 0.69, 0.92, 0.0, 1.0),
    (0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8),
    (0.22, 0.0, 0.11, 0.31, -18.0, -0.2),
    (-0.22, 0.0, 0.16, 0.41, 18.0, -0.2),
    (0.0, 0.35, 0.21, 0.25, 0.0, 0.1),
    (0.0, 0.1, 0.046, 0.046, 0.0, 0.1),
    (0.0, -0.1, 0.046, 0.046, 0.0, 0.1),
    (-0.08, -0.605, 0.046, 0.023, 0.0, 0.1),
    (0.0, -0.606, 0.023, 0.023, 0.0, 0.1),
    (0.06, -0.605, 0.023, 0.046, 0.0, 0.1),
)


def shepp_logan() -> Phantom:
    return Phantom(
        [Ellipse((x0, y0), a, b, math.radians(rot), val) for x0, y0, a, b, rot, val in _SHEPP_LOGAN_TABLE],
        name="shepp-logan",
    )


# Stand-in smooth phantom: one broad bump with smaller interior features, all nu = 2.5.
_SMOOTH_TABLE = (
    # x0, y0, radius, intensity
    (0.0, 0.0, 0.65, 2.0),
    (0.22, 0.18, 0.2, 0.9),
    (-0.2, -0.22, 0.25, -0.7),
    (-0.18, 0.3, 0.12, 1.2),
    (0.15, -0.3, 0.1, 0.8),
)


def smooth_phantom(nu: float = 2.5) -> Phantom:
    return Phantom(
        [SmoothBump((x0, y0), r, val, nu) for x0, y0, r, val in _SMOOTH_TABLE],
        name="smooth",
    )


BUILTIN = {"smooth": smooth_phantom, "shepp-logan": shepp_logan}


def builtin_phantom(name: str) -> Phantom:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise ValueError(f"unknown phantom {name!r}; choose from {sorted(BUILTIN)}") from None
