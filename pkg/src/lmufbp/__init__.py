"""Modulo Radon transform: forward model, LMU-FBP inversion and a US-FBP baseline."""

from .geometry import Image, ModuloSinogram, SamplingGrid, Sinogram, make_grid
from .lmu import improve, lmu_unfold
from .metrics import max_abs_err, relative_l2, snr_db, ssim
from .modulo import add_uniform_noise, fold, fold_sinogram
from .phantoms import Ellipse, Phantom, SmoothBump, phantom_radon, radon_sinogram, rasterize, shepp_logan, smooth_phantom
from .radon import FilterSpec, Window, fbp_reconstruct
from .usfbp import us_fbp, us_unfold

__all__ = [
    "Ellipse",
    "FilterSpec",
    "Image",
    "ModuloSinogram",
    "Phantom",
    "SamplingGrid",
    "Sinogram",
    "SmoothBump",
    "Window",
    "add_uniform_noise",
    "fbp_reconstruct",
    "fold",
    "fold_sinogram",
    "improve",
    "lmu_unfold",
    "make_grid",
    "max_abs_err",
    "phantom_radon",
    "radon_sinogram",
    "rasterize",
    "relative_l2",
    "shepp_logan",
    "smooth_phantom",
    "snr_db",
    "ssim",
    "us_fbp",
    "us_unfold",
]
