"""Matplotlib report figures for experiment runs."""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .io import atomic_write  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 9,
    "axes.labelsize": 9,
    "xtick.labelsize": 7,
    "ytick.labelsize": 7,
    "image.cmap": "gray",
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _save(fig, path):
    buf = io.BytesIO()
    fig.savefig(buf, format=Path(path).suffix.lstrip(".") or "png")
    plt.close(fig)
    atomic_write(path, buf.getvalue())


def _sino_panel(ax, sino, title):
    g = sino.grid
    r = g.K * g.T
    ax.imshow(sino.data, aspect="auto", origin="lower", extent=(-r, r, 0, 180), interpolation="nearest")
    ax.set_xlabel("t")
    ax.set_ylabel("angle [deg]")
    ax.set_title(title)


def _image_panel(ax, img, title, window):
    ax.imshow(img.data, origin="lower", extent=(-1, 1, -1, 1), vmin=window[0], vmax=window[1], interpolation="nearest")
    ax.set_title(title)
    ax.set_xticks([])
    ax.set_yticks([])


def comparison_figure(results, path) -> None:
    """Folded data, ground truth, then one reconstruction panel per method."""
    first = results[0]
    gt = first.ground_truth.data
    window = (float(gt.min()), float(gt.max()))
    n = 2 + len(results)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, n, figsize=(2.4 * n, 2.6))
        _sino_panel(axes[0], first.modulo.sinogram, f"modulo data, lambda={first.modulo.lam:g}")
        _image_panel(axes[1], first.ground_truth, "ground truth", window)
        for ax, res in zip(axes[2:], results):
            _image_panel(ax, res.reconstruction, f"{res.config.method.upper()}  SSIM {res.metrics['ssim']:.2f}", window)
        fig.tight_layout()
        _save(fig, path)


def unfolding_figure(result, path) -> None:
    """Clean sinogram, folded data, unfolding error."""
    err = result.unfolded.data - result.sinogram.data[:, :: result.config.downsample]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 3, figsize=(8.0, 2.6))
        _sino_panel(axes[0], result.sinogram, "Radon data")
        _sino_panel(axes[1], result.modulo.sinogram, "modulo data")
        im = axes[2].imshow(err, aspect="auto", origin="lower", cmap="coolwarm", interpolation="nearest")
        axes[2].set_title(f"unfolding error ({result.config.method})")
        fig.colorbar(im, ax=axes[2], fraction=0.046)
        fig.tight_layout()
        _save(fig, path)
