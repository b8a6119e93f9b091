"""Command-line entry point: ``lmufbp <stage> ...``.

Each stage reads and writes files so a pipeline can be replayed piecewise;
``experiment`` chains all of them.
"""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from . import io as lio
from .experiment import METHODS, ExperimentConfig, ExperimentError, parse_size, run_experiment, save_result
from .geometry import Image, ModuloSinogram, make_grid
from .lmu import improve, lmu_unfold
from .metrics import max_abs_err, snr_db, ssim
from .modulo import add_uniform_noise, fold_sinogram
from .phantoms import radon_sinogram, rasterize
from .radon import FilterSpec, Window, fbp_reconstruct
from .usfbp import us_unfold

FILTERS = [w.value for w in Window]


def _size(ctx, param, value):
    if value is None:
        return None
    try:
        return parse_size(value)
    except ValueError:
        raise click.BadParameter("expected WxH, e.g. 512x512") from None


def _load_array(path):
    """Image (.npy) or sinogram file, as a plain array."""
    if str(path).endswith(".npy"):
        return np.load(path)
    obj = lio.load_sinogram(path)
    return obj.data


@click.group()
def main():
    """Modulo Radon transform toolkit: simulate, fold, unfold, reconstruct."""


@main.command()
@click.argument("phantom")
@click.option("--size", default="512x512", callback=_size, help="Raster size WxH.")
@click.option("--out", "out", required=True, type=click.Path(dir_okay=False), help="Output .npy raster.")
@click.option("--render", "render", type=click.Path(dir_okay=False), help="Also write a graymap.")
def phantom(phantom, size, out, render):
    """Rasterise a built-in phantom (smooth, shepp-logan) or a JSON phantom file."""
    img = rasterize(lio.load_phantom(phantom), *size)
    lio.save_image(out, img)
    if render:
        lio.render_image(img, render)


@main.command()
@click.option("--phantom", required=True, help="Built-in name or JSON phantom file.")
@click.option("--M", "M", type=int, default=360, show_default=True)
@click.option("--K", "K", type=int, default=1958, show_default=True)
@click.option("--T", "T", type=float, default=None, help="Radial spacing [default: 1/K].")
@click.option("--binary/--csv", default=True, help="Payload encoding.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def project(phantom, M, K, T, binary, out):
    """Sample the analytic Radon transform of a phantom."""
    sino = radon_sinogram(lio.load_phantom(phantom), make_grid(M, K, T))
    lio.save_sinogram(out, sino, "f64le" if binary else "csv")


@main.command()
@click.argument("sinogram", type=click.Path(exists=True, dir_okay=False))
@click.option("--lambda", "lam", type=float, required=True, help="Modulo threshold.")
@click.option("--delta", type=float, default=0.0, show_default=True, help="Uniform noise bound.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--binary/--csv", default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def fold(sinogram, lam, delta, seed, binary, out):
    """Fold a sinogram into [-lambda, lambda) and optionally add noise."""
    sino = lio.load_sinogram(sinogram)
    if isinstance(sino, ModuloSinogram):
        raise click.UsageError("input is already modulo data")
    mp = add_uniform_noise(fold_sinogram(sino, lam), delta, seed)
    lio.save_sinogram(out, mp, "f64le" if binary else "csv")


@main.command()
@click.argument("modulo", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(["lmu", "lmu+", "us"]), default="lmu", show_default=True)
@click.option("--downsample", type=int, default=1, show_default=True, help="Radial decimation factor.")
@click.option("--binary/--csv", default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def unfold(modulo, method, downsample, binary, out):
    """Recover Radon data from modulo data."""
    mp = lio.load_sinogram(modulo)
    if not isinstance(mp, ModuloSinogram):
        raise click.UsageError("input has no lambda in its header; not modulo data")
    mp = lio.downsample_radial(mp, downsample)
    if method == "us":
        res = us_unfold(mp)
    else:
        res = lmu_unfold(mp)
        if method == "lmu+":
            res = improve(res, mp)
    lio.save_sinogram(out, res, "f64le" if binary else "csv")


@main.command()
@click.argument("sinogram", type=click.Path(exists=True, dir_okay=False))
@click.option("--filter", "window", type=click.Choice(FILTERS), default="cosine", show_default=True)
@click.option("--bandwidth", type=float, default=None, help="Filter bandwidth L [default: M].")
@click.option("--size", default="512x512", callback=_size)
@click.option("--interpolation", type=click.Choice(["linear", "nearest"]), default="linear")
@click.option("--normalize", is_flag=True, help="Map the data onto [0, 1] first.")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Output .npy raster.")
@click.option("--render", type=click.Path(dir_okay=False), help="Also write a graymap.")
def reconstruct(sinogram, window, bandwidth, size, interpolation, normalize, workers, out, render):
    """Filtered back projection of (unfolded) Radon data."""
    sino = lio.load_sinogram(sinogram)
    if isinstance(sino, ModuloSinogram):
        sino = sino.sinogram
    if normalize:
        sino = lio.normalize_sinogram(sino)
    img = fbp_reconstruct(sino, FilterSpec(window, bandwidth), *size, interpolation=interpolation, workers=workers)
    lio.save_image(out, img)
    if render:
        lio.render_image(img, render)


@main.command()
@click.argument("estimate", type=click.Path(exists=True, dir_okay=False))
@click.argument("reference", type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Emit a JSON record instead of key=value lines.")
def metrics(estimate, reference, as_json):
    """Compare two images (.npy) or two sinogram files."""
    a, b = _load_array(estimate), _load_array(reference)
    record = {"max_abs_err": max_abs_err(a, b)}
    try:
        record["snr_db"] = snr_db(b, a)
    except ValueError:
        record["snr_db"] = None
    if a.ndim == 2 and min(a.shape) > 1:
        record["ssim"] = ssim(a, b)
    if as_json:
        click.echo(json.dumps({k: ("inf" if v == float("inf") else v) for k, v in record.items()}))
    else:
        click.echo(lio.metrics_text(record), nl=False)


@main.command()
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("--window", nargs=2, type=float, default=None, help="Display window LO HI.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def render(image, window, out):
    """Write an 8-bit binary graymap of a .npy raster or a sinogram file."""
    img = Image(_load_array(image))
    lio.render_image(img, out, tuple(window) if window else None)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON config file.")
@click.option("--phantom", default=None, help="Built-in name or JSON phantom file.")
@click.option("--sinogram", type=click.Path(exists=True, dir_okay=False), default=None, help="External sinogram file.")
@click.option("--M", "M", type=int, default=None)
@click.option("--K", "K", type=int, default=None)
@click.option("--T", "T", type=float, default=None)
@click.option("--lambda", "lam", type=float, default=None)
@click.option("--delta", type=float, default=None, help="Noise bound [default: 0.05*lambda].")
@click.option("--seed", type=int, default=None)
@click.option("--filter", "window", type=click.Choice(FILTERS), default=None)
@click.option("--bandwidth", type=float, default=None)
@click.option("--method", "methods", type=click.Choice(METHODS), multiple=True, help="Repeat to compare methods.")
@click.option("--size", default=None, callback=_size)
@click.option("--downsample", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--figures/--no-figures", default=True, help="Render matplotlib report figures.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
def experiment(config_path, phantom, sinogram, M, K, T, lam, delta, seed, window, bandwidth, methods, size, downsample, workers, figures, out):
    """Simulate (or load), fold, unfold, reconstruct and score; flags override --config."""
    cfg = ExperimentConfig.from_file(config_path) if config_path else ExperimentConfig()
    try:
        cfg = cfg.override(
            phantom=phantom, sinogram=sinogram, M=M, K=K, T=T, lam=lam, delta=delta, seed=seed,
            filter=window, bandwidth=bandwidth, size=size, downsample=downsample, workers=workers,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    results = []
    for method in methods or (cfg.method,):
        try:
            res = run_experiment(cfg.override(method=method))
        except ExperimentError as exc:
            raise click.ClickException(str(exc)) from None
        save_result(res, Path(out) / method)
        click.echo(f"[{method}]")
        click.echo(lio.metrics_text(res.metrics), nl=False)
        results.append(res)
    if figures:
        from .plotting import comparison_figure, unfolding_figure

        comparison_figure(results, Path(out) / "comparison.png")
        for res in results:
            unfolding_figure(res, Path(out) / res.config.method / "unfolding.png")


if __name__ == "__main__":
    main()
