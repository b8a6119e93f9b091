import math

import numpy as np
import pytest

from oracles import kernel_oracle

from lmufbp.geometry import Image, SamplingGrid, Sinogram, make_grid
from lmufbp.metrics import relative_l2
from lmufbp.phantoms import Ellipse, Phantom, SmoothBump, radon_sinogram, rasterize
from lmufbp.radon import (
    ConfigurationError,
    FilteredTable,
    FilterSpec,
    Window,
    back_project,
    convolve_rows,
    fbp_kernel,
    fbp_reconstruct,
    forward_project_image,
    kernel_table,
    output_half_width,
)


def test_kernel_at_zero():
    L = 360.0
    assert fbp_kernel(FilterSpec("ramlak", L), 0.0) == pytest.approx(L * L / (2 * math.pi), rel=1e-14)
    expected = 2 * L * L / math.pi**2 * (1 - 2 / math.pi)
    assert fbp_kernel(FilterSpec("cosine", L), 0.0) == pytest.approx(expected, rel=1e-13)
    assert kernel_oracle("cosine", L, 0.0) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("window", ["ramlak", "cosine"])
@pytest.mark.parametrize("L", [1.0, 37.5, 360.0])
def test_kernel_matches_quadrature(window, L, rng):
    ts = np.concatenate([np.linspace(0, 30 / L, 25), rng.uniform(-40 / L, 40 / L, 25)])
    got = fbp_kernel(FilterSpec(window, L), ts)
    want = np.array([kernel_oracle(window, L, t) for t in ts])
    assert np.max(np.abs(got - want)) <= 1e-10 * L * L


def test_shepplogan_kernel_quadrature_fallback():
    L = 50.0
    ts = np.linspace(-0.3, 0.3, 9)
    got = fbp_kernel(FilterSpec("shepplogan", L), ts)
    want = [kernel_oracle("shepplogan", L, t) for t in ts]
    np.testing.assert_allclose(got, want, atol=1e-9 * L * L)
    np.testing.assert_allclose(got, got[::-1], atol=1e-9 * L * L)


def test_kernel_vanishes_with_bandwidth():
    for w in ("ramlak", "cosine"):
        assert abs(fbp_kernel(FilterSpec(w, 1e-8), 0.3)) < 1e-15


def test_window_shapes():
    s = np.linspace(-1.5, 1.5, 31)
    for w in Window:
        vals = w(s)
        np.testing.assert_allclose(vals, vals[::-1])
        assert np.all(vals[np.abs(s) > 1] == 0)
        assert np.all(np.abs(vals) <= 1)


def test_filter_spec_defaults():
    g = SamplingGrid(90, 10, 0.1)
    assert FilterSpec().resolve(g).L == 90.0
    assert FilterSpec("ramlak", 5.0).resolve(g).L == 5.0
    with pytest.raises(ValueError):
        FilterSpec("cosine", 0.0)
    with pytest.raises(ValueError):
        FilterSpec("hann")


def test_kernel_table_even():
    tab = kernel_table(FilterSpec("cosine", 90.0), 0.01, 120)
    np.testing.assert_array_equal(tab.values, tab.values[::-1])
    assert tab.values.size == 241 and tab.offsets[0] == -120
    assert not tab.values.flags.writeable


def test_convolve_delta():
    g = SamplingGrid(3, 20, 0.05)
    data = np.zeros(g.shape)
    data[1, g.K] = 1.0
    filt = FilterSpec("cosine", 30.0)
    h = convolve_rows(Sinogram(g, data), filt)
    half = output_half_width(g)
    assert h.half == half == math.ceil(math.sqrt(2) * 20) + 1
    i = np.arange(-half, half + 1)
    np.testing.assert_allclose(h.values[1], g.T * fbp_kernel(filt, i * g.T), rtol=0, atol=1e-12)
    assert np.all(h.values[[0, 2]] == 0)


def test_convolve_matches_direct_sum(rng):
    g = SamplingGrid(4, 12, 1 / 12)
    filt = FilterSpec("ramlak", 8.0)
    p = rng.normal(size=g.shape)
    h = convolve_rows(Sinogram(g, p), filt)
    ti = np.arange(-h.half, h.half + 1) * g.T
    tn = g.radials
    direct = g.T * fbp_kernel(filt, ti[:, None] - tn[None, :]) @ p.T
    np.testing.assert_allclose(h.values, direct.T, atol=1e-12)


def test_convolve_linear(rng):
    g = SamplingGrid(5, 16, 1 / 16)
    filt = FilterSpec("cosine")
    a, b = rng.normal(size=g.shape), rng.normal(size=g.shape)
    ha = convolve_rows(Sinogram(g, a), filt).values
    hb = convolve_rows(Sinogram(g, b), filt).values
    hab = convolve_rows(Sinogram(g, 2 * a - 3 * b), filt).values
    np.testing.assert_allclose(hab, 2 * ha - 3 * hb, atol=1e-12)
    assert np.all(convolve_rows(Sinogram(g, np.zeros(g.shape)), filt).values == 0)


def test_full_grid_rows():
    g = make_grid(360, 1958)
    data = np.zeros(g.shape)
    h = convolve_rows(Sinogram(g, data), FilterSpec("cosine"))
    assert h.values.shape[0] == 360


def test_back_project_constants():
    g = SamplingGrid(6, 10, 0.1)
    half = output_half_width(g)
    zero = back_project(FilteredTable(g, half, np.zeros((6, 2 * half + 1))), 16)
    assert np.all(zero.data == 0)
    ones = back_project(FilteredTable(g, half, np.ones((6, 2 * half + 1))), 16, 12)
    np.testing.assert_allclose(ones.data, 0.5, rtol=1e-15)
    assert ones.data.shape == (12, 16)


def test_single_angle_smears_along_lines():
    g = SamplingGrid(1, 10, 0.1)
    half = output_half_width(g)
    t = np.arange(-half, half + 1) * g.T
    img = back_project(FilteredTable(g, half, 3.0 * t[None, :]), 10, 8, interpolation="nearest")
    # angle 0 projects onto x: each column is constant
    assert np.all(img.data == img.data[0:1, :])
    assert np.all(np.diff(img.data[0]) > 0)


def test_back_project_strict_range():
    g = SamplingGrid(4, 10, 0.1)
    h = FilteredTable(g, 5, np.ones((4, 11)))
    with pytest.raises(ConfigurationError):
        back_project(h, 8, zero_pad=False)
    with pytest.raises(ConfigurationError):
        back_project(h, 8, interpolation="nearest", zero_pad=False)
    padded = back_project(h, 8).data
    assert padded[0, 0] < 0.5 and padded[4, 4] == pytest.approx(0.5)


def test_scaling_and_workers(rng):
    g = SamplingGrid(10, 20, 1 / 20)
    p = Sinogram(g, rng.normal(size=g.shape))
    f = FilterSpec("cosine")
    a = fbp_reconstruct(p, f, 32)
    b = fbp_reconstruct(p.with_data(4.0 * p.data), f, 32)
    np.testing.assert_allclose(b.data, 4.0 * a.data, rtol=1e-13, atol=1e-13)
    c = fbp_reconstruct(p, f, 32, workers=4)
    np.testing.assert_array_equal(a.data, c.data)


def test_even_extension_consistency(rng):
    """Back projecting over [0, 2 pi) with the even continuation matches [0, pi)."""
    g = SamplingGrid(12, 24, 1 / 24)
    p = rng.normal(size=g.shape)
    f = FilterSpec("cosine", 12.0)
    half_img = fbp_reconstruct(Sinogram(g, p), f, 24)
    full = np.concatenate([p, p[:, ::-1]], axis=0)
    g2 = SamplingGrid(2 * g.M, g.K, g.T)
    h2 = convolve_rows(Sinogram(g2, full), f)
    angles = np.concatenate([g.angles, g.angles + np.pi])
    full_img = back_project(h2, 24, angles=angles)
    np.testing.assert_allclose(full_img.data, half_img.data, atol=1e-12)


def test_zero_sinogram_reconstructs_zero():
    g = SamplingGrid(8, 8, 1 / 8)
    assert np.all(fbp_reconstruct(Sinogram(g, np.zeros(g.shape)), FilterSpec(), 16).data == 0)


def test_disk_round_trip():
    disk = Phantom([Ellipse((0.1, -0.05), 0.5, 0.5)])
    g = make_grid(180, 512)
    img = fbp_reconstruct(radon_sinogram(disk, g), FilterSpec("cosine"), 128)
    truth = rasterize(disk, 128).data
    X, Y = np.meshgrid(np.arange(128), np.arange(128))
    r = np.hypot((X + 0.5) / 64 - 1 - 0.1, (Y + 0.5) / 64 - 1 + 0.05)
    interior, exterior = r < 0.4, r > 0.6
    np.testing.assert_allclose(img.data[interior], 1.0, atol=0.02)
    np.testing.assert_allclose(img.data[exterior], 0.0, atol=0.02)
    assert truth[interior].min() == 1.0


def test_smooth_bump_round_trip():
    ph = Phantom([SmoothBump((0.2, 0.1), 0.6, 1.5, 2.5)])
    g = make_grid(180, 400)
    img = fbp_reconstruct(radon_sinogram(ph, g), FilterSpec("cosine"), 96)
    assert relative_l2(img, rasterize(ph, 96)) < 0.01


def test_forward_projection():
    g = make_grid(4, 64)
    assert np.all(forward_project_image(Image(np.zeros((16, 16))), g, 64).data == 0)
    disk = rasterize(Phantom([Ellipse((0.0, 0.0), 1.0, 1.0)]), 1024)
    g = make_grid(3, 40)
    sino = forward_project_image(disk, g, 4001).data
    t = g.radials
    inner = np.abs(t) < 0.95
    analytic = 2 * np.sqrt(np.maximum(1 - t**2, 0))
    np.testing.assert_allclose(sino[:, inner], np.broadcast_to(analytic[inner], sino[:, inner].shape), rtol=0.01)
    assert sino[0, g.K] == pytest.approx(2.0, rel=0.005)
    with pytest.raises(ValueError):
        forward_project_image(disk, g, 1)
