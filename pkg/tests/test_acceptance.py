"""Acceptance checks; each prints one PASS/FAIL line with the measured value."""

import time

import numpy as np
import pytest
from oracles import kernel_oracle
from scipy import ndimage

from lmufbp.experiment import ExperimentConfig, run_experiment
from lmufbp.geometry import ModuloSinogram, Sinogram, make_grid
from lmufbp.lmu import extend_array, improve, lmu_unfold, make_multiplier, poisson_solve, spectral_laplacian
from lmufbp.metrics import relative_l2
from lmufbp.modulo import fold, fold_sinogram
from lmufbp.phantoms import radon_sinogram, smooth_phantom
from lmufbp.radon import FilterSpec, fbp_kernel

pytestmark = pytest.mark.slow

_RUNS = {}


def run(**kw):
    """Full-scale experiment on the default grid, memoised across criteria."""
    key = tuple(sorted(kw.items()))
    if key not in _RUNS:
        t0 = time.perf_counter()
        res = run_experiment(ExperimentConfig(**kw))
        _RUNS[key] = (res, time.perf_counter() - t0)
    return _RUNS[key]


def test_1_modulo_algebra(criterion):
    rng = np.random.default_rng(1)
    n = 1_000_000
    t0 = time.perf_counter()
    lam = 10.0 ** rng.uniform(-3, 1, n)
    x = rng.uniform(-100, 100, n)
    k = rng.integers(-1000, 1001, n)
    y = fold(x, lam)
    in_range = bool(np.all((y >= -lam) & (y < lam)))
    idem = float(np.max(np.abs(fold(y, lam) - y) / lam))
    shifted = x + 2 * lam * k
    d = np.abs(fold(shifted, lam) - y) % (2 * lam)
    d = np.minimum(d, 2 * lam - d)
    period = float(np.max(d / np.maximum(np.abs(shifted), lam)))
    q = (x - y) / (2 * lam)
    decomp = float(np.max(np.abs(x - y - 2 * lam * np.round(q)) / np.maximum(np.abs(x), lam)))
    elapsed = time.perf_counter() - t0
    ok = in_range and max(idem, period, decomp) <= 1e-12 and elapsed < 5
    detail = f"range={in_range} idem={idem:.1e} period={period:.1e} decomp={decomp:.1e} t={elapsed:.2f}s"
    assert criterion("1 modulo algebra (1e6 pairs, 1e-12 rel, <5 s)", ok, detail)


def test_2_poisson_round_trip(criterion):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(100):
        M, N = (64, 64) if i == 0 else (int(rng.integers(1, 65)), int(rng.integers(1, 65)))
        T = 2.0 / (N + 1)
        base = ndimage.gaussian_filter(rng.normal(size=(M, N)), 2.0, mode="wrap")
        u = extend_array(base)
        mult = make_multiplier(M, N, T)
        back = poisson_solve(spectral_laplacian(u, mult), mult)
        worst = max(worst, float(np.max(np.abs(back - u)) / np.max(np.abs(u))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 10
    assert criterion("2 Poisson round trip (100 fields, up to 128x130)", ok, f"max rel err={worst:.2e} t={elapsed:.2f}s")


def test_3_no_fold_identity(criterion):
    t0 = time.perf_counter()
    g = make_grid(90, 256)
    p = radon_sinogram(smooth_phantom(), g)
    peak = float(np.max(np.abs(p.data)))
    mp = fold_sinogram(p, 2 * peak)
    est = lmu_unfold(mp)
    err = float(np.max(np.abs(est.data - p.data)) / peak)
    exact = float(np.max(np.abs(improve(est, mp).data - p.data)))
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-3 and exact == 0.0 and elapsed < 30
    assert criterion("3 no-fold identity (M=90, K=256)", ok, f"rel err={err:.2e} improve err={exact:.1e} t={elapsed:.2f}s")


def test_4_improve_exactness(criterion):
    rng = np.random.default_rng(4)
    g = make_grid(1, 49)  # 99 samples per draw
    worst, jumps_ok = 0.0, True
    draws = 0
    while draws < 10_000:
        lam = float(10.0 ** rng.uniform(-2, 0))
        p = rng.uniform(-5, 5, g.shape)
        mp = ModuloSinogram(Sinogram(g, fold(p, lam)), lam)
        pert = rng.uniform(-1, 1, g.shape) * lam * (1 - 1e-9)
        got = improve(Sinogram(g, p + pert), mp).data
        worst = max(worst, float(np.max(np.abs(got - p))))
        # adversarial: error strictly between lam and 2 lam flips to the next branch
        sign = rng.choice([-1.0, 1.0], g.shape)
        bad = sign * lam * rng.uniform(1 + 1e-9, 2 - 1e-9, g.shape)
        jump = improve(Sinogram(g, p + bad), mp).data - p
        jumps_ok &= bool(np.all(np.abs(jump - 2 * lam * sign) <= 1e-12))
        draws += g.N
    ok = worst <= 1e-12 and jumps_ok
    assert criterion("4 improve exactness (1e4 draws)", ok, f"max err={worst:.1e} adversarial 2lam jumps={jumps_ok}")


def test_5_smooth_reproduction(criterion):
    lmu, t1 = run(method="lmu-fbp")
    us, t2 = run(method="us-fbp")
    snr = lmu.metrics["data_snr_db"]
    s_lmu, s_us = lmu.metrics["ssim"], us.metrics["ssim"]
    elapsed = t1 + t2
    ok = abs(snr - 24.1) <= 1.0 and s_lmu >= 0.95 and s_us >= 0.95 and elapsed < 300
    detail = f"SNR={snr:.2f} dB SSIM lmu={s_lmu:.4f} us={s_us:.4f} t={elapsed:.1f}s"
    assert criterion("5 smooth phantom (lam=0.015)", ok, detail)


def test_6_shepp_logan_reproduction(criterion):
    plus, t1 = run(phantom="shepp-logan", lam=0.06, method="lmu+-fbp")
    us, t2 = run(phantom="shepp-logan", lam=0.06, method="us-fbp")
    s_plus, s_us = plus.metrics["ssim"], us.metrics["ssim"]
    ok = s_plus >= 0.90 and s_plus - s_us >= 0.05 and t1 + t2 < 300
    detail = f"SSIM lmu+={s_plus:.4f} us={s_us:.4f} gap={s_plus - s_us:.4f} t={t1 + t2:.1f}s"
    assert criterion("6 Shepp-Logan (lam=0.06)", ok, detail)


def test_7_downsampling(criterion):
    lmu, _ = run(phantom="shepp-logan", lam=0.06, method="lmu-fbp", downsample=2)
    us, _ = run(phantom="shepp-logan", lam=0.06, method="us-fbp", downsample=2)
    gap = lmu.metrics["ssim"] - us.metrics["ssim"]
    detail = f"SSIM lmu={lmu.metrics['ssim']:.4f} us={us.metrics['ssim']:.4f} gap={gap:.4f}"
    assert criterion("7 2x radial downsampling", gap >= 0.10, detail)


def test_8_kernel(criterion):
    rng = np.random.default_rng(8)
    worst = 0.0
    for window in ("ramlak", "cosine"):
        L = 360.0
        ts = rng.uniform(-50 / L, 50 / L, 50)
        got = fbp_kernel(FilterSpec(window, L), ts)
        want = np.array([kernel_oracle(window, L, t) for t in ts])
        worst = max(worst, float(np.max(np.abs(got - want)) / L**2))
    assert criterion("8 kernel vs quadrature (50 offsets)", worst <= 1e-10, f"max err / L^2={worst:.1e}")


def test_9_fbp_sanity(criterion):
    smooth, _ = run(method="fbp")
    sl, _ = run(phantom="shepp-logan", lam=0.06, method="fbp")
    rel = relative_l2(smooth.reconstruction, smooth.ground_truth)
    s = sl.metrics["ssim"]
    ok = rel <= 0.02 and s >= 0.85
    assert criterion("9 noiseless FBP", ok, f"smooth rel L2={rel:.4f} Shepp-Logan SSIM={s:.4f}")


def test_10_thread_determinism(criterion):
    one, _ = run(method="lmu-fbp")
    eight, _ = run(method="lmu-fbp", workers=8)
    same = one.metrics == eight.metrics and np.array_equal(one.reconstruction.data, eight.reconstruction.data)
    assert criterion("10 1 vs 8 threads bit-identical", same, f"ssim={eight.metrics['ssim']!r}")
