import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tilewave.grid import (GridMismatchError, GridSpec, Kernel, MeasurableSet, Signal, convolve, dilate,
                           hardy_littlewood_maximal, inner_product, lp_norm, maximal_radii, modulate, translate)

G = GridSpec(8)


def bandlimited(rng, grid=G, band=None):
    band = band or grid.L // 8
    spec = np.zeros(grid.L, dtype=complex)
    k = np.arange(-band, band + 1)
    spec[grid.bin_index(k)] = rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)
    return Signal.from_spectrum(grid, spec)


def test_grid_basics():
    assert G.L == 256 and G.h * G.L == 1
    assert G.freqs.min() == -128 and G.freqs.max() == 127
    with pytest.raises(ValueError):
        GridSpec(0)


def test_spectrum_roundtrip():
    f = bandlimited(np.random.default_rng(0))
    g = Signal(G, f.samples)
    assert np.allclose(g.spectrum, f.spectrum, rtol=0, atol=1e-12 * np.abs(f.spectrum).max())
    assert f.check_spectrum()


def test_measurable_set_measure():
    S = MeasurableSet.interval(G, 0.0, 0.25)
    assert S.measure == pytest.approx(0.25)
    assert S.measure == G.h * S.indicator.sum()


def centered_bump(sigma=0.03, phase=0.0):
    # concentrated at 0 so every dilate used below stays inside the centered period
    return Signal(G, np.exp(-G.y ** 2 / (2 * sigma ** 2) + 1j * phase * G.y))


def test_dilate_identity_and_isometry():
    f = centered_bump(phase=40.0)
    assert np.array_equal(dilate(f, 1.0, 2).samples, f.samples)
    assert lp_norm(dilate(f, 2.0, 2)) == pytest.approx(lp_norm(f), abs=1e-8)
    with pytest.raises(ValueError):
        dilate(f, 0.0)


def test_dilate_preserves_integral_for_bump():
    bump = Signal.from_function(G, lambda x: np.exp(-200 * (x - 0.5) ** 2))
    centered = translate(bump, 0.5)
    g = dilate(centered, 1.5, 1)
    assert g.samples.sum() * G.h == pytest.approx(centered.samples.sum() * G.h, abs=1e-8)


def test_dilate_group_law():
    f = centered_bump(phase=25.0)
    lhs = dilate(dilate(f, 1.5, 2), 1.25, 2)
    rhs = dilate(f, 1.875, 2)
    assert np.max(np.abs(lhs.samples - rhs.samples)) < 1e-8


def test_modulate_shift_and_norm():
    f = bandlimited(np.random.default_rng(3))
    assert np.array_equal(modulate(f, 0).samples, f.samples)
    g = modulate(f, 2 * np.pi * 5)
    assert np.allclose(g.spectrum, np.roll(f.spectrum, 5), atol=1e-13)
    for p in (1, 2, np.inf):
        assert lp_norm(modulate(f, 0.37), p) == pytest.approx(lp_norm(f, p))
    ab = modulate(modulate(f, 1.1), 2.2).samples
    assert np.allclose(ab, modulate(f, 3.3).samples, atol=1e-13)


def test_translate():
    f = bandlimited(np.random.default_rng(4))
    assert np.array_equal(translate(f, 0).samples, f.samples)
    back = translate(translate(f, 0.1234), -0.1234)
    assert np.max(np.abs(back.samples - f.samples)) < 1e-10
    ind = MeasurableSet.interval(G, 0, 0.25).to_signal()
    moved = translate(ind, 0.25)
    assert np.array_equal(moved.samples, MeasurableSet.interval(G, 0.25, 0.5).to_signal().samples)


def test_modulate_translate_commutation():
    f = bandlimited(np.random.default_rng(5))
    y, xi = 0.25, 2 * np.pi * 3
    a = modulate(translate(f, y), xi).samples
    b = translate(modulate(f, xi), y).samples
    assert np.allclose(a, b * np.exp(1j * y * xi), atol=1e-12)


def test_convolution_identities():
    rng = np.random.default_rng(6)
    f = bandlimited(rng)
    K = Kernel.from_spatial(G, rng.standard_normal(G.L))
    assert np.allclose(convolve(f, Kernel.delta(G)).samples, f.samples, atol=1e-12)
    lhs = convolve(translate(f, 3 * G.h), K).samples
    rhs = translate(convolve(f, K), 3 * G.h).samples
    assert np.allclose(lhs, rhs, atol=1e-12)
    e = Signal.exponential(G, 7)
    assert np.allclose(convolve(e, K).samples, K.symbol[7] * e.samples, atol=1e-12)
    with pytest.raises(GridMismatchError):
        convolve(Signal.zeros(GridSpec(7)), K)


def test_inner_product_and_norms():
    e1, e2 = Signal.exponential(G, 1), Signal.exponential(G, 2)
    assert abs(inner_product(e1, e2)) < 1e-14
    half = MeasurableSet.interval(G, 0, 0.5).to_signal()
    one = Signal(G, np.ones(G.L))
    assert inner_product(half, one) == pytest.approx(0.5)
    for p in (1, 2, 3, np.inf):
        assert lp_norm(one, p) == pytest.approx(1.0)
    assert lp_norm(MeasurableSet.interval(G, 0, 0.25).to_signal(), 2) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        lp_norm(one, 0.5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1.0, 1.5, 2.0, 4.0]))
def test_parseval_and_homogeneity(seed, p):
    rng = np.random.default_rng(seed)
    f, g = bandlimited(rng), bandlimited(rng)
    assert inner_product(f, f).real == pytest.approx(lp_norm(f) ** 2)
    ref = np.vdot(g.spectrum, f.spectrum)
    assert abs(inner_product(f, g) - ref) < 1e-10 * max(1.0, abs(ref))
    assert lp_norm(2 * f, p) == pytest.approx(2 * lp_norm(f, p))


def test_maximal_function_examples():
    c = Signal(G, np.full(G.L, -3.0))
    assert np.allclose(hardy_littlewood_maximal(c).samples.real, 3.0)
    f = bandlimited(np.random.default_rng(7))
    assert np.all(hardy_littlewood_maximal(f).samples.real >= np.abs(f.samples) - 1e-15)


def test_maximal_function_brute_force():
    ind = MeasurableSet.interval(G, 0, 0.25).to_signal()
    a = np.abs(ind.samples)
    x0 = G.L // 2
    best = 0.0
    for r in maximal_radii(G):
        if 2 * r + 1 >= G.L:
            best = max(best, a.mean())
        else:
            idx = np.arange(x0 - r, x0 + r + 1) % G.L
            best = max(best, a[idx].mean())
    assert hardy_littlewood_maximal(ind).samples.real[x0] == pytest.approx(best)


def test_maximal_weak_type():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        f = Signal(G, rng.standard_normal(G.L) * (rng.random(G.L) < 0.1))
        M = hardy_littlewood_maximal(f).samples.real
        l1 = lp_norm(f, 1)
        if l1 == 0:
            continue
        for lam in np.quantile(M, [0.5, 0.9, 0.99]):
            worst = max(worst, G.h * np.sum(M > lam) * lam / l1)
    assert worst <= 4
