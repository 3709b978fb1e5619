import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tilewave.grid import GridSpec, Kernel, MeasurableSet, Signal, hardy_littlewood_maximal, lp_norm
from tilewave.kernels import make_psi, make_truncated_hilbert, make_zeta
from tilewave.oscillation import (DensePartition, OscSpec, carleson_maximal, maximal_dense, osc_dense, osc_kernel,
                                  osc_smooth, osc_symbol_oracle, random_partition, smooth_spec,
                                  square_function_sup_mod, sup_mod_osc, interval_samples)

G = GridSpec(8)
SPEC = OscSpec(1, (-6, -3, 0, 3))
KH = make_truncated_hilbert(make_zeta(1 / 32, G))


def rand_signal(rng, grid=G):
    return Signal(grid, rng.standard_normal(grid.L) + 1j * rng.standard_normal(grid.L))


def const_kernel(value):
    return Kernel.from_symbol(G, np.full(G.L, value, dtype=complex), profile=lambda e: np.full(np.shape(e), value, complex))


def test_oscspec_validation():
    with pytest.raises(ValueError):
        OscSpec(2, (0, 1))
    with pytest.raises(ValueError):
        OscSpec(0, (0, 3))
    assert OscSpec(1, (0, 2, 5), l_min=1).block_ranges() == [[1], [2, 3, 4]]
    with pytest.raises(ValueError):
        osc_kernel(KH, rand_signal(np.random.default_rng(0)), OscSpec(1, (0, 2), l_min=5))


def test_osc_kernel_trivial_cases():
    f = rand_signal(np.random.default_rng(1))
    assert np.all(osc_kernel(const_kernel(0.0), f, SPEC).samples == 0)
    assert np.all(osc_kernel(KH, f, OscSpec(1, (0, 1))).samples == 0)
    assert np.all(osc_kernel(const_kernel(1.0), f, SPEC).samples == 0)


@pytest.mark.parametrize("k", [-40, -3, 5, 17])
def test_osc_kernel_on_exponentials_matches_symbol(k):
    e = Signal.exponential(G, k)
    val = osc_kernel(KH, e, SPEC).samples.real
    ref = osc_symbol_oracle(KH, k, SPEC)
    assert np.allclose(val, ref, atol=1e-12)


def test_sup_mod_osc_properties():
    f = rand_signal(np.random.default_rng(2))
    base = osc_kernel(KH, f, SPEC).samples.real
    assert np.allclose(sup_mod_osc(KH, f, SPEC, [0]).samples.real, base, atol=1e-13)
    small = sup_mod_osc(KH, f, SPEC, [0, 5]).samples.real
    big = sup_mod_osc(KH, f, SPEC, [0, 5, -9, 30]).samples.real
    assert np.all(big >= small)
    from tilewave.oscillation import modulate_bins
    slices = np.max([osc_kernel(KH, modulate_bins(f, N), SPEC).samples.real for N in (0, 5, -9, 30)], axis=0)
    assert np.allclose(big, slices, atol=1e-13)
    with pytest.raises(ValueError):
        sup_mod_osc(KH, f, SPEC, [])


def test_sup_mod_osc_bounded_over_random_f():
    rng = np.random.default_rng(3)
    ratios = []
    for _ in range(10):
        f = rand_signal(rng)
        f = f * (1 / lp_norm(f))
        ratios.append(lp_norm(sup_mod_osc(KH, f, SPEC, range(-G.L // 2, G.L // 2, 8))))
    assert max(ratios) < 20


def test_carleson_maximal():
    rng = np.random.default_rng(4)
    assert np.all(carleson_maximal(KH, Signal.zeros(G), [0, 3]).samples == 0)
    f = rand_signal(rng)
    from tilewave.grid import convolve
    assert np.all(carleson_maximal(KH, f, [0, 7, -2]).samples.real >= np.abs(convolve(f, KH).samples) - 1e-12)


def test_square_function():
    g = GridSpec(9)
    psi = make_psi(8, g)
    assert np.all(square_function_sup_mod(psi, Signal.zeros(g), [0]).samples == 0)
    k = -50
    js = [-1, 0, 1, 2]
    val = square_function_sup_mod(psi, Signal.exponential(g, k), [0], js).samples.real
    ref = np.sqrt(sum(abs(psi.profile(np.array([2.0 ** j * k]))[0]) ** 2 for j in js))
    assert np.allclose(val, ref, atol=1e-12)
    rng = np.random.default_rng(5)
    for p in (1.5, 2, 3):
        f = rand_signal(rng, g)
        assert lp_norm(square_function_sup_mod(psi, f, [0, 16, -16]), p) / lp_norm(f, p) < 20


def test_osc_smooth():
    spec = smooth_spec(G, (-8, -4, 1))
    c = Signal(G, np.full(G.L, 2.0 + 1j))
    assert np.abs(osc_smooth(c, spec).samples).max() < 1e-12
    rng = np.random.default_rng(6)
    ratios = [lp_norm(osc_smooth(f, spec)) / lp_norm(f) for f in (rand_signal(rng) for _ in range(5))]
    assert max(ratios) < 5


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_sublinearity_and_seminorm_triangle(seed):
    rng = np.random.default_rng(seed)
    f, g = rand_signal(rng), rand_signal(rng)
    lhs = osc_kernel(KH, f + g, SPEC).samples.real
    rhs = osc_kernel(KH, f, SPEC).samples.real + osc_kernel(KH, g, SPEC).samples.real
    assert np.all(lhs <= rhs + 1e-10)
    K2 = make_truncated_hilbert(make_zeta(1 / 16, G))
    both = Kernel(G, KH.spatial + K2.spatial, KH.symbol + K2.symbol, {}, lambda e: KH.profile(e) + K2.profile(e))
    lhs = osc_kernel(both, f, SPEC).samples.real
    rhs = osc_kernel(KH, f, SPEC).samples.real + osc_kernel(K2, f, SPEC).samples.real
    assert np.all(lhs <= rhs + 1e-10)


def test_dense_partition_validation():
    E = {(1, 0): MeasurableSet.interval(G, 0, 0.25), (1, 1): MeasurableSet.empty(G)}
    with pytest.raises(ValueError):
        DensePartition(G, ((1, 0), (1, 1)), E, 0.25)
    with pytest.raises(ValueError):
        DensePartition(G, ((1, 0),), {}, 0.5)
    with pytest.raises(ValueError):
        DensePartition(G, ((1, 0), (1, 1)), {}, 0.0)
    assert interval_samples(G, (2, 3)) == (192, 256)


def test_osc_dense_support_and_trivial_cases():
    rng = np.random.default_rng(7)
    f = rand_signal(rng)
    spec = smooth_spec(G, (-8, -3, 1))
    empty = DensePartition(G, ((0, 0),), {(0, 0): MeasurableSet.empty(G)}, 0.5)
    assert np.all(osc_dense(f, spec, empty).samples == 0)
    part = random_partition(G, 1 / 4, 3, rng)
    val = osc_dense(f, spec, part).samples.real
    assert np.all(val[~part.union().indicator] == 0)
    full = DensePartition(G, tuple((3, i) for i in range(8)),
                          {(3, i): MeasurableSet(G, np.arange(G.L) // 32 == i) for i in range(8)}, 1.0)
    assert lp_norm(osc_dense(f, smooth_spec(G, (-8, 1)), full)) <= 4 * lp_norm(f)


def test_osc_dense_sqrt_delta_slope():
    rng = np.random.default_rng(8)
    spec = smooth_spec(G, (-8, -3, -1, 1))
    xs, ys = [], []
    for _ in range(6):
        f = rand_signal(rng)
        for d in (1 / 4, 1 / 16, 1 / 64):
            part = random_partition(G, d, 2, rng)
            xs.append(np.log(d))
            ys.append(np.log(lp_norm(osc_dense(f, spec, part))))
    assert abs(np.polyfit(xs, ys, 1)[0] - 0.5) <= 0.15


def test_maximal_dense():
    rng = np.random.default_rng(9)
    part = random_partition(G, 1 / 4, 3, rng)
    assert np.all(maximal_dense(Signal.zeros(G), part).samples == 0)
    f = rand_signal(rng)
    md = maximal_dense(f, part).samples.real
    M = hardy_littlewood_maximal(f).samples.real
    ratios = []
    for J in part.J_list:
        lo, hi = interval_samples(G, J)
        on = part.E[J].indicator
        if on.any():
            ratios.append(md[on].max() / M[lo:hi].min())
    assert max(ratios) < 10
    assert lp_norm(maximal_dense(f, part)) <= 10 * np.sqrt(1 / 4) * lp_norm(f)
