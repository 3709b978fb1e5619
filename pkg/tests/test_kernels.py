import numpy as np
import pytest
from scipy import integrate

from tilewave.grid import GridSpec, Kernel, Signal, dilate
from tilewave.kernels import (ChiPartition, build_big_psi, build_D0, build_delta_k, build_psi0, bump, d0_tail_constant,
                              eta_cutoff, hilbert_decomposition, make_chi_partition, make_psi, make_sharp_hilbert,
                              make_truncated_hilbert, make_zeta, band_variation, psi0_constant_oracle, reflect_conj,
                              verify_delta_bounds, verify_symbol_decay)


@pytest.fixture(scope="module")
def dec10():
    return hilbert_decomposition(GridSpec(10))


def test_zeta_normalization_symmetry_and_integral():
    z10 = make_zeta(0.25, GridSpec(10))
    assert z10.spatial[0].real == 1.0
    s = z10.spatial.real
    assert np.array_equal(s[1:], s[1:][::-1])
    integrals = [make_zeta(0.25, GridSpec(m)).spatial.real.sum() / 2 ** m for m in (10, 12)]
    assert abs(integrals[0] - integrals[1]) < 1e-6
    with pytest.raises(ValueError):
        make_zeta(0.6, GridSpec(8))


def test_truncated_hilbert_is_odd_and_imaginary():
    K = make_truncated_hilbert(make_zeta(0.25, GridSpec(10)))
    sp = K.spatial.real
    assert sp[0] == 0
    assert np.allclose(sp[1:], -sp[1:][::-1], atol=1e-12)
    assert np.abs(K.symbol.real).max() < 1e-9 and K.symbol[0] == 0
    k = K.grid.freqs
    assert np.allclose(K.symbol[K.grid.bin_index(-k)], -K.symbol, atol=1e-9)


def test_truncated_hilbert_rejects_asymmetric_cutoff():
    g = GridSpec(8)
    z = make_zeta(0.25, g)
    bad = Kernel(g, z.spatial + np.eye(1, g.L, 3).ravel(), z.symbol, dict(z.meta))
    with pytest.raises(ValueError):
        make_truncated_hilbert(bad)


def test_symbol_matches_independent_quadrature():
    g = GridSpec(10)
    r = 0.25
    K = make_truncated_hilbert(make_zeta(r, g))
    xi = g.L // 4
    # integral of zeta(y) sin(2 pi xi y) / y over |y| < r, by adaptive oscillatory quadrature
    val, _ = integrate.quad(lambda y: bump(np.array(y / r)) / y if y > 0 else 2 * np.pi * xi, 0, r,
                            weight="sin", wvar=2 * np.pi * xi, limit=400)
    ref = 2j * val
    assert abs(K.symbol[g.bin_index(-xi)] - ref) < 1e-8
    assert abs(ref.imag - np.pi) < 0.05 * np.pi


def test_symbol_decay_limit_and_kh_bounds():
    K = make_truncated_hilbert(make_zeta(0.25, GridSpec(10)))
    rep = verify_symbol_decay(K)
    assert abs(rep.extra["c_re"]) <= 1e-3
    assert abs(rep.extra["c_im"] - np.pi) <= 0.05 * np.pi
    assert np.isfinite(rep.max_ratio)
    assert rep.extra["kh1_constant"] <= rep.extra["kh1_bound"]
    assert rep.extra["kh2_sup"] <= rep.extra["kh2_bound"] * (1 + 1e-9)
    with pytest.raises(ValueError):
        verify_symbol_decay(make_truncated_hilbert(make_zeta(0.25, GridSpec(7))))


def test_psi_support_height_and_envelope():
    g = GridSpec(10)
    psi = make_psi(8, g)
    sym = psi.symbol.real
    assert sym.min() >= 0 and sym.max() == pytest.approx(1.0, abs=1e-3)
    lo, hi = psi.meta["claimed_support"]
    k = g.freqs
    assert np.all(psi.symbol[(k < lo) | (k > hi)] == 0)
    env = (1 + psi.meta["S"] * np.abs(g.y)) ** -8.0
    assert np.all(np.abs(psi.spatial) <= psi.meta["C1"] * env * (1 + 1e-12))
    with pytest.raises(ValueError):
        make_psi(2, g)
    with pytest.raises(ValueError):
        make_psi(40, g)


def test_big_psi_sum_and_single_term():
    g = GridSpec(10)
    psi = make_psi(8, g)
    Psi = build_big_psi(psi, 3)
    k = g.freqs
    ref = sum(psi.profile(2.0 ** -v * k) for v in (1, 2, 3))
    assert np.abs(Psi.symbol - ref).max() < 1e-9
    assert np.all(Psi.symbol[k >= 0] == 0)
    one = build_big_psi(psi, 1)
    assert np.array_equal(one.symbol, psi.profile(0.5 * k).astype(complex))
    with pytest.raises(ValueError):
        build_big_psi(psi, 9)


def test_psi0_constant_and_oracle(dec10):
    P0 = dec10.Psi0
    S = P0.meta["S"]
    k = P0.grid.freqs
    assert np.all(P0.symbol[k > 0] == 0)
    far = P0.symbol[k <= -2 * S].real
    A = P0.meta["A"]
    assert A > 0 and np.abs(far - A).max() <= 1e-4 * A
    oracle = psi0_constant_oracle(dec10.psi.profile, S)
    assert abs(A - oracle) < 1e-5


def test_d0_decay_reality_and_constant(dec10):
    D0, c = dec10.D0, dec10.c
    L = D0.grid.L
    for xi in (L // 4, -L // 4):
        assert abs(D0.symbol[D0.grid.bin_index(xi)]) <= 10 / L
    assert np.abs(D0.spatial.imag).max() < 1e-9
    # c scales like 1/A; the normalization-free quantity is c A
    assert abs(abs(c * dec10.Psi0.meta["A"]) - np.pi) <= 0.05 * np.pi
    assert np.isfinite(d0_tail_constant(D0, 4 * dec10.psi.meta["S"]))
    rec = dec10.K_H.symbol - D0.symbol - (dec10.Psi0 - reflect_conj(dec10.Psi0)).scaled(c).symbol
    assert np.abs(rec).max() < 1e-9


def test_chi_partition():
    g = GridSpec(10)
    chi = make_chi_partition(g)
    k = g.freqs
    total = chi.partition_sum()
    assert np.abs(total[k != 0] - 1).max() < 1e-10
    assert sum(chi.dilate_profile(j)(np.array([7.0])) for j in chi.ks())[0] == pytest.approx(1.0)
    assert chi.profile(np.array([chi.unit / 4]))[0] == 0
    t = np.linspace(-3, 3, 101) * chi.unit
    lhs = chi.profile(t) + chi.profile(2 * t)
    assert np.array_equal(lhs, eta_cutoff(t / chi.unit) - eta_cutoff(4 * t / chi.unit))


def test_delta_k_support_sum_and_linearity(dec10):
    D0, chi = dec10.D0, dec10.chi
    g = D0.grid
    k = g.freqs
    for j, d in dec10.deltas.items():
        (a, b), (lo, hi) = d.meta["claimed_support"]
        outside = ~(((k >= a) & (k <= b)) | ((k >= lo) & (k <= hi)))
        assert np.all(d.symbol[outside] == 0)
    total = sum(d.symbol for d in dec10.deltas.values())
    assert np.abs(total - D0.symbol)[k != 0].max() < 1e-9
    zero_chi = Kernel.from_symbol(g, np.zeros(g.L), {"unit": chi.unit}, lambda e: np.zeros_like(e))
    assert np.all(build_delta_k(D0, zero_chi, 0).symbol == 0)
    scaled = build_delta_k(D0.scaled(2.5), chi, 1).symbol
    assert np.allclose(scaled, 2.5 * build_delta_k(D0, chi, 1).symbol, atol=1e-14)


def test_delta_bounds(dec10):
    fam = {k: dec10.deltas[k] for k in range(-3, 4) if k in dec10.deltas}
    reps = verify_delta_bounds(fam)
    C = max(r.extra["log2_sup_plus_absk"] for r in reps)
    assert C <= 4
    by_k = {r.extra["k"]: r for r in reps}
    assert np.isfinite(by_k[3].extra["envelope_ratio"])
    assert by_k[0].max_ratio == pytest.approx(by_k[0].extra["sup_symbol"])
    with pytest.raises(ValueError):
        verify_delta_bounds({})


def test_scale_covariance_of_symbol():
    g = GridSpec(10)
    psi = make_psi(8, g)
    d = dilate(Signal(g, psi.spatial), 2.0, 1)
    k = g.freqs
    assert np.abs(d.spectrum - psi.profile(2.0 * k)).max() < 1e-9


def test_sharp_hilbert():
    g = GridSpec(10)
    J = make_sharp_hilbert(g)
    sp = J.spatial.real
    assert sp[0] == 0 and np.allclose(sp[1:], -sp[1:][::-1], atol=1e-12)
    assert np.abs(J.symbol.real).max() < 1e-9
    var = band_variation(J)
    assert var[-1] > var[2]
