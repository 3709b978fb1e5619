"""Acceptance criteria at their stated tolerances; each test prints one PASS/FAIL line.

Run alone with ``pytest -s tests/test_acceptance.py`` to see the summary lines.
"""
import time

import numpy as np
import pytest

from tilewave.suites import run_suite

_CACHE = {}


def suite(name, **params):
    key = (name, tuple(sorted(params.items())))
    if key not in _CACHE:
        t0 = time.perf_counter()
        res = run_suite(name, **params)
        _CACHE[key] = (res, time.perf_counter() - t0)
    return _CACHE[key]


def report(n, ok, detail):
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, f"criterion {n}: {detail}"


def checks(res, *prefixes):
    return [c for c in res.checks if c.name.startswith(prefixes)]


def test_criterion_01_symbol_decay():
    res, secs = suite("kernels-verify", grid_m=12)
    c = {k.name: k for k in res.checks}
    ok = c["decay_slope"].passed and c["limit_imag"].passed and c["limit_real"].passed and secs < 5
    report(1, ok, f"slope {c['decay_slope'].value:.3f} (need [-1.3, -0.8]), "
                  f"Im {c['limit_imag'].value:.5f}, |Re| {abs(c['limit_real'].value):.1e}, {secs:.1f} s")


def test_criterion_02_delta_bounds():
    res, secs = suite("kernels-verify", grid_m=12)
    c = {k.name: k for k in res.checks}
    ks = sorted(r["k"] for r in res.rows if r.get("kind") == "delta")
    ok = (c["delta_support"].value <= 1e-8 and c["delta_constant"].value <= 4 and ks == list(range(-5, 6))
          and secs < 10)
    report(2, ok, f"leak {c['delta_support'].value:.1e}, C {c['delta_constant'].value:.3f} over k in [-5, 5], "
                  f"{secs:.1f} s")


def test_criterion_03_reconstruction():
    res, _ = suite("kernels-verify", grid_m=12)
    c = {k.name: k for k in res.checks}
    err = max(c["reconstruction"].value, c["delta_sum"].value)
    report(3, err <= 1e-9, f"max reconstruction error {err:.1e}")


def test_criterion_04_sqrt_delta():
    res, secs = suite("osc-bench", grid_m=10, instances=30)
    c = {k.name: k for k in res.checks}
    n = len({r["instance"] for r in res.rows if isinstance(r["instance"], (int, np.integer))})
    ok = abs(c["sqrt_delta_slope"].value - 0.5) <= 0.15 and c["one_constant"].passed and n == 30 and secs < 60
    report(4, ok, f"slope {c['sqrt_delta_slope'].value:.3f}, constant spread {c['one_constant'].value:.3f}, "
                  f"{n} instances, {secs:.1f} s")


def test_criterion_05_covariances():
    res, _ = suite("averaging-beta", grid_m=10, instances=20)
    rows = [r for r in res.rows if r.get("kind") == "covariance"]
    worst = max(max(r["trans"], r["dil"], r["mod"]) for r in rows)
    report(5, len(rows) == 20 and worst <= 1e-10, f"max deviation {worst:.1e} over {len(rows)} f at m=10")


def test_criterion_06_beta():
    res, _ = suite("averaging-beta", grid_m=10, instances=20)
    beta = checks(res, "beta_")
    bad = [c.name for c in beta if not c.passed]
    dil = max(c.value for c in checks(res, "beta_dilation"))
    off = next(c.value for c in beta if c.name == "beta_offdiag")
    report(6, not bad, f"offdiag {off:.1e}, dilation {dil:.1e}, failing {bad or 'none'}")


def test_criterion_07_splits():
    res, secs = suite("tiles-decompose", grid_m=8, instances=50)
    halves = checks(res, "density_halves", "size_halves")
    consts = checks(res, "density_constant", "size_constant")
    C = {c.name: c.value for c in consts}
    ok = (len(halves) == 100 and all(c.passed for c in halves) and all(c.passed for c in consts)
          and secs < 300)
    report(7, ok, f"{sum(c.passed for c in halves)}/{len(halves)} halving checks, "
                  f"C density {C['density_constant_bounded']:.3f}, C size {C['size_constant_bounded']:.3f}, "
                  f"{secs:.1f} s")


def test_criterion_08_tree_sums():
    res, _ = suite("tree-lemma", grid_m=8, instances=50)
    pols = {r["polarity"] for r in res.rows}
    worst = max(r["ratio"] for r in res.rows)
    c = checks(res, "tree_constant")[0]
    ok = c.passed and len(res.rows) == 50 and pols == {"plus", "minus"}
    report(8, ok, f"max ratio {worst:.4f} over {len(res.rows)} trees ({', '.join(sorted(pols))})")


def test_criterion_09_bilinear():
    res, _ = suite("bilinear", grid_m=8, instances=30)
    gap = max(r["gap"] for r in res.rows)
    lr = [r["log2_ratio"] for r in res.rows]
    c = {k.name: k for k in res.checks}
    ok = gap <= 1e-8 and c["bilinear_constant"].passed and len(res.rows) == 30 and min(lr) == -6 and max(lr) == 6
    report(9, ok, f"pipeline gap {gap:.1e}, max ratio {c['bilinear_constant'].value:.4f}, "
                  f"|G|/|H| in [2^{min(lr)}, 2^{max(lr)}]")


def test_criterion_10_ergodic_closed_form():
    res, secs = suite("ergodic-probe")
    c = {k.name: k for k in res.checks}
    blocks = [r for r in res.rows if r.get("kind") == "probe_block"]
    n_theta = blocks[0]["theta_count"]
    ok = (c["hilbert_limit"].passed and c["probe_decreasing"].passed and len(blocks) == 7 and n_theta == 64
          and secs < 30)
    report(10, ok, f"|value - i pi e^(2 pi i x)| = {c['hilbert_limit'].value:.2e} (need <= 2e-3; "
                   f"finite-s closed form error {c['hilbert_finite_s'].value:.1e}), probe decreasing "
                   f"{c['probe_decreasing'].passed} on {n_theta} theta, {secs:.1f} s")


def test_criterion_11_discrete_series():
    res, _ = suite("ergodic-probe")
    series = checks(res, "series_")
    worst = max(c.value for c in series)
    report(11, bool(series) and all(c.passed for c in series) and worst <= 1e-6,
           f"max error to sawtooth oracle {worst:.1e} at N = 10^4")


def test_criterion_12_exhaustive_oracles():
    res, _ = suite("tiles-decompose", grid_m=8, instances=50)
    ex = checks(res, "order_iff", "size_exhaustive", "a_op_brute")
    worst = max(c.value for c in ex)
    report(12, all(c.passed for c in ex), f"{len(ex)} exhaustive checks at m=6, worst {worst:.1e}")
