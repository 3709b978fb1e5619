"""Verification suites: each builds its instances from a seed, evaluates module operations and returns rows plus checks.

Instance seeds come from ``SeedSequence(seed).spawn``, so results do not depend on the worker count.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import averaging, ergodic, kernels, oscillation, tiles
from .grid import GridSpec, Signal, lp_norm


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    bound: str
    row: Optional[int] = None


@dataclass
class SuiteResult:
    suite: str
    rows: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    exploratory: bool = False
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.exploratory or all(c.passed for c in self.checks)

    def check(self, name: str, passed: bool, value: float, bound: str, row: Optional[int] = None) -> None:
        self.checks.append(Check(name, bool(passed), float(value), bound, row))

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]


def _rngs(seed: int, n: int) -> list:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _pmap(fn: Callable, args: list, jobs: int) -> list:
    if jobs <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, args))


def _worst(rows: list, key: str) -> int:
    vals = [r[key] for r in rows]
    return int(np.nanargmax(vals)) if vals else -1


# ---------------------------------------------------------------- kernels-verify

def kernels_verify(grid_m: int = 12, seed: int = 0, jobs: int = 1, ks: tuple = (-5, 5),
                   slope_window: tuple = (-1.3, -0.8), C_max: float = 4.0, **_) -> SuiteResult:
    res = SuiteResult("kernels-verify")
    grid = GridSpec(grid_m)
    H = kernels.hilbert_decomposition(grid)
    rep = kernels.verify_symbol_decay(H.K_H)
    res.rows.append({"kind": "decay", **rep.as_row()})
    fam = {k: H.deltas[k] for k in range(ks[0], ks[1] + 1) if k in H.deltas}
    dreps = kernels.verify_delta_bounds(fam)
    for r in dreps:
        res.rows.append({"kind": "delta", **r.as_row()})
    recon = H.K_H.symbol - H.D0.symbol - (H.Psi0 - kernels.reflect_conj(H.Psi0)).scaled(H.c).symbol
    nz = grid.freqs != 0
    dsum = sum(d.symbol for d in H.deltas.values())
    rec_err = float(np.abs(recon).max())
    sum_err = float(np.abs(dsum - H.D0.symbol)[nz].max())
    res.rows.append({"kind": "reconstruction", "name": "K_H", "recon_error": rec_err, "delta_sum_error": sum_err})
    c_im, c_re = rep.extra["c_im"], rep.extra["c_re"]
    res.check("decay_slope", slope_window[0] <= rep.slope <= slope_window[1], rep.slope,
              f"in [{slope_window[0]}, {slope_window[1]}]", 0)
    res.check("limit_imag", abs(c_im - np.pi) <= 0.05 * np.pi, c_im, "within 5% of pi", 0)
    res.check("limit_real", abs(c_re) <= 1e-3, c_re, "|.| <= 1e-3", 0)
    leak = max(r.extra["support_leak"] for r in dreps)
    C = max(r.extra["log2_sup_plus_absk"] for r in dreps)
    res.check("delta_support", leak <= 1e-8, leak, "<= 1e-8")
    res.check("delta_constant", C <= C_max, C, f"<= {C_max}")
    res.check("reconstruction", rec_err <= 1e-9, rec_err, "<= 1e-9", len(res.rows) - 1)
    res.check("delta_sum", sum_err <= 1e-9, sum_err, "<= 1e-9", len(res.rows) - 1)
    return res


# ---------------------------------------------------------------- osc-bench

def _osc_instance(args):
    m, deltas, blocks, rng = args
    grid = GridSpec(m)
    spec = oscillation.smooth_spec(grid, blocks)
    f = Signal(grid, rng.standard_normal(grid.L) + 1j * rng.standard_normal(grid.L))
    nf = lp_norm(f)
    # delta |J| must cover at least one sample for every delta
    top = max(1, m - int(np.ceil(-np.log2(min(deltas)))))
    scale = int(rng.integers(1, top + 1))
    out = []
    for d in deltas:
        part = oscillation.random_partition(grid, d, scale, rng)
        v = lp_norm(oscillation.osc_dense(f, spec, part))
        mx = lp_norm(oscillation.maximal_dense(f, part))
        out.append({"delta": d, "scale": scale, "osc_norm": v, "ratio": v / (np.sqrt(d) * nf),
                    "maximal_ratio": mx / (np.sqrt(d) * nf)})
    return out


def osc_bench(grid_m: int = 10, seed: int = 0, jobs: int = 1, instances: int = 30,
              deltas: tuple = (1 / 4, 1 / 16, 1 / 64), blocks: Optional[tuple] = None,
              spread_max: float = 4.0, **_) -> SuiteResult:
    res = SuiteResult("osc-bench")
    blocks = tuple(blocks) if blocks else (-grid_m, -4, -2, 1)
    args = [(grid_m, tuple(deltas), blocks, r) for r in _rngs(seed, instances)]
    for i, rows in enumerate(_pmap(_osc_instance, args, jobs)):
        for r in rows:
            res.rows.append({"instance": i, **r})
    x = np.log([r["delta"] for r in res.rows])
    y = np.log([r["osc_norm"] for r in res.rows])
    slope = float(np.polyfit(x, y, 1)[0]) if np.all(np.isfinite(y)) else float("nan")
    per = [max(r["ratio"] for r in res.rows if r["delta"] == d) for d in deltas]
    C = max(per)
    spread = C / min(per) if min(per) > 0 else np.inf
    res.rows.append({"instance": "summary", "delta": float("nan"), "slope": slope, "C": C, "spread": spread})
    res.check("sqrt_delta_slope", abs(slope - 0.5) <= 0.15, slope, "0.5 +- 0.15")
    res.check("one_constant", np.isfinite(C) and spread <= spread_max, spread,
              f"max/min of per-delta sup ratio <= {spread_max}", _worst(res.rows[:-1], "ratio"))
    return res


# ---------------------------------------------------------------- averaging-beta

def _cov_instance(args):
    m, rng = args
    grid = GridSpec(m)
    lp = 1
    l = -int(rng.integers(2, m - lp))
    xi = float(rng.uniform(0, grid.L))
    band = grid.L >> (lp + 2)
    f = averaging.random_bandlimited(grid, rng, band)
    n = int(rng.integers(-3, 4))
    return averaging.covariance_check(xi, l, f, n=n, lp=lp)


def averaging_beta(grid_m: int = 10, seed: int = 0, jobs: int = 1, instances: int = 20,
                   beta_m: int = 8, l_ref: int = -6, dil_levels: tuple = (-5, -4, -3), **_) -> SuiteResult:
    res = SuiteResult("averaging-beta")
    args = [(grid_m, r) for r in _rngs(seed, instances)]
    for i, row in enumerate(_pmap(_cov_instance, args, jobs)):
        res.rows.append({"kind": "covariance", "instance": i, **row})
    for key in ("trans", "dil", "mod"):
        worst = _worst(res.rows, key)
        val = max(r[key] for r in res.rows)
        res.check(f"covariance_{key}", val <= 1e-10, val, "<= 1e-10", worst)
    grid = GridSpec(beta_m)
    beta = averaging.extract_beta(l_ref, grid=grid)
    rep = averaging.verify_beta(beta)
    res.rows.append({"kind": "beta", "l": l_ref, **rep.as_row()})
    row = len(res.rows) - 1
    flags = averaging.beta_checks(rep, 1.0)
    for name, ok in flags.items():
        res.check(f"beta_{name}", ok, rep.extra.get("norm") if name == "nonzero" else float(ok), "holds", row)
    res.check("beta_offdiag", rep.extra["offdiag"] <= 1e-8, rep.extra["offdiag"], "<= 1e-8", row)
    for l in dil_levels:
        b = averaging.extract_beta(l, grid=grid)
        err = b.meta["dilation_error"]
        res.rows.append({"kind": "dilation", "l": l, "dilation_error": err, "offdiag": b.meta["offdiag"]})
        res.check(f"beta_dilation_l{l}", err is not None and err <= 1e-6, err if err is not None else np.nan,
                  "<= 1e-6", len(res.rows) - 1)
    return res


# ---------------------------------------------------------------- tiles-decompose

def tiles_decompose(grid_m: int = 8, seed: int = 0, jobs: int = 1, oracle_m: int = 6, size_cases: int = 6,
                    a_cases: int = 6, instances: int = 50, blocks: Optional[tuple] = None, **_) -> SuiteResult:
    """Exhaustive small-grid oracles at ``oracle_m`` followed by the density and size splits at ``grid_m``."""
    res = exhaustive_oracles(oracle_m, seed, size_cases, a_cases)
    sp = splits(grid_m, seed, jobs, instances, blocks)
    offset = len(res.rows)
    res.rows.extend(sp.rows)
    for c in sp.checks:
        res.checks.append(Check(c.name, c.passed, c.value, c.bound, None if c.row is None else c.row + offset))
    return res


def exhaustive_oracles(grid_m: int = 6, seed: int = 0, size_cases: int = 6, a_cases: int = 6) -> SuiteResult:
    res = SuiteResult("tiles-decompose")
    grid = GridSpec(grid_m)
    rng = _rngs(seed, 1)[0]
    U = tiles.generate_universe(grid)
    mism = sum((tiles.tile_less(s, t) or tiles.tile_less(t, s)) != tiles.rectangles_intersect(s, t)
               for s in U for t in U)
    total = len(U) ** 2
    res.rows.append({"kind": "order", "pairs": total, "mismatches": mism})
    res.check("order_iff_intersection", mism == 0, mism, "== 0", 0)
    space = tiles.tile_space(grid)
    for c in range(size_cases):
        G = tiles.random_set(grid, rng, rng.uniform(0.05, 0.6))
        keep = rng.random(space.total) < 0.15
        S = space.tiles(keep)
        val = tiles.size(S, G.to_signal())[0]
        brute = tiles.size_brute(S, G.to_signal())
        res.rows.append({"kind": "size", "case": c, "tiles": len(S), "size": val, "brute": brute,
                         "error": abs(val - brute)})
        res.check(f"size_exhaustive_{c}", abs(val - brute) <= 1e-10, abs(val - brute), "<= 1e-10", len(res.rows) - 1)
    for c in range(a_cases):
        f = averaging.random_bandlimited(grid, rng)
        l = -int(rng.integers(0, grid_m + 1))
        xi = float(rng.uniform(0, grid.L))
        err = float(np.max(np.abs(averaging.a_op(xi, l, f).samples - averaging.a_op_brute(xi, l, f).samples)))
        res.rows.append({"kind": "a_op", "case": c, "xi": xi, "l": l, "error": err})
        res.check(f"a_op_brute_{c}", err <= 1e-10, err, "<= 1e-10", len(res.rows) - 1)
    return res


# ---------------------------------------------------------------- splits, trees, bilinear

def _split_instance(args):
    m, blocks, rng = args
    grid = GridSpec(m)
    space = tiles.tile_space(grid)
    U = tiles.generate_universe(grid)
    G = tiles.random_set(grid, rng, rng.uniform(0.05, 0.5))
    H = tiles.random_set(grid, rng, rng.uniform(0.05, 0.5))
    lin = tiles.random_linearization(grid, tiles.tile_spec(grid, blocks), rng)
    dens = tiles.tile_densities(space, H, lin.N)
    d_all = tiles.set_density(dens, np.ones(space.total, dtype=bool))
    d_rep, light = tiles.density_split(U, U, H, lin, d_all)
    d_light = tiles.set_density(dens, space.mask(light)) if light else 0.0
    s_rep, small = tiles.size_split(U, G)
    s_small = tiles.size(small, G.to_signal())[0] if small else 0.0
    return {"G": G.measure, "H": H.measure, "dense_S": d_all, "dense_light": d_light,
            "density_trees": len(d_rep.trees), "density_count": d_rep.count, "density_constant": d_rep.constant,
            "size_S": s_rep.threshold, "size_small": s_small, "size_trees": len(s_rep.trees),
            "size_count": s_rep.count, "size_constant": s_rep.constant}


def splits(grid_m: int = 8, seed: int = 0, jobs: int = 1, instances: int = 50,
           blocks: Optional[tuple] = None, **_) -> SuiteResult:
    """Density and size splits; C_n is the running max of the Count constants over the first n instances."""
    res = SuiteResult("splits")
    blocks = tuple(blocks) if blocks else (-grid_m, -5, -2, 1)
    args = [(grid_m, blocks, r) for r in _rngs(seed, instances)]
    rows = _pmap(_split_instance, args, jobs)
    for i, r in enumerate(rows):
        res.rows.append({"instance": i, **r})
        res.check(f"density_halves_{i}", r["dense_light"] < 0.5 * r["dense_S"], r["dense_light"], "< dense(S)/2", i)
        res.check(f"size_halves_{i}", r["size_small"] < 0.5 * r["size_S"], r["size_small"], "< size(S)/2", i)
    half = max(1, instances // 2)
    for key in ("density_constant", "size_constant"):
        c_half = max(r[key] for r in rows[:half])
        c_full = max(r[key] for r in rows)
        res.rows.append({"instance": f"C_{key}", "C_half": c_half, "C_full": c_full, "n_half": half, "n_full": instances})
        res.check(f"{key}_bounded", np.isfinite(c_full), c_full, "finite")
        res.check(f"{key}_nonincreasing", c_full <= c_half, c_full, f"<= C over {half} = {c_half:.6g}",
                  _worst(rows, key))
    return res


def _tree_instance(args):
    m, blocks, polarity, rng = args
    grid = GridSpec(m)
    G = tiles.random_set(grid, rng, rng.uniform(0.05, 0.5))
    H = tiles.random_set(grid, rng, rng.uniform(0.05, 0.5))
    lin = tiles.random_linearization(grid, tiles.tile_spec(grid, blocks), rng)
    T = tiles.random_tree(grid, rng, polarity, top_scale=int(rng.integers(0, 3)), keep=0.7)
    rep = tiles.tree_sum(T, G, H, lin)
    return {"polarity": polarity, "top_j": T.top.j, "members": len(T.members), **rep.as_row()}


def tree_lemma(grid_m: int = 8, seed: int = 0, jobs: int = 1, instances: int = 50, ratio_cap: float = 16.0,
               blocks: Optional[tuple] = None, **_) -> SuiteResult:
    res = SuiteResult("tree-lemma")
    blocks = tuple(blocks) if blocks else (-grid_m, -5, -2, 1)
    pols = ["plus" if i % 2 == 0 else "minus" for i in range(instances)]
    args = [(grid_m, blocks, p, r) for p, r in zip(pols, _rngs(seed, instances))]
    res.rows = [{"instance": i, **r} for i, r in enumerate(_pmap(_tree_instance, args, jobs))]
    C = max(r["ratio"] for r in res.rows)
    res.check("tree_constant", np.isfinite(C) and C <= ratio_cap, C, f"<= {ratio_cap}", _worst(res.rows, "ratio"))
    return res


def _bilinear_instance(args):
    m, blocks, log_ratio, rng = args
    grid = GridSpec(m)
    r = 2.0 ** log_ratio
    big = rng.uniform(0.25, 0.6)
    gm, hm = (big, big / r) if r >= 1 else (big * r, big)
    G = tiles.random_set(grid, rng, gm)
    H = tiles.random_set(grid, rng, hm)
    lin = tiles.random_linearization(grid, tiles.tile_spec(grid, blocks), rng)
    U = tiles.generate_universe(grid)
    rep = tiles.bilinear_form(G, H, U, lin)
    return {"log2_ratio": log_ratio, "G": rep.G_measure, "H": rep.H_measure, "direct": rep.direct,
            "pipeline": rep.pipeline, "gap": abs(rep.direct - rep.pipeline), "trees": rep.trees,
            "tree_bound": rep.tree_bound, "rhs": rep.rhs, "ratio": rep.ratio}


def bilinear(grid_m: int = 8, seed: int = 0, jobs: int = 1, instances: int = 30, ratio_cap: float = 16.0,
             blocks: Optional[tuple] = None, **_) -> SuiteResult:
    res = SuiteResult("bilinear")
    blocks = tuple(blocks) if blocks else (-grid_m, -5, -2, 1)
    logs = [int(v) for v in np.resize(np.arange(-6, 7), instances)]
    args = [(grid_m, blocks, lr, r) for lr, r in zip(logs, _rngs(seed, instances))]
    res.rows = [{"instance": i, **r} for i, r in enumerate(_pmap(_bilinear_instance, args, jobs))]
    gap = max(r["gap"] for r in res.rows)
    C = max(r["ratio"] for r in res.rows)
    res.check("pipeline_equals_direct", gap <= 1e-8, gap, "<= 1e-8", _worst(res.rows, "gap"))
    res.check("bilinear_constant", np.isfinite(C) and C <= ratio_cap, C, f"<= {ratio_cap}", _worst(res.rows, "ratio"))
    return res


# ---------------------------------------------------------------- ergodic-probe

def ergodic_probe(seed: int = 0, jobs: int = 1, s: float = 1e-3, theta: float = 1.0, x: float = 0.3,
                  depth: int = 8, theta_points: int = 64, series_N: int = 10_000, **_) -> SuiteResult:
    res = SuiteResult("ergodic-probe")
    flow = ergodic.FlowConfig()
    f = ergodic.exponential(1)
    v = ergodic.truncated_modulated_hilbert(f, flow, x, theta, s)
    limit = ergodic.hilbert_closed_form(f, flow, x, theta)
    finite = ergodic.hilbert_closed_form(f, flow, x, theta, s)
    res.rows.append({"kind": "hilbert", "theta": theta, "s": s, "re": v.real, "im": v.imag,
                     "err_limit": abs(v - limit), "err_finite_s": abs(v - finite)})
    res.check("hilbert_limit", abs(v - limit) <= 2e-3, abs(v - limit), "<= 2e-3", 0)
    res.check("hilbert_finite_s", abs(v - finite) <= 1e-8, abs(v - finite), "<= 1e-8", 0)
    grid = np.linspace(-np.pi, np.pi, theta_points)
    beta0 = -2 * np.pi * flow.alpha[0]
    grid = grid[np.abs(grid - beta0) > 0.3]
    probe = ergodic.convergence_probe(f, flow, [x], grid, ergodic.TruncationLadder(depth))
    for i, b in enumerate(probe.block_max[x]):
        res.rows.append({"kind": "probe_block", "block": i, "s": float(2.0 ** -(i + 2)), "block_max": b,
                         "theta_count": len(grid)})
    res.check("probe_decreasing", probe.decreasing(), float(np.max(np.diff(probe.block_max[x]))),
              "strictly decreasing", len(res.rows) - 1)
    for th in (0.5, 1.0, 2.5):
        val = ergodic.discrete_modulated_series(f, flow, x, th, series_N)
        ref = ergodic.series_closed_form(f, flow, x, th, series_N)
        res.rows.append({"kind": "series", "theta": th, "N": series_N, "re": val.real, "im": val.imag,
                         "err": abs(val - ref)})
        res.check(f"series_theta_{th}", abs(val - ref) <= 1e-6, abs(val - ref), "<= 1e-6", len(res.rows) - 1)
    return res


# ---------------------------------------------------------------- conjecture-jh

def _jh_instance(args):
    m, ns, mod_count, rng = args
    grid = GridSpec(m)
    J = kernels.make_sharp_hilbert(grid)
    f = Signal(grid, rng.standard_normal(grid.L) + 1j * rng.standard_normal(grid.L))
    mods = np.unique(rng.integers(0, grid.L, size=mod_count))
    out = []
    for n in ns:
        spec = oscillation.OscSpec(n, tuple(range(-2 * n * 4, 1, 2 * n)), l_min=-n * (m - 1), l_max=0)
        val = lp_norm(oscillation.sup_mod_osc(J, f, spec, mods)) / lp_norm(f)
        out.append({"n": n, "ratio": val})
    return out


def conjecture_jh(grid_m: int = 9, seed: int = 0, jobs: int = 1, instances: int = 6, ns: tuple = (1, 2, 4),
                  mod_count: int = 16, **_) -> SuiteResult:
    """Measured growth of the sharp-cutoff oscillation ratio in n; reported, never asserted."""
    res = SuiteResult("conjecture-jh", exploratory=True)
    args = [(grid_m, tuple(ns), mod_count, r) for r in _rngs(seed, instances)]
    for i, rows in enumerate(_pmap(_jh_instance, args, jobs)):
        res.rows.extend({"instance": i, **r} for r in rows)
    for n in ns:
        res.rows.append({"instance": "max", "n": n, "ratio": max(r["ratio"] for r in res.rows if r["n"] == n)})
    return res


SUITES = {
    "kernels-verify": kernels_verify,
    "osc-bench": osc_bench,
    "tiles-decompose": tiles_decompose,
    "tree-lemma": tree_lemma,
    "bilinear": bilinear,
    "averaging-beta": averaging_beta,
    "ergodic-probe": ergodic_probe,
    "conjecture-jh": conjecture_jh,
}


def run_suite(name: str, **params) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(name)
    t0 = time.perf_counter()
    res = SUITES[name](**params)
    res.seconds = time.perf_counter() - t0
    return res
