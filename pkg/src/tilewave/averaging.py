"""Single-scale tile operators A_(xi,l), their covariances, the averaged operators B_(xi,l) and beta.

Frequencies are in integer-bin units throughout, so a tile at scale l has
|I| = 2^l and |omega| = 2^-l bins, and Mod_theta multiplies by exp(2 pi i theta x).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from .grid import GridSpec, Kernel, Signal, inner_product
from .kernels import DecayReport
from .tiles import DEFAULT_NU, Tile, tile_space

BETA_BAND = (-7.0 / 8.0, -1.0 / 8.0)
GL_PANEL = 8


@dataclass(frozen=True)
class AveragingConfig:
    """Scale ``l`` (|I| = 2^l, l <= 0), base frequency ``xi`` and quadrature node counts."""

    l: int
    xi: float = 0.0
    y_steps: int = 32
    theta_steps: int = 256

    def __post_init__(self):
        if self.y_steps < 4 or self.theta_steps < 4:
            raise ValueError("quadrature step counts must be at least 4")
        if self.l > 0:
            raise ValueError("scale l must be <= 0 on the torus")

    @property
    def y_period(self) -> float:
        return 2.0 ** self.l

    @property
    def theta_period(self) -> float:
        return 2.0 ** (-self.l)


def _scale(grid: GridSpec, l: int) -> int:
    j = -int(l)
    if not 0 <= j <= grid.m:
        raise ValueError(f"scale l={l} not representable for m={grid.m}")
    return j


def _locate(xi: float, j: int, L: int) -> tuple[int, bool, float]:
    """Frequency index n of the scale-j interval containing xi, whether xi is in its upper half, c(omega_-)."""
    w = float(1 << j)
    x = float(xi) % L
    n = int(np.floor(x / w))
    upper = x - n * w >= w / 2
    return n, upper, n * w + w / 4


def a_multiplier(grid: GridSpec, xi: float, l: int, k, nu: int = DEFAULT_NU) -> np.ndarray:
    """Symbol of A_(xi,l) at (possibly non-integer) frequencies k."""
    j = _scale(grid, l)
    n, upper, c = _locate(xi, j, grid.L)
    k = np.asarray(k, dtype=float)
    if not upper:
        return np.zeros(k.shape)
    L = grid.L
    d = np.mod(k - c + L / 2, L) - L / 2
    return tile_space(grid, nu).profile(d / 2.0 ** j) ** 2


def a_op(xi: float, l: int, f: Signal, nu: int = DEFAULT_NU) -> Signal:
    """sum over |I_s| = 2^l with xi in omega_(s+) of <f, phi_s> phi_s, by packet analysis and synthesis."""
    grid = f.grid
    j = _scale(grid, l)
    n, upper, _ = _locate(xi, j, grid.L)
    if not upper:
        return Signal.zeros(grid)
    space = tile_space(grid, nu)
    coeff = space.analysis(f, j)
    a = np.zeros_like(coeff)
    a[n] = coeff[n]
    return Signal(grid, space.synthesis_rows(j, a.ravel())[n])


def a_op_brute(xi: float, l: int, f: Signal, nu: int = DEFAULT_NU) -> Signal:
    """Explicit loop over the tiles of scale l."""
    grid = f.grid
    j = _scale(grid, l)
    space = tile_space(grid, nu)
    out = np.zeros(grid.L, dtype=complex)
    x = float(xi) % grid.L
    for n in range(grid.L >> j):
        for i in range(1 << j):
            s = Tile(j, i, n)
            lo, hi = s.omega_plus
            if lo <= x < hi:
                p = space.packet(s)
                out += inner_product(f, p) * p.samples
    return Signal(grid, out)


def a_op_multiplier(xi: float, l: int, f: Signal, nu: int = DEFAULT_NU) -> Signal:
    m = a_multiplier(f.grid, xi, l, f.grid.freqs, nu)
    return Signal.from_spectrum(f.grid, m * f.spectrum)


def mod_bins(f: Signal, theta: int) -> Signal:
    """exp(2 pi i theta x) f for an integer number of bins."""
    if theta != int(theta):
        raise ValueError("grid modulations need an integer number of bins")
    return Signal.from_spectrum(f.grid, np.roll(f.spectrum, int(theta)))


def dil2_compress(f: Signal, lp: int) -> Signal:
    """Dil^(2)_(2^-lp) f = 2^(lp/2) f(2^lp x); f must be band-limited so no frequency aliases."""
    if lp < 0:
        raise ValueError("only compressions (lp >= 0) stay on the torus")
    grid = f.grid
    k = grid.freqs
    r = 1 << lp
    spec = f.spectrum
    live = np.abs(spec) > 0
    far = np.abs(k) * r >= grid.L / 2
    if np.any(np.abs(spec[far]) > 1e-12 * max(np.abs(spec).max(), 1e-300)):
        raise ValueError("dilation would alias: f is not band-limited enough")
    live &= ~far
    out = np.zeros(grid.L, dtype=complex)
    out[grid.bin_index(k[live] * r)] = spec[live] * np.sqrt(r)
    return Signal.from_spectrum(grid, out)


def random_bandlimited(grid: GridSpec, rng: np.random.Generator, band: Optional[int] = None) -> Signal:
    band = grid.L // 2 if band is None else band
    spec = rng.standard_normal(grid.L) + 1j * rng.standard_normal(grid.L)
    spec[np.abs(grid.freqs) >= band] = 0
    return Signal.from_spectrum(grid, spec)


def covariance_check(xi: float, l: int, f: Signal, n: int = 1, lp: int = 1, theta: Optional[int] = None,
                     nu: int = DEFAULT_NU) -> dict:
    """Max deviation of each covariance identity on f.

    theta defaults to one tile-frequency length 2^-l bins.  The dilation identity needs
    lp >= 0, l + lp <= 0, l > -m and f band-limited to |k| < L / 2^(lp+1).
    """
    grid = f.grid
    j = _scale(grid, l)
    shift = n * (grid.L >> j)
    lhs = a_op(xi, l, Signal(grid, np.roll(f.samples, shift)), nu).samples
    rhs = np.roll(a_op(xi, l, f, nu).samples, shift)
    trans = float(np.max(np.abs(lhs - rhs)))
    _scale(grid, l + lp)
    if j == grid.m:
        raise ValueError("dilation identity needs |omega| <= L/2: the full-band tile aliases on the torus")
    lhs = a_op(xi, l, dil2_compress(f, lp), nu).samples
    signed = (float(xi) + grid.L / 2) % grid.L - grid.L / 2
    rhs = dil2_compress(a_op(signed * 2.0 ** (-lp), l + lp, f, nu), lp).samples
    dil = float(np.max(np.abs(lhs - rhs)))
    th = (1 << j) if theta is None else int(theta)
    lhs = a_op(xi, l, mod_bins(f, -th), nu).samples
    rhs = mod_bins(a_op(xi + th, l, f, nu), -th).samples
    mod = float(np.max(np.abs(lhs - rhs)))
    return {"xi": xi, "l": l, "n": n, "lp": lp, "theta": th, "trans": trans, "dil": dil, "mod": mod}


# ---------------------------------------------------------------- averaged operator

def _gl(a: float, b: float, count: int):
    panels = max(1, count // GL_PANEL)
    x, w = np.polynomial.legendre.leggauss(GL_PANEL)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    return (mid[:, None] + half[:, None] * x[None, :]).ravel(), (half[:, None] * w[None, :]).ravel()


def _theta_nodes(grid: GridSpec, xi: float, l: int, steps: int):
    """Nodes and weights of the period average in theta, restricted to where xi + theta is in an upper half."""
    j = _scale(grid, l)
    w = float(1 << j)
    t0 = (w / 2 - float(xi)) % w
    nodes, weights = _gl(t0, t0 + w / 2, steps)
    return nodes, weights / w


def b_multiplier(grid: GridSpec, cfg: AveragingConfig, nu: int = DEFAULT_NU) -> np.ndarray:
    """Symbol of B_(xi,l): the (y, theta) period average of Mod_-theta Tran_-y A_(xi+theta,l) Tran_y Mod_theta."""
    k = grid.freqs.astype(float)
    out = np.zeros(grid.L, dtype=complex)
    ys = (np.arange(cfg.y_steps) + 0.5) / cfg.y_steps * cfg.y_period
    phase = np.exp(-2j * np.pi * np.outer(ys, k))
    thetas, tw = _theta_nodes(grid, cfg.xi, cfg.l, cfg.theta_steps)
    for th, wt in zip(thetas, tw):
        # Mod_theta shifts frequencies by theta, so the conjugated symbol is evaluated at k + theta
        m = a_multiplier(grid, cfg.xi + th, cfg.l, k + th, nu)
        # Tran_y is the multiplier exp(-2 pi i k y); conjugating and averaging over the y nodes
        out += wt * (np.conj(phase) * m[None, :] * phase).mean(axis=0)
    return out


def b_op(xi: float, l: int, f: Signal, cfg: Optional[AveragingConfig] = None, nu: int = DEFAULT_NU) -> Signal:
    cfg = AveragingConfig(l, xi) if cfg is None else AveragingConfig(l, xi, cfg.y_steps, cfg.theta_steps)
    return Signal.from_spectrum(f.grid, b_multiplier(f.grid, cfg, nu) * f.spectrum)


def b_matrix(grid: GridSpec, cfg: AveragingConfig, nu: int = DEFAULT_NU) -> np.ndarray:
    """<B e_k, e_k'> / ||e_k||^2 over all bins, from B applied to every exponential."""
    m = b_multiplier(grid, cfg, nu)
    k = grid.freqs
    ek = np.exp(2j * np.pi * np.outer(k, grid.x))
    Bek = np.fft.ifft(np.fft.fft(ek, axis=1) * m[None, :], axis=1)
    return (Bek @ ek.conj().T) * grid.h


def beta_profile(eta, nu: int = DEFAULT_NU) -> np.ndarray:
    """beta^(eta) = int_(1/4)^(3/4) |phi^(eta + u)|^2 du by adaptive quadrature."""
    from .tiles import phi_profile

    prof = phi_profile(nu)
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    out = np.zeros(eta.shape)
    for idx, e in enumerate(eta):
        lo, hi = max(0.25, -1.0 / nu - e), min(0.75, 1.0 / nu - e)
        if hi > lo:
            out[idx], _ = integrate.quad(lambda u: prof(np.array([e + u]))[0] ** 2, lo, hi,
                                         epsabs=1e-13, epsrel=1e-12, limit=200)
    return out


def extract_beta(l: int, cfg: Optional[AveragingConfig] = None, grid: Optional[GridSpec] = None,
                 nu: int = DEFAULT_NU) -> Kernel:
    """beta_l read off from B_(0,l) on exponentials; meta records the off-diagonal size and dilation check."""
    if grid is None:
        raise ValueError("extract_beta needs a grid")
    base = cfg or AveragingConfig(l)
    cfg = AveragingConfig(l, 0.0, base.y_steps, base.theta_steps)
    mat = b_matrix(grid, cfg, nu)
    diag = np.diag(mat).copy()
    off = float(np.max(np.abs(mat - np.diag(diag))))
    meta = {"name": "beta", "l": l, "nu": nu, "offdiag": off, "imag": float(np.max(np.abs(diag.imag))),
            "claimed_support": tuple(2.0 ** (-l) * b for b in BETA_BAND)}
    dil = None
    if -(l - 1) <= grid.m:
        finer = np.diag(b_matrix(grid, AveragingConfig(l - 1, 0.0, cfg.y_steps, cfg.theta_steps), nu))
        k = grid.freqs
        ok = np.abs(2 * k) < grid.L / 2
        dil = float(np.max(np.abs(diag[ok] - finer[grid.bin_index(2 * k[ok])])))
    meta["dilation_error"] = dil
    sym = diag.real.astype(complex)
    return Kernel.from_symbol(grid, sym, meta)


def verify_beta(beta: Kernel, nu: int = DEFAULT_NU, noise_floor: float = 1e-12) -> DecayReport:
    """Nonnegative bounded symbol, support in the beta band, spatial decay envelope and nonvanishing."""
    if "l" not in beta.meta:
        raise ValueError("beta kernel carries no scale; extraction failed")
    grid = beta.grid
    l = beta.meta["l"]
    scale = 2.0 ** (-l)
    sym = beta.symbol.real
    lo, hi = beta.meta["claimed_support"]
    k = grid.freqs
    inside = (k >= lo) & (k <= hi)
    total = float(np.sum(np.abs(beta.symbol) ** 2))
    leak = float(np.sum(np.abs(beta.symbol[~inside]) ** 2)) / total if total > 0 else np.inf
    env = scale * (1 + scale * np.abs(grid.y)) ** (-float(nu))
    resolved = np.abs(beta.spatial) > noise_floor * np.max(np.abs(beta.spatial))
    ratio = np.abs(beta.spatial) / env
    C1 = float(np.max(ratio[resolved])) if resolved.any() else 0.0
    norm = float(np.sqrt(np.sum(np.abs(beta.spatial) ** 2) * grid.h))
    extra = {
        "min_symbol": float(sym.min()),
        "max_symbol": float(sym.max()),
        "support_leak": leak,
        "C1": C1,
        "envelope_floor": float(env.min() / env.max()),
        "norm": norm,
        "offdiag": beta.meta.get("offdiag"),
        "dilation_error": beta.meta.get("dilation_error"),
    }
    return DecayReport("beta", float("nan"), C1, (lo, hi), extra)


def beta_checks(report: DecayReport, C0: float, tol: float = 1e-8) -> dict:
    """Pass/fail flags for the three beta conditions and nonvanishing."""
    e = report.extra
    return {
        "nonnegative": e["min_symbol"] >= -tol,
        "bounded": e["max_symbol"] <= C0 + tol,
        "support": e["support_leak"] <= 1e-6,
        "decay": np.isfinite(e["C1"]) and e["C1"] > 0 and e["envelope_floor"] > 1e-13,
        "nonzero": e["norm"] > 1e-6,
    }
