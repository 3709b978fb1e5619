"""Kernels of the Hilbert-transform decomposition and checks of their Fourier estimates.

All symbols use the package convention ``K^(k) = integral K(y) exp(-2 pi i k y) dy``
with ``k`` in integer bins.  The classical limit of the truncated Hilbert symbol is
then ``-i pi`` at ``+infinity``; under the opposite sign convention ``exp(+i xi y)``
the same limit reads ``+i pi``.  ``verify_symbol_decay`` reports the latter.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .grid import TWO_PI, GridSpec, Kernel

DEFAULT_S = 32
DEFAULT_NU = 8


@dataclass
class DecayReport:
    name: str
    slope: float
    max_ratio: float
    freq_range: tuple
    extra: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        row = {"name": self.name, "slope": self.slope, "max_ratio": self.max_ratio,
               "range_lo": self.freq_range[0], "range_hi": self.freq_range[1]}
        row.update(self.extra)
        return row


def bump(u) -> np.ndarray:
    """exp(1 - 1/(1 - u^2)) on |u| < 1, zero elsewhere; equals 1 at u = 0."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    inside = np.abs(u) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def smooth_step(x) -> np.ndarray:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
    b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def _gauss_nodes(a: float, b: float, panels: int, per_panel: int = 16):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    t, w = np.polynomial.legendre.leggauss(per_panel)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    return (mid + half * t).ravel(), (half * w).ravel()


def _panels(emax: float, radius: float, resolution: int = 1) -> int:
    return resolution * (int(np.ceil(emax * radius)) + 16)


def _sine_transform(weight: Callable, radius: float, eta, chunk: int = 256, resolution: int = 1) -> np.ndarray:
    """-2i * integral_0^radius weight(y) sin(2 pi eta y) / y dy, vectorized over eta."""
    eta = np.asarray(eta, dtype=float)
    flat = eta.ravel()
    emax = float(np.abs(flat).max()) if flat.size else 0.0
    y, w = _gauss_nodes(0.0, radius, _panels(emax, radius, resolution))
    wy = w * weight(y) / y
    out = np.empty(flat.size)
    for s in range(0, flat.size, chunk):
        e = flat[s:s + chunk]
        out[s:s + chunk] = np.sin(TWO_PI * np.outer(e, y)) @ wy
    return (-2j * out).reshape(eta.shape)


def _cosine_transform(weight: Callable, radius: float, eta, chunk: int = 256, resolution: int = 1) -> np.ndarray:
    """2 * integral_0^radius weight(y) cos(2 pi eta y) dy (transform of an even function)."""
    eta = np.asarray(eta, dtype=float)
    flat = eta.ravel()
    emax = float(np.abs(flat).max()) if flat.size else 0.0
    y, w = _gauss_nodes(0.0, radius, _panels(emax, radius, resolution))
    wy = w * weight(y)
    out = np.empty(flat.size)
    for s in range(0, flat.size, chunk):
        e = flat[s:s + chunk]
        out[s:s + chunk] = np.cos(TWO_PI * np.outer(e, y)) @ wy
    return (2.0 * out).reshape(eta.shape)


def _odd_cleanup(grid: GridSpec, symbol: np.ndarray) -> np.ndarray:
    sym = 1j * np.imag(symbol)
    sym[0] = 0.0
    sym[grid.L // 2] = 0.0
    return sym


# ---------------------------------------------------------------- cutoff and K_H

def make_zeta(radius: float, grid: GridSpec) -> Kernel:
    """Symmetric C-infinity bump with zeta(0) = 1, supported on |y| < radius."""
    if not 0 < radius < 0.5:
        raise ValueError(f"radius must lie in (0, 1/2), got {radius}")
    spatial = bump(grid.y / radius)
    weight = lambda y: bump(y / radius)  # noqa: E731
    return Kernel.from_spatial(
        grid, spatial,
        {"name": "zeta", "radius": radius},
        profile=lambda eta: _cosine_transform(weight, radius, eta),
    )


def _require_symmetric(zeta: Kernel):
    s = zeta.spatial
    if np.abs(s[1:] - s[1:][::-1]).max() > 1e-12 * max(np.abs(s).max(), 1.0):
        raise ValueError("cutoff function is not symmetric")


def make_truncated_hilbert(zeta: Kernel, method: str = "spectral") -> Kernel:
    """K_H(y) = zeta(y) / y.

    ``method="spectral"`` (default) takes the symbol to be the continuum transform of
    zeta(y)/y at each bin, so the spatial array is the band-limited version of the
    kernel.  ``method="sampled"`` samples zeta(y)/y directly with a 0 at the origin;
    its symbol is the aliased transform and drifts like -i pi (1 - 2k/L).
    """
    _require_symmetric(zeta)
    grid = zeta.grid
    meta = {"name": "K_H", "method": method, "radius": zeta.meta.get("radius")}
    if method == "sampled":
        y = grid.y
        sp = np.zeros(grid.L)
        nz = y != 0
        sp[nz] = np.real(zeta.spatial[nz]) / y[nz]
        return Kernel.from_spatial(grid, sp, meta)
    if method != "spectral":
        raise ValueError(f"unknown method {method!r}")
    radius = zeta.meta.get("radius")
    if radius is None:
        raise ValueError("spectral construction needs a cutoff built by make_zeta")
    weight = lambda y: bump(y / radius)  # noqa: E731
    profile = lambda eta: _sine_transform(weight, radius, eta)  # noqa: E731
    sym = _odd_cleanup(grid, profile(grid.freqs))
    K = Kernel.from_symbol(grid, sym, meta, profile)
    return Kernel(grid, np.real(K.spatial).astype(complex), sym, meta, profile)


def symbol_limit(K: Kernel, decade: float = 10.0) -> complex:
    """Mean of the symbol over the top decade of frequencies, read in the exp(+i xi y) convention.

    In the package convention that is the mean over bins in [-L/2, -L/(2 decade)].
    """
    k = K.grid.freqs
    sel = (k <= -K.grid.L / (2 * decade)) & (k > -K.grid.L / 2)
    return complex(K.symbol[sel].mean())


def verify_symbol_decay(K_H: Kernel, fit_range: Optional[tuple] = None,
                        noise_floor: float = 1e-13) -> DecayReport:
    """Estimate the high-frequency limit c of K_H's symbol and the rate of approach.

    ``c`` is reported in the exp(+i xi y) convention.  The slope is the least-squares
    fit of log|K^ - c| against log xi over ``fit_range`` (default [4S, L/4]),
    restricted to points above ``noise_floor``; it is NaN when fewer than three
    points remain.
    """
    grid = K_H.grid
    if grid.L < 256:
        raise ValueError("grid too small to fit a decay slope (need L >= 256)")
    c = symbol_limit(K_H)
    xi = np.arange(1, grid.L // 2)
    vals = K_H.symbol[grid.bin_index(-xi)]
    resid = np.abs(vals - c)
    in_ratio = (xi >= 4) & (xi <= grid.L // 4)
    max_ratio = float(np.max(xi[in_ratio] * resid[in_ratio]))
    lo, hi = fit_range or (4 * DEFAULT_S, grid.L // 4)
    sel = (xi >= lo) & (xi <= hi) & (resid > noise_floor)
    if sel.sum() >= 3:
        slope = float(np.polyfit(np.log(xi[sel]), np.log(resid[sel]), 1)[0])
    else:
        slope = float("nan")
    radius = K_H.meta.get("radius") or 0.25
    # |K^(xi)| <= C |xi| with xi angular, for |xi| <= 1.
    eta = np.linspace(-1, 1, 401) / TWO_PI
    eta = eta[eta != 0]
    kh1 = float(np.max(np.abs(K_H.symbol_at(eta)) / np.abs(TWO_PI * eta))) if K_H.profile else float("nan")
    moment = float(integrate.quad(lambda y: bump(y / radius), -radius, radius)[0])
    # w = 1: d/d(xi) K^ = -i * zeta^ (angular xi), bounded by integral of zeta.
    zeta_hat = _cosine_transform(lambda y: bump(y / radius), radius, np.linspace(0, 1 / TWO_PI, 50))
    kh2 = float(np.max(np.abs(zeta_hat)))
    return DecayReport(
        K_H.name, slope, max_ratio, (lo, hi),
        {"c_re": c.real, "c_im": c.imag, "fit_points": int(sel.sum()),
         "kh1_constant": kh1, "kh1_bound": 4 * moment,
         "kh2_sup": kh2, "kh2_bound": moment},
    )


# ---------------------------------------------------------------- psi, Psi, Psi_0

def psi_profile(S: float, C0: float = 1.0) -> Callable:
    center, half = -1.25 * S, 0.75 * S
    return lambda eta: C0 * bump((np.asarray(eta, dtype=float) - center) / half)


def make_psi(nu: int, grid: GridSpec, S: int = DEFAULT_S, C0: float = 1.0) -> Kernel:
    """psi with symbol a C-infinity bump of height C0 on the band [-2S, -S/2].

    The spatial bound is checked against C1 * (1 + S|y|)^(-nu), the unit-free form of
    min(|y|^-nu, |y|^nu) bounds once lengths are measured in units of 1/S.
    """
    if nu < 4:
        raise ValueError(f"nu must be at least 4, got {nu}")
    if 2 * S > grid.L // 2:
        raise ValueError(f"band [-2S, -S/2] with S={S} exceeds Nyquist for L={grid.L}")
    envelope_floor = (1 + S / 2) ** (-nu)
    if envelope_floor < 1e-13:
        raise ValueError(f"nu={nu} pushes the psi envelope below the float noise floor")
    prof = psi_profile(S, C0)
    K = Kernel.from_symbol(grid, prof(grid.freqs), profile=prof)
    env = (1 + S * np.abs(grid.y)) ** (-float(nu))
    C1 = float(np.max(np.abs(K.spatial) / env))
    meta = {"name": "psi", "nu": nu, "S": S, "C0": C0, "C1": C1,
            "claimed_support": (-2 * S, -S / 2)}
    return Kernel(grid, K.spatial, K.symbol, meta, prof)


def build_big_psi(psi: Kernel, v_max: int) -> Kernel:
    """Psi = sum_{v=1}^{v_max} Dil^(1)_{2^-v} psi, whose symbol is sum_v psi^(2^-v xi)."""
    grid = psi.grid
    S = psi.meta["S"]
    if v_max < 1:
        raise ValueError("v_max must be at least 1")
    if v_max > grid.m - 2 or 2 ** (v_max + 1) * S > grid.L // 2:
        raise ValueError(f"v_max={v_max} exceeds grid resolution (m={grid.m}, S={S})")
    base = psi.profile
    k = grid.freqs
    sym = np.zeros(grid.L, dtype=complex)
    for v in range(1, v_max + 1):
        sym += base(2.0 ** (-v) * k)
    tail = 0.0
    v = v_max + 1
    while 2.0 ** v * S / 2 < grid.L / 2:
        tail += float(np.abs(base(2.0 ** (-v) * k)).sum())
        v += 1
    prof = lambda eta: sum(base(2.0 ** (-u) * np.asarray(eta, float)) for u in range(1, v_max + 1))  # noqa: E731
    bands = [(-2.0 ** (v + 1) * S, -2.0 ** (v - 1) * S) for v in range(1, v_max + 1)]
    meta = {"name": "Psi", "nu": psi.meta.get("nu"), "S": S, "C0": psi.meta.get("C0"),
            "v_max": v_max, "truncation_tail": tail, "claimed_support": bands,
            "psi_profile": base}
    return Kernel.from_symbol(grid, sym, meta, prof)


def psi0_profile_value(base: Callable, S: float, eta: float) -> tuple[float, float]:
    """(1/ln 2) * integral_0^1 base(t eta) dt / t for one real frequency, with error estimate."""
    if eta >= -S / 2:
        return 0.0, 0.0
    r_hi = min(2.0 * S, -eta)
    val, err = integrate.quad(lambda r: float(np.real(base(-r))) / r, S / 2, r_hi,
                              epsabs=1e-14, epsrel=1e-12, limit=200)
    return val / np.log(2.0), err / np.log(2.0)


def build_psi0(Psi: Kernel, tol: float = 1e-9) -> Kernel:
    """Psi_0 = integral_0^1 Dil^(1)_{2^s} Psi ds/s, read on the Haar measure of the exponent.

    Per bin the symbol is (1/ln 2) int_0^1 psi^(t xi) dt/t: zero for xi >= -S/2 and the
    constant A for xi <= -2S.
    """
    grid = Psi.grid
    base = Psi.meta["psi_profile"]
    S = Psi.meta["S"]
    k = grid.freqs
    sym = np.zeros(grid.L, dtype=complex)
    cache = {}
    for i, kk in enumerate(k):
        key = max(kk, -2.0 * S) if kk < 0 else kk
        if key not in cache:
            val, err = psi0_profile_value(base, S, key)
            if err > tol:
                raise RuntimeError(f"quadrature did not converge at bin {kk} (error {err:.2e})")
            cache[key] = val
        sym[i] = cache[key]
    A = float(psi0_profile_value(base, S, -2.0 * S)[0])

    def prof(eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        return np.array([psi0_profile_value(base, S, max(e, -2.0 * S))[0] for e in eta.ravel()],
                        dtype=complex).reshape(eta.shape)

    meta = {"name": "Psi0", "S": S, "A": A, "claimed_support": (-grid.L / 2, -S / 2),
            "constant_band": (-grid.L / 2, -2 * S), "transition_band": (-2 * S, -S / 2)}
    return Kernel.from_symbol(grid, sym, meta, prof)


def psi0_constant_oracle(base: Callable, S: float, n: int = 200001) -> float:
    """Independent trapezoid value of (1/ln 2) int_{1/2}^{2} psi^(-r S)/r dr."""
    r = np.linspace(0.5, 2.0, n)
    vals = np.real(base(-r * S)) / r
    return float(np.trapezoid(vals, r) / np.log(2.0))


def reflect_conj(K: Kernel) -> Kernel:
    """Kernel y -> conj(K(y)); its symbol is xi -> conj(K^(-xi))."""
    grid = K.grid
    sym = np.conj(K.symbol[grid.bin_index(-grid.freqs)])
    prof = None
    if K.profile is not None:
        base = K.profile
        prof = lambda eta: np.conj(base(-np.asarray(eta, float)))  # noqa: E731
    return Kernel(grid, np.conj(K.spatial), sym, {"name": f"conj({K.name})"}, prof)


def build_D0(K_H: Kernel, Psi0: Kernel) -> tuple[Kernel, complex]:
    """D_0 = K_H - c (Psi_0 - conj Psi_0) with c chosen so D_0^ -> 0 at +infinity."""
    if K_H.grid != Psi0.grid:
        raise ValueError("K_H and Psi_0 live on different grids")
    A = Psi0.meta["A"]
    if A == 0:
        raise ValueError("Psi_0 has zero constant; c is undefined")
    grid = K_H.grid
    k = grid.freqs
    top = (k >= grid.L / 20) & (k < grid.L / 2)
    limit_plus = complex(K_H.symbol[top].mean())
    c = -limit_plus / np.conj(A)
    D0 = K_H - (Psi0 - reflect_conj(Psi0)).scaled(c)
    D0 = Kernel(grid, D0.spatial, D0.symbol,
                {"name": "D0", "c": c, "A": A, "limit_plus": limit_plus}, D0.profile)
    return D0, c


def d0_tail_constant(D0: Kernel, lo: float) -> float:
    """max over |xi| >= lo of |xi| * |D_0^(xi)| (bounded iff the 1/|xi| decay holds)."""
    k = D0.grid.freqs
    sel = np.abs(k) >= lo
    return float(np.max(np.abs(k[sel]) * np.abs(D0.symbol[sel])))


# ---------------------------------------------------------------- chi partition, Delta_k

def eta_cutoff(t) -> np.ndarray:
    """Smooth even function: 1 on |t| <= 1, 0 on |t| >= 2."""
    return 1.0 - smooth_step(np.abs(np.asarray(t, dtype=float)) - 1.0)


@dataclass
class ChiPartition:
    """chi(xi) = eta(xi/U) - eta(2 xi/U), supported on U/2 <= |xi| <= 2U, and its dilates."""

    grid: GridSpec
    unit: float
    k_lo: int
    k_hi: int

    def profile(self, eta) -> np.ndarray:
        t = np.asarray(eta, dtype=float) / self.unit
        return eta_cutoff(t) - eta_cutoff(2 * t)

    def dilate_profile(self, k: int) -> Callable:
        return lambda eta: self.profile(2.0 ** k * np.asarray(eta, dtype=float))

    def kernel(self, k: int) -> Kernel:
        prof = self.dilate_profile(k)
        lo, hi = 2.0 ** (-k - 1) * self.unit, 2.0 ** (-k + 1) * self.unit
        meta = {"name": f"chi_{k}", "claimed_support": [(-hi, -lo), (lo, hi)]}
        return Kernel.from_symbol(self.grid, prof(self.grid.freqs).astype(complex), meta,
                                  lambda eta: prof(eta).astype(complex))

    def ks(self) -> range:
        return range(self.k_lo, self.k_hi + 1)

    def partition_sum(self) -> np.ndarray:
        k = self.grid.freqs
        return sum(self.dilate_profile(j)(k) for j in self.ks())


def make_chi_partition(grid: GridSpec, unit: float = DEFAULT_S) -> ChiPartition:
    """Dyadic partition of unity whose dilates cover every nonzero bin of the grid."""
    k_hi = int(np.ceil(np.log2(unit)))
    k_lo = int(np.floor(np.log2(2.0 * unit / (grid.L / 2)))) - 1
    return ChiPartition(grid, float(unit), k_lo, k_hi)


def build_delta_k(D0: Kernel, chi, k: int) -> Kernel:
    """Delta_k with symbol D_0^ times Dil^inf_{2^-k} chi.

    ``chi`` is a ChiPartition or a kernel whose ``profile`` is the undilated chi.
    """
    grid = D0.grid
    if isinstance(chi, ChiPartition):
        unit = chi.unit
        mult = chi.dilate_profile(k)(grid.freqs)
    else:
        unit = chi.meta.get("unit", DEFAULT_S)
        mult = chi.symbol_at(2.0 ** k * grid.freqs)
    lo, hi = 2.0 ** (-k - 1) * unit, 2.0 ** (-k + 1) * unit
    if lo >= grid.L / 2 or hi < 1:
        raise ValueError(f"band for k={k} ([{lo}, {hi}] bins) lies outside the grid")
    meta = {"name": f"Delta_{k}", "k": k, "unit": unit, "claimed_support": [(-hi, -lo), (lo, hi)]}
    return Kernel.from_symbol(grid, D0.symbol * mult, meta)


def delta_family(D0: Kernel, chi: ChiPartition, ks=None) -> dict:
    return {k: build_delta_k(D0, chi, k) for k in (ks if ks is not None else chi.ks())}


def verify_delta_bounds(family: dict, nu: int = DEFAULT_NU, noise_floor: float = 1e-12) -> list:
    """Per-k reports for ||Delta_k^||_inf against 2^-|k| and the spatial envelope shape.

    ``max_ratio`` is sup|Delta_k^| / 2^-|k|.  ``extra['envelope_ratio']`` is
    max_y |Delta_k(y)| (1 + 2^-k U |y|)^nu / max|Delta_k| over samples above the noise
    floor; ``extra['prefactor']`` is max|Delta_k| / (U 2^(-k-|k|)).
    """
    if not family:
        raise ValueError("empty Delta_k family")
    reports = []
    for k in sorted(family):
        D = family[k]
        unit = D.meta.get("unit", DEFAULT_S)
        sup_sym = float(np.abs(D.symbol).max())
        sp = np.abs(D.spatial)
        peak = float(sp.max())
        y = np.abs(D.grid.y)
        env = (1 + 2.0 ** (-k) * unit * y) ** float(nu)
        sel = sp > noise_floor * max(peak, 1e-300)
        env_ratio = float(np.max(sp[sel] * env[sel]) / peak) if peak > 0 else 0.0
        reports.append(DecayReport(
            D.name, float("nan"), sup_sym / 2.0 ** (-abs(k)),
            (2.0 ** (-k - 1) * unit, 2.0 ** (-k + 1) * unit),
            {"k": k, "sup_symbol": sup_sym,
             "log2_sup_plus_absk": (np.log2(sup_sym) + abs(k)) if sup_sym > 0 else -np.inf,
             "support_leak": D.out_of_support_ratio(),
             "envelope_ratio": env_ratio,
             "prefactor": peak / (unit * 2.0 ** (-k - abs(k)))},
        ))
    return reports


# ---------------------------------------------------------------- sharp cutoff

def make_sharp_hilbert(grid: GridSpec, radius: float = 0.25, method: str = "spectral") -> Kernel:
    """J_H(y) = 1_{|y| <= radius} / y; spectral symbol -2i Si(2 pi k radius)."""
    from scipy.special import sici

    meta = {"name": "J_H", "radius": radius, "method": method}
    if method == "sampled":
        y = grid.y
        sp = np.zeros(grid.L)
        sel = (y != 0) & (np.abs(y) <= radius)
        sp[sel] = 1.0 / y[sel]
        return Kernel.from_spatial(grid, sp, meta)
    prof = lambda eta: -2j * sici(TWO_PI * np.asarray(eta, float) * radius)[0]  # noqa: E731
    sym = _odd_cleanup(grid, prof(grid.freqs))
    K = Kernel.from_symbol(grid, sym, meta, prof)
    return Kernel(grid, np.real(K.spatial).astype(complex), sym, meta, prof)


def band_variation(K: Kernel) -> list[float]:
    """Total variation of the symbol over dyadic bands [2^b, 2^(b+1)) of positive bins."""
    sym = K.symbol[: K.grid.L // 2]
    out = []
    b = 0
    while 2 ** (b + 1) <= K.grid.L // 2:
        seg = sym[2 ** b: 2 ** (b + 1) + 1]
        out.append(float(np.abs(np.diff(seg)).sum()))
        b += 1
    return out


# ---------------------------------------------------------------- one-call pipeline

@dataclass
class HilbertDecomposition:
    zeta: Kernel
    K_H: Kernel
    psi: Kernel
    Psi: Kernel
    Psi0: Kernel
    D0: Kernel
    c: complex
    chi: ChiPartition
    deltas: dict


def hilbert_decomposition(grid: GridSpec, S: int = DEFAULT_S, nu: int = DEFAULT_NU,
                          radius: Optional[float] = None, v_max: Optional[int] = None) -> HilbertDecomposition:
    """Build zeta, K_H, psi, Psi, Psi_0, D_0 and every representable Delta_k on ``grid``.

    The default cutoff radius is 1/S so that the low-frequency regime of K_H matches
    the band unit of psi and chi.
    """
    radius = radius if radius is not None else 1.0 / S
    zeta = make_zeta(radius, grid)
    K_H = make_truncated_hilbert(zeta)
    psi = make_psi(nu, grid, S)
    if v_max is None:
        v_max = 1
        while v_max + 1 <= grid.m - 2 and 2 ** (v_max + 2) * S <= grid.L // 2:
            v_max += 1
    Psi = build_big_psi(psi, v_max)
    Psi0 = build_psi0(Psi)
    D0, c = build_D0(K_H, Psi0)
    chi = make_chi_partition(grid, S)
    return HilbertDecomposition(zeta, K_H, psi, Psi, Psi0, D0, c, chi, delta_family(D0, chi))
