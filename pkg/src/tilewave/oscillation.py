"""Oscillation functionals, modulated suprema, and the density-restricted operators.

Suprema over continuous parameters become maxima over finite grids: modulations
range over integer frequency bins and scales over the representable dilations.
An empty supremum is 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .grid import GridSpec, Kernel, MeasurableSet, Signal
from .kernels import smooth_step

LOWPASS_EPS = 1.0 / 8.0


@dataclass(frozen=True)
class OscSpec:
    """Dilation denominator ``n`` and block boundaries ``k_1 < k_2 < ...``.

    Block ``j`` contains the scale indices ``k_j <= l < k_{j+1}``, clipped to
    ``[l_min, l_max]`` when those are given.
    """

    n: int
    blocks: tuple
    l_min: Optional[int] = None
    l_max: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        b = tuple(int(v) for v in self.blocks)
        if len(b) < 2:
            raise ValueError("need at least two block boundaries")
        for a, c in zip(b, b[1:]):
            if c < a + self.n:
                raise ValueError(f"block boundaries {a}, {c} violate k_(j+1) >= k_j + n")
        object.__setattr__(self, "blocks", b)

    def block_ranges(self) -> list[list[int]]:
        out = []
        for a, c in zip(self.blocks, self.blocks[1:]):
            lo = a if self.l_min is None else max(a, self.l_min)
            hi = c - 1 if self.l_max is None else min(c - 1, self.l_max)
            out.append(list(range(lo, hi + 1)))
        return out

    def scales(self) -> list[int]:
        return sorted({l for r in self.block_ranges() for l in r})


def _block_sup(values: np.ndarray, index: dict, ls: Sequence[int]) -> np.ndarray:
    """Pointwise max over pairs l < l' in ``ls`` of |values[l] - values[l']|."""
    L = values.shape[-1]
    best = np.zeros(L)
    for a in range(len(ls)):
        va = values[index[ls[a]]]
        for b in range(a + 1, len(ls)):
            np.maximum(best, np.abs(va - values[index[ls[b]]]), out=best)
    return best


def dilated_symbols(K: Kernel, scales: Iterable[float]) -> np.ndarray:
    """Rows K^(s xi) over the grid bins, one row per dilation factor s (Dil^(1) convention)."""
    k = K.grid.freqs
    return np.array([K.symbol_at(s * k) for s in scales])


def osc_blocks(K: Kernel, f: Signal, spec: OscSpec) -> np.ndarray:
    """Per-block squared oscillation, shape (n_blocks, L)."""
    ranges = spec.block_ranges()
    if not any(len(r) for r in ranges):
        raise ValueError("every block is empty after clipping")
    ls = spec.scales()
    index = {l: i for i, l in enumerate(ls)}
    syms = dilated_symbols(K, [2.0 ** (l / spec.n) for l in ls])
    conv = np.fft.ifft(syms * f.spectrum[None, :], axis=1) * f.grid.L
    return np.array([_block_sup(conv, index, r) ** 2 for r in ranges])


def osc_kernel(K: Kernel, f: Signal, spec: OscSpec) -> Signal:
    """[sum_j sup_{k_j <= l < l' < k_(j+1)} |(Dil_{2^(l/n)} K - Dil_{2^(l'/n)} K) * f|^2]^(1/2)."""
    return Signal(f.grid, np.sqrt(osc_blocks(K, f, spec).sum(axis=0)))


def osc_symbol_oracle(K: Kernel, k: int, spec: OscSpec) -> float:
    """Value of osc_kernel on the exponential e_k, computed from the symbol alone."""
    total = 0.0
    for r in spec.block_ranges():
        vals = [complex(K.symbol_at(np.array([2.0 ** (l / spec.n) * k]))[0]) for l in r]
        best = 0.0
        for a in range(len(vals)):
            for b in range(a + 1, len(vals)):
                best = max(best, abs(vals[a] - vals[b]))
        total += best ** 2
    return float(np.sqrt(total))


def modulate_bins(f: Signal, N: int) -> Signal:
    """exp(2 pi i N x) f(x) for an integer bin N (an exact circular shift of the spectrum)."""
    return Signal.from_spectrum(f.grid, np.roll(f.spectrum, int(N)))


def _check_mod_grid(mod_grid):
    mod = [int(v) for v in mod_grid]
    if not mod:
        raise ValueError("empty modulation grid")
    return mod


def sup_mod_osc(K: Kernel, f: Signal, spec: OscSpec, mod_grid) -> Signal:
    """Pointwise max over N in ``mod_grid`` of osc_kernel(K, Mod_N f, spec)."""
    mod = _check_mod_grid(mod_grid)
    ranges = spec.block_ranges()
    ls = spec.scales()
    index = {l: i for i, l in enumerate(ls)}
    syms = dilated_symbols(K, [2.0 ** (l / spec.n) for l in ls])
    best = np.zeros(f.grid.L)
    for N in mod:
        spec_N = np.roll(f.spectrum, N)
        conv = np.fft.ifft(syms * spec_N[None, :], axis=1) * f.grid.L
        val = np.sqrt(sum(_block_sup(conv, index, r) ** 2 for r in ranges))
        np.maximum(best, val, out=best)
    return Signal(f.grid, best)


def carleson_maximal(K: Kernel, f: Signal, mod_grid) -> Signal:
    """Pointwise max over N of |K * Mod_N f|."""
    mod = _check_mod_grid(mod_grid)
    specs = np.array([np.roll(f.spectrum, N) for N in mod])
    conv = np.fft.ifft(specs * K.symbol[None, :], axis=1) * f.grid.L
    return Signal(f.grid, np.abs(conv).max(axis=0))


def psi_scales(psi: Kernel) -> list[int]:
    """Dyadic j for which the band of Dil^(1)_{2^j} psi meets the nonzero bins of the grid."""
    S = psi.meta["S"]
    L = psi.grid.L
    js = []
    for j in range(-4 * psi.grid.m, 4 * psi.grid.m):
        lo, hi = 2.0 ** (-j) * S / 2, 2.0 ** (-j) * 2 * S
        if hi >= 1 and lo < L / 2:
            js.append(j)
    return js


def square_function_sup_mod(psi: Kernel, f: Signal, mod_grid, js=None) -> Signal:
    """Pointwise max over N of [sum_j |Dil^(1)_{2^j} psi * Mod_N f|^2]^(1/2)."""
    mod = _check_mod_grid(mod_grid)
    js = psi_scales(psi) if js is None else list(js)
    syms = dilated_symbols(psi, [2.0 ** j for j in js])
    best = np.zeros(f.grid.L)
    for N in mod:
        conv = np.fft.ifft(syms * np.roll(f.spectrum, N)[None, :], axis=1) * f.grid.L
        np.maximum(best, np.sqrt((np.abs(conv) ** 2).sum(axis=0)), out=best)
    return Signal(f.grid, best)


# ---------------------------------------------------------------- smooth low-pass oscillation

def lowpass_profile(t, eps: float = LOWPASS_EPS) -> np.ndarray:
    """zeta^ equal to 1 on [-1, 1] and supported in [-1 - eps, 1 + eps]."""
    t = np.abs(np.asarray(t, dtype=float))
    return 1.0 - smooth_step((t - 1.0) / eps)


def lowpass_kernel(grid: GridSpec, eps: float = LOWPASS_EPS) -> Kernel:
    prof = lambda eta: lowpass_profile(eta, eps).astype(complex)  # noqa: E731
    return Kernel.from_symbol(grid, prof(grid.freqs), {"name": "lowpass", "eps": eps}, prof)


def smooth_spec(grid: GridSpec, blocks: Sequence[int]) -> OscSpec:
    """OscSpec for the dyadic-length oscillation: block boundaries are log2 |I| values in [-m, 0]."""
    return OscSpec(1, tuple(blocks), l_min=-grid.m, l_max=0)


def _lowpass_stack(f: Signal, ls: Sequence[int], eps: float) -> np.ndarray:
    k = f.grid.freqs
    syms = np.array([lowpass_profile(2.0 ** l * k, eps) for l in ls])
    return np.fft.ifft(syms * f.spectrum[None, :], axis=1) * f.grid.L


def osc_smooth_blocks(f: Signal, spec: OscSpec, eps: float = LOWPASS_EPS) -> np.ndarray:
    """Per-block squared values of sup_{2^k_j <= |I| <= |I'| <= 2^k_(j+1)} |zeta_|I| * f - zeta_|I'| * f|."""
    out = []
    for a, c in zip(spec.blocks, spec.blocks[1:]):
        lo = a if spec.l_min is None else max(a, spec.l_min)
        hi = c if spec.l_max is None else min(c, spec.l_max)
        ls = list(range(lo, hi + 1))
        if len(ls) < 2:
            out.append(np.zeros(f.grid.L))
            continue
        stack = _lowpass_stack(f, ls, eps)
        out.append(_block_sup(stack, {l: i for i, l in enumerate(ls)}, ls) ** 2)
    return np.array(out)


def osc_smooth(f: Signal, spec: OscSpec, eps: float = LOWPASS_EPS) -> Signal:
    return Signal(f.grid, np.sqrt(osc_smooth_blocks(f, spec, eps).sum(axis=0)))


# ---------------------------------------------------------------- density-restricted operators

@dataclass(frozen=True, eq=False)
class DensePartition:
    """Dyadic intervals J (``scale`` = -log2|J|, ``index``) with subsets E(J) of J.

    ``J_list`` entries are (scale, index) pairs; ``E`` maps each pair to a MeasurableSet.
    """

    grid: GridSpec
    J_list: tuple
    E: dict
    delta: float

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        cover = np.zeros(self.grid.L, dtype=int)
        for J in self.J_list:
            lo, hi = interval_samples(self.grid, J)
            cover[lo:hi] += 1
            e = self.E.get(J)
            if e is not None:
                outside = e.indicator.copy()
                outside[lo:hi] = False
                if outside.any():
                    raise ValueError(f"E(J) is not contained in J={J}")
                if e.measure > self.delta * 2.0 ** (-J[0]) + 1e-15:
                    raise ValueError(f"|E(J)| exceeds delta |J| for J={J}")
        if not np.all(cover == 1):
            raise ValueError("J_list is not a partition of the torus")

    def union(self) -> MeasurableSet:
        ind = np.zeros(self.grid.L, dtype=bool)
        for e in self.E.values():
            ind |= e.indicator
        return MeasurableSet(self.grid, ind)


def interval_samples(grid: GridSpec, J) -> tuple[int, int]:
    """Sample index range [lo, hi) of the dyadic interval J = (scale, index)."""
    scale, idx = J
    width = grid.L >> scale
    return idx * width, (idx + 1) * width


def random_partition(grid: GridSpec, delta: float, scale: int, rng: np.random.Generator) -> DensePartition:
    """J at one dyadic scale; E(J) a random floor(delta |J| / h)-subset of J's samples."""
    width = grid.L >> scale
    count = int(np.floor(delta * width + 1e-9))
    J_list = tuple((scale, i) for i in range(1 << scale))
    E = {}
    for J in J_list:
        lo, _ = interval_samples(grid, J)
        ind = np.zeros(grid.L, dtype=bool)
        ind[lo + rng.choice(width, size=count, replace=False)] = True
        E[J] = MeasurableSet(grid, ind)
    return DensePartition(grid, J_list, E, delta)


def _ancestors(J) -> list:
    """(scale, index) of J and every dyadic interval containing it, finest first."""
    scale, idx = J
    return [(s, idx >> (scale - s)) for s in range(scale, -1, -1)]


def _center_sample(grid: GridSpec, I) -> float:
    lo, hi = interval_samples(grid, I)
    return 0.5 * (lo + hi)


def _sample_at(grid: GridSpec, values_spectrum: np.ndarray, pos: float) -> complex:
    """Band-limited value of a signal (given by its spectrum) at sample position ``pos``."""
    return complex(np.sum(values_spectrum * np.exp(2j * np.pi * grid.freqs * pos / grid.L)))


def osc_dense(f: Signal, spec: OscSpec, part: DensePartition, eps: float = LOWPASS_EPS) -> Signal:
    """Oscillation of the averages <zeta_I, f> along the dyadic ancestors I of each J, on E(J).

    ``spec`` blocks are log2 |I| boundaries; the sup runs over J within I within I'
    with 2^k_j <= |I| <= |I'| <= 2^k_(j+1).
    """
    grid = f.grid
    out = np.zeros(grid.L)
    k = grid.freqs
    cache = {}
    for J in part.J_list:
        E = part.E.get(J)
        if E is None or not E.indicator.any():
            continue
        anc = _ancestors(J)
        vals = {}
        for I in anc:
            l = -I[0]
            if l not in cache:
                cache[l] = f.spectrum * lowpass_profile(2.0 ** l * k, eps)
            vals[l] = _sample_at(grid, cache[l], _center_sample(grid, I))
        total = 0.0
        for a, c in zip(spec.blocks, spec.blocks[1:]):
            ls = [l for l in sorted(vals) if a <= l <= c]
            best = 0.0
            for i in range(len(ls)):
                for j in range(i + 1, len(ls)):
                    best = max(best, abs(vals[ls[i]] - vals[ls[j]]))
            total += best ** 2
        out[E.indicator] = np.sqrt(total)
    return Signal(grid, out)


def decay_bump_kernel(grid: GridSpec, length: float, nu: int = 8) -> np.ndarray:
    """Samples of chi_I centered at 0: |I|^-1 (1 + |y|/|I|)^-nu on the torus."""
    return (1.0 + np.abs(grid.y) / length) ** (-float(nu)) / length


def chi_averages(f: Signal, scale: int, nu: int = 8) -> np.ndarray:
    """<|f|, chi_I> for every dyadic I at ``scale`` (indexed by position)."""
    grid = f.grid
    ker = decay_bump_kernel(grid, 2.0 ** (-scale), nu)
    conv = np.real(np.fft.ifft(np.fft.fft(np.abs(f.samples)) * np.fft.fft(ker))) * grid.h
    width = grid.L >> scale
    centers = np.arange(1 << scale) * width + width / 2.0
    if width == 1:
        return conv
    lo = np.floor(centers).astype(int) % grid.L
    # centers of intervals longer than one sample fall between samples
    return 0.5 * (conv[lo] + conv[(lo - 1) % grid.L])


def maximal_dense(f: Signal, part: DensePartition, nu: int = 8) -> Signal:
    """sum_J 1_E(J) sup_{J within I} <|f|, chi_I>."""
    grid = f.grid
    out = np.zeros(grid.L)
    cache = {}
    for J in part.J_list:
        E = part.E.get(J)
        if E is None or not E.indicator.any():
            continue
        best = 0.0
        for s, idx in _ancestors(J):
            if s not in cache:
                cache[s] = chi_averages(f, s, nu)
            best = max(best, float(cache[s][idx]))
        out[E.indicator] = best
    return Signal(grid, out)
