"""Periodized sampled signals on the unit torus and the basic operators on them.

Conventions used throughout the package:

* The domain is ``[0, 1)`` with periodic boundary, sampled at ``L = 2**m`` points
  ``x_n = n * h`` with ``h = 1 / L``.
* Frequencies are integer bins ``k`` in ``[-L/2, L/2)`` (cycles per unit length).
* The spectrum of a signal is the vector of Fourier coefficients
  ``c_k = h * sum_n f(x_n) exp(-2 pi i k x_n)``, stored in numpy FFT order.
  With this normalization a kernel's symbol and a signal's spectrum are the
  same object and ``convolve`` is a plain pointwise product.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

TWO_PI = 2.0 * np.pi


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    m: int

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or self.m < 1:
            raise ValueError(f"grid exponent must be a positive integer, got {self.m!r}")

    @property
    def L(self) -> int:
        return 1 << int(self.m)

    @property
    def h(self) -> float:
        return 1.0 / self.L

    @property
    def x(self) -> np.ndarray:
        """Sample positions in [0, 1)."""
        return np.arange(self.L) * self.h

    @property
    def y(self) -> np.ndarray:
        """Signed sample positions in [-1/2, 1/2), i.e. distance to the origin on the torus."""
        n = np.arange(self.L)
        return np.where(n < self.L // 2, n, n - self.L) * self.h

    @property
    def freqs(self) -> np.ndarray:
        """Integer frequency bins in FFT order."""
        return np.fft.fftfreq(self.L, d=1.0 / self.L)

    def bin_index(self, k) -> np.ndarray:
        """Array position of frequency bin(s) ``k`` (reduced mod L)."""
        return np.mod(np.asarray(k, dtype=np.int64), self.L)


def _check_same(a: GridSpec, b: GridSpec):
    if a != b:
        raise GridMismatchError(f"grid m={a.m} does not match grid m={b.m}")


@dataclass(frozen=True, eq=False)
class Signal:
    grid: GridSpec
    samples: np.ndarray
    _spectrum: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.L,):
            raise ValueError(f"expected {self.grid.L} samples, got shape {s.shape}")
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_spectrum(cls, grid: GridSpec, spectrum) -> "Signal":
        spec = np.asarray(spectrum, dtype=complex)
        return cls(grid, np.fft.ifft(spec) * grid.L, spec)

    @classmethod
    def from_function(cls, grid: GridSpec, fn: Callable[[np.ndarray], np.ndarray]) -> "Signal":
        return cls(grid, fn(grid.x))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Signal":
        return cls(grid, np.zeros(grid.L, dtype=complex))

    @classmethod
    def exponential(cls, grid: GridSpec, k: int) -> "Signal":
        """e_k(x) = exp(2 pi i k x)."""
        return cls(grid, np.exp(TWO_PI * 1j * k * grid.x))

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            object.__setattr__(self, "_spectrum", np.fft.fft(self.samples) * self.grid.h)
        return self._spectrum

    def check_spectrum(self, rtol: float = 1e-12) -> bool:
        fresh = np.fft.fft(self.samples) * self.grid.h
        scale = max(np.abs(fresh).max(), 1e-300)
        return bool(np.abs(fresh - self.spectrum).max() <= rtol * scale)

    def __add__(self, other: "Signal") -> "Signal":
        _check_same(self.grid, other.grid)
        return Signal(self.grid, self.samples + other.samples)

    def __sub__(self, other: "Signal") -> "Signal":
        _check_same(self.grid, other.grid)
        return Signal(self.grid, self.samples - other.samples)

    def __mul__(self, c) -> "Signal":
        if isinstance(c, Signal):
            _check_same(self.grid, c.grid)
            return Signal(self.grid, self.samples * c.samples)
        return Signal(self.grid, self.samples * c)

    __rmul__ = __mul__

    def __neg__(self) -> "Signal":
        return Signal(self.grid, -self.samples)

    def __abs__(self) -> "Signal":
        return Signal(self.grid, np.abs(self.samples))

    def conj(self) -> "Signal":
        return Signal(self.grid, np.conj(self.samples))


@dataclass(frozen=True, eq=False)
class MeasurableSet:
    grid: GridSpec
    indicator: np.ndarray

    def __post_init__(self):
        ind = np.asarray(self.indicator, dtype=bool)
        if ind.shape != (self.grid.L,):
            raise ValueError(f"expected indicator of length {self.grid.L}, got {ind.shape}")
        object.__setattr__(self, "indicator", ind)

    @classmethod
    def interval(cls, grid: GridSpec, a: float, b: float) -> "MeasurableSet":
        x = grid.x
        return cls(grid, (x >= a - 1e-15) & (x < b - 1e-15))

    @classmethod
    def empty(cls, grid: GridSpec) -> "MeasurableSet":
        return cls(grid, np.zeros(grid.L, dtype=bool))

    @classmethod
    def full(cls, grid: GridSpec) -> "MeasurableSet":
        return cls(grid, np.ones(grid.L, dtype=bool))

    @property
    def measure(self) -> float:
        return float(np.count_nonzero(self.indicator)) * self.grid.h

    def to_signal(self) -> Signal:
        return Signal(self.grid, self.indicator.astype(complex))

    def __and__(self, other: "MeasurableSet") -> "MeasurableSet":
        _check_same(self.grid, other.grid)
        return MeasurableSet(self.grid, self.indicator & other.indicator)

    def __or__(self, other: "MeasurableSet") -> "MeasurableSet":
        _check_same(self.grid, other.grid)
        return MeasurableSet(self.grid, self.indicator | other.indicator)


@dataclass(frozen=True, eq=False)
class Kernel:
    """Convolution kernel: spatial samples, symbol (Fourier coefficients) and metadata.

    ``profile``, when present, is the continuous symbol ``eta -> K^(eta)`` for real
    ``eta`` in bins; dilations use it instead of spectral interpolation.
    """

    grid: GridSpec
    spatial: np.ndarray
    symbol: np.ndarray
    meta: dict = field(default_factory=dict)
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    @classmethod
    def from_symbol(cls, grid: GridSpec, symbol, meta=None, profile=None) -> "Kernel":
        sym = np.asarray(symbol, dtype=complex)
        return cls(grid, np.fft.ifft(sym) * grid.L, sym, dict(meta or {}), profile)

    @classmethod
    def from_spatial(cls, grid: GridSpec, spatial, meta=None, profile=None) -> "Kernel":
        sp = np.asarray(spatial, dtype=complex)
        return cls(grid, sp, np.fft.fft(sp) * grid.h, dict(meta or {}), profile)

    @classmethod
    def delta(cls, grid: GridSpec) -> "Kernel":
        sp = np.zeros(grid.L, dtype=complex)
        sp[0] = 1.0 / grid.h
        return cls.from_spatial(grid, sp, {"name": "delta"})

    @property
    def name(self) -> str:
        return self.meta.get("name", "kernel")

    def symbol_at(self, eta) -> np.ndarray:
        """Continuous symbol at real frequencies ``eta`` (bins).

        Falls back to the transform of the samples on the centered period,
        zeroed beyond Nyquist.
        """
        eta = np.asarray(eta, dtype=float)
        if self.profile is not None:
            return np.asarray(self.profile(eta), dtype=complex)
        return dtft(self.grid, self.spatial, eta)

    def scaled(self, c, name: Optional[str] = None) -> "Kernel":
        meta = dict(self.meta)
        if name:
            meta["name"] = name
        prof = None
        if self.profile is not None:
            base = self.profile
            prof = lambda eta: c * base(eta)  # noqa: E731
        return Kernel(self.grid, self.spatial * c, self.symbol * c, meta, prof)

    def __add__(self, other: "Kernel") -> "Kernel":
        _check_same(self.grid, other.grid)
        prof = None
        if self.profile is not None and other.profile is not None:
            a, b = self.profile, other.profile
            prof = lambda eta: a(eta) + b(eta)  # noqa: E731
        return Kernel(self.grid, self.spatial + other.spatial, self.symbol + other.symbol,
                      {"name": f"{self.name}+{other.name}"}, prof)

    def __sub__(self, other: "Kernel") -> "Kernel":
        return self + other.scaled(-1.0, other.name)

    def check_symbol(self, rtol: float = 1e-10) -> bool:
        fresh = np.fft.fft(self.spatial) * self.grid.h
        scale = max(np.abs(fresh).max(), 1e-300)
        return bool(np.abs(fresh - self.symbol).max() <= rtol * scale)

    def out_of_support_ratio(self) -> float:
        """Symbol mass outside ``meta['claimed_support']`` relative to total mass."""
        sup = self.meta.get("claimed_support")
        total = np.abs(self.symbol).sum()
        if sup is None or total == 0:
            return 0.0
        k = self.grid.freqs
        inside = np.zeros(self.grid.L, dtype=bool)
        for lo, hi in _as_bands(sup):
            inside |= (k >= lo) & (k <= hi)
        return float(np.abs(self.symbol[~inside]).sum() / total)


def _as_bands(sup):
    if len(sup) == 2 and np.isscalar(sup[0]):
        return [tuple(sup)]
    return [tuple(b) for b in sup]


def dtft(grid: GridSpec, samples: np.ndarray, eta, chunk: int = 512) -> np.ndarray:
    """h * sum_n f(y_n) exp(-2 pi i eta y_n) over the centered period, 0 for |eta| > L/2."""
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    out = np.zeros(eta.shape, dtype=complex)
    y = grid.y
    flat_eta = eta.ravel()
    flat_out = out.ravel()
    for start in range(0, flat_eta.size, chunk):
        e = flat_eta[start:start + chunk]
        flat_out[start:start + chunk] = grid.h * np.exp(-TWO_PI * 1j * np.outer(e, y)) @ samples
    flat_out[np.abs(flat_eta) > grid.L / 2] = 0.0
    return flat_out.reshape(eta.shape)


def _is_grid_multiple(grid: GridSpec, y: float) -> Optional[int]:
    steps = y * grid.L
    r = round(steps)
    return int(r) if abs(steps - r) < 1e-9 else None


def dilate(f: Signal, s: float, p: float = 2.0) -> Signal:
    """s^(-1/p) f(x/s), with f viewed as a function on the centered period.

    The new spectrum is ``s^(1-1/p) f^(s k)``, where f^ at non-integer frequencies is
    the band-limited (spectral) interpolation of the samples.
    """
    if not s > 0:
        raise ValueError(f"dilation factor must be positive, got {s}")
    if s == 1:
        return Signal(f.grid, f.samples.copy())
    factor = s ** (1.0 - (0.0 if np.isinf(p) else 1.0 / p))
    spec = factor * dtft(f.grid, f.samples, s * f.grid.freqs)
    return Signal.from_spectrum(f.grid, spec)


def modulate(f: Signal, xi: float) -> Signal:
    """exp(i x xi) f(x); ``xi`` is an angular frequency."""
    if xi == 0:
        return Signal(f.grid, f.samples.copy())
    return Signal(f.grid, f.samples * np.exp(1j * xi * f.grid.x))


def translate(f: Signal, y: float) -> Signal:
    """f(x - y) on the torus; exact roll for grid-multiple shifts."""
    y = float(y) % 1.0
    n = _is_grid_multiple(f.grid, y)
    if n is not None:
        return Signal(f.grid, np.roll(f.samples, n))
    phase = np.exp(-TWO_PI * 1j * f.grid.freqs * y)
    return Signal.from_spectrum(f.grid, f.spectrum * phase)


def convolve(f: Signal, K: Kernel) -> Signal:
    _check_same(f.grid, K.grid)
    return Signal.from_spectrum(f.grid, f.spectrum * K.symbol)


def inner_product(f: Signal, g: Signal) -> complex:
    _check_same(f.grid, g.grid)
    return complex(f.grid.h * np.vdot(g.samples, f.samples))


def lp_norm(f: Signal, p: float = 2.0) -> float:
    if p < 1:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    a = np.abs(f.samples)
    if np.isinf(p):
        return float(a.max())
    return float((f.grid.h * np.sum(a ** p)) ** (1.0 / p))


def maximal_radii(grid: GridSpec) -> list[int]:
    """Half-widths (in samples) of the centered windows used by the maximal function."""
    radii = [0]
    r = 1
    while r < grid.L // 2:
        radii.append(r)
        r *= 2
    radii.append(grid.L // 2)
    return radii


def hardy_littlewood_maximal(f: Signal) -> Signal:
    """Centered maximal function over windows of half-width 0, 1, 2, 4, ... samples.

    The widest window is the whole torus.
    """
    a = np.abs(f.samples)
    L = f.grid.L
    ext = np.concatenate([a, a, a])
    csum = np.concatenate([[0.0], np.cumsum(ext)])
    idx = np.arange(L) + L
    best = a.copy()
    for r in maximal_radii(f.grid)[1:]:
        if 2 * r + 1 >= L:
            avg = np.full(L, a.mean())
        else:
            avg = (csum[idx + r + 1] - csum[idx - r]) / (2 * r + 1)
        np.maximum(best, avg, out=best)
    return Signal(f.grid, best)
