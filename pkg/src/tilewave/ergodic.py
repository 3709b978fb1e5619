"""Rotation flows, truncated modulated Hilbert averages, Wiener-Wintner averages and the discrete series.

Observables are closed-form callables on the d-torus so the flow can be sampled off-grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.special import sici

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class FlowConfig:
    """T_t x = x + t alpha (mod 1) componentwise on the d-torus."""

    alpha: tuple = (GOLDEN,)
    kind: str = "rotation"

    def __post_init__(self):
        if self.kind != "rotation":
            raise ValueError(f"unsupported flow kind {self.kind}")
        object.__setattr__(self, "alpha", tuple(float(a) for a in np.atleast_1d(self.alpha)))

    @property
    def d(self) -> int:
        return len(self.alpha)

    def apply(self, x, t) -> np.ndarray:
        """Points T_t x for an array of times t; result shape t.shape + (d,)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.asarray(t, dtype=float)
        return np.mod(x + t[..., None] * np.asarray(self.alpha), 1.0)

    def step(self, x, k) -> np.ndarray:
        """The time-one map iterated k times."""
        return self.apply(x, np.asarray(k, dtype=float))


class Observable:
    """Bounded function on the d-torus; ``rate`` bounds its angular frequency along a flow."""

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def rate(self, flow: FlowConfig) -> float:
        return 0.0


@dataclass
class TrigPolynomial(Observable):
    """sum_m c_m exp(2 pi i m.x) over integer modes m."""

    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = {tuple(np.atleast_1d(k).astype(int)): complex(v) for k, v in self.coeffs.items()}

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[:-1], dtype=complex)
        for m, c in self.coeffs.items():
            out += c * np.exp(2j * np.pi * (pts @ np.asarray(m, dtype=float)))
        return out

    def rate(self, flow: FlowConfig) -> float:
        a = np.asarray(flow.alpha)
        return max((abs(2 * np.pi * float(np.dot(m, a))) for m in self.coeffs), default=0.0)

    def betas(self, flow: FlowConfig, theta: float) -> dict:
        a = np.asarray(flow.alpha)
        return {m: theta + 2 * np.pi * float(np.dot(m, a)) for m in self.coeffs}

    def conj(self) -> "TrigPolynomial":
        return TrigPolynomial({tuple(-np.asarray(m)): np.conj(c) for m, c in self.coeffs.items()})


@dataclass
class Indicator(Observable):
    """1 on the box prod [lo_i, hi_i) (mod 1)."""

    lo: tuple
    hi: tuple

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        inside = np.mod(pts - lo, 1.0) < np.mod(hi - lo, 1.0)
        return inside.all(axis=-1).astype(complex)

    @property
    def measure(self) -> float:
        return float(np.prod(np.mod(np.asarray(self.hi) - np.asarray(self.lo), 1.0)))


def exponential(k: int = 1, d: int = 1) -> TrigPolynomial:
    m = [0] * d
    m[0] = k
    return TrigPolynomial({tuple(m): 1.0})


def constant(c: complex = 1.0, d: int = 1) -> TrigPolynomial:
    return TrigPolynomial({tuple([0] * d): c})


@dataclass(frozen=True)
class TruncationLadder:
    depth: int
    q: int = 64

    def __post_init__(self):
        if self.depth < 1 or self.q < 2:
            raise ValueError("ladder needs depth >= 1 and q >= 2")

    @property
    def s(self) -> np.ndarray:
        return 2.0 ** (-np.arange(1, self.depth + 1, dtype=float))


# ---------------------------------------------------------------- quadrature

def log_nodes(a: float, b: float, q: int, rate: float):
    """Nodes and weights for int_a^b g(t) dt/t: octave panels in u = ln t, subdivided so no panel spans
    more than about half a period of a phase with angular rate ``rate``; q Gauss nodes per panel."""
    x, w = np.polynomial.legendre.leggauss(q)
    n_oct = max(1, int(np.ceil(np.log2(b / a) - 1e-12)))
    edges = a * 2.0 ** np.arange(n_oct + 1, dtype=float)
    edges[-1] = b
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        panels = max(1, int(np.ceil(rate * (hi - lo) / np.pi)))
        u = np.linspace(np.log(lo), np.log(hi), panels + 1)
        half = 0.5 * np.diff(u)
        mid = 0.5 * (u[:-1] + u[1:])
        nodes.append(np.exp((mid[:, None] + half[:, None] * x[None, :]).ravel()))
        weights.append((half[:, None] * w[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def truncated_modulated_hilbert(f: Observable, flow: FlowConfig, x, theta: float, s: float,
                                q: int = 64) -> complex:
    """int_(s < |t| < 1/s) exp(i theta t) f(T_t x) dt / t with t and -t paired before summation."""
    if not 0 < s < 1:
        raise ValueError("truncation parameter must lie in (0, 1)")
    rate = abs(theta) + f.rate(flow)
    t, w = log_nodes(s, 1.0 / s, q, rate if rate > 0 else 1.0)
    plus = np.exp(1j * theta * t) * f(flow.apply(x, t))
    minus = np.exp(-1j * theta * t) * f(flow.apply(x, -t))
    return complex(np.sum(w * (plus - minus)))


def hilbert_closed_form(f: TrigPolynomial, flow: FlowConfig, x, theta: float, s: Optional[float] = None) -> complex:
    """Per mode: exp(2 pi i m.x) 2i [Si(beta/s) - Si(beta s)], or i pi sgn(beta) when s is None."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    total = 0j
    for m, beta in f.betas(flow, theta).items():
        phase = np.exp(2j * np.pi * float(np.dot(m, x)))
        if s is None:
            val = 1j * np.pi * np.sign(beta)
        else:
            val = 2j * (sici(beta / s)[0] - sici(beta * s)[0])
        total += f.coeffs[m] * phase * val
    return complex(total)


def ww_average(f: Observable, flow: FlowConfig, x, theta: float, s: float, q: int = 64) -> complex:
    """s^-1 int_(-s)^s exp(i theta t) f(T_t x) dt on uniform Gauss panels."""
    if s <= 0:
        raise ValueError("s must be positive")
    rate = abs(theta) + f.rate(flow)
    panels = max(1, int(np.ceil(2 * s * rate / np.pi)))
    xg, wg = np.polynomial.legendre.leggauss(q)
    edges = np.linspace(-s, s, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    t = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    return complex(np.sum(w * np.exp(1j * theta * t) * f(flow.apply(x, t))) / s)


def ww_closed_form(f: TrigPolynomial, flow: FlowConfig, x, theta: float, s: float) -> complex:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    total = 0j
    for m, beta in f.betas(flow, theta).items():
        phase = np.exp(2j * np.pi * float(np.dot(m, x)))
        total += f.coeffs[m] * phase * (2.0 if beta == 0 else 2 * np.sin(beta * s) / (beta * s))
    return complex(total)


def time_average(f: Observable, flow: FlowConfig, x, T: float, n: int = 200000) -> complex:
    """(1/T) int_0^T f(T_t x) dt by the midpoint rule."""
    t = (np.arange(n) + 0.5) * T / n
    return complex(np.mean(f(flow.apply(x, t))))


# ---------------------------------------------------------------- discrete series

def discrete_modulated_series(f: Observable, flow: FlowConfig, x, theta: float, N: int) -> complex:
    """sum_(0 < |k| < N) exp(i theta k) / k f(T^k x), with k and -k paired."""
    if N < 2:
        raise ValueError("N must be at least 2")
    k = np.arange(1, N, dtype=float)
    plus = np.exp(1j * theta * k) * f(flow.step(x, k))
    minus = np.exp(-1j * theta * k) * f(flow.step(x, -k))
    return complex(np.sum((plus - minus) / k))


def sawtooth_partial_sum(beta: float, n: int) -> float:
    """sum_(k=1)^n sin(k beta) / k from the integrated Dirichlet kernel.

    sum cos(kt) = D_n(t) - 1/2 with D_n(t) = sin((n + 1/2) t) / (2 sin(t/2)); the 1/t part of
    1/(2 sin(t/2)) integrates to Si, the smooth remainder by oscillatory quadrature.
    """
    b = (beta + np.pi) % (2 * np.pi) - np.pi
    if b == 0:
        return 0.0
    sign = np.sign(b)
    b = abs(b)
    w = n + 0.5
    head = sici(w * b)[0]

    def rem(t):
        if t < 1e-4:
            return t / 24.0 + 7.0 * t ** 3 / 5760.0
        return 1.0 / (2.0 * np.sin(t / 2.0)) - 1.0 / t

    tail, _ = integrate.quad(rem, 0.0, b, weight="sin", wvar=w, epsabs=1e-14, epsrel=1e-13, limit=500)
    return float(sign * (head + tail - b / 2.0))


def series_closed_form(f: TrigPolynomial, flow: FlowConfig, x, theta: float, N: int) -> complex:
    """Per mode: exp(2 pi i m.x) 2i sum_(k<N) sin(beta k)/k via the sawtooth partial sums."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    total = 0j
    for m, beta in f.betas(flow, theta).items():
        phase = np.exp(2j * np.pi * float(np.dot(m, x)))
        total += f.coeffs[m] * phase * 2j * sawtooth_partial_sum(beta, N - 1)
    return complex(total)


# ---------------------------------------------------------------- convergence probe

@dataclass
class ProbeReport:
    rows: list
    block_max: dict
    resonant: list

    def decreasing(self, x=None, start: int = 0) -> bool:
        keys = [x] if x is not None else list(self.block_max)
        for key in keys:
            b = np.asarray(self.block_max[key][start:])
            if not np.all(np.diff(b) < 0):
                return False
        return True


def convergence_probe(f: Observable, flow: FlowConfig, x_grid: Sequence, theta_grid: Sequence,
                      ladder: TruncationLadder, resonance_scale: float = 0.5) -> ProbeReport:
    """Successive truncation gaps |v(s_(i+1)) - v(s_i)| and their sup over theta per block.

    A theta is resonant in block i when some mode has |beta| < s_i^resonance_scale; it
    is flagged and left out of that block's sup.  For trigonometric polynomials each row
    also carries the error to the finite-s closed form.
    """
    if ladder.depth < 3:
        raise ValueError("ladder depth must be at least 3")
    s_vals = ladder.s
    rows, block_max, resonant = [], {}, []
    trig = isinstance(f, TrigPolynomial)
    for x in x_grid:
        gaps = np.zeros((len(theta_grid), len(s_vals) - 1))
        mask = np.ones_like(gaps, dtype=bool)
        for a, th in enumerate(theta_grid):
            vals = [truncated_modulated_hilbert(f, flow, x, th, s, ladder.q) for s in s_vals]
            gaps[a] = np.abs(np.diff(vals))
            if trig:
                betas = np.array(list(f.betas(flow, th).values()))
                live = np.array([abs(c) > 0 for c in f.coeffs.values()])
                for i in range(len(s_vals) - 1):
                    if np.any(live & (np.abs(betas) < s_vals[i] ** resonance_scale) & (np.abs(betas) > 0)):
                        mask[a, i] = False
                if not mask[a].all():
                    resonant.append((float(np.atleast_1d(x)[0]), float(th)))
            for i in range(len(s_vals) - 1):
                err = abs(vals[i + 1] - hilbert_closed_form(f, flow, x, th, s_vals[i + 1])) if trig else float("nan")
                rows.append({"x": float(np.atleast_1d(x)[0]), "theta": float(th), "block": i,
                             "gap": float(gaps[a, i]), "closed_form_err": float(err),
                             "resonant": bool(not mask[a, i])})
        key = float(np.atleast_1d(x)[0])
        block_max[key] = [float(np.max(gaps[mask[:, i], i])) if mask[:, i].any() else 0.0
                          for i in range(len(s_vals) - 1)]
    return ProbeReport(rows, block_max, resonant)
