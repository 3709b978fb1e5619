"""Dyadic tiles on the torus, wave packets, tile oscillation, density, size and the tree machinery.

Conventions: a tile at scale ``j`` (0 <= j <= m) has a spatial interval of length
2^-j (index ``i``) and a frequency interval of 2^j integer bins (index ``n``), with
frequencies taken as residues in [0, L).  Tile ids are ``j*L + n*2^j + i``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy import integrate, sparse

from .grid import GridSpec, Kernel, MeasurableSet, Signal, hardy_littlewood_maximal
from .kernels import bump
from .oscillation import OscSpec

DEFAULT_NU = 8


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """[index * 2^scale, (index + 1) * 2^scale)."""

    scale: int
    index: int

    @property
    def length(self) -> float:
        return 2.0 ** self.scale

    @property
    def lo(self) -> float:
        return self.index * 2.0 ** self.scale

    @property
    def hi(self) -> float:
        return (self.index + 1) * 2.0 ** self.scale

    @property
    def center(self) -> float:
        return (self.index + 0.5) * 2.0 ** self.scale

    def contains(self, other: "DyadicInterval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersects(self, other: "DyadicInterval") -> bool:
        return self.lo < other.hi and other.lo < self.hi


@dataclass(frozen=True, order=True)
class Tile:
    j: int
    i: int
    n: int

    @property
    def I(self) -> DyadicInterval:  # noqa: E743
        return DyadicInterval(-self.j, self.i)

    @property
    def omega(self) -> DyadicInterval:
        return DyadicInterval(self.j, self.n)

    @property
    def omega_minus(self) -> tuple[float, float]:
        w = self.omega
        return w.lo, w.lo + w.length / 2

    @property
    def omega_plus(self) -> tuple[float, float]:
        w = self.omega
        return w.lo + w.length / 2, w.hi

    def as_pair(self) -> list:
        return [[self.I.scale, self.I.index], [self.omega.scale, self.omega.index]]


def tile_less(s: Tile, t: Tile) -> bool:
    """s < t: omega_s contains omega_t and I_s is inside I_t (reflexive)."""
    return s.omega.contains(t.omega) and t.I.contains(s.I)


def rectangles_intersect(s: Tile, t: Tile) -> bool:
    return s.I.intersects(t.I) and s.omega.intersects(t.omega)


def _half_contains(half: tuple, w: DyadicInterval) -> bool:
    return half[0] <= w.lo and w.hi <= half[1]


def in_plus_tree(s: Tile, top: Tile) -> bool:
    """s belongs to the +tree with this top: s is the top or omega_(s+) contains omega_top."""
    return s == top or (top.I.contains(s.I) and _half_contains(s.omega_plus, top.omega))


def in_minus_tree(s: Tile, top: Tile) -> bool:
    return s == top or (top.I.contains(s.I) and _half_contains(s.omega_minus, top.omega))


def generate_universe(grid: GridSpec, restrict: Optional[Callable[[Tile], bool]] = None) -> list[Tile]:
    """Every tile at scales 0..m, in id order, optionally filtered."""
    out = []
    for j in range(grid.m + 1):
        for n in range(grid.L >> j):
            for i in range(1 << j):
                t = Tile(j, i, n)
                if restrict is None or restrict(t):
                    out.append(t)
    return out


# ---------------------------------------------------------------- wave packets

def phi_profile(nu: int = DEFAULT_NU) -> Callable:
    """phi^ = C bump(nu t), supported in [-1/nu, 1/nu], with unit L2 norm on the line."""
    mass, _ = integrate.quad(lambda u: bump(np.array([u]))[0] ** 2, -1, 1, epsabs=1e-13, epsrel=1e-12, limit=200)
    C = np.sqrt(nu / mass)
    return lambda t: C * bump(nu * np.asarray(t, dtype=float))


def make_phi(grid: GridSpec, nu: int = DEFAULT_NU) -> Kernel:
    prof = phi_profile(nu)
    meta = {"name": "phi", "nu": nu, "band": 1.0 / nu, "claimed_support": (-1.0 / nu, 1.0 / nu)}
    return Kernel.from_symbol(grid, prof(grid.freqs).astype(complex), meta, lambda e: prof(e).astype(complex))


class TileSpace:
    """Per-grid cache of packet windows and the analysis/synthesis matrices for every scale."""

    def __init__(self, grid: GridSpec, nu: int = DEFAULT_NU):
        if 1.0 / nu > 0.25:
            raise ValueError("phi band 1/nu too wide: packets must fit inside omega_(s-)")
        self.grid = grid
        self.nu = nu
        self.profile = phi_profile(nu)
        self.total = (grid.m + 1) * grid.L
        self._R, self._ph, self._E = [], [], []
        for j in range(grid.m + 1):
            w = 2 ** j
            c = w / 4.0
            lo, hi = int(np.floor(c - w / nu)), int(np.ceil(c + w / nu))
            R = np.arange(lo, hi + 1)
            d = R - c
            keep = np.abs(d) / w < 1.0 / nu
            R, d = R[keep], d[keep]
            ph = self.profile(d / w)
            nz = ph > 0
            R, d, ph = R[nz], d[nz], ph[nz]
            centers = (np.arange(w) + 0.5) / w
            self._R.append(R)
            self._ph.append(ph)
            self._E.append(np.exp(2j * np.pi * np.outer(d, centers)))

    # ids
    def tile_id(self, t: Tile) -> int:
        return t.j * self.grid.L + t.n * (1 << t.j) + t.i

    def tile(self, tid: int) -> Tile:
        L = self.grid.L
        j, r = divmod(int(tid), L)
        n, i = divmod(r, 1 << j)
        return Tile(j, i, n)

    def ids(self, tiles: Iterable[Tile]) -> np.ndarray:
        return np.array([self.tile_id(t) for t in tiles], dtype=int)

    def mask(self, tiles: Iterable[Tile]) -> np.ndarray:
        m = np.zeros(self.total, dtype=bool)
        m[self.ids(tiles)] = True
        return m

    def tiles(self, mask: np.ndarray) -> list[Tile]:
        return [self.tile(t) for t in np.flatnonzero(mask)]

    def scale_slice(self, j: int) -> slice:
        return slice(j * self.grid.L, (j + 1) * self.grid.L)

    @property
    def scale_of(self) -> np.ndarray:
        return np.repeat(np.arange(self.grid.m + 1), self.grid.L)

    @property
    def lengths(self) -> np.ndarray:
        return 2.0 ** (-self.scale_of.astype(float))

    # packets
    def window(self, j: int, n) -> np.ndarray:
        """Bins carrying the packets of scale j with frequency index n (shape (len(n), W))."""
        n = np.atleast_1d(np.asarray(n))
        return (n[:, None] * (1 << j) + self._R[j][None, :]) % self.grid.L

    def packet_spectrum(self, t: Tile) -> np.ndarray:
        spec = np.zeros(self.grid.L, dtype=complex)
        vals = 2.0 ** (-t.j / 2) * self._ph[t.j] * np.conj(self._E[t.j][:, t.i])
        spec[self.window(t.j, t.n)[0]] = vals
        return spec

    def packet(self, t: Tile) -> Signal:
        return Signal.from_spectrum(self.grid, self.packet_spectrum(t))

    def analysis(self, f: Signal, j: int) -> np.ndarray:
        """<f, phi_s> for every tile of scale j, shape (L / 2^j, 2^j) indexed [n, i]."""
        nrows = self.grid.L >> j
        G = f.spectrum[self.window(j, np.arange(nrows))] * self._ph[j][None, :]
        return 2.0 ** (-j / 2) * (G @ self._E[j])

    def coefficients(self, f: Signal) -> np.ndarray:
        """<f, phi_s> for every tile, in id order."""
        return np.concatenate([self.analysis(f, j).ravel() for j in range(self.grid.m + 1)])

    def synthesis_rows(self, j: int, a: np.ndarray) -> np.ndarray:
        """Samples of sum_i a[n, i] phi_(j,i,n), one row per frequency index n."""
        nrows = self.grid.L >> j
        vals = 2.0 ** (-j / 2) * self._ph[j][None, :] * (a.reshape(nrows, 1 << j) @ np.conj(self._E[j]).T)
        spec = np.zeros((nrows, self.grid.L), dtype=complex)
        np.put_along_axis(spec, self.window(j, np.arange(nrows)), vals, axis=1)
        return np.fft.ifft(spec, axis=1) * self.grid.L

    def synthesis_spectrum(self, j: int, a: np.ndarray) -> np.ndarray:
        """Spectrum of sum over all tiles of scale j of a_s phi_s."""
        nrows = self.grid.L >> j
        vals = 2.0 ** (-j / 2) * self._ph[j][None, :] * (a.reshape(nrows, 1 << j) @ np.conj(self._E[j]).T)
        spec = np.zeros(self.grid.L, dtype=complex)
        np.add.at(spec, self.window(j, np.arange(nrows)).ravel(), vals.ravel())
        return spec


@lru_cache(maxsize=8)
def _space(m: int, nu: int) -> TileSpace:
    return TileSpace(GridSpec(m), nu)


def tile_space(grid: GridSpec, nu: int = DEFAULT_NU) -> TileSpace:
    return _space(grid.m, nu)


def wave_packet(s: Tile, phi_base: Kernel) -> Signal:
    """Mod_c(omega_(s-)) Tran_c(I_s) Dil^(2)_|I_s| phi, periodized onto the torus."""
    nu = phi_base.meta.get("nu", DEFAULT_NU)
    band = phi_base.meta.get("band", 1.0 / nu)
    if band > 0.25:
        raise ValueError(f"phi band {band} too wide for the lower half of a tile")
    return tile_space(phi_base.grid, int(nu)).packet(s)


# ---------------------------------------------------------------- linearization

def _upper_index(N: np.ndarray, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Frequency index at scale j containing N(x) and whether N(x) lies in its upper half."""
    w = float(1 << j)
    n = np.floor(N / w).astype(int)
    upper = (N - n * w) >= w / 2
    return n, upper


@dataclass(frozen=True, eq=False)
class Linearization:
    """Modulation parameter N, ell^2 weights alpha_j, and level choices ell_(j-) < ell_(j+).

    ``spec`` blocks are log2 |I| boundaries (n = 1).  ``alpha``, ``ell_minus`` and
    ``ell_plus`` have one row per block.
    """

    grid: GridSpec
    N: np.ndarray
    alpha: np.ndarray
    ell_minus: np.ndarray
    ell_plus: np.ndarray
    spec: OscSpec

    def __post_init__(self):
        L = self.grid.L
        B = len(self.spec.blocks) - 1
        for name in ("alpha", "ell_minus", "ell_plus"):
            arr = getattr(self, name)
            if arr.shape != (B, L):
                raise ValueError(f"{name} must have shape {(B, L)}")
        if self.N.shape != (L,) or np.any(self.N < 0) or np.any(self.N >= L):
            raise ValueError("N must map the grid into [0, L)")
        if np.any((self.alpha ** 2).sum(axis=0) > 1 + 1e-12):
            raise ValueError("sum_j alpha_j^2 exceeds 1")
        k = np.asarray(self.spec.blocks)
        lo, hi = k[:-1, None], k[1:, None]
        ok = (lo <= self.ell_minus) & (self.ell_minus < self.ell_plus) & (self.ell_plus < hi)
        if not ok.all():
            raise ValueError("ell constraints k_j <= ell_- < ell_+ < k_(j+1) violated")

    @property
    def blocks(self) -> int:
        return len(self.spec.blocks) - 1

    def weight(self, b: int, j: int) -> np.ndarray:
        """alpha_b(x) 1_F(x) for tiles of scale j (|I| = 2^-j)."""
        lvl = -j
        inside = (self.ell_minus[b] <= lvl) & (lvl < self.ell_plus[b])
        return self.alpha[b] * inside


def random_linearization(grid: GridSpec, spec: OscSpec, rng: np.random.Generator,
                         block_scale: Optional[int] = None) -> Linearization:
    """Piecewise-constant random N, alpha, ell on dyadic blocks of length 2^-block_scale."""
    bs = grid.m // 2 if block_scale is None else block_scale
    nb = 1 << bs
    width = grid.L >> bs
    rep = lambda v: np.repeat(v, width, axis=-1)  # noqa: E731
    N = rep(rng.uniform(0, grid.L, nb))
    B = len(spec.blocks) - 1
    a = rng.standard_normal((B, nb))
    a *= rng.uniform(0, 1, nb) / np.maximum(np.sqrt((a ** 2).sum(axis=0)), 1e-300)
    k = spec.blocks
    lm = np.empty((B, nb), dtype=int)
    lp = np.empty((B, nb), dtype=int)
    for b in range(B):
        if k[b + 1] - k[b] < 2:
            raise ValueError("each block needs room for ell_- < ell_+")
        for c in range(nb):
            pair = np.sort(rng.choice(np.arange(k[b], k[b + 1]), size=2, replace=False))
            lm[b, c], lp[b, c] = pair
    return Linearization(grid, N, rep(a), rep(lm), rep(lp), spec)


def tile_spec(grid: GridSpec, blocks: Sequence[int]) -> OscSpec:
    """OscSpec over log2 |I| levels in [-m, 0]."""
    return OscSpec(1, tuple(blocks), l_min=-grid.m, l_max=0)


def plus_indicator(t: Tile, N: np.ndarray) -> np.ndarray:
    lo, hi = t.omega_plus
    return (N >= lo) & (N < hi)


def f_sj(s: Tile, lin: Linearization, j: int, nu: int = DEFAULT_NU) -> Signal:
    """1_F_(s,j)(x) alpha_j(x) 1_(omega_(s+))(N(x)) phi_s(x)."""
    phi_s = tile_space(lin.grid, nu).packet(s)
    w = lin.weight(j, s.j) * plus_indicator(s, lin.N)
    return Signal(lin.grid, w * phi_s.samples)


def _scale_terms(space: TileSpace, f: Signal, mask: np.ndarray, N: np.ndarray) -> dict:
    """Per scale j: x -> sum over tiles of S at scale j of <f, phi_s> phi_s(x) 1_(omega_(s+))(N(x))."""
    out = {}
    L = space.grid.L
    cols = np.arange(L)
    for j in range(space.grid.m + 1):
        sl = space.scale_slice(j)
        mj = mask[sl]
        if not mj.any():
            continue
        a = space.analysis(f, j).ravel() * mj
        rows = space.synthesis_rows(j, a)
        n, upper = _upper_index(N, j)
        out[j] = rows[n, cols] * upper
    return out


def tile_osc(f: Signal, S: Sequence[Tile], lin: Linearization, nu: int = DEFAULT_NU) -> Signal:
    """[sum_j sup_{k_j <= l < l' < k_(j+1)} |sum_{2^l <= |I_s| <= 2^l'} <f, phi_s> phi_s(x) 1(N(x) in omega_(s+))|^2]^(1/2)."""
    space = tile_space(f.grid, nu)
    terms = _scale_terms(space, f, space.mask(S), lin.N) if len(S) else {}
    total = np.zeros(f.grid.L)
    zero = np.zeros(f.grid.L, dtype=complex)
    for ls in lin.spec.block_ranges():
        best = np.zeros(f.grid.L)
        for a in range(len(ls)):
            run = terms.get(-ls[a], zero).copy()
            for b in range(a + 1, len(ls)):
                run = run + terms.get(-ls[b], zero)
                np.maximum(best, np.abs(run), out=best)
        total += best ** 2
    return Signal(f.grid, np.sqrt(total))


def linearized_tile_sum(f: Signal, S: Sequence[Tile], lin: Linearization, nu: int = DEFAULT_NU) -> Signal:
    """sum_j sum_(s in S) <f, phi_s> f_(s,j)(x)."""
    space = tile_space(f.grid, nu)
    terms = _scale_terms(space, f, space.mask(S), lin.N)
    out = np.zeros(f.grid.L, dtype=complex)
    for b in range(lin.blocks):
        for j, v in terms.items():
            out += lin.weight(b, j) * v
    return Signal(f.grid, out)


def dual_coefficients(space: TileSpace, H: MeasurableSet, lin: Linearization) -> np.ndarray:
    """<1_H, f_(s,j)> for every block j (rows) and every tile s (columns, id order)."""
    grid = space.grid
    out = np.zeros((lin.blocks, space.total), dtype=complex)
    Hs = H.indicator.astype(float)
    for j in range(grid.m + 1):
        n_of_x, upper = _upper_index(lin.N, j)
        nrows = grid.L >> j
        for b in range(lin.blocks):
            w = Hs * lin.weight(b, j) * upper
            if not w.any():
                continue
            coeff = np.zeros((nrows, 1 << j), dtype=complex)
            for n in np.unique(n_of_x[w != 0]):
                g = Signal(grid, w * (n_of_x == n))
                G = g.spectrum[space.window(j, [n])[0]] * space._ph[j]
                coeff[n] = 2.0 ** (-j / 2) * (G @ space._E[j])
            out[b, space.scale_slice(j)] = coeff.ravel()
    return out


# ---------------------------------------------------------------- density

def chi_matrix(grid: GridSpec, j: int, nu: int = DEFAULT_NU) -> np.ndarray:
    """chi_I(x) for the 2^j intervals at scale j (rows) and every sample (columns)."""
    length = 2.0 ** (-j)
    centers = (np.arange(1 << j) + 0.5) * length
    d = np.abs(grid.x[None, :] - centers[:, None])
    d = np.minimum(d, 1.0 - d)
    return (1.0 + d / length) ** (-float(nu)) / length


def density_integrals(space: TileSpace, H: MeasurableSet, N: np.ndarray, nu: int = DEFAULT_NU) -> np.ndarray:
    """int over N^-1(omega_t) cap H of chi_(I_t), for every tile t (id order)."""
    grid = space.grid
    out = np.zeros(space.total)
    Hs = H.indicator.astype(float)
    for j in range(grid.m + 1):
        n_of_x, _ = _upper_index(N, j)
        nrows = grid.L >> j
        K = chi_matrix(grid, j, nu) * Hs[None, :] * grid.h
        onehot = sparse.csr_matrix((np.ones(grid.L), (np.arange(grid.L), n_of_x)), shape=(grid.L, nrows))
        out[space.scale_slice(j)] = (onehot.T @ K.T).ravel()
    return out


def _reshape(space: TileSpace, v: np.ndarray, j: int) -> np.ndarray:
    return v[space.scale_slice(j)].reshape(space.grid.L >> j, 1 << j)


def _up_max(space: TileSpace, values: np.ndarray, strict: bool = False) -> np.ndarray:
    """For every tile s, the max of ``values`` over tiles t with s < t (t = s unless ``strict``)."""
    out = np.empty(space.total)
    prev = None
    for j in range(space.grid.m + 1):
        cur = _reshape(space, values, j)
        if prev is None:
            best = np.full(cur.shape, -np.inf) if strict else cur.copy()
        else:
            above = np.maximum(prev[0::2], prev[1::2])  # children in frequency, parents in space
            above = np.repeat(above, 2, axis=1)
            best = above if strict else np.maximum(cur, above)
        out[space.scale_slice(j)] = best.ravel()
        prev = np.maximum(best, cur) if strict else best
    return out


def tile_densities(space: TileSpace, H: MeasurableSet, N: np.ndarray, universe: Optional[np.ndarray] = None,
                   nu: int = DEFAULT_NU) -> np.ndarray:
    """dense(s) for every tile: the sup over universe tiles t >= s of the chi-weighted integral."""
    D = density_integrals(space, H, N, nu)
    if universe is not None:
        D = np.where(universe, D, 0.0)
    return _up_max(space, D)


def density(s: Tile, universe: Sequence[Tile], H: MeasurableSet, lin: Linearization, nu: int = DEFAULT_NU) -> float:
    space = tile_space(H.grid, nu)
    umask = space.mask(universe)
    if not umask[space.tile_id(s)]:
        raise ValueError("s is not in the universe")
    return float(tile_densities(space, H, lin.N, umask, nu)[space.tile_id(s)])


def density_brute(s: Tile, universe: Sequence[Tile], H: MeasurableSet, N: np.ndarray, nu: int = DEFAULT_NU) -> float:
    """Loop over every s' in the universe with s < s'."""
    grid = H.grid
    best = 0.0
    for t in universe:
        if not tile_less(s, t):
            continue
        chi = chi_matrix(grid, t.j, nu)[t.i]
        sel = H.indicator & (N >= t.omega.lo) & (N < t.omega.hi)
        best = max(best, float(grid.h * chi[sel].sum()))
    return best


def set_density(dens: np.ndarray, mask: np.ndarray) -> float:
    return float(dens[mask].max()) if mask.any() else 0.0


# ---------------------------------------------------------------- trees and size

@dataclass(frozen=True, eq=False)
class Tree:
    top: Tile
    members: tuple
    polarity: str = "mixed"

    def __post_init__(self):
        if self.polarity not in ("plus", "minus", "mixed"):
            raise ValueError(f"unknown polarity {self.polarity}")
        rule = {"plus": in_plus_tree, "minus": in_minus_tree}.get(self.polarity)
        for s in self.members:
            if not tile_less(s, self.top):
                raise ValueError(f"{s} is not below the top {self.top}")
            if rule is not None and not rule(s, self.top):
                raise ValueError(f"{s} violates the {self.polarity} polarity")

    def to_json(self) -> dict:
        return {"top": self.top.as_pair(), "polarity": self.polarity,
                "members": [s.as_pair() for s in self.members]}


def trees_to_json(trees: Sequence[Tree]) -> str:
    return json.dumps([t.to_json() for t in trees], sort_keys=True)


def tiles_to_json(tiles: Sequence[Tile]) -> str:
    return json.dumps([t.as_pair() for t in tiles])


def _pairs(js: int, jt: int, L: int, plus: bool):
    """(top id, member id) pairs with member at scale js under a top at scale jt.

    ``plus`` selects omega_(s+) containing omega_t (jt < js); otherwise omega_s containing omega_t.
    """
    d = js - jt
    nrows = L >> js
    n = np.repeat(np.arange(nrows), 1 << js)
    i = np.tile(np.arange(1 << js), nrows)
    sid = js * L + n * (1 << js) + i
    if plus:
        offs = np.arange(1 << (d - 1), 1 << d)
    else:
        offs = np.arange(1 << d)
    nt = (n[:, None] << d) + offs[None, :]
    it = (i >> d)[:, None]
    tid = jt * L + nt * (1 << jt) + it
    return tid.ravel(), np.repeat(sid, offs.size)


@lru_cache(maxsize=8)
def _membership(m: int, plus: bool) -> sparse.csr_matrix:
    L = 1 << m
    total = (m + 1) * L
    rows, cols = [np.arange(total)], [np.arange(total)]
    for js in range(m + 1):
        for jt in range(js):
            r, c = _pairs(js, jt, L, plus)
            rows.append(r)
            cols.append(c)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    return sparse.csr_matrix((np.ones(r.size), (r, c)), shape=(total, total))


def plus_membership(space: TileSpace) -> sparse.csr_matrix:
    """Row t marks the tiles of the +tree with top t (including t)."""
    return _membership(space.grid.m, True)


def below_membership(space: TileSpace) -> sparse.csr_matrix:
    """Row t marks every tile s with s < t."""
    return _membership(space.grid.m, False)


def _size_from_energy(space: TileSpace, energy: np.ndarray, mask: np.ndarray):
    E = plus_membership(space) @ (energy * mask)
    val = E / space.lengths
    t = int(np.argmax(val))
    return float(np.sqrt(max(val[t], 0.0))), t


def size(S: Sequence[Tile], f: Signal, nu: int = DEFAULT_NU) -> tuple[float, Tree]:
    """max over all grid tops of (|I_T|^-1 sum_{s in T} |<f, phi_s>|^2)^(1/2) over +trees T within S."""
    if not len(S):
        raise ValueError("size of an empty tile set")
    space = tile_space(f.grid, nu)
    mask = space.mask(S)
    energy = np.abs(space.coefficients(f)) ** 2
    val, t = _size_from_energy(space, energy, mask)
    members = np.flatnonzero(plus_membership(space)[t].toarray().ravel().astype(bool) & mask)
    top = space.tile(t)
    return val, Tree(top, tuple(space.tile(s) for s in members), "plus")


def size_brute(S: Sequence[Tile], f: Signal, nu: int = DEFAULT_NU) -> float:
    """Exhaustive: every grid tile as top, every +tree member set it induces in S."""
    space = tile_space(f.grid, nu)
    coeff = {s: abs(complex(np.vdot(space.packet(s).samples, f.samples))) * f.grid.h for s in S}
    best = 0.0
    for top in generate_universe(f.grid):
        e = sum(coeff[s] ** 2 for s in S if in_plus_tree(s, top))
        best = max(best, np.sqrt(e / top.I.length))
    return float(best)


# ---------------------------------------------------------------- splits

@dataclass
class SplitReport:
    threshold: float
    trees: list
    count: float
    constant: float
    kind: str

    @property
    def tops(self) -> list:
        return [t.top for t in self.trees]

    def as_row(self) -> dict:
        return {"kind": self.kind, "threshold": self.threshold, "trees": len(self.trees),
                "count": self.count, "constant": self.constant}


def _order_key(t: Tile):
    return (t.omega.lo, t.I.lo, t.j)


def _density_split_mask(space: TileSpace, S: np.ndarray, dens: np.ndarray, D: np.ndarray,
                        delta: float, H_measure: float):
    if delta <= 0:
        raise ValueError("density target must be positive")
    heavy = S & (dens >= delta / 2)
    good = D >= delta / 4
    strictly_above = _up_max(space, good.astype(float), strict=True) > 0
    tops = np.flatnonzero(good & ~strictly_above)
    below = below_membership(space)
    assigned = np.zeros(space.total, dtype=bool)
    trees = []
    order = sorted(tops, key=lambda t: _order_key(space.tile(t)))
    for t in order:
        mem = below[t].toarray().ravel().astype(bool) & heavy & ~assigned
        if not mem.any():
            continue
        assigned |= mem
        trees.append((t, mem))
    if (heavy & ~assigned).any():
        raise AssertionError("a heavy tile lies under no top")
    count = float(sum(2.0 ** (-space.tile(t).j) for t, _ in trees))
    const = count * delta / H_measure if H_measure > 0 else 0.0
    return heavy, trees, count, const


def density_split(S: Sequence[Tile], universe: Sequence[Tile], H: MeasurableSet, lin: Linearization,
                  delta_target: float, nu: int = DEFAULT_NU):
    """Split S into trees of heavy tiles (dense >= delta/2) and the light remainder."""
    space = tile_space(H.grid, nu)
    if delta_target <= 0:
        raise ValueError("density target must be positive")
    umask = space.mask(universe)
    D = density_integrals(space, H, lin.N, nu)
    dens = _up_max(space, np.where(umask, D, 0.0))
    Smask = space.mask(S)
    heavy, trees, count, const = _density_split_mask(space, Smask, dens, D, delta_target, H.measure)
    light = Smask & ~heavy
    if light.any() and set_density(dens, light) >= delta_target / 2:
        raise AssertionError("light tiles are not below half the density target")
    rep = SplitReport(delta_target, [Tree(space.tile(t), tuple(space.tiles(m))) for t, m in trees],
                      count, const, "density")
    return rep, space.tiles(light)


def _is_indicator(f: Signal) -> bool:
    v = f.samples
    return bool(np.all(np.abs(v.imag) == 0) and np.all((v.real == 0) | (v.real == 1)))


def _size_split_mask(space: TileSpace, S: np.ndarray, energy: np.ndarray, G_measure: float):
    sigma, _ = _size_from_energy(space, energy, S) if S.any() else (0.0, 0)
    alive = S.copy()
    trees = []
    if sigma == 0:
        return sigma, trees, 0.0, 0.0, alive
    M = plus_membership(space)
    below = below_membership(space)
    lengths = space.lengths
    keys = np.array([_order_key(space.tile(t)) for t in range(space.total)],
                    dtype=[("w", float), ("x", float), ("j", int)])
    rank = np.empty(space.total, dtype=int)
    rank[np.argsort(keys, order=("w", "x", "j"))] = np.arange(space.total)
    thresh = (sigma / 2) ** 2
    while True:
        E = M @ (energy * alive)
        cand = np.flatnonzero((E >= thresh * lengths) & (E > 0))
        if cand.size == 0:
            break
        t = int(cand[np.argmin(rank[cand])])
        mem = below[t].toarray().ravel().astype(bool) & alive
        alive &= ~mem
        trees.append((t, mem))
    count = float(sum(lengths[t] for t, _ in trees))
    const = count * sigma ** 2 / G_measure if G_measure > 0 else 0.0
    if alive.any():
        small, _ = _size_from_energy(space, energy, alive)
        if not small < sigma / 2:
            raise AssertionError("small tiles are not below half the size")
    return sigma, trees, count, const, alive


def size_split(S: Sequence[Tile], f, nu: int = DEFAULT_NU):
    """Greedy removal of +trees of size >= sigma/2 with their full trees; lowest omega_top first."""
    if isinstance(f, MeasurableSet):
        f = f.to_signal()
    if not _is_indicator(f):
        raise ValueError("size_split needs f = 1_G")
    space = tile_space(f.grid, nu)
    energy = np.abs(space.coefficients(f)) ** 2
    sigma, trees, count, const, alive = _size_split_mask(space, space.mask(S), energy, float(f.samples.real.sum() * f.grid.h))
    rep = SplitReport(sigma, [Tree(space.tile(t), tuple(space.tiles(m))) for t, m in trees], count, const, "size")
    return rep, space.tiles(alive)


def restricted_universe(G: MeasurableSet, lam: float) -> list[Tile]:
    """Tiles whose interval is not inside {M 1_G > lam}."""
    M = hardy_littlewood_maximal(G.to_signal()).samples.real
    grid = G.grid
    out = []
    for j in range(grid.m + 1):
        width = grid.L >> j
        low = (M <= lam).reshape(1 << j, width).any(axis=1)
        for n in range(grid.L >> j):
            out.extend(Tile(j, i, n) for i in np.flatnonzero(low))
    return out


def size_upper_check(G: MeasurableSet, lam: float, nu: int = DEFAULT_NU) -> dict:
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    S = restricted_universe(G, lam)
    val = size(S, G.to_signal(), nu)[0] if S else 0.0
    return {"lambda": lam, "tiles": len(S), "size": val, "ratio": val / lam}


# ---------------------------------------------------------------- tree sums

def _triple_contains(grid: GridSpec, q: int, I_lo: np.ndarray, I_hi: np.ndarray) -> np.ndarray:
    """For every dyadic J at scale q (rows) and interval [I_lo, I_hi) in samples (columns): I inside 3J."""
    width = grid.L >> q
    J_lo = np.arange(1 << q) * width
    if 3 * width >= grid.L:
        return np.ones((1 << q, I_lo.size), dtype=bool)
    start = (J_lo - width)[:, None]
    rel_lo = (I_lo[None, :] - start) % grid.L
    return rel_lo + (I_hi - I_lo)[None, :] <= 3 * width


def tree_partition(T: Tree, grid: GridSpec, H: Optional[MeasurableSet] = None, N: Optional[np.ndarray] = None):
    """Maximal dyadic J whose triple contains no I_s, plus E(J).

    Samples left uncovered (inside the finest tiles) form single-sample J.  Returns
    (J_list, E) with J as (scale, index) pairs; E is empty when H or N is missing.
    """
    if not T.members:
        raise ValueError("empty tree")
    L = grid.L
    lo = np.array([int(round(s.I.lo * L)) for s in T.members])
    hi = np.array([int(round(s.I.hi * L)) for s in T.members])
    covered = np.zeros(L, dtype=bool)
    J_list = []
    for q in range(grid.m + 1):
        width = L >> q
        bad = _triple_contains(grid, q, lo, hi).any(axis=1)
        for idx in np.flatnonzero(~bad):
            a = idx * width
            if not covered[a]:
                J_list.append((q, int(idx)))
                covered[a:a + width] = True
    for p in np.flatnonzero(~covered):
        J_list.append((grid.m, int(p)))
    J_list.sort(key=lambda J: J[1] * (L >> J[0]))
    E = {}
    if H is not None and N is not None:
        for J in J_list:
            q, idx = J
            width = L >> q
            ind = np.zeros(L, dtype=bool)
            for s in T.members:
                if s.I.length > 2 * width / L:
                    ind |= plus_indicator(s, N) & H.indicator
            keep = np.zeros(L, dtype=bool)
            keep[idx * width:(idx + 1) * width] = True
            E[J] = MeasurableSet(grid, ind & keep)
    return J_list, E


def partition_density_constant(J_list, E, dense_T: float, grid: GridSpec) -> float:
    """max over J of |E(J)| / (dense(T) |J|)."""
    if dense_T <= 0:
        return 0.0 if all(not e.indicator.any() for e in E.values()) else np.inf
    return max(E[J].measure / (dense_T * 2.0 ** (-J[0])) for J in J_list)


@dataclass
class TreeSumReport:
    total: float
    first: float
    second: float
    size: float
    dense: float
    top_length: float
    partition_constant: float

    @property
    def ratio(self) -> float:
        denom = self.size * self.dense * self.top_length
        return self.total / denom if denom > 0 else 0.0

    def as_row(self) -> dict:
        return {"sum": self.total, "first": self.first, "second": self.second, "size": self.size,
                "dense": self.dense, "top_length": self.top_length, "ratio": self.ratio,
                "partition_constant": self.partition_constant}


def tree_sum(T: Tree, G: MeasurableSet, H: MeasurableSet, lin: Linearization,
             universe: Optional[Sequence[Tile]] = None, nu: int = DEFAULT_NU) -> TreeSumReport:
    """Sum(T) = sum_j sum_(s in T) |<1_G, phi_s> <1_H, f_(s,j)>| with the near/far split over the tree partition."""
    grid = G.grid
    space = tile_space(grid, nu)
    members = list(T.members)
    if not members:
        return TreeSumReport(0.0, 0.0, 0.0, 0.0, 0.0, T.top.I.length, 0.0)
    ids = space.ids(members)
    aG = space.coefficients(G.to_signal())[ids]
    dual = dual_coefficients(space, H, lin)[:, ids]
    total = float(np.sum(np.abs(aG)[None, :] * np.abs(dual)))
    umask = None if universe is None else space.mask(universe)
    dens = tile_densities(space, H, lin.N, umask, nu)
    dense_T = float(dens[ids].max())
    size_T = size(members, G.to_signal(), nu)[0]
    J_list, E = tree_partition(T, grid, H, lin.N)
    packets = np.array([space.packet(s).samples for s in members])
    lengths = np.array([s.I.length for s in members])
    Hs = H.indicator
    first = second = 0.0
    for b in range(lin.blocks):
        F = np.array([lin.weight(b, s.j) * plus_indicator(s, lin.N) for s in members]) * packets
        for q, idx in J_list:
            width = grid.L >> q
            cols = np.arange(idx * width, (idx + 1) * width)
            cols = cols[Hs[cols]]
            if cols.size == 0:
                continue
            near = lengths <= 2 * width * grid.h
            if near.any():
                first += float(np.sum(np.abs(aG[near]) * np.abs(F[near][:, cols]).sum(axis=1)) * grid.h)
            far = ~near
            if far.any():
                second += float(np.abs(aG[far] @ F[far][:, cols]).sum() * grid.h)
    pc = partition_density_constant(J_list, E, dense_T, grid) if E else 0.0
    return TreeSumReport(total, first, second, size_T, dense_T, T.top.I.length, pc)


def random_tree(grid: GridSpec, rng: np.random.Generator, polarity: str = "plus",
                top_scale: Optional[int] = None, depth: Optional[int] = None, keep: float = 0.5) -> Tree:
    """Random top and a random subset of the tiles forming its +tree or -tree."""
    jt = int(rng.integers(0, max(1, grid.m - 2))) if top_scale is None else top_scale
    top = Tile(jt, int(rng.integers(0, 1 << jt)), int(rng.integers(0, grid.L >> jt)))
    rule = in_plus_tree if polarity == "plus" else in_minus_tree
    dmax = grid.m - jt if depth is None else min(depth, grid.m - jt)
    members = [top]
    for d in range(1, dmax + 1):
        js = jt + d
        for i in range(top.i << d, (top.i + 1) << d):
            n = top.n >> d
            s = Tile(js, i, n)
            if rule(s, top) and rng.random() < keep:
                members.append(s)
    return Tree(top, tuple(members), polarity)


def random_set(grid: GridSpec, rng: np.random.Generator, measure: float, pieces: int = 4) -> MeasurableSet:
    """Union of ``pieces`` random arcs with total measure close to ``measure`` (at least one sample)."""
    total = max(1, int(round(measure * grid.L)))
    cuts = np.sort(rng.choice(np.arange(1, total), size=min(pieces, total) - 1, replace=False)) if total > 1 else []
    lengths = np.diff(np.concatenate([[0], cuts, [total]])).astype(int)
    ind = np.zeros(grid.L, dtype=bool)
    pos = int(rng.integers(0, grid.L))
    gaps = rng.integers(1, max(2, (grid.L - total) // max(1, len(lengths))), size=len(lengths))
    for n, gap in zip(lengths, gaps):
        idx = (pos + np.arange(n)) % grid.L
        ind[idx] = True
        pos = (pos + n + int(gap)) % grid.L
    return MeasurableSet(grid, ind)


def gamma(T: Tree, G: MeasurableSet, nu: int = DEFAULT_NU) -> Signal:
    """Mod_(-c(omega_T)) sum_(s in T) <1_G, phi_s> phi_s; the shift uses floor(c(omega_T)) bins."""
    if T.polarity != "plus":
        raise ValueError("gamma needs a +tree")
    grid = G.grid
    if not T.members:
        return Signal.zeros(grid)
    space = tile_space(grid, nu)
    ids = space.ids(T.members)
    a = space.coefficients(G.to_signal())[ids]
    spec = np.zeros(grid.L, dtype=complex)
    for coef, s in zip(a, T.members):
        spec += coef * space.packet_spectrum(s)
    shift = int(np.floor(T.top.omega.center))
    return Signal.from_spectrum(grid, np.roll(spec, -shift))


# ---------------------------------------------------------------- bilinear form

@dataclass
class BilinearReport:
    direct: float
    pipeline: float
    tree_bound: float
    trees: int
    steps: list
    G_measure: float
    H_measure: float

    @property
    def rhs(self) -> float:
        g, h = self.G_measure, self.H_measure
        if g == 0 or h == 0:
            return 0.0
        return min(g, h) * (1 + abs(np.log(g / h)))

    @property
    def ratio(self) -> float:
        return self.direct / self.rhs if self.rhs > 0 else 0.0


def bilinear_form(G: MeasurableSet, H: MeasurableSet, S: Sequence[Tile], lin: Linearization,
                  nu: int = DEFAULT_NU) -> BilinearReport:
    """sum_(s, j) |<1_G, phi_s> <1_H, f_(s,j)>| directly and regrouped by alternating density/size splits."""
    grid = G.grid
    space = tile_space(grid, nu)
    Smask = space.mask(S)
    aG = space.coefficients(G.to_signal())
    dual = dual_coefficients(space, H, lin)
    term = np.abs(aG) * np.abs(dual).sum(axis=0)
    direct = float(term[Smask].sum())
    energy = np.abs(aG) ** 2
    D = density_integrals(space, H, lin.N, nu)
    dens = _up_max(space, D)
    plus = plus_membership(space)
    alive = Smask.copy()
    pipeline = bound = 0.0
    steps = []
    n_trees = 0
    while alive.any():
        delta = set_density(dens, alive)
        sigma = _size_from_energy(space, energy, alive)[0]
        if delta == 0 or sigma == 0:
            pipeline += float(term[alive].sum())
            steps.append(("null", 0.0, 0))
            break
        use_density = delta ** -1 * H.measure <= sigma ** -2 * G.measure
        if use_density:
            heavy, trees, count, const = _density_split_mask(space, alive, dens, D, delta, H.measure)
            removed = heavy
            steps.append(("density", const, len(trees)))
        else:
            _, trees, count, const, rest = _size_split_mask(space, alive, energy, G.measure)
            removed = alive & ~rest
            steps.append(("size", const, len(trees)))
        for t, mem in trees:
            pipeline += float(term[mem].sum())
            s_val = np.sqrt(max((plus @ (energy * mem) / space.lengths).max(), 0.0))
            bound += s_val * set_density(dens, mem) * space.lengths[t]
        n_trees += len(trees)
        alive &= ~removed
    return BilinearReport(direct, pipeline, bound, n_trees, steps, G.measure, H.measure)
