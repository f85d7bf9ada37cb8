"""Complex functions sampled on a uniform grid over [0, pi].

A :class:`GridFn` stores node values ``values[i] = f(i*pi/n_cells)`` together
with its support, a union of disjoint intervals.  Between nodes the function is
the piecewise-linear interpolant; inside a support interval whose endpoints are
off-grid, the boundary cell is filled by extrapolating the nearest interior
cell, so jumps sit exactly at the support endpoints instead of being smeared
over a grid cell.

All quadratures are exact for these interpolants: ``integrate`` is the
composite trapezoid rule with cut endpoints, ``shifted_product_integral`` is
Simpson's rule on the merged breakpoints of both factors (the product of two
linear pieces is quadratic).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

PI = math.pi
DEFAULT_N_CELLS = 2048
# Tolerance used when comparing positions against grid nodes and interval ends.
POS_TOL = 1e-12

Interval = tuple[float, float]


class DomainError(ValueError):
    """Argument outside the admissible domain of an operation."""


def grid(n_cells: int) -> np.ndarray:
    return np.arange(n_cells + 1) * (PI / n_cells)


def _normalize_pieces(support) -> tuple[Interval, ...]:
    if support is None:
        support = (0.0, PI)
    if len(support) == 2 and np.isscalar(support[0]):
        support = [support]
    pieces = []
    for lo, hi in support:
        lo, hi = float(lo), float(hi)
        if lo < -POS_TOL or hi > PI + POS_TOL or lo > hi + POS_TOL:
            raise DomainError(f"support interval ({lo}, {hi}) not within [0, pi]")
        lo, hi = max(lo, 0.0), min(hi, PI)
        if hi - lo > POS_TOL:
            pieces.append((lo, hi))
    pieces.sort()
    merged: list[Interval] = []
    for lo, hi in pieces:
        if merged and lo <= merged[-1][1] + POS_TOL:
            raise DomainError("support intervals overlap")
        merged.append((lo, hi))
    return tuple(merged)


@dataclass(frozen=True, eq=False)
class GridFn:
    n_cells: int
    values: np.ndarray
    pieces: tuple[Interval, ...]
    _node_ranges: tuple[tuple[int, int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim != 1 or len(vals) != self.n_cells + 1:
            raise ValueError("values must have length n_cells + 1")
        h = PI / self.n_cells
        ranges = []
        keep = np.zeros(len(vals), dtype=bool)
        for lo, hi in self.pieces:
            i0 = max(math.ceil((lo - POS_TOL) / h), 0)
            i1 = min(math.floor((hi + POS_TOL) / h), self.n_cells)
            ranges.append((i0, i1))
            if i0 <= i1:
                keep[i0:i1 + 1] = True
        vals = np.where(keep, vals, 0.0)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_node_ranges", tuple(ranges))

    # ------------------------------------------------------------------ basics
    @property
    def h(self) -> float:
        return PI / self.n_cells

    @property
    def x(self) -> np.ndarray:
        return grid(self.n_cells)

    @property
    def support(self) -> Interval:
        """Hull of the support pieces, ``(0, 0)`` for an empty support."""
        if not self.pieces:
            return (0.0, 0.0)
        return (self.pieces[0][0], self.pieces[-1][1])

    def breakpoints(self) -> np.ndarray:
        """Points between which the function is linear (or zero)."""
        pts = [np.array([lo, hi]) for lo, hi in self.pieces]
        for (i0, i1) in self._node_ranges:
            if i0 <= i1:
                pts.append(np.arange(i0, i1 + 1) * self.h)
        if not pts:
            return np.array([0.0, PI])
        return np.unique(np.concatenate(pts))

    def __call__(self, x, side: int = 0) -> np.ndarray | complex:
        """Evaluate the interpolant.

        ``side=+1`` returns right limits, ``side=-1`` left limits; this only
        matters exactly at support endpoints.
        """
        xa = np.asarray(x, dtype=float)
        out = np.zeros(xa.shape, dtype=complex)
        h = self.h
        v = self.values
        for (lo, hi), (i0, i1) in zip(self.pieces, self._node_ranges):
            if side > 0:
                inside = (xa >= lo - POS_TOL) & (xa < hi - POS_TOL)
            elif side < 0:
                inside = (xa > lo + POS_TOL) & (xa <= hi + POS_TOL)
            else:
                inside = (xa >= lo - POS_TOL) & (xa <= hi + POS_TOL)
            if not inside.any():
                continue
            xi = xa[inside]
            if i0 > i1:
                # piece shorter than a cell with no node inside: use the cell ends
                k = np.clip(np.floor(xi / h).astype(int), 0, self.n_cells - 1)
                t = xi / h - k
                out[inside] = v[k] + t * (v[k + 1] - v[k])
            elif i0 == i1:
                out[inside] = v[i0]
            else:
                k = np.clip(np.floor(xi / h).astype(int), i0, i1 - 1)
                t = xi / h - k
                out[inside] = v[k] + t * (v[k + 1] - v[k])
        if np.ndim(x) == 0:
            return complex(out)
        return out

    # -------------------------------------------------------------- algebra
    def with_values(self, values) -> "GridFn":
        return GridFn(self.n_cells, np.asarray(values, dtype=complex), self.pieces)

    def scale(self, c: complex) -> "GridFn":
        return self.with_values(c * self.values)

    def __neg__(self):
        return self.scale(-1.0)

    def __add__(self, other: "GridFn") -> "GridFn":
        if other.n_cells != self.n_cells or not _same_pieces(self.pieces, other.pieces):
            raise ValueError("can only add GridFns with identical grid and support")
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "GridFn") -> "GridFn":
        return self + (-other)

    def remask(self, support=None) -> "GridFn":
        return GridFn(self.n_cells, self.values,
                      self.pieces if support is None else _normalize_pieces(support))

    def shift_view(self, shift: float) -> "GridFn":
        """Sample ``x -> f(x + shift)`` on the same grid; support moves by ``-shift``."""
        pieces = []
        for lo, hi in self.pieces:
            lo2, hi2 = max(lo - shift, 0.0), min(hi - shift, PI)
            if hi2 - lo2 > POS_TOL:
                pieces.append((lo2, hi2))
        pieces = tuple(pieces)
        x = self.x
        vals = np.zeros(len(x), dtype=complex)
        probe = GridFn(self.n_cells, np.zeros(len(x)), pieces)
        for (lo, hi), (i0, i1) in zip(pieces, probe._node_ranges):
            if i0 <= i1:
                vals[i0:i1 + 1] = self(x[i0:i1 + 1] + shift)
        return GridFn(self.n_cells, vals, pieces)

    # ------------------------------------------------------------------ CSV
    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,re,im\n")
        for xi, v in zip(self.x, self.values):
            buf.write(f"{xi:.15g},{v.real:.15g},{v.imag:.15g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, support=(0.0, PI)) -> "GridFn":
        rows = list(csv.DictReader(io.StringIO(text)))
        vals = np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])
        return from_samples(vals, support)


def _same_pieces(a, b) -> bool:
    return len(a) == len(b) and all(
        abs(p[0] - q[0]) <= POS_TOL and abs(p[1] - q[1]) <= POS_TOL for p, q in zip(a, b))


def from_samples(values: Sequence[complex], support=(0.0, PI)) -> GridFn:
    vals = np.asarray(values, dtype=complex)
    if vals.ndim != 1 or len(vals) < 2:
        raise ValueError("need at least two samples")
    return GridFn(len(vals) - 1, vals, _normalize_pieces(support))


def sample(func: Callable[[np.ndarray], np.ndarray], n_cells: int = DEFAULT_N_CELLS,
           support=(0.0, PI)) -> GridFn:
    """Sample ``func`` at the nodes of each support piece."""
    pieces = _normalize_pieces(support)
    probe = GridFn(n_cells, np.zeros(n_cells + 1), pieces)
    x = probe.x
    vals = np.zeros(n_cells + 1, dtype=complex)
    for i0, i1 in probe._node_ranges:
        if i0 <= i1:
            vals[i0:i1 + 1] = func(x[i0:i1 + 1])
    return GridFn(n_cells, vals, pieces)


def zeros(n_cells: int = DEFAULT_N_CELLS, support=(0.0, PI)) -> GridFn:
    return GridFn(n_cells, np.zeros(n_cells + 1), _normalize_pieces(support))


# ---------------------------------------------------------------- quadrature
def _clip_points(pts: np.ndarray, lo: float, hi: float) -> np.ndarray:
    pts = pts[(pts > lo) & (pts < hi)]
    return np.concatenate(([lo], pts, [hi]))


def integrate(f: GridFn, lo: float, hi: float) -> complex:
    """Integral of the interpolant of ``f`` over ``[lo, hi]``."""
    if lo > hi:
        raise DomainError(f"lo={lo} > hi={hi}")
    if lo < -POS_TOL or hi > PI + POS_TOL:
        raise DomainError("integration bounds outside [0, pi]")
    if hi - lo <= 0:
        return 0j
    b = _clip_points(f.breakpoints(), lo, hi)
    left = f(b[:-1], side=1)
    right = f(b[1:], side=-1)
    return complex(np.sum(0.5 * np.diff(b) * (left + right)))


def shifted_product_integral(f: GridFn, g: GridFn, shift: float, lo: float,
                             hi: float) -> complex:
    """``int_lo^hi f(t) g(t - shift) dt``, exact for the interpolants."""
    if lo - shift < -POS_TOL or hi - shift > PI + POS_TOL:
        raise DomainError("argument of g leaves [0, pi]")
    if hi > PI + POS_TOL or lo < -POS_TOL:
        raise DomainError("integration bounds outside [0, pi]")
    if hi - lo <= POS_TOL:
        return 0j
    # restrict to where both factors can be nonzero
    flo, fhi = f.support
    glo, ghi = g.support
    lo2, hi2 = max(lo, flo, glo + shift), min(hi, fhi, ghi + shift)
    if hi2 - lo2 <= POS_TOL:
        return 0j
    pts = np.concatenate((f.breakpoints(), g.breakpoints() + shift))
    b = np.unique(_clip_points(pts, lo2, hi2))
    mid = 0.5 * (b[:-1] + b[1:])
    fl, fm, fr = f(b[:-1], side=1), f(mid), f(b[1:], side=-1)
    gl, gm, gr = g(b[:-1] - shift, side=1), g(mid - shift), g(b[1:] - shift, side=-1)
    return complex(np.sum(np.diff(b) / 6.0 * (fl * gl + 4.0 * fm * gm + fr * gr)))


# ------------------------------------------------- oscillatory transforms
def _phi(z: np.ndarray, n: int) -> np.ndarray:
    """``int_0^1 u**(n-1) exp(z u) du`` for n = 1, 2, 3."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(z) < 0.5
    zs = z[small]
    term = np.ones(zs.shape, dtype=complex)
    acc = term / n
    for k in range(1, 18):
        term = term * zs / k
        acc = acc + term / (k + n)
    out[small] = acc
    zl = z[~small]
    ez = np.exp(zl)
    if n == 1:
        out[~small] = (ez - 1.0) / zl
    elif n == 2:
        out[~small] = (ez * (zl - 1.0) + 1.0) / zl**2
    elif n == 3:
        out[~small] = (ez * (zl * zl - 2.0 * zl + 2.0) - 2.0) / zl**3
    else:
        raise ValueError(n)
    return out


@dataclass(frozen=True, eq=False)
class LinearPieces:
    """Breakpoints and one-sided end values of a piecewise-linear function."""

    x0: np.ndarray
    length: np.ndarray
    f0: np.ndarray
    f1: np.ndarray

    @classmethod
    def of(cls, f: GridFn) -> "LinearPieces":
        segs = []
        for lo, hi in f.pieces:
            b = _clip_points(f.breakpoints(), lo, hi)
            segs.append(b)
        if not segs:
            e = np.zeros(0)
            return cls(e, e, e.astype(complex), e.astype(complex))
        x0 = np.concatenate([b[:-1] for b in segs])
        x1 = np.concatenate([b[1:] for b in segs])
        keep = x1 - x0 > 0
        x0, x1 = x0[keep], x1[keep]
        return cls(x0, x1 - x0, f(x0, side=1), f(x1, side=-1))

    def transform(self, omega: complex, deriv: bool = False):
        """``int f(x) exp(i omega x) dx`` and optionally its omega-derivative."""
        if len(self.x0) == 0:
            return (0j, 0j) if deriv else 0j
        iw = 1j * omega
        z = iw * self.length
        base = np.exp(iw * self.x0) * self.length
        e1, e2 = _phi(z, 1), _phi(z, 2)
        val = np.sum(base * (self.f0 * (e1 - e2) + self.f1 * e2))
        if not deriv:
            return complex(val)
        e3 = _phi(z, 3)
        # d/d omega of exp(i omega x0) * L * [f0 (E1 - E2) + f1 E2](i omega L)
        d = np.sum(base * (1j * self.x0 * (self.f0 * (e1 - e2) + self.f1 * e2)
                           + 1j * self.length * (self.f0 * (e2 - e3) + self.f1 * e3)))
        return complex(val), complex(d)


def trimmed_mask(x: np.ndarray, lo: float, hi: float, cuts: Iterable[float],
                 band: float) -> np.ndarray:
    """Nodes in ``[lo, hi]`` farther than ``band`` from every cut point."""
    m = (x >= lo + band) & (x <= hi - band)
    for c in cuts:
        m &= np.abs(x - c) > band
    return m


class GridSum:
    """Sum of support-limited :class:`GridFn` parts on one grid.

    Keeps jumps between parts exact; parts with identical support are merged.
    """

    def __init__(self, parts: Iterable[GridFn], hull: Interval | None = None):
        merged: list[GridFn] = []
        for p in parts:
            if not p.pieces:
                continue
            for i, q in enumerate(merged):
                if _same_pieces(p.pieces, q.pieces):
                    merged[i] = q + p
                    break
            else:
                merged.append(p)
        self.parts = tuple(merged)
        self._hull = hull
        self._lin: tuple[LinearPieces, ...] | None = None

    @property
    def n_cells(self) -> int:
        return self.parts[0].n_cells

    @property
    def support(self) -> Interval:
        if self._hull is not None:
            return self._hull
        if not self.parts:
            return (0.0, 0.0)
        return (min(p.support[0] for p in self.parts), max(p.support[1] for p in self.parts))

    def __call__(self, x, side: int = 0):
        if not self.parts:
            return np.zeros(np.shape(x), dtype=complex) if np.ndim(x) else 0j
        return sum(p(x, side) for p in self.parts)

    def scale(self, c: complex) -> "GridSum":
        return GridSum([p.scale(c) for p in self.parts], self._hull)

    def __add__(self, other: "GridSum") -> "GridSum":
        return GridSum(self.parts + other.parts, self._hull or other._hull)

    def cuts(self) -> list[float]:
        """Endpoints of all parts: the only places the sum may jump."""
        return sorted({e for p in self.parts for piece in p.pieces for e in piece})

    def materialize(self, n_cells: int | None = None) -> GridFn:
        """Node values of the sum as a single GridFn on the hull."""
        n = n_cells or (self.n_cells if self.parts else DEFAULT_N_CELLS)
        x = grid(n)
        vals = self(x) if self.parts else np.zeros(n + 1)
        return GridFn(n, vals, _normalize_pieces(self.support))

    def transform(self, omega: complex, deriv: bool = False):
        if self._lin is None:
            self._lin = tuple(LinearPieces.of(p) for p in self.parts)
        if deriv:
            v = d = 0j
            for lp in self._lin:
                a, b = lp.transform(omega, True)
                v += a
                d += b
            return v, d
        return sum((lp.transform(omega) for lp in self._lin), 0j)

    def integrate(self, lo: float, hi: float) -> complex:
        return sum((integrate(p, lo, hi) for p in self.parts), 0j)
