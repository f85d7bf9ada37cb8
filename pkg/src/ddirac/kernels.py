"""Alpha-convolution integrals and the transform kernels K^m, G^m.

The characteristic functions are trigonometric transforms of two kernels per
sign ``m``; each kernel is a sum of shifted potentials (first-order part) and
products of potential pairs (quadratic part).  Kernels are kept as
:class:`~ddirac.gridfn.GridSum` objects so that each smooth piece keeps its
own support and the jumps between pieces stay exact.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .gridfn import PI, POS_TOL, GridFn, GridSum, grid, shifted_product_integral
from .potentials import DelayPair, PotentialSet


def _alpha(f: GridFn, g: GridFn, shift: float, lo: float) -> complex:
    # g vanishes outside [0, pi], so the upper limit never needs g beyond pi
    hi = min(PI, PI + shift)
    if hi - lo <= POS_TOL:
        return 0j
    return shifted_product_integral(f, g, shift, lo, hi)


def alpha1(f: GridFn, g: GridFn, x: float, a1: float) -> complex:
    """``int_{x+a1}^pi f(t) g(t-x) dt``; zero when the range is empty."""
    return _alpha(f, g, x, x + a1)


def alpha2(f: GridFn, g: GridFn, x: float, a2: float) -> complex:
    return _alpha(f, g, x, x + a2)


def alpha12(f: GridFn, g: GridFn, x: float, delays: DelayPair,
            order: Literal["pq", "qp"] = "pq") -> complex:
    """Mixed integral with averaged delay; ``order`` selects the shift sign."""
    a1, a2 = delays.a1, delays.a2
    if order == "pq":
        shift = x + (a1 - a2) / 2
    elif order == "qp":
        shift = x + (a2 - a1) / 2
    else:
        raise ValueError(f"order must be 'pq' or 'qp', not {order!r}")
    return _alpha(f, g, shift, x + (a1 + a2) / 2)


def sample_on(func: Callable[[float], complex], n_cells: int, lo: float, hi: float) -> GridFn:
    """Evaluate a scalar function at the grid nodes of ``[lo, hi]``."""
    if hi - lo <= POS_TOL:
        return GridFn(n_cells, np.zeros(n_cells + 1), ())
    x = grid(n_cells)
    vals = np.zeros(n_cells + 1, dtype=complex)
    idx = np.nonzero((x >= lo - POS_TOL) & (x <= hi + POS_TOL))[0]
    for i in idx:
        vals[i] = func(x[i])
    return GridFn(n_cells, vals, ((lo, hi),))


# ------------------------------------------------------------------ kernels
@dataclass(frozen=True, eq=False)
class KernelParts:
    """Named pieces of the kernels.

    ``K^m = K_even + (-1)^m K_odd`` and likewise for ``G``.
    """

    delays: DelayPair
    n_cells: int
    k_even: tuple[GridFn, ...]
    k_odd: tuple[GridFn, ...]
    g_even: tuple[GridFn, ...]
    g_odd: tuple[GridFn, ...]


@dataclass(frozen=True, eq=False)
class KernelSet:
    delays: DelayPair
    K0: GridSum
    K1: GridSum
    G0: GridSum
    G1: GridSum

    @property
    def support(self) -> tuple[float, float]:
        a1 = self.delays.a1
        return (a1 / 2, PI - a1 / 2)

    @property
    def n_cells(self) -> int:
        return self.K0.n_cells

    def K(self, m: int) -> GridSum:
        return self.K0 if m == 0 else self.K1

    def G(self, m: int) -> GridSum:
        return self.G0 if m == 0 else self.G1

    def cuts(self) -> list[float]:
        return sorted(set(self.K0.cuts()) | set(self.K1.cuts())
                      | set(self.G0.cuts()) | set(self.G1.cuts()))

    def materialized(self) -> dict[str, GridFn]:
        return {name: getattr(self, name).materialize() for name in ("K0", "K1", "G0", "G1")}

    def to_csv(self) -> str:
        mats = self.materialized()
        buf = io.StringIO()
        buf.write("x,K0_re,K0_im,K1_re,K1_im,G0_re,G0_im,G1_re,G1_im\n")
        x = mats["K0"].x
        cols = [mats[k].values for k in ("K0", "K1", "G0", "G1")]
        for i, xi in enumerate(x):
            row = [f"{xi:.15g}"]
            for c in cols:
                row += [f"{c[i].real:.15g}", f"{c[i].imag:.15g}"]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_grid(cls, delays: DelayPair, K0: GridFn, K1: GridFn, G0: GridFn,
                  G1: GridFn) -> "KernelSet":
        hull = (delays.a1 / 2, PI - delays.a1 / 2)
        return cls(delays, *(GridSum([f.remask(hull)], hull) for f in (K0, K1, G0, G1)))

    @classmethod
    def from_csv(cls, text: str, delays: DelayPair) -> "KernelSet":
        rows = list(csv.DictReader(io.StringIO(text)))
        n = len(rows) - 1
        fns = []
        for name in ("K0", "K1", "G0", "G1"):
            vals = np.array([float(r[f"{name}_re"]) + 1j * float(r[f"{name}_im"]) for r in rows])
            fns.append(GridFn(n, vals, ((0.0, PI),)))
        return cls.from_grid(delays, *fns)


def _alpha_part(kind: str, f: GridFn, g: GridFn, delays: DelayPair, lo: float,
                hi: float) -> GridFn:
    n = f.n_cells
    if kind == "1":
        fn = lambda x: alpha1(f, g, x, delays.a1)  # noqa: E731
    elif kind == "2":
        fn = lambda x: alpha2(f, g, x, delays.a2)  # noqa: E731
    else:
        fn = lambda x: alpha12(f, g, x, delays, kind)  # noqa: E731
    return sample_on(fn, n, lo, hi)


def kernel_parts(pot: PotentialSet) -> KernelParts:
    d = pot.delays
    a1, a2 = d.a1, d.a2
    p1, p2, q1, q2 = pot.functions()
    n = pot.n_cells
    s1 = (a1, PI - a1)
    s2 = (a2, PI - a2)
    s12 = ((a1 + a2) / 2, PI - (a1 + a2) / 2)

    def combo(terms, lo, hi):
        # sum of (coefficient, kind, f, g) alpha terms on one indicator interval
        if hi - lo <= POS_TOL:
            return None
        total = None
        for c, kind, f, g in terms:
            if not (np.any(f.values) and np.any(g.values)):
                continue
            part = _alpha_part(kind, f, g, d, lo, hi).scale(c)
            total = part if total is None else total + part
        return total

    k_even = [q1.shift_view(a2 / 2),
              combo([(-1, "1", p1, p2), (1, "1", p2, p1)], *s1),
              combo([(-1, "2", q1, q2), (1, "2", q2, q1)], *s2)]
    g_even = [q2.shift_view(a2 / 2),
              combo([(-1, "1", p1, p1), (-1, "1", p2, p2)], *s1),
              combo([(-1, "2", q1, q1), (-1, "2", q2, q2)], *s2)]
    k_odd = [p1.shift_view(a1 / 2),
             combo([(1, "pq", p2, q1), (-1, "pq", p1, q2),
                    (1, "qp", q2, p1), (-1, "qp", q1, p2)], *s12)]
    g_odd = [p2.shift_view(a1 / 2),
             combo([(-1, "pq", p1, q1), (-1, "pq", p2, q2),
                    (-1, "qp", q1, p1), (-1, "qp", q2, p2)], *s12)]
    clean = lambda parts: tuple(p for p in parts if p is not None and p.pieces)  # noqa: E731
    return KernelParts(d, n, clean(k_even), clean(k_odd), clean(g_even), clean(g_odd))


def kernels_from_parts(parts: KernelParts) -> KernelSet:
    hull = (parts.delays.a1 / 2, PI - parts.delays.a1 / 2)

    def build(even, odd, sign):
        return GridSum(list(even) + [p.scale(sign) for p in odd], hull)

    return KernelSet(parts.delays,
                     build(parts.k_even, parts.k_odd, 1.0), build(parts.k_even, parts.k_odd, -1.0),
                     build(parts.g_even, parts.g_odd, 1.0), build(parts.g_even, parts.g_odd, -1.0))


def assemble_kernels(pot: PotentialSet) -> KernelSet:
    return kernels_from_parts(kernel_parts(pot))
