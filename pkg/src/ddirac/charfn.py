"""Characteristic functions, a method-of-steps oracle, and eigenvalue search."""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .gridfn import PI, DomainError, _phi
from .kernels import KernelSet
from .potentials import PotentialSet

log = logging.getLogger(__name__)


def _leading(j: int, lam):
    return np.sin(lam * PI) if j == 1 else -np.cos(lam * PI)


def _leading_deriv(j: int, lam):
    return PI * np.cos(lam * PI) if j == 1 else PI * np.sin(lam * PI)


class CharFnEvaluator:
    """``Delta_j^m`` for one kernel set, evaluated exactly for the interpolants.

    All parts of ``K^m`` and ``G^m`` are refined onto one common set of linear
    segments, so a value (and derivative) costs a single vectorized pass.
    """

    def __init__(self, kernels: KernelSet, j: int, m: int):
        if j not in (1, 2) or m not in (0, 1):
            raise ValueError("j must be 1 or 2 and m must be 0 or 1")
        self.kernels, self.j, self.m = kernels, j, m
        K, G = kernels.K(m), kernels.G(m)
        pts = [np.array(K.support + G.support)]
        for part in K.parts + G.parts:
            pts.append(part.breakpoints())
        lo, hi = kernels.support
        b = np.unique(np.concatenate(pts))
        b = b[(b >= lo - 1e-12) & (b <= hi + 1e-12)]
        if len(b) < 2:
            b = np.array([lo, hi])
        self._x0 = b[:-1]
        self._len = np.diff(b)
        self._k = (K(b[:-1], side=1), K(b[1:], side=-1))
        self._g = (G(b[:-1], side=1), G(b[1:], side=-1))

    def __repr__(self):
        return f"CharFnEvaluator(j={self.j}, m={self.m})"

    def _transforms(self, omega: complex, deriv: bool):
        """``int f e^{i omega x}`` for f = K, G (and omega-derivatives)."""
        iw = 1j * omega
        z = iw * self._len
        base = np.exp(iw * self._x0) * self._len
        e1, e2 = _phi(z, 1), _phi(z, 2)
        a, b = e1 - e2, e2
        (k0, k1), (g0, g1) = self._k, self._g
        tk = np.sum(base * (k0 * a + k1 * b))
        tg = np.sum(base * (g0 * a + g1 * b))
        if not deriv:
            return tk, tg
        e3 = _phi(z, 3)
        ix0, il = 1j * self._x0, 1j * self._len
        da, db = e2 - e3, e3
        dk = np.sum(base * (ix0 * (k0 * a + k1 * b) + il * (k0 * da + k1 * db)))
        dg = np.sum(base * (ix0 * (g0 * a + g1 * b) + il * (g0 * da + g1 * db)))
        return tk, tg, dk, dg

    def _evaluate(self, lam: complex, deriv: bool):
        e = np.exp(1j * lam * PI)
        # cos/sin of lam(pi - 2x) from e^{+-i lam pi} e^{-+2i lam x}
        if deriv:
            tkm, tgm, dtkm, dtgm = self._transforms(-2 * lam, True)
            tkp, tgp, dtkp, dtgp = self._transforms(2 * lam, True)
        else:
            tkm, tgm = self._transforms(-2 * lam, False)
            tkp, tgp = self._transforms(2 * lam, False)
        kp, km = e * tkm, tkp / e
        gp, gm = e * tgm, tgp / e
        kc, ks = (kp + km) / 2, (kp - km) / 2j
        gc, gs = (gp + gm) / 2, (gp - gm) / 2j
        if self.j == 1:
            val = _leading(1, lam) + kc - gs
        else:
            val = _leading(2, lam) + ks + gc
        if not deriv:
            return complex(val)
        dkp = 1j * PI * kp - 2 * e * dtkm
        dkm = -1j * PI * km + 2 * dtkp / e
        dgp = 1j * PI * gp - 2 * e * dtgm
        dgm = -1j * PI * gm + 2 * dtgp / e
        dkc, dks = (dkp + dkm) / 2, (dkp - dkm) / 2j
        dgc, dgs = (dgp + dgm) / 2, (dgp - dgm) / 2j
        if self.j == 1:
            der = _leading_deriv(1, lam) + dkc - dgs
        else:
            der = _leading_deriv(2, lam) + dks + dgc
        return complex(val), complex(der)

    def value_and_deriv(self, lam: complex) -> tuple[complex, complex]:
        return self._evaluate(complex(lam), True)

    def __call__(self, lam: complex) -> complex:
        return self._evaluate(complex(lam), False)


def eval_delta(ev: CharFnEvaluator, lam: complex) -> complex:
    return ev(lam)


def eval_delta_deriv(ev: CharFnEvaluator, lam: complex) -> complex:
    return ev.value_and_deriv(lam)[1]


# ------------------------------------------------------------------ oracle
ORACLE_STEPS = 8192


def _oracle_mesh(pot: PotentialSet, max_step: float) -> np.ndarray:
    """Step mesh that lands on every coefficient jump and first-order kink."""
    a1, a2 = pot.delays.a1, pot.delays.a2
    ends = {e for f in pot.functions() for piece in f.pieces for e in piece}
    bps = {0.0, PI}
    for e in ends:
        for s in (0.0, a1, a2):
            if 0 < e + s < PI:
                bps.add(e + s)
    bps = np.array(sorted(bps))
    bps = bps[np.concatenate(([True], np.diff(bps) > 1e-12))]
    segs = []
    for lo, hi in zip(bps[:-1], bps[1:]):
        k = max(1, math.ceil((hi - lo) / max_step - 1e-9))
        segs.append(np.linspace(lo, hi, k + 1)[:-1])
    segs.append([PI])
    return np.concatenate(segs)


def _hermite_weights(mesh: np.ndarray, xq: np.ndarray):
    """Indices and cubic Hermite weights for retarded arguments ``xq``."""
    k = np.clip(np.searchsorted(mesh, xq, side="right") - 1, 0, len(mesh) - 2)
    hk = mesh[k + 1] - mesh[k]
    t = (xq - mesh[k]) / hk
    t2, t3 = t * t, t * t * t
    w = np.stack([2 * t3 - 3 * t2 + 1, (t3 - 2 * t2 + t) * hk, -2 * t3 + 3 * t2,
                  (t3 - t2) * hk])
    return k, w


def steps_oracle(pot: PotentialSet, m: int, lam, steps: int = ORACLE_STEPS):
    """Integrate the delayed Dirac system from ``Y(0) = (0, -1)`` to ``x = pi``.

    Classical RK4 on a mesh of spacing at most ``pi/steps`` whose nodes include
    the coefficient jumps; retarded values come from cubic Hermite
    interpolation of the stored solution and its one-sided derivatives.
    ``lam`` may be a scalar or an array; returns ``(y1(pi), y2(pi))``.
    """
    d = pot.delays
    if d.a1 < PI / 3 - 1e-12 or d.a2 < PI / 3 - 1e-12:
        raise DomainError("method of steps needs both delays >= pi/3")
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex))
    mesh = _oracle_mesh(pot, PI / steps)
    n = len(mesh) - 1
    h = np.diff(mesh)
    sgn = (-1.0) ** m

    # coefficient values at stage points: start (right limit), middle, end (left limit)
    x0, xm, x1 = mesh[:-1], mesh[:-1] + h / 2, mesh[1:]
    coef = {}
    for name, f in zip(("p1", "p2", "q1", "q2"), pot.functions()):
        coef[name] = (f(x0, side=1), f(xm), f(x1, side=-1))

    # retarded Hermite lookups for the three stage positions and both delays
    look = {}
    for key, xs in (("0", x0), ("m", xm), ("1", x1)):
        for a_name, a in (("a1", d.a1), ("a2", d.a2)):
            xr = xs - a
            valid = xr > -1e-13
            k, w = _hermite_weights(mesh, np.clip(xr, 0.0, None))
            look[key, a_name] = (valid, k, w)

    nl = len(lam_arr)
    Y = np.zeros((n + 1, 2, nl), dtype=complex)
    D0 = np.zeros((n, 2, nl), dtype=complex)   # derivative at left end of step (right limit)
    D1 = np.zeros((n, 2, nl), dtype=complex)   # derivative at right end of step (left limit)
    Y[0, 1] = -1.0

    def delayed(key, a_name, i):
        valid, k, w = look[key, a_name]
        if not valid[i]:
            return None
        kk = k[i]
        return (w[0, i] * Y[kk] + w[1, i] * D0[kk] + w[2, i] * Y[kk + 1]
                + w[3, i] * D1[kk])

    def rhs(y, stage, key, i, yd1, yd2):
        fx = np.zeros((2, nl), dtype=complex)
        if yd1 is not None:
            p1, p2 = coef["p1"][stage][i], coef["p2"][stage][i]
            if p1 != 0 or p2 != 0:
                fx[0] += sgn * (p1 * yd1[0] + p2 * yd1[1])
                fx[1] += sgn * (p2 * yd1[0] - p1 * yd1[1])
        if yd2 is not None:
            q1, q2 = coef["q1"][stage][i], coef["q2"][stage][i]
            if q1 != 0 or q2 != 0:
                fx[0] += q1 * yd2[0] + q2 * yd2[1]
                fx[1] += q2 * yd2[0] - q1 * yd2[1]
        # B Y' = lam Y - F  with B = [[0, 1], [-1, 0]]
        return np.stack([-lam_arr * y[1] + fx[1], lam_arr * y[0] - fx[0]])

    for i in range(n):
        hi = h[i]
        y = Y[i]
        r0 = (delayed("0", "a1", i), delayed("0", "a2", i))
        rm = (delayed("m", "a1", i), delayed("m", "a2", i))
        r1 = (delayed("1", "a1", i), delayed("1", "a2", i))
        k1 = rhs(y, 0, "0", i, *r0)
        k2 = rhs(y + hi / 2 * k1, 1, "m", i, *rm)
        k3 = rhs(y + hi / 2 * k2, 1, "m", i, *rm)
        k4 = rhs(y + hi * k3, 2, "1", i, *r1)
        Y[i + 1] = y + hi / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        D0[i] = k1
        D1[i] = rhs(Y[i + 1], 2, "1", i, *r1)
    y1, y2 = Y[-1, 0], Y[-1, 1]
    if np.ndim(lam) == 0:
        return complex(y1[0]), complex(y2[0])
    return y1, y2


# ------------------------------------------------------------------ spectra
@dataclass
class Spectrum:
    """Eigenvalues ``lambda_{n,j}^m`` keyed by ``(m, j, n)``."""

    entries: dict[tuple[int, int, int], complex] = field(default_factory=dict)
    n_max: int = 0
    missing: dict[tuple[int, int, int], str] = field(default_factory=dict)

    def slice(self, m: int, j: int) -> dict[int, complex]:
        return {n: v for (mm, jj, n), v in self.entries.items() if mm == m and jj == j}

    def merge(self, other: "Spectrum") -> "Spectrum":
        out = Spectrum(dict(self.entries), max(self.n_max, other.n_max), dict(self.missing))
        out.entries.update(other.entries)
        out.missing.update(other.missing)
        return out

    def localization_violations(self, n_loc: int = 5) -> list[tuple[int, int, int]]:
        bad = []
        for (m, j, n), lam in self.entries.items():
            if abs(n) >= n_loc and abs(lam - (n + (1 - j) / 2)) > 0.5:
                bad.append((m, j, n))
        return sorted(bad)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("m,j,n,re,im\n")
        for m in (0, 1):
            for j in (1, 2):
                for n in sorted(self.slice(m, j)):
                    v = self.entries[m, j, n]
                    buf.write(f"{m},{j},{n},{v.real:.15g},{v.imag:.15g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Spectrum":
        entries = {}
        for r in csv.DictReader(io.StringIO(text)):
            entries[int(r["m"]), int(r["j"]), int(r["n"])] = complex(float(r["re"]), float(r["im"]))
        n_max = max((abs(k[2]) for k in entries), default=0)
        return cls(entries, n_max)


def seed(j: int, n: int) -> float:
    return n + (1 - j) / 2


def newton_root(ev: CharFnEvaluator, start: complex, tol: float = 1e-10, max_iter: int = 50,
                strip: float = 2.0):
    """Damped complex Newton; returns ``(root, residual, converged)``."""
    lam = complex(start)
    val, der = ev.value_and_deriv(lam)
    res = abs(val)
    for _ in range(max_iter):
        if res <= tol:
            # one polishing step keeps the root at rounding level
            if der != 0:
                cand = lam - val / der
                cv = abs(ev(cand))
                if cv <= res:
                    lam, res = cand, cv
            return lam, res, True
        if der == 0:
            break
        step = val / der
        t = 1.0
        for _ in range(30):
            cand = lam - t * step
            cval, cder = ev.value_and_deriv(cand)
            if abs(cval) < res:
                break
            t *= 0.5
        else:
            break
        lam, val, der, res = cand, cval, cder, abs(cval)
        if abs(lam.imag) > strip:
            break
    return lam, res, res <= tol


FALLBACK_OFFSETS = (0.25, -0.25, 0.25j, -0.25j, 0.5, -0.5, 0.5 + 0.5j, 0.5 - 0.5j,
                    -0.5 + 0.5j, -0.5 - 0.5j)


def _multistart(ev: CharFnEvaluator, start: complex, tol: float, strip: float, best):
    """Retry Newton from fixed offsets of the seed; keep the root nearest the seed."""
    found = []
    for off in FALLBACK_OFFSETS:
        lam, res, ok = newton_root(ev, start + off, tol=tol, strip=strip)
        if ok:
            found.append(lam)
    if not found:
        return best[0], best[1], False
    lam = min(found, key=lambda z: abs(z - start))
    return lam, abs(ev(lam)), True


def find_eigenvalues(ev: CharFnEvaluator, n_max: int, tol: float = 1e-10,
                     strip: float = 2.0) -> Spectrum:
    """Roots of ``Delta_j^m`` seeded at ``n + (1-j)/2`` for ``|n| <= n_max``."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    spec = Spectrum(n_max=n_max)
    for n in range(-n_max, n_max + 1):
        lam, res, ok = newton_root(ev, seed(ev.j, n), tol=tol, strip=strip)
        if not ok:
            lam, res, ok = _multistart(ev, seed(ev.j, n), tol, strip, (lam, res))
        if ok:
            spec.entries[ev.m, ev.j, n] = lam
        else:
            spec.missing[ev.m, ev.j, n] = f"no convergence (|Delta|={res:.3g} at {lam:.6g})"
            log.warning("root m=%d j=%d n=%d did not converge: |Delta|=%.3g",
                        ev.m, ev.j, n, res)
    return spec


def find_all_eigenvalues(kernels: KernelSet, n_max: int, threads: int = 1) -> Spectrum:
    """All four ``(m, j)`` slices, merged in a fixed order."""
    evs = [CharFnEvaluator(kernels, j, m) for m in (0, 1) for j in (1, 2)]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=min(threads, 4)) as pool:
            parts = list(pool.map(lambda e: find_eigenvalues(e, n_max), evs))
    else:
        parts = [find_eigenvalues(e, n_max) for e in evs]
    out = Spectrum(n_max=n_max)
    for p in parts:
        out = out.merge(p)
    return out


def kappa_asymptotic(kernels: KernelSet, j: int, m: int, n: int) -> complex:
    """Leading-order eigenvalue shift from the kernels' Fourier integrals.

    Substituting ``lambda = seed + kappa`` into the transform representation
    and keeping first-order terms gives
    ``kappa = -(1/pi) [int K cos(w x) + int G sin(w x)]`` with ``w = 2n``
    (``j = 1``) or ``w = 2n - 1`` (``j = 2``).
    """
    w = 2 * n if j == 1 else 2 * n - 1
    K, G = kernels.K(m), kernels.G(m)
    kp, km = K.transform(w), K.transform(-w)
    gp, gm = G.transform(w), G.transform(-w)
    k_cos = (kp + km) / 2
    g_sin = (gp - gm) / 2j
    return complex(-(k_cos + g_sin) / PI)
