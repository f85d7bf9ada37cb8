"""Inverse problem: spectra -> characteristic functions -> kernels -> potentials."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .charfn import CharFnEvaluator, Spectrum
from .gridfn import PI, POS_TOL, GridFn, grid, trimmed_mask
from .kernels import KernelSet, alpha1, alpha2, alpha12
from .potentials import DelayPair, PotentialSet, Region, classify

ThetaSampling = Literal["integer", "half-integer", "auto"]


class RegionRefusal(ValueError):
    """Recovery requested on a delay pair where it is not unique."""

    def __init__(self, region: Region, what: str = "recovery"):
        self.region = region
        if what == "counterexample":
            reason = "the isospectral family is only constructed on R2"
        elif region == Region.R2:
            reason = ("four spectra do not determine the potentials uniquely "
                      "(an isospectral family exists)")
        else:
            reason = "staged recovery is only defined on R1"
        super().__init__(f"{what} refused: delays lie in region {region.value}; {reason}")


class ScheduleError(RuntimeError):
    """Internal inconsistency of the recovery schedule."""


# ---------------------------------------------------------------- Hadamard
class HadamardDelta:
    """Characteristic function rebuilt from one spectrum slice.

    Roots are paired (``n`` with ``-n`` for ``j = 1``; ``n`` with ``1 - n`` for
    ``j = 2``) so the exponential convergence factors cancel.  The overall
    sign is fixed by comparing the truncated product for the unperturbed
    roots with the leading term at ``lambda = 1/2`` (``j = 1``) or ``0``
    (``j = 2``).  With ``tail=True`` the product is completed by the exact
    unperturbed infinite product, i.e. the value is the leading term times
    ``prod (lambda_n - lambda) / (lambda_n^0 - lambda)``.
    """

    def __init__(self, roots: dict[int, complex], j: int, n_h: int, tail: bool = True):
        if j not in (1, 2):
            raise ValueError("j must be 1 or 2")
        if n_h < 1:
            raise ValueError("N_H must be >= 1")
        idx = list(range(-n_h, n_h + 1)) if j == 1 else list(range(-n_h + 1, n_h + 1))
        gaps = [n for n in idx if n not in roots]
        if j == 1 and 0 in gaps:
            raise ValueError("spectrum slice lacks lambda_{0,1}")
        if gaps:
            raise ValueError(f"spectrum slice has gaps at n = {gaps[:20]}"
                             + (" ..." if len(gaps) > 20 else ""))
        self.j, self.n_h, self.tail = j, n_h, tail
        self.roots = np.array([roots[n] for n in idx], dtype=complex)
        self.base = np.array([n + (1 - j) / 2 for n in idx], dtype=float)
        self.sign = self._reference_sign()

    def _raw(self, lam: complex, roots: np.ndarray) -> complex:
        """Truncated product in its paired form, without sign normalization."""
        if self.j == 1:
            pos = np.arange(1, self.n_h + 1)
            rp = roots[self.n_h + pos]
            rm = roots[self.n_h - pos]
            r0 = roots[self.n_h]
            return complex(PI * (r0 - lam) * np.prod((rp - lam) * (rm - lam) / (-pos * pos)))
        pos = np.arange(1, self.n_h + 1)
        nu = pos - 0.5
        rp = roots[pos - 1 + self.n_h - 1 + 1]     # index of n = pos
        rm = roots[self.n_h - pos]                  # index of n = 1 - pos
        return complex(np.prod((rp - lam) * (rm - lam) / (-nu * nu)))

    def _reference_sign(self) -> float:
        ref = 0.5 if self.j == 1 else 0.0
        lead = math.sin(ref * PI) if self.j == 1 else -math.cos(ref * PI)
        raw = self._raw(ref, self.base).real
        return 1.0 if raw * lead > 0 else -1.0

    def __call__(self, lam: complex) -> complex:
        lam = complex(lam)
        if not self.tail:
            return self.sign * self._raw(lam, self.roots)
        # leading term times prod (root - lam)/(base - lam); the factor whose
        # base root is nearest to lam is folded into the leading term (sinc)
        k = int(np.argmin(np.abs(self.base - lam.real)))
        delta = lam - self.base[k]
        if self.j == 1:
            # sin(lam pi) / (n - lam) = -(-1)^n pi sinc(lam - n)
            lead_red = -((-1) ** int(round(self.base[k]))) * PI * _sinc(delta)
        else:
            # -cos(lam pi) / (nu - lam) with cos(lam pi) = -sin(nu pi) sin(delta pi)
            nu = self.base[k]
            lead_red = -math.sin(nu * PI) * PI * _sinc(delta)
        others = np.ones(len(self.base), dtype=bool)
        others[k] = False
        ratio = np.prod((self.roots[others] - lam) / (self.base[others] - lam))
        return complex(lead_red * (self.roots[k] - lam) * ratio)


def _sinc(z: complex) -> complex:
    if abs(z) < 1e-8:
        return 1.0 - (PI * z) ** 2 / 6
    return np.sin(PI * z) / (PI * z)


def hadamard_delta(spectrum: Spectrum, m: int, j: int, n_h: int, tail: bool = True) -> HadamardDelta:
    return HadamardDelta(spectrum.slice(m, j), j, n_h, tail)


# ---------------------------------------------------------------- theta
def theta(d1: Callable[[complex], complex], d2: Callable[[complex], complex], which: int,
          lam: complex) -> complex:
    lam = complex(lam)
    if which == 1:
        return (d1(lam) + d1(-lam)) / 2
    if which == 2:
        return (d2(lam) - d2(-lam)) / 2
    if which == 3:
        return (-d1(lam) + d1(-lam)) / 2 + np.sin(lam * PI)
    if which == 4:
        return (d2(lam) + d2(-lam)) / 2 + np.cos(lam * PI)
    raise ValueError("which must be 1..4")


def _fourier_sum(coef: dict[int, complex], x: np.ndarray, n_f: int, sigma: bool) -> np.ndarray:
    out = np.zeros(len(x), dtype=complex)
    for n, c in coef.items():
        s = np.sinc(n / (n_f + 1)) if sigma else 1.0
        out += s * c * np.exp(2j * n * x)
    return out


def recover_kernels(d1, d2, delays: DelayPair, n_f: int, n_cells: int,
                    sampling: ThetaSampling = "integer", sigma: bool = True):
    """Kernels ``(K, G)`` of one sign ``m`` from its two characteristic functions.

    The Fourier coefficients on [0, pi] are
    ``c_n(K) = (-1)^n/pi (Theta_1(n) + i Theta_2(n))`` and
    ``c_n(G) = (-1)^n/pi (Theta_4(n) + i Theta_3(n))``.
    With ``sampling="half-integer"`` the ``Delta_2``-based thetas are taken at
    ``n - 1/2``; ``"auto"`` picks whichever reproduces ``d1``, ``d2`` better.
    Returns ``(K, G, sampling_used)``.
    """
    if sampling == "auto":
        best = None
        for cand in ("integer", "half-integer"):
            K, G, _ = recover_kernels(d1, d2, delays, n_f, n_cells, cand, sigma)
            err = _reproduction_error(K, G, d1, d2, delays)
            if best is None or err < best[0]:
                best = (err, K, G, cand)
        return best[1], best[2], best[3]
    off = 0.5 if sampling == "half-integer" else 0.0
    x = grid(n_cells)
    ck, cg = {}, {}
    for n in range(-n_f, n_f + 1):
        sgn = (-1) ** (n % 2)
        t1, t3 = theta(d1, d2, 1, n), theta(d1, d2, 3, n)
        t2, t4 = theta(d1, d2, 2, n - off), theta(d1, d2, 4, n - off)
        ck[n] = sgn / PI * (t1 + 1j * t2)
        cg[n] = sgn / PI * (t4 + 1j * t3)
    sup = (delays.a1 / 2, PI - delays.a1 / 2)
    K = GridFn(n_cells, _fourier_sum(ck, x, n_f, sigma), (sup,))
    G = GridFn(n_cells, _fourier_sum(cg, x, n_f, sigma), (sup,))
    return K, G, sampling


def _reproduction_error(K: GridFn, G: GridFn, d1, d2, delays: DelayPair) -> float:
    ks = KernelSet.from_grid(delays, K, K, G, G)
    e1, e2 = CharFnEvaluator(ks, 1, 0), CharFnEvaluator(ks, 2, 0)
    lams = np.linspace(-5.3, 5.3, 23)
    return max(max(abs(e1(l) - d1(l)), abs(e2(l) - d2(l))) for l in lams)


# ---------------------------------------------------------------- corrections
def _inside(x: float, lo: float, hi: float) -> bool:
    return lo < x < hi


def correction_A(pot: PotentialSet, x: float) -> tuple[complex, complex]:
    d = pot.delays
    s = (d.a1 + d.a2) / 2
    if not _inside(x, s, PI - s):
        return 0j, 0j
    p1, p2, q1, q2 = pot.functions()
    a = lambda f, g, o: alpha12(f, g, x, d, o)  # noqa: E731
    A1 = -a(p2, q1, "pq") + a(p1, q2, "pq") - a(q2, p1, "qp") + a(q1, p2, "qp")
    A2 = a(p1, q1, "pq") + a(p2, q2, "pq") + a(q1, p1, "qp") + a(q2, p2, "qp")
    return A1, A2


def correction_B(pot: PotentialSet, x: float) -> tuple[complex, complex]:
    d = pot.delays
    if not _inside(x, d.a1, PI - d.a1):
        return 0j, 0j
    p1, p2, q1, q2 = pot.functions()
    B1 = alpha1(p1, p2, x, d.a1) - alpha1(p2, p1, x, d.a1)
    B2 = alpha1(p1, p1, x, d.a1) + alpha1(p2, p2, x, d.a1)
    if _inside(x, d.a2, PI - d.a2):
        B1 += alpha2(q1, q2, x, d.a2) - alpha2(q2, q1, x, d.a2)
        B2 += alpha2(q1, q1, x, d.a2) + alpha2(q2, q2, x, d.a2)
    return B1, B2


# ---------------------------------------------------------------- schedule
@dataclass(frozen=True)
class Stage:
    target: Literal["p", "q"]
    intervals: tuple[tuple[float, float], ...]
    corrections: Literal["none", "A", "B"]


def recovery_case(delays: DelayPair) -> str:
    a1, a2 = delays.a1, delays.a2
    if a1 + a2 >= PI - 1e-12:
        return "1a" if a2 < 2 * a1 else "1b"
    return "2.1" if a2 >= PI / 2 else "2.2"


def schedule(delays: DelayPair) -> tuple[str, list[Stage]]:
    """Ordered recovery stages for a delay pair in R1.

    Each stage only uses potential values fixed by earlier stages; this is
    checked by :func:`check_schedule`.
    """
    a1, a2 = delays.a1, delays.a2
    case = recovery_case(delays)
    S = Stage
    if case == "1a":
        stages = [
            S("p", ((a1, (a1 + a2) / 2), (PI - a2 / 2 + a1 / 2, PI)), "none"),
            S("p", (((a1 + a2) / 2, 3 * a1 / 2), (PI - a1 / 2, PI - a2 / 2 + a1 / 2)), "none"),
            S("q", ((a2, a1 + a2 / 2), (PI - a1 + a2 / 2, PI)), "none"),
            S("p", ((3 * a1 / 2, PI - a1 / 2),), "none"),
            S("q", ((a1 + a2 / 2, PI - a1 + a2 / 2),), "B"),
        ]
    elif case == "1b":
        stages = [
            S("p", ((a1, 3 * a1 / 2), (PI - a1 / 2, PI)), "none"),
            S("p", ((3 * a1 / 2, (a1 + a2) / 2), (PI - a2 / 2 + a1 / 2, PI - a1 / 2)), "none"),
            S("q", ((a2, a1 + a2 / 2), (PI - a1 + a2 / 2, PI)), "none"),
            S("p", (((a1 + a2) / 2, PI - a2 / 2 + a1 / 2),), "none"),
            S("q", ((a1 + a2 / 2, PI - a1 + a2 / 2),), "B"),
        ]
    else:
        stages = [
            S("p", ((a1, 3 * a1 / 2), (PI - a1 / 2, PI)), "none"),
            S("q", ((a2, a1 + a2 / 2), (PI - a1 + a2 / 2, PI)), "none"),
            S("p", ((3 * a1 / 2, a1 + a2 / 2), (PI - a2 / 2, PI - a1 / 2)), "none"),
            S("q", ((a1 + a2 / 2, a2 + a1 / 2), (PI - a1 / 2, PI - a1 + a2 / 2)), "B"),
        ]
        if case == "2.1":
            stages += [
                S("q", ((a2 + a1 / 2, PI - a1 / 2),), "B"),
                S("p", ((a1 + a2 / 2, PI - a2 / 2),), "A"),
            ]
        else:
            stages += [
                S("q", ((a2 + a1 / 2, 3 * a2 / 2), (PI - a2 / 2, PI - a1 / 2)), "B"),
                S("p", ((a1 + a2 / 2, a2 + a1 / 2), (PI - a2 + a1 / 2, PI - a2 / 2)), "A"),
                S("q", ((3 * a2 / 2, PI - a2 / 2),), "B"),
                S("p", ((a2 + a1 / 2, PI - a2 + a1 / 2),), "A"),
            ]
    lo_of = {"p": a1, "q": a2}

    def clip(st: Stage) -> Stage:
        ivs = ((max(lo, lo_of[st.target]), min(hi, PI)) for lo, hi in st.intervals)
        return Stage(st.target, tuple(iv for iv in ivs if iv[1] - iv[0] > POS_TOL),
                     st.corrections)

    stages = [c for c in map(clip, stages) if c.intervals]
    return case, stages


def _union(intervals) -> list[tuple[float, float]]:
    out: list[list[float]] = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1] + 1e-9:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [(a, b) for a, b in out]


def _covered(lo: float, hi: float, known, tol: float = 1e-9) -> bool:
    if hi - lo <= tol:
        return True
    return any(a - tol <= lo and hi <= b + tol for a, b in _union(known))


def check_schedule(delays: DelayPair, stages: list[Stage], n_probe: int = 101) -> None:
    """Gap/overlap check and dependency check of a schedule; raises ScheduleError."""
    a1, a2 = delays.a1, delays.a2
    for target, dom in (("p", (a1, PI)), ("q", (a2, PI))):
        ivs = sorted(iv for s in stages if s.target == target for iv in s.intervals)
        pos = dom[0]
        for lo, hi in ivs:
            if abs(lo - pos) > 1e-9:
                raise ScheduleError(f"{target}: gap or overlap at {pos / PI:.6f}*pi")
            pos = hi
        if abs(pos - dom[1]) > 1e-9:
            raise ScheduleError(f"{target}: schedule ends at {pos / PI:.6f}*pi")
    # correction windows: where formulas (23)/(24) need A or B
    a_win = (a1 + a2 / 2, PI - a2 / 2)
    b_win = (a1 + a2 / 2, PI - a1 + a2 / 2)
    known = {"p": [], "q": []}
    for st in stages:
        for lo, hi in st.intervals:
            win = a_win if st.target == "p" else b_win
            overlap = min(hi, win[1]) - max(lo, win[0])
            if st.corrections == "none" and overlap > 1e-9:
                raise ScheduleError(f"stage {st} lies in a correction window")
            for x in np.linspace(lo, hi, n_probe)[1:-1]:
                for need_t, lo_t, hi_t in _requirements(delays, st.target, x):
                    if not _covered(lo_t, hi_t, known[need_t]):
                        raise ScheduleError(
                            f"stage {st.target}{st.intervals} at x={x / PI:.5f}*pi needs "
                            f"{need_t} on ({lo_t / PI:.5f}, {hi_t / PI:.5f})*pi")
        known[st.target].extend(st.intervals)


def _requirements(delays: DelayPair, target: str, x: float):
    """Potential ranges read by the correction terms for node ``x``."""
    a1, a2 = delays.a1, delays.a2
    sup = {"p": (a1, PI), "q": (a2, PI)}
    terms = []  # (f-kind, g-kind, shift, lower limit)
    if target == "p":
        y = x - a1 / 2
        s = (a1 + a2) / 2
        if s < y < PI - s:
            terms += [("p", "q", y + (a1 - a2) / 2, y + s), ("q", "p", y + (a2 - a1) / 2, y + s)]
    else:
        y = x - a2 / 2
        if a1 < y < PI - a1:
            terms.append(("p", "p", y, y + a1))
        if a2 < y < PI - a2:
            terms.append(("q", "q", y, y + a2))
    out = []
    for fk, gk, shift, lo in terms:
        t_lo = max(lo, sup[fk][0], sup[gk][0] + shift)
        t_hi = min(PI, sup[gk][1] + shift)
        if t_hi - t_lo > 1e-12:
            out.append((fk, t_lo, t_hi))
            out.append((gk, t_lo - shift, t_hi - shift))
    return out


# ---------------------------------------------------------------- recovery
@dataclass
class StageRecord:
    target: str
    intervals: list[tuple[float, float]]
    corrections: str
    max_correction: float
    n_nodes: int


@dataclass
class RecoveryReport:
    recovered: PotentialSet
    region: Region
    case: str
    stages: list[StageRecord] = field(default_factory=list)
    theta_sampling: str = "integer"

    def to_json_dict(self) -> dict:
        rows = []
        for st in self.stages:
            for lo, hi in st.intervals:
                rows.append({"target": st.target, "interval": [lo, hi],
                             "corrections": st.corrections,
                             "max_correction": st.max_correction})
        return {"region": self.region.value, "case": self.case, "stages": rows,
                "theta_sampling": self.theta_sampling}


def _node_sets(n_cells: int, stages: list[Stage], delays: DelayPair):
    """Assign each grid node of (a1, pi] / (a2, pi] to exactly one stage."""
    x = grid(n_cells)
    owner = {"p": np.full(len(x), -1), "q": np.full(len(x), -1)}
    for i, st in enumerate(stages):
        for lo, hi in st.intervals:
            closed_top = abs(hi - PI) < 1e-12
            sel = (x >= lo - 1e-12) & ((x <= hi + 1e-12) if closed_top else (x < hi - 1e-12))
            if np.any(owner[st.target][sel] >= 0):
                raise ScheduleError(f"node assigned twice in stage {i}")
            owner[st.target][sel] = i
    for t, a in (("p", delays.a1), ("q", delays.a2)):
        dom = x > a + 1e-12
        if np.any(owner[t][dom] < 0):
            raise ScheduleError(f"{t}: unassigned nodes")
    return owner


def recover_potentials(kernels: KernelSet, delays: DelayPair | None = None,
                       theta_sampling: str = "integer") -> RecoveryReport:
    delays = delays or kernels.delays
    region = classify(delays)
    if region != Region.R1:
        raise RegionRefusal(region)
    case, stages = schedule(delays)
    check_schedule(delays, stages)
    n = kernels.n_cells
    x = grid(n)
    owner = _node_sets(n, stages, delays)
    a1, a2 = delays.a1, delays.a2
    vals = {k: np.zeros(n + 1, dtype=complex) for k in ("p1", "p2", "q1", "q2")}
    known = {"p": [], "q": []}
    side = np.where(np.abs(x - PI) < 1e-12, -1, 1)

    def ev(f, pts, sd):
        out = np.empty(len(pts), dtype=complex)
        for s in (-1, 1):
            sel = sd == s
            if sel.any():
                out[sel] = f(pts[sel], side=s)
        return out

    def partial() -> PotentialSet:
        pp, qq = _union(known["p"]), _union(known["q"])
        return PotentialSet(delays, *(GridFn(n, vals[k], tuple(sup)) for k, sup in
                                      (("p1", pp), ("p2", pp), ("q1", qq), ("q2", qq))))

    records = []
    for i, st in enumerate(stages):
        idx = np.nonzero(owner[st.target] == i)[0]
        pot = partial()
        corr_max = 0.0
        if st.target == "p":
            y = x[idx] - a1 / 2
            dk = ev(kernels.K0, y, side[idx]) - ev(kernels.K1, y, side[idx])
            dg = ev(kernels.G0, y, side[idx]) - ev(kernels.G1, y, side[idx])
            c1 = np.zeros(len(idx), dtype=complex)
            c2 = np.zeros(len(idx), dtype=complex)
            if st.corrections == "A":
                for k, yy in enumerate(y):
                    c1[k], c2[k] = correction_A(pot, yy)
            vals["p1"][idx] = 0.5 * dk + c1
            vals["p2"][idx] = 0.5 * dg + c2
        else:
            y = x[idx] - a2 / 2
            sk = ev(kernels.K0, y, side[idx]) + ev(kernels.K1, y, side[idx])
            sg = ev(kernels.G0, y, side[idx]) + ev(kernels.G1, y, side[idx])
            c1 = np.zeros(len(idx), dtype=complex)
            c2 = np.zeros(len(idx), dtype=complex)
            if st.corrections == "B":
                for k, yy in enumerate(y):
                    c1[k], c2[k] = correction_B(pot, yy)
            vals["q1"][idx] = 0.5 * sk + c1
            vals["q2"][idx] = 0.5 * sg + c2
        if len(idx):
            corr_max = float(max(np.max(np.abs(c1)), np.max(np.abs(c2))))
        known[st.target].extend(st.intervals)
        records.append(StageRecord(st.target, list(st.intervals), st.corrections, corr_max,
                                   len(idx)))
    p_sup, q_sup = (a1, PI), (a2, PI)
    rec = PotentialSet(delays, GridFn(n, vals["p1"], (p_sup,)), GridFn(n, vals["p2"], (p_sup,)),
                       GridFn(n, vals["q1"], (q_sup,)), GridFn(n, vals["q2"], (q_sup,)))
    return RecoveryReport(rec, region, case, records, theta_sampling)


# ---------------------------------------------------------------- metrics
TRIM_BAND = 0.02 * PI


def stage_cuts(delays: DelayPair) -> list[float]:
    _, stages = schedule(delays)
    return sorted({e for s in stages for iv in s.intervals for e in iv})


def trimmed_rel_l2(rec: GridFn, ref: GridFn, lo: float, hi: float, cuts=(),
                   band: float = TRIM_BAND) -> float:
    x = ref.x
    m = trimmed_mask(x, lo, hi, cuts, band)
    num = np.sqrt(np.sum(np.abs(rec.values[m] - ref.values[m]) ** 2))
    den = np.sqrt(np.sum(np.abs(ref.values[m]) ** 2))
    return float(num / den) if den > 0 else float(num)


def trimmed_sup(rec, ref, lo: float, hi: float, cuts=(), band: float = TRIM_BAND,
                n_cells: int | None = None) -> float:
    x = grid(n_cells or rec.n_cells)
    m = trimmed_mask(x, lo, hi, cuts, band)
    return float(np.max(np.abs(rec(x[m]) - ref(x[m])))) if m.any() else 0.0


def potential_errors(rec: PotentialSet, ref: PotentialSet, band: float = TRIM_BAND) -> dict:
    d = ref.delays
    cuts = stage_cuts(d)
    out = {}
    for name, lo in (("p1", d.a1), ("p2", d.a1), ("q1", d.a2), ("q2", d.a2)):
        out[name] = trimmed_rel_l2(getattr(rec, name), getattr(ref, name), lo, PI, cuts, band)
    return out


def invert_spectrum(spectrum: Spectrum, delays: DelayPair, n_h: int, n_f: int, n_cells: int,
                    sampling: ThetaSampling = "auto", sigma: bool = True) -> RecoveryReport:
    """Full inverse pipeline: Hadamard products, Fourier kernels, staged recovery."""
    region = classify(delays)
    if region != Region.R1:
        raise RegionRefusal(region)
    ks = {}
    used = []
    for m in (0, 1):
        d1 = hadamard_delta(spectrum, m, 1, n_h)
        d2 = hadamard_delta(spectrum, m, 2, n_h)
        K, G, s = recover_kernels(d1, d2, delays, n_f, n_cells, sampling, sigma)
        ks[m] = (K, G)
        used.append(s)
    kernels = KernelSet.from_grid(delays, ks[0][0], ks[1][0], ks[0][1], ks[1][1])
    rep = recover_potentials(kernels, delays, theta_sampling=used[0])
    rep.kernels = kernels
    return rep
