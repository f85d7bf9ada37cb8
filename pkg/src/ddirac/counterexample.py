"""Isospectral potential families for delay pairs in region R2."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charfn import CharFnEvaluator, find_eigenvalues
from .gridfn import PI, POS_TOL, DomainError, GridFn, LinearPieces, sample, shifted_product_integral, zeros
from .inverse import RegionRefusal
from .kernels import alpha1, alpha12, assemble_kernels
from .potentials import DelayPair, PotentialSet, Region, classify

H0_KINDS = ("constant", "bump")


def intervals(delays: DelayPair) -> tuple[float, float, float]:
    """``(c, d, e)``: M acts on (c, d); h lives on (e, pi)."""
    a1, a2 = delays.a1, delays.a2
    return a1 + a2 / 2, PI - a1, 2 * a1 + a2 / 2


def make_h0(kind: str, delays: DelayPair, n_cells: int) -> GridFn:
    _, _, e = intervals(delays)
    if kind == "constant":
        return sample(lambda x: np.ones_like(x), n_cells, (e, PI))
    if kind == "bump":
        mid, half = (e + PI) / 2, (PI - e) / 2

        def bump(x):
            s = np.clip((x - mid) / half, -1 + 1e-15, 1 - 1e-15)
            return np.exp(1 - 1 / (1 - s * s))
        return sample(bump, n_cells, (e, PI))
    raise ValueError(f"unknown h0 kind {kind!r}; choose from {H0_KINDS}")


@dataclass(frozen=True, eq=False)
class MOperator:
    delays: DelayPair
    h: GridFn
    e1: GridFn
    eta1: complex
    nodes: np.ndarray         # grid indices of the M domain
    matrix: np.ndarray        # M on node values, exact quadrature of the interpolants
    kernel_matrix: np.ndarray  # k(x_i, x_j) = h(x_i + x_j - a2/2) 1{x_i + x_j <= pi + a2/2}

    @property
    def domain(self) -> tuple[float, float]:
        c, d, _ = intervals(self.delays)
        return c, d

    def residual(self) -> float:
        """Discrete sup-norm of ``M e1 - e1`` at the domain nodes."""
        x = self.e1.x[self.nodes]
        me = np.array([apply_M(self, self.e1, xi) for xi in x])
        return float(np.max(np.abs(me - self.e1.values[self.nodes])))

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.kernel_matrix - self.kernel_matrix.T)))


def _apply(h: GridFn, f: GridFn, x: float, delays: DelayPair) -> complex:
    c, _, _ = intervals(delays)
    a2 = delays.a2
    hi = PI - x + a2 / 2
    return shifted_product_integral(f, h, -(x - a2 / 2), c, hi)


def apply_M(op: MOperator, f: GridFn, x: float) -> complex:
    """``int_c^{pi - x + a2/2} f(t) h(t + x - a2/2) dt`` for x in the M domain."""
    c, d = op.domain
    if not (c - POS_TOL <= x <= d + POS_TOL):
        raise DomainError(f"x={x / PI:.6g}*pi outside the M domain "
                          f"({c / PI:.6g}, {d / PI:.6g})*pi")
    return _apply(op.h, f, x, op.delays)


def _domain_nodes(n_cells: int, c: float, d: float) -> np.ndarray:
    x = np.linspace(0.0, PI, n_cells + 1)
    return np.nonzero((x >= c - POS_TOL) & (x <= d + POS_TOL))[0]


def unit_eigenpair(h0: GridFn | str, delays: DelayPair, n_cells: int | None = None) -> MOperator:
    """Scale ``h0`` so that the discretized M has eigenvalue 1.

    The matrix acts on node values of piecewise-linear functions supported
    on (c, d) and integrates exactly, so the returned pair satisfies
    ``M e1 = e1`` to rounding.
    """
    region = classify(delays)
    if region != Region.R2:
        raise RegionRefusal(region, "counterexample")
    if isinstance(h0, str):
        h0 = make_h0(h0, delays, n_cells or 2048)
    n = h0.n_cells
    if n_cells is not None and n_cells != n:
        raise ValueError("h0 grid does not match n_cells")
    c, d, e = intervals(delays)
    if c <= delays.a2:
        raise AssertionError("expected a1 + a2/2 > a2 on R2")
    if h0.pieces and (h0.support[0] < e - POS_TOL):
        raise DomainError("h0 must be supported in (2a1 + a2/2, pi)")
    if not np.any(h0.values != 0):
        raise ValueError("h0 is zero: the zero operator has no nonzero eigenvalue")
    nodes = _domain_nodes(n, c, d)
    x = h0.x[nodes]
    k = len(nodes)
    A = np.zeros((k, k))
    for col in range(k):
        v = np.zeros(n + 1)
        v[nodes[col]] = 1.0
        phi = GridFn(n, v, ((c, d),))
        for row in range(k):
            A[row, col] = _apply(h0, phi, x[row], delays).real
    w, vecs = np.linalg.eig(A)
    real = np.abs(w.imag) <= 1e-9 * max(1.0, np.max(np.abs(w)))
    if not np.any(real):
        raise ValueError("discretized M has no real eigenvalue; perturb h0")
    cand = np.nonzero(real)[0]
    best = cand[np.argmax(np.abs(w[cand].real))]
    mu = float(w[best].real)
    if abs(mu) <= 1e-10:
        raise ValueError(f"dominant eigenvalue {mu:.3g} is numerically zero; perturb h0")
    vec = vecs[:, best].real.copy()
    first = vec[np.nonzero(np.abs(vec) > 1e-14)[0][0]]
    vec *= np.sign(first)
    vals = np.zeros(n + 1)
    vals[nodes] = vec
    e1 = GridFn(n, vals, ((c, d),))
    # unit L2 norm of the interpolant
    norm = np.sqrt(shifted_product_integral(e1, e1, 0.0, c, d).real)
    e1 = e1.scale(1 / norm)
    h = h0.scale(1 / mu)
    hk = h(x[:, None] + x[None, :] - delays.a2 / 2)
    hk = np.where(x[:, None] + x[None, :] <= PI + delays.a2 / 2 + POS_TOL, hk, 0.0).real
    return MOperator(delays, GridFn(n, h.values.real, h.pieces), GridFn(n, e1.values.real, e1.pieces),
                     1.0 + 0j, nodes, A / mu, hk)


# ---------------------------------------------------------------- family
def beta_potentials(op: MOperator, beta: complex) -> PotentialSet:
    d_ = op.delays
    n = op.h.n_cells
    c, d, e = intervals(d_)
    ev = op.e1.values * beta
    p2_vals = ev + op.h.values
    p2 = GridFn(n, p2_vals, ((c, d), (e, PI)))
    q2 = GridFn(n, ev, ((c, d),))
    return PotentialSet(d_, zeros(n, (d_.a1, PI)), p2, zeros(n, (d_.a2, PI)), q2)


def build_beta_family(op: MOperator, betas) -> list[PotentialSet]:
    return [beta_potentials(op, complex(b)) for b in betas]


def uv_residuals(pot: PotentialSet) -> tuple[float, float]:
    """Sup over the M-domain nodes of the cancellation identities U and V."""
    d_ = pot.delays
    c, d, _ = intervals(d_)
    nodes = _domain_nodes(pot.n_cells, c, d)
    u = v = 0.0
    for x in pot.p2.x[nodes]:
        u = max(u, abs(pot.p2(x, side=_inner_side(x, c, d))
                       - alpha12(pot.p2, pot.q2, x - d_.a1 / 2, d_, "pq")))
        v = max(v, abs(pot.q2(x, side=_inner_side(x, c, d))
                       - alpha1(pot.p2, pot.p2, x - d_.a2 / 2, d_.a1)))
    return float(u), float(v)


def _inner_side(x: float, c: float, d: float) -> int:
    if abs(x - c) < POS_TOL:
        return 1
    if abs(x - d) < POS_TOL:
        return -1
    return 0


def closed_form_delta(h: GridFn, delays: DelayPair, j: int, m: int, lam: complex) -> complex:
    """Characteristic functions of the family in terms of h alone."""
    lam = complex(lam)
    lp = LinearPieces.of(h)
    th = lam * (PI + delays.a1)
    tm, tp = lp.transform(-2 * lam), lp.transform(2 * lam)
    sgn = (-1) ** m
    if j == 1:
        s = (np.exp(1j * th) * tm - np.exp(-1j * th) * tp) / 2j
        return np.sin(lam * PI) - sgn * s
    c = (np.exp(1j * th) * tm + np.exp(-1j * th) * tp) / 2
    return -np.cos(lam * PI) + sgn * c


def g_branch_residual(pot: PotentialSet, kernels=None) -> float:
    """Compare assembled G^m with its three-branch form on R2 families."""
    d_ = pot.delays
    a1, a2 = d_.a1, d_.a2
    ks = kernels or assemble_kernels(pot)
    x = pot.p2.x
    hstep = x[1]
    b = [a1 / 2, a1, PI - 1.5 * a1, 1.5 * a1 + a2 / 2, PI - a1 / 2,
         (a1 + a2) / 2, PI - a1 - a2 / 2]
    sel = (x > a1 / 2) & (x < PI - a1 / 2)
    for t in b:
        sel &= np.abs(x - t) > 1.5 * hstep
    worst = 0.0
    for m in (0, 1):
        sgn = (-1) ** m
        G = ks.G(m)
        for xi in x[sel]:
            if xi < a1 or PI - 1.5 * a1 < xi < 1.5 * a1 + a2 / 2:
                ref = 0j
            elif xi < PI - 1.5 * a1:
                ref = 0j
                if (a1 + a2) / 2 < xi:
                    ref += sgn * (pot.p2(xi + a1 / 2) - alpha12(pot.p2, pot.q2, xi, d_, "pq"))
                if xi < PI - a1 - a2 / 2:
                    ref += pot.q2(xi + a2 / 2) - alpha1(pot.p2, pot.p2, xi, a1)
            else:
                ref = sgn * pot.p2(xi + a1 / 2)
            worst = max(worst, abs(G(xi) - ref))
    return float(worst)


@dataclass
class IndependenceReport:
    delays: DelayPair
    betas: list[complex]
    max_delta_deviation: float = 0.0
    max_eig_displacement: float = 0.0
    U_residual: float = 0.0
    V_residual: float = 0.0
    closed_form_residual: float = 0.0
    K_residual: float = 0.0
    extras: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "delays": [self.delays.a1_pi, self.delays.a2_pi],
            "betas": [_fmt_beta(b) for b in self.betas],
            "max_delta_deviation": self.max_delta_deviation,
            "max_eig_displacement": self.max_eig_displacement,
            "U_residual": self.U_residual,
            "V_residual": self.V_residual,
            "closed_form_residual": self.closed_form_residual,
            "K_residual": self.K_residual,
            **self.extras,
        }


def _fmt_beta(b: complex) -> str:
    b = complex(b)
    if b.imag == 0:
        return f"{b.real:g}"
    if b.real == 0:
        return "i" if b.imag == 1 else f"{b.imag:g}i"
    return f"{b.real:g}{b.imag:+g}i"


def default_lambda_grid() -> np.ndarray:
    re = np.linspace(-10, 10, 41)
    return np.concatenate([re, re[::4] + 0.7j, re[::4] - 0.7j])


def verify_independence(family: list[PotentialSet], betas, lambda_grid=None, n_max: int = 15,
                        h: GridFn | None = None) -> IndependenceReport:
    lam = default_lambda_grid() if lambda_grid is None else np.asarray(lambda_grid, dtype=complex)
    rep = IndependenceReport(family[0].delays, [complex(b) for b in betas])
    deltas, eigs = [], []
    for pot in family:
        ks = assemble_kernels(pot)
        rep.K_residual = max(rep.K_residual, *(float(np.max(np.abs(ks.K(m).materialize().values)))
                                               for m in (0, 1)))
        u, v = uv_residuals(pot)
        rep.U_residual, rep.V_residual = max(rep.U_residual, u), max(rep.V_residual, v)
        vals, roots = {}, {}
        for m in (0, 1):
            for j in (1, 2):
                ev = CharFnEvaluator(ks, j, m)
                vals[m, j] = np.array([ev(l) for l in lam])
                if h is not None:
                    ref = np.array([closed_form_delta(h, pot.delays, j, m, l) for l in lam])
                    rep.closed_form_residual = max(rep.closed_form_residual,
                                                   float(np.max(np.abs(ref - vals[m, j]))))
                if n_max > 0:
                    roots[m, j] = find_eigenvalues(ev, n_max).entries
        deltas.append(vals)
        eigs.append(roots)
    for a in range(len(family)):
        for b in range(a + 1, len(family)):
            for key in deltas[a]:
                rep.max_delta_deviation = max(rep.max_delta_deviation,
                                              float(np.max(np.abs(deltas[a][key] - deltas[b][key]))))
                ra, rb = eigs[a].get(key, {}), eigs[b].get(key, {})
                for n in set(ra) & set(rb):
                    rep.max_eig_displacement = max(rep.max_eig_displacement, abs(ra[n] - rb[n]))
    return rep
