import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from ddirac.charfn import CharFnEvaluator, find_all_eigenvalues
from ddirac.gridfn import PI
from ddirac.inverse import (HadamardDelta, RegionRefusal, ScheduleError, Stage, _node_sets,
                            check_schedule, correction_A, correction_B, hadamard_delta,
                            invert_spectrum, potential_errors, recover_kernels,
                            recover_potentials, recovery_case, schedule, theta, trimmed_sup)
from ddirac.kernels import assemble_kernels
from ddirac.potentials import DelayPair, Region, classify, preset

import oracles

R1_PAIRS = {(0.38, 0.90): "1b", (0.39, 0.75): "1a", (0.38, 0.55): "2.1", (0.39, 0.46): "2.2"}


def zero_roots(j, n_h):
    lo = -n_h if j == 1 else -n_h + 1
    return {n: complex(n + (1 - j) / 2) for n in range(lo, n_h + 1)}


@pytest.fixture(scope="module")
def b_case():
    d = DelayPair.from_pi(0.38, 0.90)
    pot = preset("preset-B", d, 2048)
    ks = assemble_kernels(pot)
    return d, pot, ks, find_all_eigenvalues(ks, 200, threads=4)


# ---------------------------------------------------------------- Hadamard
def test_euler_products_plain():
    # the truncated products alone, only sign-normalized
    d1 = HadamardDelta(zero_roots(1, 200), 1, 200, tail=False)
    d2 = HadamardDelta(zero_roots(2, 200), 2, 200, tail=False)
    assert d1.sign == -1 and d2.sign == -1
    assert abs(d1(0.5) - 1) < 2e-3
    assert abs(d2(0.0) + 1) < 2e-3


def test_euler_products_completed():
    d1 = HadamardDelta(zero_roots(1, 50), 1, 50)
    d2 = HadamardDelta(zero_roots(2, 50), 2, 50)
    for lam in (0.5, 3.0, -7.25, 2.2 + 0.3j):
        assert abs(d1(lam) - np.sin(lam * PI)) < 1e-12
        assert abs(d2(lam) + np.cos(lam * PI)) < 1e-12


def test_hadamard_gaps():
    roots = zero_roots(1, 10)
    del roots[0]
    with pytest.raises(ValueError, match="lambda_"):
        HadamardDelta(roots, 1, 10)
    roots = zero_roots(2, 10)
    del roots[4], roots[-3]
    with pytest.raises(ValueError, match="gaps at n = \\[-3, 4\\]"):
        HadamardDelta(roots, 2, 10)


def test_hadamard_vs_forward(b_case):
    d, _, ks, sp = b_case
    lams = np.linspace(-5, 5, 201)
    for m in (0, 1):
        for j in (1, 2):
            h = hadamard_delta(sp, m, j, 200)
            ev = CharFnEvaluator(ks, j, m)
            assert max(abs(h(l) - ev(l)) for l in lams) <= 1e-3


def test_hadamard_sign_random(b_case):
    _, _, ks, sp = b_case
    rng = np.random.default_rng(3)
    for m in (0, 1):
        for j in (1, 2):
            h = hadamard_delta(sp, m, j, 200)
            ev = CharFnEvaluator(ks, j, m)
            for lam in rng.uniform(-20, 20, 100):
                ref = ev(lam).real
                if abs(ref) > 1e-3:
                    assert np.sign(h(lam).real) == np.sign(ref)


# ---------------------------------------------------------------- theta
def test_theta_zero():
    d1 = lambda l: np.sin(l * PI)  # noqa: E731
    d2 = lambda l: -np.cos(l * PI)  # noqa: E731
    for n in range(-5, 6):
        assert abs(theta(d1, d2, 1, n)) < 1e-15
    for lam in (0.3, 2.7 + 0.1j):
        assert abs(theta(d1, d2, 4, lam)) < 1e-15
        assert abs(theta(d1, d2, 3, lam)) < 1e-15
    with pytest.raises(ValueError):
        theta(d1, d2, 5, 0.0)


def test_theta2_direct(b_case):
    _, _, ks, sp = b_case
    h1, h2 = hadamard_delta(sp, 0, 1, 200), hadamard_delta(sp, 0, 2, 200)
    ev2 = CharFnEvaluator(ks, 2, 0)
    assert abs(theta(h1, h2, 2, 3) - (ev2(3) - ev2(-3)) / 2) < 2e-3


# ---------------------------------------------------------------- kernels
def test_recover_zero_kernels():
    d = DelayPair.from_pi(0.38, 0.9)
    h1 = HadamardDelta(zero_roots(1, 200), 1, 200)
    h2 = HadamardDelta(zero_roots(2, 200), 2, 200)
    K, G, _ = recover_kernels(h1, h2, d, 64, 2048)
    assert np.max(np.abs(K.values)) < 5e-3 and np.max(np.abs(G.values)) < 5e-3


@pytest.mark.parametrize("name,tol", [("preset-B", 2e-2), ("preset-A", 5e-2)])
def test_recover_forward_kernels(name, tol):
    d = DelayPair.from_pi(0.38, 0.9)
    ks = assemble_kernels(preset(name, d, 2048))
    lo, hi = ks.support
    for m in (0, 1):
        e1, e2 = CharFnEvaluator(ks, 1, m), CharFnEvaluator(ks, 2, m)
        K, G, used = recover_kernels(e1, e2, d, 64, 2048, "auto")
        assert used == "integer"
        assert trimmed_sup(K, ks.K(m), lo, hi, ks.cuts()) <= tol
        assert trimmed_sup(G, ks.G(m), lo, hi, ks.cuts()) <= tol


def test_kernel_error_decreases_with_nf():
    d = DelayPair.from_pi(0.39, 0.46)
    ks = assemble_kernels(preset("preset-B", d, 2048))
    lo, hi = ks.support
    e1, e2 = CharFnEvaluator(ks, 1, 0), CharFnEvaluator(ks, 2, 0)
    errs = []
    for nf in (32, 128):
        K, _, _ = recover_kernels(e1, e2, d, nf, 2048)
        errs.append(trimmed_sup(K, ks.K0, lo, hi, ks.cuts()))
    assert errs[1] < errs[0]


# ---------------------------------------------------------------- corrections
def test_corrections_zero_and_outside():
    d = DelayPair.from_pi(0.39, 0.46)
    z = preset("zero", d, 256)
    assert correction_A(z, 0.5 * PI) == (0, 0)
    assert correction_B(z, 0.5 * PI) == (0, 0)
    a = preset("preset-A", d, 256)
    assert correction_A(a, 0.1 * PI) == (0, 0)
    assert correction_B(a, 0.2 * PI) == (0, 0)


def _mid_A(fs, d, x):
    s = (d.a1 + d.a2) / 2
    pq = lambda f, g: oracles.alpha(fs[f], fs[g], x + (d.a1 - d.a2) / 2, x + s)  # noqa: E731
    qp = lambda f, g: oracles.alpha(fs[f], fs[g], x + (d.a2 - d.a1) / 2, x + s)  # noqa: E731
    A1 = -pq("p2", "q1") + pq("p1", "q2") - qp("q2", "p1") + qp("q1", "p2")
    A2 = pq("p1", "q1") + pq("p2", "q2") + qp("q1", "p1") + qp("q2", "p2")
    return A1, A2


def test_correction_A_vs_midpoint():
    for pair, x in (((0.38, 0.85), 0.55 * PI), ((0.39, 0.46), 0.5 * PI)):
        d = DelayPair.from_pi(*pair)
        pot = preset("preset-A", d, 2048)
        fs = oracles.preset_funcs(d.a1, d.a2)
        inside = (d.a1 + d.a2) / 2 < x < PI - (d.a1 + d.a2) / 2
        ref = _mid_A(fs, d, x) if inside else (0, 0)
        got = correction_A(pot, x)
        assert abs(got[0] - ref[0]) < 1e-6 and abs(got[1] - ref[1]) < 1e-6


def test_correction_B_vs_midpoint():
    for pair, x in (((0.38, 0.85), 0.5 * PI), ((0.39, 0.46), 0.5 * PI)):
        d = DelayPair.from_pi(*pair)
        pot = preset("preset-A", d, 2048)
        fs = oracles.preset_funcs(d.a1, d.a2)
        a1 = lambda f, g: oracles.alpha(fs[f], fs[g], x, x + d.a1)  # noqa: E731
        a2 = lambda f, g: oracles.alpha(fs[f], fs[g], x, x + d.a2)  # noqa: E731
        B1 = a1("p1", "p2") - a1("p2", "p1")
        B2 = a1("p1", "p1") + a1("p2", "p2")
        if d.a2 < x < PI - d.a2:
            B1 += a2("q1", "q2") - a2("q2", "q1")
            B2 += a2("q1", "q1") + a2("q2", "q2")
        got = correction_B(pot, x)
        assert abs(got[0] - B1) < 1e-6 and abs(got[1] - B2) < 1e-6


# ---------------------------------------------------------------- schedule
@pytest.mark.parametrize("pair,case", sorted(R1_PAIRS.items()))
def test_case_branches(pair, case):
    d = DelayPair.from_pi(*pair)
    assert recovery_case(d) == case
    _, stages = schedule(d)
    check_schedule(d, stages)
    owner = _node_sets(2048, stages, d)
    x = np.linspace(0, PI, 2049)
    assert np.all(owner["p"][x > d.a1 + 1e-12] >= 0)
    assert np.all(owner["q"][x > d.a2 + 1e-12] >= 0)


@given(a1=st.floats(1 / 3, 0.3999), a2=st.floats(0.4001, 0.999))
def test_schedule_sound_on_r1(a1, a2):
    d = DelayPair.from_pi(a1, a2)
    assume(classify(d) == Region.R1)
    _, stages = schedule(d)
    check_schedule(d, stages, n_probe=15)
    _node_sets(256, stages, d)


def test_schedule_detects_gap_and_bad_order():
    d = DelayPair.from_pi(0.39, 0.46)
    _, stages = schedule(d)
    with pytest.raises(ScheduleError):
        check_schedule(d, stages[1:])
    # moving the last p stage first breaks the dependency order
    with pytest.raises(ScheduleError):
        check_schedule(d, [stages[-1]] + stages[:-1])
    with pytest.raises(ScheduleError):
        check_schedule(d, stages[:-1] + [Stage("p", stages[-1].intervals, "none")])


# ---------------------------------------------------------------- recovery
def test_zero_kernels_zero_potentials():
    d = DelayPair.from_pi(0.39, 0.75)
    rep = recover_potentials(assemble_kernels(preset("zero", d, 512)), d)
    assert all(np.all(f.values == 0) for f in rep.recovered.functions())
    assert all(s.max_correction == 0 for s in rep.stages)


@pytest.mark.parametrize("pair", sorted(R1_PAIRS))
def test_forward_kernel_round_trip(pair):
    d = DelayPair.from_pi(*pair)
    pot = preset("preset-B", d, 2048)
    rep = recover_potentials(assemble_kernels(pot), d)
    assert rep.case == R1_PAIRS[pair]
    errs = potential_errors(rep.recovered, pot)
    assert max(errs.values()) <= 2e-2
    js = rep.to_json_dict()
    assert js["region"] == "R1" and js["stages"]
    assert {s["corrections"] for s in js["stages"]} <= {"none", "A", "B"}


def test_refusal_on_r2():
    d = DelayPair.from_pi(0.35, 0.5)
    ks = assemble_kernels(preset("preset-B", d, 256))
    with pytest.raises(RegionRefusal, match="R2"):
        recover_potentials(ks, d)


def test_full_pipeline(b_case):
    d, pot, _, sp = b_case
    rep = invert_spectrum(sp, d, 200, 64, 2048)
    assert rep.theta_sampling == "integer"
    assert max(potential_errors(rep.recovered, pot).values()) <= 5e-2
