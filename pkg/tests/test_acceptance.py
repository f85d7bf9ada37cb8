"""Acceptance criteria 1-10, one PASS/FAIL line each.

Each test times its own work and prints a summary line outside pytest's
capture, so the lines show up in ``pytest -v`` output as well.
"""
import time

import numpy as np
import pytest

from ddirac.charfn import (CharFnEvaluator, eval_delta, find_all_eigenvalues, find_eigenvalues,
                           kappa_asymptotic, seed, steps_oracle)
from ddirac.cli import main
from ddirac.counterexample import build_beta_family, unit_eigenpair, verify_independence
from ddirac.gridfn import PI
from ddirac.inverse import (hadamard_delta, invert_spectrum, potential_errors, recover_kernels,
                            trimmed_sup)
from ddirac.kernels import assemble_kernels
from ddirac.potentials import DelayPair, Region, aligned_n_cells, classify, preset, region_predicates

MJ = [(m, j) for m in (0, 1) for j in (1, 2)]
ROUNDTRIP_PAIRS = [(0.38, 0.90), (0.39, 0.75), (0.38, 0.55), (0.39, 0.46)]
BETAS = [0, 1, 1j, 2]


@pytest.fixture
def report(capsys):
    def emit(num, ok, detail, elapsed, limit=None):
        timing = f"{elapsed:.2f}s" + (f" (limit {limit:g}s)" if limit else "")
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {num}: {detail} [{timing}]")
    return emit


def test_criterion_01_zero_spectrum(report):
    t0 = time.perf_counter()
    ks = assemble_kernels(preset("zero", DelayPair.from_pi(0.38, 0.85), 2048))
    err = 0.0
    for m, j in MJ:
        sp = find_eigenvalues(CharFnEvaluator(ks, j, m), 20)
        assert not sp.missing
        for n in range(-20, 21):
            err = max(err, abs(sp.entries[m, j, n] - (n + (1 - j) / 2)))
    dt = time.perf_counter() - t0
    ok = err <= 1e-10 and dt < 1.0
    report(1, ok, f"max |lambda - n| = {err:.2e} (tol 1e-10)", dt, 1)
    assert ok


def test_criterion_02_representation(report):
    t0 = time.perf_counter()
    lams = np.linspace(-10, 10, 41)
    err = 0.0
    for a in [(0.38, 0.85), (0.35, 0.5)]:
        d = DelayPair.from_pi(*a)
        for name in ("preset-A", "preset-B"):
            pot = preset(name, d, 2048)
            ks = assemble_kernels(pot)
            evs = {(m, j): CharFnEvaluator(ks, j, m) for m, j in MJ}
            for m in (0, 1):
                y = steps_oracle(pot, m, lams)
                for j in (1, 2):
                    got = np.array([eval_delta(evs[m, j], lam) for lam in lams])
                    err = max(err, float(np.max(np.abs(got - y[j - 1]))))
    dt = time.perf_counter() - t0
    ok = err <= 1e-5 and dt < 120
    report(2, ok, f"max |Delta - steps oracle| = {err:.2e} (tol 1e-5)", dt, 120)
    assert ok


def test_criterion_03_asymptotics(report):
    t0 = time.perf_counter()
    ks = assemble_kernels(preset("preset-B", DelayPair.from_pi(0.38, 0.85), 2048))
    worst_ratio, decay_ok, lines = 0.0, True, []
    for m, j in MJ:
        sp = find_eigenvalues(CharFnEvaluator(ks, j, m), 25)
        res = {}
        for n in (8, -8, 25, -25):
            kap = kappa_asymptotic(ks, j, m, n)
            res[n] = abs(sp.entries[m, j, n] - seed(j, n) - kap)
            if abs(n) == 25:
                worst_ratio = max(worst_ratio, res[n] / abs(kap))
        r8, r25 = max(res[8], res[-8]), max(res[25], res[-25])
        decay_ok &= r25 < r8
        lines.append(f"(m={m},j={j}) r8={r8:.1e} r25={r25:.1e}")
    dt = time.perf_counter() - t0
    ok = worst_ratio <= 0.5 and decay_ok and dt < 30
    report(3, ok, f"max residual/|kappa| at |n|=25 = {worst_ratio:.3f} (tol 0.5); "
           + "; ".join(lines), dt, 30)
    assert ok


def _preset_b_spectrum(a, n_max):
    ks = assemble_kernels(preset("preset-B", DelayPair.from_pi(*a), 2048))
    sp = find_all_eigenvalues(ks, n_max)
    assert not sp.missing
    return ks, sp


def test_criterion_04_hadamard(report):
    t0 = time.perf_counter()
    ks, sp = _preset_b_spectrum((0.38, 0.85), 200)
    lams = np.linspace(-5, 5, 201)
    err = 0.0
    for m, j in MJ:
        hd = hadamard_delta(sp, m, j, 200)
        ev = CharFnEvaluator(ks, j, m)
        err = max(err, max(abs(hd(l) - ev(l)) for l in lams))
    dt = time.perf_counter() - t0
    ok = err <= 1e-3 and dt < 30
    report(4, ok, f"max |product - Delta| = {err:.2e} (tol 1e-3)", dt, 30)
    assert ok


def test_criterion_05_kernel_recovery(report):
    t0 = time.perf_counter()
    ks, sp = _preset_b_spectrum((0.38, 0.85), 200)
    lo, hi = ks.support
    err, used = 0.0, set()
    for m in (0, 1):
        d1, d2 = hadamard_delta(sp, m, 1, 200), hadamard_delta(sp, m, 2, 200)
        K, G, s = recover_kernels(d1, d2, ks.delays, 64, 2048, "auto")
        used.add(s)
        err = max(err, trimmed_sup(K, ks.K(m), lo, hi, ks.cuts()),
                  trimmed_sup(G, ks.G(m), lo, hi, ks.cuts()))
    dt = time.perf_counter() - t0
    ok = err <= 2e-2 and dt < 60
    report(5, ok, f"trimmed sup kernel error = {err:.2e} (tol 2e-2), sampling {sorted(used)}",
           dt, 60)
    assert ok


def test_criterion_06_roundtrip(report):
    t0 = time.perf_counter()
    worst, parts = 0.0, []
    for a in ROUNDTRIP_PAIRS:
        d = DelayPair.from_pi(*a)
        pot = preset("preset-B", d, 2048)
        sp = find_all_eigenvalues(assemble_kernels(pot), 200)
        assert not sp.missing
        rep = invert_spectrum(sp, d, 200, 64, 2048)
        e = max(potential_errors(rep.recovered, pot).values())
        worst = max(worst, e)
        parts.append(f"{a}: {e:.1e} ({rep.case})")
    dt = time.perf_counter() - t0
    ok = worst <= 5e-2 and dt < 300
    report(6, ok, f"max trimmed rel L2 = {worst:.2e} (tol 5e-2); " + "; ".join(parts), dt, 300)
    assert ok


def test_criterion_07_nonuniqueness(report):
    t0 = time.perf_counter()
    checks = {"delta": (1e-6, 0.0), "eig": (1e-6, 0.0), "U": (1e-7, 0.0), "V": (1e-7, 0.0),
              "K": (1e-8, 0.0), "closed": (1e-6, 0.0)}
    for a in [(0.35, 0.5), (0.34, 0.6)]:
        d = DelayPair.from_pi(*a)
        op = unit_eigenpair("constant", d, aligned_n_cells(d))
        rep = verify_independence(build_beta_family(op, BETAS), BETAS, n_max=15, h=op.h)
        got = {"delta": rep.max_delta_deviation, "eig": rep.max_eig_displacement,
               "U": rep.U_residual, "V": rep.V_residual, "K": rep.K_residual,
               "closed": rep.closed_form_residual}
        for k, v in got.items():
            checks[k] = (checks[k][0], max(checks[k][1], v))
    dt = time.perf_counter() - t0
    ok = all(v <= tol for tol, v in checks.values()) and dt < 120
    detail = ", ".join(f"{k}={v:.1e}/{tol:g}" for k, (tol, v) in checks.items())
    report(7, ok, detail, dt, 120)
    assert ok


def test_criterion_08_operator(report):
    t0 = time.perf_counter()
    op = unit_eigenpair("constant", DelayPair.from_pi(0.35, 0.5), 2048)
    sym, res = op.symmetry_defect(), op.residual()
    dt = time.perf_counter() - t0
    ok = sym <= 1e-12 and res <= 1e-8 and dt < 10
    report(8, ok, f"symmetry defect = {sym:.1e} (tol 1e-12), |Me1 - e1| = {res:.1e} (tol 1e-8)",
           dt, 10)
    assert ok


SIX_LABELS = {(0.38, 0.90): Region.R1, (0.35, 0.50): Region.R2, (0.80, 0.45): Region.S1,
              (0.39, 0.75): Region.R1, (0.34, 0.60): Region.R2, (0.38, 0.55): Region.R1}


def test_criterion_09_regions(report):
    t0 = time.perf_counter()
    overlaps = 0
    for a1 in np.linspace(1 / 3, 0.999, 200):
        for a2 in np.linspace(1 / 3, 0.999, 200):
            preds = region_predicates(DelayPair.from_pi(a1, a2))
            overlaps += sum(preds.values()) > 1
    wrong = [a for a, r in SIX_LABELS.items() if classify(DelayPair.from_pi(*a)) != r]
    dt = time.perf_counter() - t0
    ok = overlaps == 0 and not wrong and dt < 1
    report(9, ok, f"{overlaps} overlapping cells, mislabeled {wrong}", dt, 1)
    assert ok


def test_criterion_10_refusals(report, tmp_path):
    t0 = time.perf_counter()
    spec = tmp_path / "spec.csv"
    spec.write_text("m,j,n,re,im\n0,1,0,0,0\n")
    runs = {
        "roundtrip R2": ["roundtrip", "--a1-pi", "0.35", "--a2-pi", "0.5"],
        "invert R2": ["invert", "--a1-pi", "0.34", "--a2-pi", "0.6", "--spectra", str(spec)],
        "counterexample R1": ["counterexample", "--a1-pi", "0.38", "--a2-pi", "0.9"],
    }
    codes, files = {}, []
    for name, args in runs.items():
        out = tmp_path / name.replace(" ", "_")
        codes[name] = main(args + ["--out", str(out)])
        if out.exists():
            files += [p.name for p in out.iterdir()]
    dt = time.perf_counter() - t0
    ok = all(c == 3 for c in codes.values()) and not files
    report(10, ok, f"exit codes {codes}, files written {files}", dt)
    assert ok
