"""Forward problem for a preset: kernels, characteristic functions, eigenvalues.

Compares the transform representation with the method-of-steps integrator and
prints the first few eigenvalues of all four problems.
"""
import argparse

import numpy as np

from ddirac.charfn import CharFnEvaluator, find_all_eigenvalues, seed, steps_oracle
from ddirac.kernels import assemble_kernels
from ddirac.potentials import DelayPair, preset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a1-pi", type=float, default=0.38)
    ap.add_argument("--a2-pi", type=float, default=0.85)
    ap.add_argument("--preset", default="preset-B")
    ap.add_argument("--n-max", type=int, default=5)
    args = ap.parse_args()

    pot = preset(args.preset, DelayPair.from_pi(args.a1_pi, args.a2_pi))
    ks = assemble_kernels(pot)
    lams = np.linspace(-10, 10, 41)
    print("max |Delta - steps oracle| over 41 real lambda:")
    for m in (0, 1):
        y = steps_oracle(pot, m, lams)
        for j in (1, 2):
            ev = CharFnEvaluator(ks, j, m)
            err = np.max(np.abs(np.array([ev(l) for l in lams]) - y[j - 1]))
            print(f"  m={m} j={j}: {err:.2e}")

    sp = find_all_eigenvalues(ks, args.n_max)
    print("eigenvalues (shift from the unperturbed value):")
    for (m, j, n), lam in sorted(sp.entries.items()):
        print(f"  m={m} j={j} n={n:+d}: {lam.real:+.8f}{lam.imag:+.8f}i"
              f"  (shift {abs(lam - seed(j, n)):.2e})")


if __name__ == "__main__":
    main()
