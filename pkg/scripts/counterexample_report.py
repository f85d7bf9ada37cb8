"""Isospectral family on R2: eigenpair of M and beta-independence diagnostics."""
import argparse
import json

from ddirac.counterexample import H0_KINDS, build_beta_family, unit_eigenpair, verify_independence
from ddirac.potentials import DelayPair, aligned_n_cells


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", default="0.35:0.5,0.34:0.6",
                    help="comma-separated a1_pi:a2_pi pairs")
    ap.add_argument("--h0", choices=H0_KINDS, default="constant")
    ap.add_argument("--n-cells", type=int, default=0, help="0 picks an aligned grid")
    args = ap.parse_args()

    betas = [0, 1, 1j, 2]
    for item in args.pairs.split(","):
        d = DelayPair.from_pi(*map(float, item.split(":")))
        n = args.n_cells or aligned_n_cells(d)
        op = unit_eigenpair(args.h0, d, n)
        rep = verify_independence(build_beta_family(op, betas), betas, h=op.h)
        rep.extras.update({"n_cells": n, "eigenpair_residual": op.residual(),
                           "kernel_symmetry": op.symmetry_defect()})
        print(json.dumps(rep.to_json_dict(), indent=2))


if __name__ == "__main__":
    main()
