"""Text map of the delay-pair regions (rows a2, columns a1, both in units of pi)."""
import argparse

import numpy as np

from ddirac.potentials import DelayPair, Region, classify

SYMBOL = {Region.R1: "1", Region.R2: "2", Region.S1: "s", Region.S2: "t",
          Region.OUT_OF_SCOPE: "."}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=60, help="cells per axis")
    args = ap.parse_args()

    axis = np.linspace(1 / 3, 0.999, args.k)
    for a2 in axis[::-1]:
        row = "".join(SYMBOL[classify(DelayPair.from_pi(a1, a2))] for a1 in axis)
        print(f"{a2:5.3f} {row}")
    print(f"      a1 from {axis[0]:.3f} to {axis[-1]:.3f}")
    print("1=R1  2=R2  s=S1  t=S2  .=out of scope")


if __name__ == "__main__":
    main()
