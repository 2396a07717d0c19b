"""Simulate GARCH(1,1) paths and refit them by maximum likelihood.

    python3 scripts/garch_refit.py --paths 20 --n 10000
"""

import argparse

import numpy as np

from gpvol.garch import GarchParams, GarchSpec, fit
from gpvol.synth import simulate_garch


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--paths", type=int, default=20)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--params", type=float, nargs=3, default=(0.05, 0.10, 0.85), metavar=("A0", "A1", "B1"))
    args = ap.parse_args(argv)
    a0, a1, b1 = args.params
    truth = GarchParams(a0, [a1], [b1])
    est = []
    for s in range(args.paths):
        p = fit(GarchSpec(), simulate_garch(truth, args.n, s))
        est.append([p.alpha0, p.alpha[0], p.beta[0]])
        print(f"path {s:3d}: alpha0 {p.alpha0:.4f} alpha1 {p.alpha[0]:.4f} beta1 {p.beta[0]:.4f}")
    med = np.median(est, axis=0)
    print(f"median     : alpha0 {med[0]:.4f} alpha1 {med[1]:.4f} beta1 {med[2]:.4f}")


if __name__ == "__main__":
    main()
