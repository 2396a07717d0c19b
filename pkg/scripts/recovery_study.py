"""Hyperparameter recovery from random subsamples of GP draws.

    python3 scripts/recovery_study.py --family SE --sets 100 --out results/recovery.json
"""

import argparse
import json
from pathlib import Path

from gpvol.synth import random_hyperparameters, recovery_experiment


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--family", default="SE", choices=("SE", "Matern32"))
    ap.add_argument("--sets", type=int, default=100)
    ap.add_argument("--points", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("results/recovery.json"))
    args = ap.parse_args(argv)
    truth = random_hyperparameters(args.family, seed=args.seed)
    rep = recovery_experiment(truth, n_sets=args.sets, n_points=args.points, seed=args.seed)
    summary = rep.summary()
    for f, v in summary["median_rmse"].items():
        print(f"fraction {f:>5s}: median RMSE {v:.4f}")
    print(f"full data     : median RMSE {summary['median_full_rmse']:.4f}")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
