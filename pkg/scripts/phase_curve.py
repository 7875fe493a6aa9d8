"""Connectivity and minimum-degree curves of G(n, p) across the offset c.

    python scripts/phase_curve.py [--n 2000] [--trials 100] [--seed 5]

Prints one CSV block per property; the fraction should climb from near 0 to
near 1 as c moves from negative to positive.
"""

import argparse

import numpy as np

from hetfilter.experiment import GeneratorSpec, ThresholdSpec, TrialSpec, phase_sweep, sweep_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    grid = [float(c) for c in np.arange(-6, 6.5, 1.5)]
    for mode, r, target in (("connectivity", 1, None), ("min-degree", 2, 2)):
        spec = TrialSpec(GeneratorSpec("er", args.n, r=r, c=0.0), ThresholdSpec(fixed=0), mode,
                         args.trials, args.seed, min_degree_target=target)
        print(f"# {mode} (r={r})")
        print(sweep_csv(phase_sweep(spec, "c", grid, args.workers)), end="")


if __name__ == "__main__":
    main()
