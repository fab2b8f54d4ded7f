#!/usr/bin/env python3
"""Power of the Gibbs resampling test against a sampler that ignores jump weights.

The biased interior sampler draws from the uniform law on admissible paths,
i.e. what a Metropolis chain produces when it accepts every admissible
proposal.  The exact interior sampler is run alongside as a size check.
"""
import argparse

import numpy as np

from gibbslines.fixtures import GIBBS_K3, POWER_SPEC, POWER_WINDOW, SYM, THREE_POINT
from gibbslines.stattest import GibbsTestConfig, gibbs_resampling_test


def rejection_rate(h, spec, window, curves, statistic, sampler, runs, n, seed):
    hits = 0
    for r in range(runs):
        cfg = GibbsTestConfig(spec, window, curves, statistic, n_samples=n, interior_sampler=sampler)
        hits += not gibbs_resampling_test(h, cfg, np.random.default_rng([seed, r])).passed
    return hits / runs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=70)
    args = ap.parse_args()

    cases = [
        ("three_point power fixture", THREE_POINT, POWER_SPEC, POWER_WINDOW, (0, 1), "midpoint"),
        ("three_point power fixture", THREE_POINT, POWER_SPEC, POWER_WINDOW, (0, 0), "area"),
        # the flat law of a symmetric Bernoulli walk is the walk itself: no power expected
        ("sym bernoulli k=3", SYM, GIBBS_K3, (-2, 2), (0, 1), "midpoint"),
    ]
    print(f"{'fixture':28s} {'curves':>7} {'stat':>9} {'size':>6} {'power':>6}")
    for label, h, spec, window, curves, stat in cases:
        size = rejection_rate(h, spec, window, curves, stat, "exact", args.runs, args.n, args.seed)
        power = rejection_rate(h, spec, window, curves, stat, "flat", args.runs, args.n, args.seed + 1)
        print(f"{label:28s} {str(curves):>7} {stat:>9} {size:6.2f} {power:6.2f}")


if __name__ == "__main__":
    main()
