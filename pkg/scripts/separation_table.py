#!/usr/bin/env python3
"""Monte Carlo avoidance frequencies next to the separation lower bound."""
import argparse

import numpy as np

from gibbslines.brownian import separation_bound
from gibbslines.hamiltonian import parse_hamiltonian, tilt_to_mean
from gibbslines.scaling import separation_frequency


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--hamiltonian", default="bernoulli:0.5")
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--T", type=int, default=256)
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    h = parse_hamiltonian(args.hamiltonian)
    sigma2 = tilt_to_mean(h, args.p).sigma2
    rng = np.random.default_rng(args.seed)
    print(f"{'k':>2} {'C':>4} {'frequency':>10} {'ci':>19} {'bound':>10}")
    for k in (2, 3, 4):
        for C in (0.5, 1.0, 2.0, 3.0, 4.0):
            est = separation_frequency(h, args.p, args.T, C, k, args.n, rng)
            bound = separation_bound(C, sigma2, k)
            print(f"{k:2d} {C:4.1f} {est.z_hat:10.4f} [{est.ci_low:.4f}, {est.ci_high:.4f}] {bound:10.3g}")


if __name__ == "__main__":
    main()
