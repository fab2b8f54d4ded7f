#!/usr/bin/env python3
"""Scaled convergence of avoiding Bernoulli bridges to avoiding Brownian bridges.

Prints the KS distance and p-value per horizon and writes the full result
as JSON.  Example:

    python scripts/convergence_experiment.py --k 2 --T 512 1024 2048 --n 20000
"""
import argparse
import json
import time

import numpy as np

from gibbslines.hamiltonian import parse_hamiltonian
from gibbslines.io import dumps
from gibbslines.stattest import convergence_test


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hamiltonian", default="bernoulli:0.5")
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--x", type=float, nargs="+", default=None, help="limit entry data (default 1, -1, ...)")
    ap.add_argument("--T", type=int, nargs="+", default=[512, 1024, 2048])
    ap.add_argument("--t", type=float, default=0.5)
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--reference", choices=("brownian", "gaussian"), default=None)
    ap.add_argument("--unmatched", action="store_true", help="use limit data for every T")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    x = args.x if args.x is not None else [float(args.k - 1 - 2 * i) for i in range(args.k)]
    reference = args.reference or ("gaussian" if args.k == 1 else "brownian")
    start = time.perf_counter()
    res = convergence_test(parse_hamiltonian(args.hamiltonian), args.p, args.k, x, x, args.T, args.t, args.n,
                           np.random.default_rng(args.seed), reference=reference, matched=not args.unmatched)
    print(f"{'T':>6} {'data':>14} {'distance':>9} {'p':>8}")
    for T, d, rep in zip(res.T_list, res.distances, res.reports):
        print(f"{T:6d} {json.dumps(rep.metadata['x']):>14} {d:9.4f} {rep.p_value:8.4f}")
    print(f"monotone={res.monotone} final_p={res.final_p:.4f} passed={res.passed} "
          f"({time.perf_counter() - start:.0f}s)")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(dumps(res))


if __name__ == "__main__":
    main()
