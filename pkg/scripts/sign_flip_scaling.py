#!/usr/bin/env python3
"""Sign-flip walk experiment: conservation, drift gap, and concentration.

Thin driver over the `bernoulli` CLI command. Walks several matrix sizes,
records the walk observables as CSV, fits the concentration scaling of the
diagonal correlation, and writes the scaling figure. Sizes double so the
drift-gap halving check applies between consecutive entries.
"""

import argparse

from dyson_traces import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="16,32,64,128", help="comma list, doubling")
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--observables", default="tau2,tau4,zeta22,zeta33")
    ap.add_argument("--gap-reps", type=int, default=8)
    ap.add_argument("--fit-samples", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="artifacts/sign_flip")
    args = ap.parse_args()

    return cli.main([
        "bernoulli",
        "--n-list", args.sizes,
        "--steps", str(args.steps),
        "--observable", args.observables,
        "--gap-reps", str(args.gap_reps),
        "--fit-samples", str(args.fit_samples),
        "--seed", str(args.seed),
        "--out", args.out,
    ])


if __name__ == "__main__":
    raise SystemExit(main())
