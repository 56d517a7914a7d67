#!/usr/bin/env python3
"""Run the whole exact-arithmetic verification chain and collect artifacts.

Drives the CLI: the three trace-derivative identities, the stationary flow
equations for every beta and size up to 5, and the closed-form moment tables.
Everything lands under one artifact directory; the exit code is the worst
exit code seen.
"""

import argparse
from pathlib import Path

from dyson_traces import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="artifacts/exact", help="artifact root")
    ap.add_argument("--n-max", type=int, default=8)
    ap.add_argument("--deg-max", type=int, default=12)
    ap.add_argument("--tuples", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    root = Path(args.out)
    worst = cli.main([
        "verify-identities",
        "--n-max", str(args.n_max),
        "--deg-max", str(args.deg_max),
        "--tuples", str(args.tuples),
        "--seed", str(args.seed),
        "--out", str(root / "identities"),
    ])
    for beta in (1, 2, 4):
        for dim in range(1, 6):
            rc = cli.main([
                "stationarity", "--beta", str(beta), "--dim", str(dim),
                "--seed", str(args.seed),
                "--out", str(root / f"stationarity_beta{beta}_dim{dim}"),
            ])
            worst = max(worst, rc)
    for beta in (1, 2, 4):
        rc = cli.main([
            "moments", "--beta", str(beta), "--order", "12",
            "--out", str(root / f"moments_beta{beta}"),
        ])
        worst = max(worst, rc)
    print(f"artifacts under {root}/ (exit {worst})")
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
