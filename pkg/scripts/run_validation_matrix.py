#!/usr/bin/env python3
"""Analytic-vs-simulation validation sweep over a small configuration matrix.

Each row runs the closed-form analysis and an independent slot-level
simulation, then reports the discrepancy checks of the `validate` command.

  python scripts/run_validation_matrix.py --slots 1000000 --seed 2024
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from hetslice import cli

MATRIX = [
    ("oma", "lr", dict(K=4, N=6, Tint=5, Q=1, alpha=0.05)),
    ("oma", "lr", dict(K=4, N=6, Tint=5, Q=4, alpha=0.05)),
    ("oma", "lr", dict(K=4, N=8, Tint=13, Q=4, alpha=0.01)),
    ("oma", "paoi", dict(K=4, N=6, Tint=5, Q=1, alpha=0.05)),
    ("noma", "lr", dict(K=4, N=6, Tint=1, Q=1, alpha=0.05)),
    ("noma", "lr", dict(K=4, N=8, Tint=1, Q=1, alpha=0.05)),
    ("noma", "paoi", dict(K=4, N=8, Tint=1, Q=1, alpha=0.05)),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--slots", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--strict-paper", action="store_true")
    args = ap.parse_args()

    failures = 0
    for scheme, mode, cfg in MATRIX:
        argv = ["validate", "--scheme", scheme, "--mode", mode,
                "--slots", str(args.slots), "--seed", str(args.seed)]
        for key, val in cfg.items():
            argv += [f"--{key}", str(val)]
        if args.strict_paper:
            argv.append("--strict-paper")
        print(f"== {scheme}/{mode} {cfg}")
        rc = cli.main(argv)
        failures += rc != 0
    print(f"{len(MATRIX) - failures}/{len(MATRIX)} rows PASS")
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
