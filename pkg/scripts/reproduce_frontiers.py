#!/usr/bin/env python3
"""Compute the throughput vs timeliness Pareto frontiers for both access
schemes and both intermittent-user KPIs at a fixed activation probability.

Writes one CSV per (scheme, KPI) combination; optionally renders a quick
matplotlib overview when --plot is given.

  python scripts/reproduce_frontiers.py --alpha 0.01 --outdir results/
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from hetslice.cli import records_to_csv
from hetslice.config import KpiMode, Scheme
from hetslice.probcore import INFINITE
from hetslice.sweep import SweepGrid, grid_points, pareto_frontier


def frontier_records(scheme, mode, alpha, q_values):
    grid = SweepGrid(scheme, mode, Q_values=q_values)
    front = pareto_frontier(grid_points(grid, alpha))
    rows = []
    for p in front:
        c = p.config
        rows.append({"scheme": scheme.value, "mode": mode.value, "alpha": alpha,
                     "K": c.K, "N": c.N, "T_int": c.T_int, "Q": c.Q,
                     "s1": p.s1, "tau": p.tau})
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--alpha", type=float, default=0.01)
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    os.makedirs(args.outdir, exist_ok=True)

    cases = [
        ("oma_paoi", Scheme.OMA, KpiMode.PAOI, (1,)),
        ("noma_paoi", Scheme.NOMA, KpiMode.PAOI, (1,)),
        ("oma_lr_q1", Scheme.OMA, KpiMode.LR, (1,)),
        ("oma_lr_q4", Scheme.OMA, KpiMode.LR, (4,)),
        ("noma_lr", Scheme.NOMA, KpiMode.LR, (1,)),
    ]
    all_rows = {}
    for name, scheme, mode, qv in cases:
        rows = frontier_records(scheme, mode, args.alpha, qv)
        all_rows[name] = rows
        path = os.path.join(args.outdir, f"frontier_{name}_a{args.alpha}.csv")
        with open(path, "w") as fh:
            fh.write(records_to_csv(rows))
        finite = [r for r in rows if r["tau"] != INFINITE]
        top = max((r["s1"] for r in finite), default=float("nan"))
        print(f"{name}: {len(rows)} frontier points, max finite-timeliness "
              f"throughput {top:.4f} -> {path}")

    if args.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
        for name, ax, keys in (
                ("peak age", axes[0], ["oma_paoi", "noma_paoi"]),
                ("latency", axes[1], ["oma_lr_q1", "oma_lr_q4", "noma_lr"])):
            for key in keys:
                rows = [r for r in all_rows[key] if r["tau"] != INFINITE]
                ax.plot([r["s1"] for r in rows], [r["tau"] for r in rows],
                        marker=".", lw=1, label=key)
            ax.set_xlabel("broadband throughput S1 [packets/slot]")
            ax.set_ylabel(f"90th pct {name} [slots]")
            ax.set_yscale("log")
            ax.grid(alpha=0.3)
            ax.legend()
        fig.suptitle(f"frontiers at alpha = {args.alpha}")
        out = os.path.join(args.outdir, f"frontiers_a{args.alpha}.png")
        fig.savefig(out, dpi=150, bbox_inches="tight")
        print("plot ->", out)


if __name__ == "__main__":
    main()
