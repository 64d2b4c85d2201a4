#!/usr/bin/env python3
"""Plot convergence histories emitted by the benchmark harness.

Reads every srpcr_ap_rhs*.csv and baseline_rhs*.csv in this directory;
thick black line = first right-hand side, thin gray = the subsequent ones.
"""
import csv
import glob
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
fig, axes = plt.subplots(1, 2, figsize=(11, 4), sharey=True)
for ax, stem, title in (
    (axes[0], "srpcr_ap_rhs", "with recycling"),
    (axes[1], "baseline_rhs", "baseline"),
):
    for path in sorted(glob.glob(os.path.join(here, stem + "*.csv"))):
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            continue
        mv = [int(r["mvec_cumulative"]) for r in rows]
        res = [float(r["relres"]) for r in rows]
        first = rows[0]["rhs_index"] == "1"
        ax.semilogy(
            mv,
            res,
            color="black" if first else "gray",
            linewidth=2.0 if first else 0.8,
        )
    ax.set_title(title)
    ax.set_xlabel("matrix-vector products")
    ax.grid(True, which="both", alpha=0.3)
axes[0].set_ylabel("relative residual")
fig.tight_layout()
fig.savefig(os.path.join(here, "convergence.png"), dpi=150)
print("wrote", os.path.join(here, "convergence.png"))
