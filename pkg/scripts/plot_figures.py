#!/usr/bin/env python3
"""Render the plot-data CSVs of an experiment directory with matplotlib.

Plotting is a convenience on top of the CSV artifacts; nothing in the
library depends on it.

Usage: python scripts/plot_figures.py <experiment_dir> [--out figures/]
"""

import argparse
import csv
import glob
import os
import sys


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("exp_dir")
    parser.add_argument("--out", default=None)
    args = parser.parse_args()
    out_dir = args.out or os.path.join(args.exp_dir, "figures")
    os.makedirs(out_dir, exist_ok=True)

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plot_dir = os.path.join(args.exp_dir, "plotdata")

    hist = os.path.join(plot_dir, "solution_histogram.csv")
    if os.path.exists(hist):
        _, rows = read_csv(hist)
        ns = [int(r[0]) for r in rows]
        counts = [int(r[1]) for r in rows]
        plt.figure(figsize=(5, 3.5))
        plt.bar(range(len(ns)), counts, tick_label=ns)
        plt.xlabel("number of ground states")
        plt.ylabel("instances")
        plt.tight_layout()
        plt.savefig(os.path.join(out_dir, "solution_histogram.png"), dpi=150)
        plt.close()

    for path in glob.glob(os.path.join(plot_dir, "bias_scatter_*.csv")):
        header, rows = read_csv(path)
        if not rows:
            continue
        ba = [float(r[1]) for r in rows]
        bc = [float(r[3]) for r in rows]
        label = os.path.basename(path)[len("bias_scatter_"):-len(".csv")]
        plt.figure(figsize=(4, 4))
        plt.scatter(ba, bc, s=18)
        lim = max(ba + bc + [0.1]) * 1.05
        plt.plot([0, lim], [0, lim], "r-", lw=1, label="y = x")
        plt.plot([0, lim], [0, lim / 2], "g--", lw=1, label="y = x/2")
        plt.xlabel(f"bias ({label.split('_')[0]})")
        plt.ylabel("bias (combined)")
        plt.legend()
        plt.tight_layout()
        plt.savefig(os.path.join(out_dir, f"bias_scatter_{label}.png"), dpi=150)
        plt.close()

    for path in glob.glob(os.path.join(plot_dir, "gsd_bars_*.csv")):
        header, rows = read_csv(path)
        if not rows:
            continue
        idx = [int(r[0]) for r in rows]
        plt.figure(figsize=(6, 3.5))
        width = 0.8 / (len(header) - 1)
        for c, name in enumerate(header[1:]):
            vals = [float(r[c + 1]) for r in rows]
            plt.bar([i + c * width for i in idx], vals, width=width, label=name)
        plt.xlabel("ground state")
        plt.ylabel("probability")
        plt.legend()
        plt.tight_layout()
        name = os.path.basename(path)[:-len(".csv")]
        plt.savefig(os.path.join(out_dir, f"{name}.png"), dpi=150)
        plt.close()

    for path in glob.glob(os.path.join(plot_dir, "tts_curves_*.csv")):
        header, rows = read_csv(path)
        if not rows:
            continue
        sweeps = [int(r[0]) for r in rows]
        plt.figure(figsize=(5, 4))
        for c in range(1, len(header)):
            vals = [float(r[c]) if r[c] != "inf" else float("nan") for r in rows]
            plt.plot(sweeps, vals, marker="o", lw=1)
        plt.xscale("log")
        plt.yscale("log")
        plt.xlabel("sweeps")
        plt.ylabel("average time to solution")
        plt.tight_layout()
        name = os.path.basename(path)[:-len(".csv")]
        plt.savefig(os.path.join(out_dir, f"{name}.png"), dpi=150)
        plt.close()

    print(f"figures written to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
