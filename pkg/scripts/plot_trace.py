#!/usr/bin/env python3
"""Quick look at a trace CSV: perpendicular and in-patch deviations against
the scan coordinate, with the predicted offset level.

Example:
    python scripts/plot_trace.py runs/onpatch/trace.csv -o trace.png
"""

import argparse
import csv

import numpy as np


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("trace", help="trace.csv written by a scenario run")
    ap.add_argument("-o", "--output", default=None,
                    help="output image (default: <trace dir>/trace.png)")
    args = ap.parse_args()

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(args.trace, newline="") as fh:
        rows = list(csv.reader(fh))
    data = np.array(rows[1:], dtype=float)
    cols = {name: data[:, i] for i, name in enumerate(rows[0])}

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(cols["R"], cols["d_perp"], lw=0.7, label="perpendicular deviation")
    ax.plot(cols["R"], cols["d_par"], lw=0.7, label="in-patch deviation")
    ax.plot(cols["R"], cols["predicted_offset"], "k--", lw=1.0,
            label="predicted offset")
    ax.set_xlabel("scan coordinate R")
    ax.set_ylabel("distance")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    out = args.output or args.trace.replace(".csv", ".png")
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
