"""Plot the objective trace written by ``rolemine branch-and-price --trace``.

    python scripts/plot_trace.py trace.csv [out.png] [--bound 30]

Needs matplotlib, which the package itself does not depend on.
"""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("trace")
    ap.add_argument("out", nargs="?", default="trace.png")
    ap.add_argument("--bound", type=float, help="draw a horizontal line at a known role count")
    args = ap.parse_args(argv)

    with open(args.trace, newline="") as fh:
        rows = list(csv.DictReader(fh))
    hours = [float(r["elapsed_seconds"]) / 3600 for r in rows]
    obj = [float(r["objective"]) for r in rows]

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.step(hours, obj, where="post")
    if args.bound is not None:
        ax.axhline(args.bound, linestyle="--", color="grey", label=f"known bound {args.bound:g}")
        ax.legend()
    ax.set_xlabel("hours")
    ax.set_ylabel("LP objective")
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)


if __name__ == "__main__":
    main()
