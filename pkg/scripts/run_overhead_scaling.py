#!/usr/bin/env python3
"""Measure per-step bookkeeping cost across source-count and history grids
and fit it against h * |S|."""

import argparse
import csv
from pathlib import Path

from lossadapt.experiment import fit_overhead_linear, overhead_scaling_table


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/overhead/overhead.csv")
    ap.add_argument("--sources", type=int, nargs="+", default=[5, 10, 20, 40])
    ap.add_argument("--history", type=int, nargs="+", default=[25, 50, 100])
    ap.add_argument("--repeats", type=int, default=9)
    args = ap.parse_args()

    table = overhead_scaling_table(
        source_grid=tuple(args.sources),
        history_grid=tuple(args.history),
        repeats=args.repeats,
    )
    slope, intercept, r2 = fit_overhead_linear(table)

    print(f"{'|S|':>5} {'h':>5} {'h*|S|':>7} {'us/step':>9}")
    for s, h, t in table:
        print(f"{s:5d} {h:5d} {s * h:7d} {t * 1e6:9.2f}")
    print(
        f"fit: {slope * 1e9:.2f} ns per history cell + "
        f"{intercept * 1e6:.2f} us base, R^2 {r2:.4f}"
    )

    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_sources", "history_length", "seconds_per_step"])
        for s, h, t in table:
            writer.writerow([s, h, f"{t:.10g}"])
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
