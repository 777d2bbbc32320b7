#!/usr/bin/env python3
"""Random-walker ensembles over a grid of mean shifts and leniencies.

Isolates the distrust walk from any model: each walker draws losses from
N(shift, 1) against a reference N(0, 1) and steps its distrust up or down.
One CSV row per (leniency, shift) pair holds the ensemble means, ready to
plot depression against leniency for each shift.
"""

import argparse
from pathlib import Path

from lossadapt.walkers import (
    WalkerConfig,
    expected_increment_probability,
    simulate_walkers,
    write_walker_csv,
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/walkers/walkers.csv")
    ap.add_argument(
        "--shift", type=float, nargs="+", default=[0.0, 1.0, 2.0, 3.0]
    )
    ap.add_argument(
        "--leniency",
        type=float,
        nargs="+",
        default=[0.5, 1.0, 1.5, 2.0, 3.0],
    )
    ap.add_argument("--walkers", type=int, default=100)
    ap.add_argument("--steps", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rows = []
    for shift in args.shift:
        config = WalkerConfig(
            mean_shift=shift,
            n_walkers=args.walkers,
            n_steps=args.steps,
            leniencies=tuple(args.leniency),
            seed=args.seed,
        )
        rows.extend(simulate_walkers(config))

    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_walker_csv(rows, path)

    print(f"{'shift':>6} {'leniency':>8} {'p(up)':>8} {'mean R':>10} {'mean d':>8}")
    for row in rows:
        p = expected_increment_probability(row.leniency, row.mean_shift)
        print(
            f"{row.mean_shift:6g} {row.leniency:8g} {p:8.4f} "
            f"{row.mean_distrust:10.1f} {row.mean_depression:8.4f}"
        )
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
