"""Ensemble random-walk model of the distrust update.

Strips the trust mechanism down to its core: a walker's "loss" is a draw
from N(mean_shift, 1) against reference statistics fixed at mean 0, std 1,
so distrust steps +1 when the draw exceeds the leniency and -1 otherwise,
clamped at 0. Sweeping leniency for ensembles of walkers maps out how the
per-step exceedance probability 1 - Phi(leniency - shift) turns into
long-run distrust and depression.

Each walker draws one sample path from its own derived stream and every
leniency in the grid is evaluated against the same paths. Sharing paths
keeps the sweep deterministic under any parallel schedule and makes mean
distrust exactly non-increasing in leniency sample-by-sample, since raising
the threshold can only turn +1 steps into -1 steps.

The clamped walk is computed in closed form from cumulative sums:
R_t = C_t - min(0, min_{j<=t} C_j) with C the unclamped partial sums.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .rng import child_rng
from .trust import depression_value

WALKER_CSV_COLUMNS = ("leniency", "mean_shift", "mean_distrust", "mean_depression")


@dataclass(frozen=True)
class WalkerConfig:
    """One ensemble: a single loss-mean shift swept over a leniency grid."""

    mean_shift: float = 0.0
    n_walkers: int = 100
    n_steps: int = 10_000
    leniencies: tuple[float, ...] = (0.5, 1.0, 1.5, 2.0, 3.0)
    depression_strength: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "leniencies", tuple(float(v) for v in self.leniencies)
        )
        if self.n_walkers < 1:
            raise ConfigError(f"n_walkers must be >= 1, got {self.n_walkers}")
        if self.n_steps < 1:
            raise ConfigError(f"n_steps must be >= 1, got {self.n_steps}")
        if len(self.leniencies) == 0:
            raise ConfigError("leniencies grid must be nonempty")
        if any(math.isnan(v) for v in self.leniencies):
            raise ConfigError(f"leniencies contain NaN: {self.leniencies}")
        if not self.depression_strength > 0:
            raise ConfigError(
                f"depression_strength must be > 0, got {self.depression_strength}"
            )


@dataclass(frozen=True)
class WalkerRow:
    """Ensemble summary at one (leniency, shift) grid point.

    ``mean_distrust``/``mean_depression`` average the final-step values over
    walkers; ``mean_time_avg_distrust`` and ``increment_fraction`` are extra
    diagnostics and not part of the CSV schema.
    """

    leniency: float
    mean_shift: float
    mean_distrust: float
    mean_depression: float
    increment_fraction: float
    mean_time_avg_distrust: float


def clamped_walk(steps: np.ndarray) -> np.ndarray:
    """Trajectory of R_t = max(R_{t-1} + step_t, 0), R_0 = 0, vectorized
    along the last axis via the prefix-minimum identity."""
    c = np.cumsum(steps, axis=-1)
    running_min = np.minimum.accumulate(c, axis=-1)
    return c - np.minimum(running_min, 0)


def expected_increment_probability(leniency: float, mean_shift: float) -> float:
    """P[N(shift, 1) > leniency] = 1 - Phi(leniency - shift)."""
    return 0.5 * math.erfc((leniency - mean_shift) / math.sqrt(2.0))


def simulate_walkers(config: WalkerConfig) -> list[WalkerRow]:
    """Run the ensemble and summarize each leniency grid point."""
    samples = np.empty((config.n_walkers, config.n_steps))
    for w in range(config.n_walkers):
        rng = child_rng(config.seed, w)
        samples[w] = rng.normal(config.mean_shift, 1.0, config.n_steps)

    rows = []
    for lam in config.leniencies:
        exceed = samples > lam
        steps = np.where(exceed, 1, -1)
        traj = clamped_walk(steps)
        final_r = traj[:, -1].astype(np.float64)
        final_d = np.array(
            [depression_value(r, config.depression_strength) for r in final_r]
        )
        rows.append(
            WalkerRow(
                leniency=float(lam),
                mean_shift=float(config.mean_shift),
                mean_distrust=float(final_r.mean()),
                mean_depression=float(final_d.mean()),
                increment_fraction=float(exceed.mean()),
                mean_time_avg_distrust=float(traj.mean()),
            )
        )
    return rows


def write_walker_csv(rows: list[WalkerRow], path) -> None:
    """Plot-ready CSV; rows from several configs (different shifts) can be
    concatenated into one file."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(WALKER_CSV_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    f"{row.leniency:g}",
                    f"{row.mean_shift:g}",
                    f"{row.mean_distrust:.6f}",
                    f"{row.mean_depression:.6f}",
                ]
            )
