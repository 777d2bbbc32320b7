"""Per-source trust tracking and gradient depression.

Each registered source keeps a ring buffer of its last ``history_length``
training losses and a non-negative distrust level. Every time a loss is
recorded for a source, and all buffers are full, that source's recent mean
loss is compared against a weighted mean/std of every *other* source's cached
losses, where a source's entries are weighted 1/(1 + distrust) so that
already-distrusted sources influence the reference statistics less. The
comparison steps distrust by ±1 (a clamped random walk):

    distrust += -1  if mean_own < mean_others + leniency * std_others
    distrust += +1  otherwise, then clamp distrust at 0.

Distrust converts to a gradient attenuation ("depression")

    d = tanh²(0.005 * depression_strength * distrust),    0 <= d < 1,

and gradients for that source's batches are scaled by (1 - d), so updates
from sources whose losses run persistently high are progressively frozen out
while everyone else trains normally. A source whose losses return to normal
walks its distrust back down and regains full plasticity.

Depression stays 0 during warm-up (until every buffer is full) and for the
first ``hold_off`` steps afterwards; losses are recorded throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, StateError, UnknownSourceError
from .models import GradientSet

# Fixed internal scale applied to depression_strength inside the tanh; with
# the default strength of 1.0 a distrust on the order of 1000 drives the
# gradient scale 1 - d to ~0.
DEPRESSION_SCALE = 0.005


@dataclass(frozen=True)
class LapParams:
    """Hyperparameter surface of the trust mechanism.

    leniency            threshold multiplier on the reference std; larger
                        values make it less likely a well-behaved source is
                        penalized.
    depression_strength rate at which distrust converts to depression.
    history_length      losses cached per source.
    hold_off            optimizer steps after all histories fill before
                        depression activates (distrust still updates).
    """

    leniency: float = 0.8
    depression_strength: float = 1.0
    history_length: int = 25
    hold_off: int = 0

    def __post_init__(self):
        if not self.leniency > 0:
            raise ConfigError(f"lap.leniency must be > 0, got {self.leniency}")
        if not self.depression_strength > 0:
            raise ConfigError(
                f"lap.depression_strength must be > 0, got {self.depression_strength}"
            )
        if self.history_length < 2:
            raise ConfigError(
                f"lap.history_length must be >= 2, got {self.history_length}"
            )
        if self.hold_off < 0:
            raise ConfigError(f"lap.hold_off must be >= 0, got {self.hold_off}")


def depression_value(distrust: float, depression_strength: float) -> float:
    """tanh²(0.005 * strength * distrust); increasing in distrust, bounded in
    [0, 1). Clamped below 1.0 where float tanh saturates, so the resulting
    gradient scale never reaches exactly zero."""
    t = math.tanh(DEPRESSION_SCALE * depression_strength * distrust)
    return min(t * t, math.nextafter(1.0, 0.0))


class SourceRegistry:
    """Loss histories plus distrust levels for a fixed set of sources.

    The registry is the algorithm's entire mutable state. It is single-writer:
    one training loop owns it and calls :meth:`record_loss` once per optimizer
    step with the stepping source's pre-depression loss.
    """

    def __init__(self, source_ids, params: LapParams | None = None):
        self.params = params or LapParams()
        ids = [int(s) for s in source_ids]
        if len(ids) == 0:
            raise ConfigError("registry needs at least one source")
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate source ids in {ids}")
        if min(ids) < 0:
            raise ConfigError("source ids must be non-negative")
        self._ids = tuple(ids)
        self._row = {s: i for i, s in enumerate(ids)}
        h = self.params.history_length
        n = len(ids)
        self._losses = np.zeros((n, h))
        self._counts = np.zeros(n, dtype=np.int64)
        self._next = np.zeros(n, dtype=np.int64)
        self._distrust = np.zeros(n)
        self.steps_since_full = 0

    @classmethod
    def from_histories(
        cls,
        histories: dict[int, list[float]],
        params: LapParams | None = None,
        distrust: dict[int, float] | None = None,
    ) -> "SourceRegistry":
        """Build a registry from already-logged losses (offline analysis).

        Every history must hold exactly ``history_length`` values. Distrust
        levels default to 0.
        """
        reg = cls(sorted(histories), params=params)
        h = reg.params.history_length
        for s, losses in histories.items():
            if len(losses) != h:
                raise ConfigError(
                    f"history for source {s} has {len(losses)} entries, "
                    f"expected exactly {h}"
                )
            row = reg._row[s]
            reg._losses[row] = np.asarray(losses, dtype=np.float64)
            reg._counts[row] = h
        for s, r in (distrust or {}).items():
            reg.set_distrust(s, r)
        return reg

    # -- bookkeeping ------------------------------------------------------

    @property
    def source_ids(self) -> tuple[int, ...]:
        return self._ids

    @property
    def n_sources(self) -> int:
        return len(self._ids)

    @property
    def all_full(self) -> bool:
        return bool((self._counts >= self.params.history_length).all())

    def _require(self, source: int) -> int:
        try:
            return self._row[source]
        except KeyError:
            raise UnknownSourceError(
                f"source {source} is not registered (known: {self._ids})"
            ) from None

    def history(self, source: int) -> np.ndarray:
        """Entries recorded for ``source`` so far, oldest to newest."""
        row = self._require(source)
        h = self.params.history_length
        count = int(self._counts[row])
        if count < h:
            return self._losses[row, :count].copy()
        nxt = int(self._next[row])
        return np.concatenate([self._losses[row, nxt:], self._losses[row, :nxt]])

    def history_len(self, source: int) -> int:
        return int(self._counts[self._require(source)])

    def distrust(self, source: int) -> float:
        return float(self._distrust[self._require(source)])

    def set_distrust(self, source: int, value: float) -> None:
        """Overwrite a source's distrust level (analysis/testing hook)."""
        if value < 0:
            raise ConfigError(f"distrust must be >= 0, got {value}")
        self._distrust[self._require(source)] = float(value)

    # -- the update step --------------------------------------------------

    def record_loss(self, source: int, loss: float) -> None:
        """Append a loss to ``source``'s history; once every history is full,
        also update that source's distrust.

        Call with the pre-depression forward-pass loss: depression alters
        gradients, never the recorded loss.
        """
        row = self._require(source)
        loss = float(loss)
        if not math.isfinite(loss):
            raise DataError(f"loss for source {source} is not finite: {loss}")
        was_full = self.all_full
        h = self.params.history_length
        self._losses[row, self._next[row]] = loss
        self._next[row] = (self._next[row] + 1) % h
        if self._counts[row] < h:
            self._counts[row] += 1
        if was_full:
            self.steps_since_full += 1
        # a lone source has no reference statistics; its distrust stays 0
        if self.all_full and self.n_sources >= 2:
            self.update_distrust(source)

    def weighted_other_stats(self, source: int) -> tuple[float, float]:
        """Weighted mean and std of all cached losses of every other source.

        Each entry of source s is weighted 1/(1 + distrust_s); the mean is a
        convex combination of loss values (weights normalized over all
        (source, step) entries).
        """
        row = self._require(source)
        if self.n_sources < 2:
            raise ConfigError(
                "reference statistics need at least 2 sources; registry has 1"
            )
        if not self.all_full:
            raise StateError("all histories must be full before computing stats")
        h = self.params.history_length
        keep = np.arange(self.n_sources) != row
        losses = self._losses[keep]
        weights = 1.0 / (1.0 + self._distrust[keep])
        denom = h * weights.sum()
        mean = float((weights[:, None] * losses).sum() / denom)
        dev = losses - mean
        var = float((weights[:, None] * dev * dev).sum() / denom)
        return mean, math.sqrt(max(var, 0.0))

    def source_mean(self, source: int) -> float:
        """Arithmetic mean of the source's full history."""
        row = self._require(source)
        if self._counts[row] < self.params.history_length:
            raise StateError(
                f"history for source {source} holds {self._counts[row]} of "
                f"{self.params.history_length} entries"
            )
        return float(self._losses[row].mean())

    def update_distrust(self, source: int) -> float:
        """One ±1 distrust step for ``source`` against the other sources'
        weighted statistics; returns the new level.

        ``record_loss`` calls this automatically once histories are full;
        call it directly only when driving the registry by hand.
        """
        row = self._require(source)
        mean_others, std_others = self.weighted_other_stats(source)
        mean_own = self.source_mean(source)
        if mean_own < mean_others + self.params.leniency * std_others:
            self._distrust[row] -= 1.0
        else:
            self._distrust[row] += 1.0
        if self._distrust[row] < 0.0:
            self._distrust[row] = 0.0
        return float(self._distrust[row])

    # -- depression -------------------------------------------------------

    @property
    def depression_active(self) -> bool:
        return self.all_full and self.steps_since_full >= self.params.hold_off

    def depression(self, source: int) -> float:
        """Gradient attenuation for ``source`` in [0, 1); 0 during warm-up
        and hold-off."""
        row = self._require(source)
        if not self.depression_active:
            return 0.0
        return depression_value(
            float(self._distrust[row]), self.params.depression_strength
        )

    def gradient_scale(self, source: int) -> float:
        """1 - depression: the factor this source's gradients are scaled by."""
        return 1.0 - self.depression(source)

    def snapshot(self) -> list[tuple[int, float, float]]:
        """(source_id, distrust, gradient_scale) for every source, in
        registration order. One row per source per step makes the standard
        trace file."""
        return [
            (s, float(self._distrust[i]), self.gradient_scale(s))
            for i, s in enumerate(self._ids)
        ]


def scale_gradients(grads: GradientSet, depression: float) -> GradientSet:
    """Scale every gradient entry by (1 - depression).

    ``depression`` must lie in [0, 1), so gradients are only ever reduced or
    maintained, never flipped or amplified.
    """
    if not 0.0 <= depression < 1.0:
        raise ValueError(f"depression must lie in [0, 1), got {depression}")
    scale = 1.0 - depression
    return GradientSet(grads.names, [scale * g for g in grads.arrays])


@dataclass(frozen=True)
class NormalityReport:
    """Histogram and moment statistics of one source's loss history."""

    bin_edges: np.ndarray
    counts: np.ndarray
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float

    @property
    def degenerate(self) -> bool:
        """True when the history has zero variance and the shape statistics
        are undefined (reported as NaN)."""
        return self.variance == 0.0


def loss_normality_report(registry: SourceRegistry, source: int) -> NormalityReport:
    """Distribution diagnostic over a source's full loss history.

    Bins follow the Freedman-Diaconis rule with a floor of 5 bins; skewness
    and excess kurtosis are the standardized third and fourth sample moments.
    A rough check that recent losses look normal, the regime the ±1 distrust
    walk's leniency/probability analysis assumes.
    """
    values = registry.history(source)
    h = registry.params.history_length
    if len(values) < h:
        raise StateError(
            f"history for source {source} holds {len(values)} of {h} entries"
        )
    mean = float(values.mean())
    dev = values - mean
    m2 = float((dev**2).mean())
    if m2 == 0.0:
        edges = np.array([mean - 0.5, mean + 0.5])
        counts = np.array([len(values)])
        return NormalityReport(edges, counts, mean, 0.0, math.nan, math.nan)
    skew = float((dev**3).mean() / m2**1.5)
    kurt = float((dev**4).mean() / m2**2 - 3.0)

    q1, q3 = np.percentile(values, [25.0, 75.0])
    iqr = float(q3 - q1)
    span = float(values.max() - values.min())
    if iqr > 0.0 and span > 0.0:
        width = 2.0 * iqr / len(values) ** (1.0 / 3.0)
        n_bins = max(5, int(math.ceil(span / width)))
    else:
        n_bins = 5
    counts, edges = np.histogram(values, bins=n_bins)
    return NormalityReport(edges, counts, mean, m2, skew, kurt)
