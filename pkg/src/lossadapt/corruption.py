"""Seeded data-corruption modes and source assignment.

Seven corruption modes cover the usual ways a data provider goes bad:

    original               identity, the reliable baseline
    chunk_shuffle          each affected input is cut into chunks which are
                           then permuted (structure destroyed, values kept)
    random_label           affected labels replaced by uniform draws from the
                           label domain
    batch_label_shuffle    the whole batch's label vector is permuted
    batch_label_flip       every label in the batch set to one label drawn
                           from the batch's own labels
    add_gaussian_noise     x += N(0, 1) per element
    replace_gaussian_noise x = N(0, 1) per element (missing-data stand-in)

``corruption_rate`` is the probability a given batch is corrupted for the two
batch_* modes, and the per-observation Bernoulli probability for the rest.
Rate 0 always degenerates to identity. All functions are pure: they take an
explicit rng and never mutate their input batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .models import Batch

ORIGINAL = "original"
CHUNK_SHUFFLE = "chunk_shuffle"
RANDOM_LABEL = "random_label"
BATCH_LABEL_SHUFFLE = "batch_label_shuffle"
BATCH_LABEL_FLIP = "batch_label_flip"
ADD_GAUSSIAN_NOISE = "add_gaussian_noise"
REPLACE_GAUSSIAN_NOISE = "replace_gaussian_noise"

MODES = (
    ORIGINAL,
    CHUNK_SHUFFLE,
    RANDOM_LABEL,
    BATCH_LABEL_SHUFFLE,
    BATCH_LABEL_FLIP,
    ADD_GAUSSIAN_NOISE,
    REPLACE_GAUSSIAN_NOISE,
)

# whole-batch coin flip; everything else draws per observation
BATCH_LEVEL_MODES = (BATCH_LABEL_SHUFFLE, BATCH_LABEL_FLIP)
LABEL_MODES = (RANDOM_LABEL, BATCH_LABEL_SHUFFLE, BATCH_LABEL_FLIP)
FEATURE_MODES = (CHUNK_SHUFFLE, ADD_GAUSSIAN_NOISE, REPLACE_GAUSSIAN_NOISE)


@dataclass(frozen=True)
class CorruptionSpec:
    """What an unreliable source does to its data.

    ``n_chunks``/``chunk_axis`` only matter for chunk_shuffle; the axis is a
    per-input axis index (0 = the feature axis of flat inputs). Noise modes
    use mean 0 and std 1, fixed.
    """

    mode: str = ORIGINAL
    corruption_rate: float = 1.0
    n_chunks: int = 4
    chunk_axis: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(
                f"corruption.mode: {self.mode!r} is not one of {MODES}"
            )
        if not 0.0 <= self.corruption_rate <= 1.0:
            raise ConfigError(
                f"corruption.corruption_rate must lie in [0, 1], "
                f"got {self.corruption_rate}"
            )
        if self.n_chunks < 1:
            raise ConfigError(
                f"corruption.n_chunks must be >= 1, got {self.n_chunks}"
            )
        if self.chunk_axis < 0:
            raise ConfigError(
                f"corruption.chunk_axis must be >= 0, got {self.chunk_axis}"
            )


@dataclass(frozen=True)
class SourcePlan:
    """A partition of dataset indices into sources, plus which sources are
    marked unreliable. Assignment covers every index exactly once."""

    n_sources: int
    corrupt_source_ids: frozenset[int]
    assignment: np.ndarray = field(repr=False)
    seed: int | None = None

    def items_of(self, source: int) -> np.ndarray:
        """Dataset indices belonging to ``source``."""
        return np.flatnonzero(self.assignment == source)

    def source_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_sources)

    def is_corrupt(self, source: int) -> bool:
        return source in self.corrupt_source_ids


def split_into_sources(
    n_items: int,
    n_sources: int,
    rng: np.random.Generator,
    n_corrupt: int = 0,
    seed: int | None = None,
) -> SourcePlan:
    """Randomly partition ``n_items`` indices into ``n_sources`` near-equal
    sources (sizes differ by at most 1) and draw ``n_corrupt`` of the sources
    to be the unreliable ones.

    ``seed`` is provenance only, recorded on the plan; randomness comes from
    ``rng``.
    """
    if n_sources < 2:
        raise ConfigError(f"n_sources must be >= 2, got {n_sources}")
    if n_sources > n_items:
        raise ConfigError(
            f"cannot split {n_items} items into {n_sources} sources"
        )
    if not 0 <= n_corrupt < n_sources:
        raise ConfigError(
            f"n_corrupt must lie in [0, n_sources), got {n_corrupt} "
            f"of {n_sources}"
        )
    perm = rng.permutation(n_items)
    assignment = np.empty(n_items, dtype=np.int64)
    assignment[perm] = np.arange(n_items) % n_sources
    corrupt = frozenset(
        int(s) for s in rng.choice(n_sources, size=n_corrupt, replace=False)
    )
    return SourcePlan(
        n_sources=n_sources,
        corrupt_source_ids=corrupt,
        assignment=assignment,
        seed=seed,
    )


def _shuffle_chunks(x_item: np.ndarray, spec: CorruptionSpec,
                    rng: np.random.Generator) -> np.ndarray:
    axis = spec.chunk_axis
    if axis >= x_item.ndim:
        raise ConfigError(
            f"corruption.chunk_axis {axis} out of range for input with "
            f"{x_item.ndim} per-item axes"
        )
    length = x_item.shape[axis]
    if spec.n_chunks > length:
        raise ConfigError(
            f"corruption.n_chunks {spec.n_chunks} exceeds axis length {length}"
        )
    chunks = np.array_split(x_item, spec.n_chunks, axis=axis)
    order = rng.permutation(spec.n_chunks)
    return np.concatenate([chunks[i] for i in order], axis=axis)


def apply_corruption(
    batch: Batch,
    spec: CorruptionSpec,
    label_domain: int,
    rng: np.random.Generator,
) -> Batch:
    """Return a copy of ``batch`` corrupted per ``spec.mode`` at
    ``spec.corruption_rate``.

    Label modes leave features untouched and feature modes leave labels
    untouched. The input batch is never modified.
    """
    n = len(batch.y)
    if n == 0:
        raise DataError("cannot corrupt an empty batch")
    if batch.y.min() < 0 or batch.y.max() >= label_domain:
        raise DataError(
            f"labels outside [0, {label_domain}): "
            f"range [{batch.y.min()}, {batch.y.max()}]"
        )
    x = batch.x.copy()
    y = batch.y.copy()
    mode, rate = spec.mode, spec.corruption_rate

    if mode == ORIGINAL or rate == 0.0:
        return Batch(x, y, batch.source)

    if mode in BATCH_LEVEL_MODES:
        if rng.random() >= rate:
            return Batch(x, y, batch.source)
        if mode == BATCH_LABEL_SHUFFLE:
            y = y[rng.permutation(n)]
        else:  # one label from the batch's own labels, applied to all
            y[:] = y[rng.integers(n)]
        return Batch(x, y, batch.source)

    mask = rng.random(n) < rate
    hit = np.flatnonzero(mask)
    if mode == RANDOM_LABEL:
        y[hit] = rng.integers(0, label_domain, size=len(hit))
    elif mode == CHUNK_SHUFFLE:
        for i in hit:
            x[i] = _shuffle_chunks(x[i], spec, rng)
    elif mode == ADD_GAUSSIAN_NOISE:
        x[hit] += rng.normal(0.0, 1.0, size=x[hit].shape)
    elif mode == REPLACE_GAUSSIAN_NOISE:
        x[hit] = rng.normal(0.0, 1.0, size=x[hit].shape)
    return Batch(x, y, batch.source)
