"""Dataset construction and loading.

Three ways in: synthetic Gaussian blobs for desk-scale experiments, the
classic IDX image/label pair (big-endian binary, optionally gzipped), and a
plain numeric CSV with the label in the last column. Everything lands in the
same ``Dataset`` container: float64 features (n, d), int64 labels (n,).
"""

from __future__ import annotations

import csv
import gzip
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, FormatError

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass
class Dataset:
    """Features, integer labels, and the label-domain size."""

    x: np.ndarray
    y: np.ndarray
    n_classes: int

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.x.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {self.x.shape}")
        if self.y.shape != (len(self.x),):
            raise DataError(
                f"{len(self.x)} feature rows but {self.y.shape} labels"
            )
        if self.n_classes < 2:
            raise DataError(f"n_classes must be >= 2, got {self.n_classes}")
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= self.n_classes):
            raise DataError(
                f"labels outside [0, {self.n_classes}): "
                f"range [{self.y.min()}, {self.y.max()}]"
            )

    def __len__(self) -> int:
        return len(self.y)

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.x[indices], self.y[indices], self.n_classes)


def _circle_centers(n_classes: int, radius: float = 4.0) -> np.ndarray:
    angles = 2.0 * math.pi * np.arange(n_classes) / n_classes
    return radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


@dataclass(frozen=True)
class BlobSpec:
    """Gaussian clusters, one per class.

    ``centers`` defaults to n_classes points evenly spaced on a radius-4
    circle, which keeps classes linearly separable at spread 1.
    ``fraction_reliable`` does not affect generation; it records the share of
    sources meant to stay clean when this data is split downstream.
    """

    n_classes: int = 3
    n_per_class: int = 100
    centers: tuple[tuple[float, ...], ...] | None = None
    spread: float = 1.0
    fraction_reliable: float = 0.6

    def __post_init__(self):
        if self.n_classes < 2:
            raise ConfigError(f"blobs.n_classes must be >= 2, got {self.n_classes}")
        if self.n_per_class < 1:
            raise ConfigError(
                f"blobs.n_per_class must be >= 1, got {self.n_per_class}"
            )
        if self.spread < 0:
            raise ConfigError(f"blobs.spread must be >= 0, got {self.spread}")
        if not 0.0 < self.fraction_reliable <= 1.0:
            raise ConfigError(
                f"blobs.fraction_reliable must lie in (0, 1], "
                f"got {self.fraction_reliable}"
            )
        if self.centers is not None:
            object.__setattr__(
                self,
                "centers",
                tuple(tuple(float(v) for v in c) for c in self.centers),
            )
            if len(self.centers) != self.n_classes:
                raise ConfigError(
                    f"blobs.centers: {len(self.centers)} centers for "
                    f"{self.n_classes} classes"
                )
            dims = {len(c) for c in self.centers}
            if len(dims) != 1:
                raise ConfigError("blobs.centers: inconsistent dimensions")
            if len(set(self.centers)) != len(self.centers):
                raise ConfigError("blobs.centers must be pairwise distinct")

    def center_array(self) -> np.ndarray:
        if self.centers is None:
            return _circle_centers(self.n_classes)
        return np.asarray(self.centers, dtype=np.float64)


def make_blobs(spec: BlobSpec, rng: np.random.Generator) -> Dataset:
    """Sample n_per_class points around each class center with isotropic
    Gaussian spread; rows are shuffled so class runs don't leak into
    downstream splits."""
    centers = spec.center_array()
    dim = centers.shape[1]
    n = spec.n_classes * spec.n_per_class
    x = np.empty((n, dim))
    y = np.empty(n, dtype=np.int64)
    for c in range(spec.n_classes):
        lo = c * spec.n_per_class
        hi = lo + spec.n_per_class
        x[lo:hi] = centers[c] + spec.spread * rng.normal(0.0, 1.0, (spec.n_per_class, dim))
        y[lo:hi] = c
    order = rng.permutation(n)
    return Dataset(x[order], y[order], spec.n_classes)


def _read_binary(path) -> bytes:
    with open(path, "rb") as fh:
        head = fh.read(2)
        rest = fh.read()
    raw = head + rest
    if head == b"\x1f\x8b":
        try:
            return gzip.decompress(raw)
        except OSError as exc:
            raise FormatError(f"{path}: bad gzip stream: {exc}") from None
    return raw


def _parse_idx(raw: bytes, path, magic: int, rank: int) -> np.ndarray:
    header = 4 * (1 + rank)
    if len(raw) < header:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    fields = struct.unpack(f">{1 + rank}I", raw[:header])
    if fields[0] != magic:
        raise FormatError(
            f"{path}: bad magic 0x{fields[0]:08x}, expected 0x{magic:08x}"
        )
    dims = fields[1:]
    expected = int(np.prod(dims, dtype=np.int64))
    payload = raw[header:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload holds {len(payload)} bytes, header promises "
            f"{expected}"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def load_idx(images_path, labels_path, n_classes: int | None = None) -> Dataset:
    """Read an IDX image tensor and label vector pair.

    Images are (count, rows, cols) unsigned bytes, flattened to rows*cols
    features and scaled to [0, 1] (255 -> 1.0). Plain or gzipped files are
    detected by content, not extension.
    """
    images = _parse_idx(_read_binary(images_path), images_path, IDX_IMAGE_MAGIC, 3)
    labels = _parse_idx(_read_binary(labels_path), labels_path, IDX_LABEL_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"{images_path} holds {images.shape[0]} images but "
            f"{labels_path} holds {labels.shape[0]} labels"
        )
    n, rows, cols = images.shape
    x = images.reshape(n, rows * cols).astype(np.float64) / 255.0
    y = labels.astype(np.int64)
    if n_classes is None:
        n_classes = int(y.max()) + 1 if n else 2
    return Dataset(x, y, n_classes)


def load_csv_dataset(path, n_classes: int | None = None) -> Dataset:
    """Numeric CSV, label in the last column; a non-numeric first row is
    treated as a header."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise FormatError(f"{path}: empty file")

    def numeric(row):
        try:
            return [float(v) for v in row]
        except ValueError:
            return None

    if numeric(rows[0]) is None:
        rows = rows[1:]
        if not rows:
            raise FormatError(f"{path}: header but no data rows")
    width = len(rows[0])
    if width < 2:
        raise FormatError(f"{path}: rows need >= 2 columns (features, label)")
    parsed = []
    for i, row in enumerate(rows):
        values = numeric(row)
        if values is None or len(values) != width:
            raise FormatError(f"{path}: bad row {i + 1}: {row!r}")
        parsed.append(values)
    data = np.asarray(parsed)
    y_raw = data[:, -1]
    if not np.all(y_raw == np.round(y_raw)):
        raise FormatError(f"{path}: last column must hold integer labels")
    y = y_raw.astype(np.int64)
    if y.min() < 0:
        raise FormatError(f"{path}: negative label {y.min()}")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    return Dataset(data[:, :-1], y, max(n_classes, 2))


def split_train_val(
    dataset: Dataset, rng: np.random.Generator, ratio: tuple[int, int] = (3, 1)
) -> tuple[Dataset, Dataset]:
    """Random split by the given train:val ratio (default 3:1)."""
    a, b = int(ratio[0]), int(ratio[1])
    if a < 1 or b < 1:
        raise ConfigError(f"train/val ratio parts must be >= 1, got {ratio}")
    n = len(dataset)
    if n < 2:
        raise DataError(f"need >= 2 items to split, got {n}")
    n_val = max(1, (n * b) // (a + b))
    order = rng.permutation(n)
    return dataset.subset(order[n_val:]), dataset.subset(order[:n_val])
