"""Seeded end-to-end experiment runner.

One run = one seed: build (or load) the dataset, split train/val 3:1, carve
the training set into mutually exclusive sources, mark some sources corrupt,
then train with per-epoch shuffled round-robin over sources. Every batch
holds data from a single source and triggers exactly one optimizer step.
Corruption happens at batch-assembly time, so a reliability flip mid-run is
just a schedule toggle. Validation/test metrics always come from clean data.

All randomness flows through named substreams of the run seed (data, split,
sources, init, schedule, corrupt), which makes outputs byte-identical across
repeats of the same config + seed.
"""

from __future__ import annotations

import csv
import gc
import itertools
import math
import time
from dataclasses import dataclass, field
from dataclasses import replace as dc_replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, config_to_dict, serialize_config
from .corruption import SourcePlan, apply_corruption, split_into_sources
from .datasets import (
    Dataset,
    load_csv_dataset,
    load_idx,
    make_blobs,
    split_train_val,
)
from .errors import ConfigError, NumericError
from .models import Batch, evaluate, init_params, loss_and_backward
from .optim import LapOptimizer
from .rng import child_rng
from .trust import LapParams, SourceRegistry

METRICS_CSV_COLUMNS = ("seed", "epoch", "split", "accuracy", "mean_loss")
TRACE_CSV_COLUMNS = ("step", "source_id", "distrust", "gradient_scale", "is_corrupt")
SWEEP_CSV_COLUMNS = (
    "leniency",
    "depression_strength",
    "history_length",
    "corruption_rate",
    "n_seeds",
    "mean_accuracy",
    "std_accuracy",
)

# substream keys under the run seed
_STREAM_DATA = 0
_STREAM_SPLIT = 1
_STREAM_SOURCES = 2
_STREAM_INIT = 3
_STREAM_SCHEDULE = 4
_STREAM_CORRUPT = 5


@dataclass(frozen=True)
class MetricsRecord:
    seed: int
    epoch: int
    split: str
    accuracy: float
    mean_loss: float
    gradient_scales: tuple[float, ...] = ()


@dataclass(frozen=True)
class TraceRow:
    step: int
    source_id: int
    distrust: float
    gradient_scale: float
    is_corrupt: bool


@dataclass
class RunResult:
    seed: int
    records: list[MetricsRecord]
    trace: list[TraceRow]
    source_ids: tuple[int, ...]
    corrupt_source_ids: frozenset[int]
    final_scales: dict[int, float]
    final_distrust: dict[int, float]
    params: object = None

    def final_accuracy(self, split: str) -> float:
        for record in reversed(self.records):
            if record.split == split:
                return record.accuracy
        raise KeyError(f"no records for split {split!r}")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list[RunResult] = field(default_factory=list)

    def mean_final_accuracy(self, split: str) -> float:
        return float(np.mean([r.final_accuracy(split) for r in self.runs]))


@dataclass
class PreparedRun:
    """Everything a run needs, exposed for inspection and tests."""

    seed: int
    train: Dataset
    val: Dataset
    test: Dataset | None
    plan: SourcePlan
    source_ids: tuple[int, ...]
    registry: SourceRegistry
    optimizer: LapOptimizer
    params: object
    steps_per_epoch: int


def _build_datasets(
    config: ExperimentConfig, seed: int
) -> tuple[Dataset, Dataset | None]:
    ds = config.dataset
    if ds.kind == "blobs":
        train = make_blobs(ds.blob_spec(), child_rng(seed, _STREAM_DATA, 0))
        test = make_blobs(ds.test_blob_spec(), child_rng(seed, _STREAM_DATA, 1))
        return train, test
    if ds.kind == "idx_files":
        train = load_idx(ds.train_images, ds.train_labels)
        test = None
        if ds.test_images:
            test = load_idx(ds.test_images, ds.test_labels, train.n_classes)
        return train, test
    train = load_csv_dataset(ds.path)
    test = load_csv_dataset(ds.test_path, train.n_classes) if ds.test_path else None
    return train, test


def _check_model_fits(config: ExperimentConfig, dataset: Dataset) -> None:
    if config.model.n_features != dataset.n_features:
        raise ConfigError(
            f"model.layer_widths starts at {config.model.n_features} features "
            f"but the dataset has {dataset.n_features}"
        )
    if config.model.n_classes != dataset.n_classes:
        raise ConfigError(
            f"model.layer_widths ends at {config.model.n_classes} classes "
            f"but the dataset has {dataset.n_classes}"
        )


def _source_batches(
    items_by_source: dict[int, np.ndarray],
    batch_size: int,
    rng: np.random.Generator,
) -> dict[int, list[np.ndarray]]:
    """Shuffle each source's items and chop into batches (last may be short)."""
    out = {}
    for s in sorted(items_by_source):
        items = items_by_source[s]
        order = items[rng.permutation(len(items))]
        out[s] = [
            order[lo:lo + batch_size] for lo in range(0, len(order), batch_size)
        ]
    return out


def prepare_run(config: ExperimentConfig, seed: int) -> PreparedRun:
    full, test = _build_datasets(config, seed)
    _check_model_fits(config, full)
    train, val = split_train_val(
        full, child_rng(seed, _STREAM_SPLIT), config.training.train_val_ratio
    )
    plan = split_into_sources(
        len(train),
        config.sources.n_sources,
        child_rng(seed, _STREAM_SOURCES),
        n_corrupt=config.sources.n_corrupt,
        seed=seed,
    )
    if config.sources.exclude_corrupt_from_training:
        source_ids = tuple(
            s for s in range(plan.n_sources) if s not in plan.corrupt_source_ids
        )
        if len(source_ids) < 2:
            raise ConfigError(
                "exclude_corrupt_from_training leaves fewer than 2 sources"
            )
    else:
        source_ids = tuple(range(plan.n_sources))

    registry = SourceRegistry(source_ids, params=config.lap.params())
    optimizer = LapOptimizer(
        config.optimizer.build(), registry, enabled=config.lap.enabled
    )
    params = init_params(config.model, child_rng(seed, _STREAM_INIT))
    sizes = {s: len(plan.items_of(s)) for s in source_ids}
    if config.sources.upsample:
        target = max(sizes.values())
    else:
        target = None
    per_source_steps = {
        s: math.ceil((target or sizes[s]) / config.training.batch_size)
        for s in source_ids
    }
    return PreparedRun(
        seed=seed,
        train=train,
        val=val,
        test=test,
        plan=plan,
        source_ids=source_ids,
        registry=registry,
        optimizer=optimizer,
        params=params,
        steps_per_epoch=sum(per_source_steps.values()),
    )


def total_steps(config: ExperimentConfig, seed: int = 0) -> int:
    """Planned optimizer steps for a full run (epochs * steps per epoch)."""
    return config.training.epochs * prepare_run(config, seed).steps_per_epoch


def run_single(config: ExperimentConfig, seed: int) -> RunResult:
    prep = prepare_run(config, seed)
    train, val, test = prep.train, prep.val, prep.test
    registry, optimizer, params = prep.registry, prep.optimizer, prep.params
    schedule_rng = child_rng(seed, _STREAM_SCHEDULE)
    corrupt_rng = child_rng(seed, _STREAM_CORRUPT)
    corruption = config.sources.corruption_spec()
    flip_step = config.sources.reliability_flip_step
    upsample_rng = child_rng(seed, _STREAM_SOURCES, 1)

    items_by_source = {s: prep.plan.items_of(s) for s in prep.source_ids}
    if config.sources.upsample:
        target = max(len(v) for v in items_by_source.values())
        for s in sorted(items_by_source):
            items = items_by_source[s]
            if len(items) < target:
                extra = upsample_rng.choice(items, size=target - len(items))
                items_by_source[s] = np.concatenate([items, extra])

    def corrupt_now(source: int, step: int) -> bool:
        if source not in prep.plan.corrupt_source_ids:
            return False
        return flip_step is None or step < flip_step

    records: list[MetricsRecord] = []
    trace: list[TraceRow] = []
    step = 0
    for epoch in range(config.training.epochs):
        source_order = [
            prep.source_ids[i]
            for i in schedule_rng.permutation(len(prep.source_ids))
        ]
        batches = _source_batches(
            items_by_source, config.training.batch_size, schedule_rng
        )
        max_rounds = max(len(b) for b in batches.values())
        for round_idx in range(max_rounds):
            for source in source_order:
                if round_idx >= len(batches[source]):
                    continue
                idx = batches[source][round_idx]
                batch = Batch(train.x[idx], train.y[idx], source)
                if corrupt_now(source, step):
                    batch = apply_corruption(
                        batch, corruption, train.n_classes, corrupt_rng
                    )
                try:
                    loss, grads = loss_and_backward(params, config.model, batch)
                except NumericError as exc:
                    raise NumericError(
                        f"seed {seed}, epoch {epoch}, step {step}, "
                        f"source {source}: {exc}"
                    ) from exc
                optimizer.step(params, grads, loss, source)
                for s, distrust, scale in registry.snapshot():
                    trace.append(
                        TraceRow(
                            step=step,
                            source_id=s,
                            distrust=distrust,
                            gradient_scale=scale if config.lap.enabled else 1.0,
                            is_corrupt=corrupt_now(s, step),
                        )
                    )
                step += 1

        scales = tuple(
            registry.gradient_scale(s) if config.lap.enabled else 1.0
            for s in prep.source_ids
        )
        for split_name, split_data in (("train", train), ("val", val), ("test", test)):
            if split_data is None:
                continue
            loss, acc = evaluate(params, config.model, split_data.x, split_data.y)
            records.append(
                MetricsRecord(
                    seed=seed,
                    epoch=epoch,
                    split=split_name,
                    accuracy=acc,
                    mean_loss=loss,
                    gradient_scales=scales,
                )
            )

    final_scales = {
        s: registry.gradient_scale(s) if config.lap.enabled else 1.0
        for s in prep.source_ids
    }
    return RunResult(
        seed=seed,
        records=records,
        trace=trace,
        source_ids=prep.source_ids,
        corrupt_source_ids=prep.plan.corrupt_source_ids,
        final_scales=final_scales,
        final_distrust={s: registry.distrust(s) for s in prep.source_ids},
        params=params,
    )


def write_metrics_csv(records: list[MetricsRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [r.seed, r.epoch, r.split, f"{r.accuracy:.10g}", f"{r.mean_loss:.10g}"]
            )


def write_trace_csv(trace: list[TraceRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_CSV_COLUMNS)
        for t in trace:
            writer.writerow(
                [
                    t.step,
                    t.source_id,
                    f"{t.distrust:g}",
                    f"{t.gradient_scale:.10g}",
                    int(t.is_corrupt),
                ]
            )


def run_experiment(config: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Run every seed in the config; optionally persist metrics, per-seed
    traces, and the resolved config under ``out_dir``."""
    result = ExperimentResult(config=config)
    for seed in config.seeds:
        result.runs.append(run_single(config, seed))

    target = out_dir if out_dir is not None else config.output_dir
    if target is not None:
        target = Path(target)
        target.mkdir(parents=True, exist_ok=True)
        serialize_config(config, target / "config.json")
        all_records = [r for run in result.runs for r in run.records]
        write_metrics_csv(all_records, target / "metrics.csv")
        for run in result.runs:
            write_trace_csv(run.trace, target / f"trace_seed{run.seed}.csv")
    return result


# -- parameter sweeps -----------------------------------------------------

SWEEP_AXES = (
    "leniency",
    "depression_strength",
    "history_length",
    "corruption_rate",
)


@dataclass(frozen=True)
class SweepRow:
    leniency: float
    depression_strength: float
    history_length: int
    corruption_rate: float
    n_seeds: int
    mean_accuracy: float
    std_accuracy: float


def _apply_point(config: ExperimentConfig, point: dict) -> ExperimentConfig:
    lap = config.lap
    lap_kwargs = {
        k: point[k]
        for k in ("leniency", "depression_strength", "history_length")
        if k in point
    }
    if lap_kwargs:
        lap = dc_replace(lap, **lap_kwargs)
    sources = config.sources
    if "corruption_rate" in point:
        sources = dc_replace(sources, corruption_rate=point["corruption_rate"])
    return config.replace(lap=lap, sources=sources)


def sweep(config: ExperimentConfig, grid: dict) -> list[SweepRow]:
    """Cartesian product over any of leniency / depression_strength /
    history_length / corruption_rate; each point aggregates final clean-split
    accuracy (test when present, else val) over all config seeds."""
    if not grid:
        raise ConfigError("sweep grid must be nonempty")
    for key in grid:
        if key not in SWEEP_AXES:
            raise ConfigError(
                f"sweep.{key}: unknown axis (choose from {SWEEP_AXES})"
            )
        if not grid[key]:
            raise ConfigError(f"sweep.{key}: empty value list")
    axes = [k for k in SWEEP_AXES if k in grid]
    rows = []
    for combo in itertools.product(*(grid[k] for k in axes)):
        point = dict(zip(axes, combo))
        point_config = _apply_point(config, point).replace(output_dir=None)
        result = run_experiment(point_config)
        accs = []
        for run in result.runs:
            try:
                accs.append(run.final_accuracy("test"))
            except KeyError:
                accs.append(run.final_accuracy("val"))
        rows.append(
            SweepRow(
                leniency=point_config.lap.leniency,
                depression_strength=point_config.lap.depression_strength,
                history_length=point_config.lap.history_length,
                corruption_rate=point_config.sources.corruption_rate,
                n_seeds=len(accs),
                mean_accuracy=float(np.mean(accs)),
                std_accuracy=float(np.std(accs)),
            )
        )
    return rows


def write_sweep_csv(rows: list[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    f"{r.leniency:g}",
                    f"{r.depression_strength:g}",
                    r.history_length,
                    f"{r.corruption_rate:g}",
                    r.n_seeds,
                    f"{r.mean_accuracy:.10g}",
                    f"{r.std_accuracy:.10g}",
                ]
            )


# -- overhead measurement -------------------------------------------------


def _overhead_workload(n_sources, history_length, n_steps, seed):
    rng = child_rng(seed, n_sources, history_length)
    histories = {
        s: list(rng.normal(1.0, 0.1, history_length)) for s in range(n_sources)
    }
    registry = SourceRegistry.from_histories(
        histories, params=LapParams(history_length=history_length)
    )
    losses = rng.normal(1.0, 0.1, n_steps)
    sources = [int(v) for v in rng.integers(0, n_sources, n_steps)]
    return registry, losses, sources


def _time_overhead_pass(registry, losses, sources) -> float:
    record = registry.record_loss
    depression = registry.depression
    gc_was_on = gc.isenabled()
    gc.disable()
    try:
        start = time.perf_counter()
        for s, value in zip(sources, losses):
            record(s, value)
            depression(s)
        elapsed = time.perf_counter() - start
    finally:
        if gc_was_on:
            gc.enable()
    return elapsed / len(sources)


def measure_step_overhead(
    n_sources: int,
    history_length: int,
    n_steps: int = 200,
    repeats: int = 5,
    seed: int = 0,
) -> float:
    """Seconds per optimizer step spent in the trust machinery.

    Times record_loss (including the distrust update and reference-statistic
    pass) plus the depression lookup on a prefilled registry, which is the
    work the wrapper adds on top of a plain optimizer. Minimum over repeats,
    with garbage collection paused and one untimed warm-up pass.
    """
    registry, losses, sources = _overhead_workload(
        n_sources, history_length, n_steps, seed
    )
    _time_overhead_pass(registry, losses, sources)
    return min(
        _time_overhead_pass(registry, losses, sources) for _ in range(repeats)
    )


def overhead_scaling_table(
    source_grid=(5, 10, 20, 40), history_grid=(25, 50, 100), **kwargs
) -> list[tuple[int, int, float]]:
    """Per-step overhead for every grid cell, best of ``repeats`` passes.

    Repeats are interleaved round-robin across cells so a transient load
    spike degrades one pass everywhere instead of one cell's every pass;
    the per-cell minimum then discards it.
    """
    n_steps = kwargs.pop("n_steps", 200)
    repeats = kwargs.pop("repeats", 5)
    seed = kwargs.pop("seed", 0)
    if kwargs:
        raise TypeError(f"unexpected arguments: {sorted(kwargs)}")
    cells = [(s, h) for s in source_grid for h in history_grid]
    workloads = {
        cell: _overhead_workload(cell[0], cell[1], n_steps, seed)
        for cell in cells
    }
    best = {cell: math.inf for cell in cells}
    for cell in cells:
        _time_overhead_pass(*workloads[cell])
    for _ in range(repeats):
        for cell in cells:
            best[cell] = min(best[cell], _time_overhead_pass(*workloads[cell]))
    return [(s, h, best[(s, h)]) for s, h in cells]


def fit_overhead_linear(table) -> tuple[float, float, float]:
    """Least-squares fit overhead ~ slope * (h*|S|) + intercept; returns
    (slope, intercept, r_squared)."""
    x = np.array([s * h for s, h, _ in table], dtype=np.float64)
    y = np.array([t for _, _, t in table], dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(slope), float(intercept), r2
