"""Timing harness: sequential vs block-parallel forward and backward passes.

Schedules, angles and upstream gradients are prepared before the clock
starts, so only the forward construction or the gradient sweep is timed.
"""
from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .backward import jvp_parallel, jvp_sequential
from .forward import forward_parallel, forward_serial, random_angles
from .schedule import ParameterError, build_circle_schedule

CSV_FIELDS = ("n", "variant", "workers", "precision", "mean_ms", "std_ms", "reps")
PRECISIONS = {"f32": np.float32, "f64": np.float64}
VARIANTS = ("forward_parallel", "backward_parallel", "forward_sequential", "backward_sequential")
DEFAULT_VARIANTS = ("forward_parallel", "backward_parallel")


@dataclass
class BenchRecord:
    n: int
    variant: str
    workers: int
    precision: str
    mean_ms: float
    std_ms: float
    reps: int

    def __post_init__(self):
        if self.reps < 3:
            raise ParameterError("a benchmark needs at least 3 repetitions")


def _time_ms(fn, reps: int) -> np.ndarray:
    fn()  # warm-up: thread pools, caches
    out = np.empty(reps)
    for r in range(reps):
        t0 = time.perf_counter()
        fn()
        out[r] = (time.perf_counter() - t0) * 1e3
    return out


def bench_one(n: int, variant: str, workers: int = 1, reps: int = 10, precision: str = "f64",
              seed: int = 0) -> BenchRecord:
    if variant not in VARIANTS:
        raise ParameterError(f"unknown variant {variant!r}")
    if precision not in PRECISIONS:
        raise ParameterError(f"unknown precision {precision!r}")
    if reps < 3:
        raise ParameterError("reps must be >= 3")
    dtype = PRECISIONS[precision]
    rng = np.random.default_rng(seed)
    s = build_circle_schedule(n)
    theta = random_angles(s, rng)
    if variant.endswith("sequential"):
        workers = 1

    if variant == "forward_parallel":
        def fn():
            forward_parallel(s, theta, workers=workers, dtype=dtype)
    elif variant == "forward_sequential":
        def fn():
            forward_serial(s, theta, dtype=dtype)
    else:
        u = forward_parallel(s, theta, dtype=dtype)
        gamma = rng.standard_normal((n, n)).astype(dtype)
        if variant == "backward_parallel":
            def fn():
                jvp_parallel(s, theta, u, gamma, workers=workers, dtype=dtype)
        else:
            def fn():
                jvp_sequential(s, theta, u, gamma, dtype=dtype)

    times = _time_ms(fn, reps)
    return BenchRecord(n=n, variant=variant, workers=workers, precision=precision,
                       mean_ms=float(times.mean()), std_ms=float(times.std(ddof=1)), reps=reps)


def run_bench(n_list: Sequence[int], workers_list: Sequence[int], reps: int = 10,
              precision: str = "f64", variants: Iterable[str] = DEFAULT_VARIANTS,
              seed: int = 0, progress=None) -> list[BenchRecord]:
    """One record per (n, workers, variant); sequential variants run once per n."""
    if any(n < 2 for n in n_list):
        raise ParameterError("every n must be >= 2")
    records = []
    for n in n_list:
        for variant in variants:
            ws = [1] if variant.endswith("sequential") else workers_list
            for w in ws:
                rec = bench_one(n, variant, w, reps, precision, seed)
                records.append(rec)
                if progress is not None:
                    progress(rec)
    return records


def write_csv(records: Sequence[BenchRecord], dest) -> None:
    """Write records to a path or an open text stream."""
    if not hasattr(dest, "write"):
        with open(dest, "w", newline="") as fh:
            write_csv(records, fh)
        return
    writer = csv.DictWriter(dest, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        row = asdict(rec)
        row["mean_ms"] = f"{rec.mean_ms:.6f}"
        row["std_ms"] = f"{rec.std_ms:.6f}"
        writer.writerow(row)


def read_csv(path) -> list[BenchRecord]:
    with open(path, newline="") as fh:
        return [BenchRecord(n=int(r["n"]), variant=r["variant"], workers=int(r["workers"]),
                            precision=r["precision"], mean_ms=float(r["mean_ms"]),
                            std_ms=float(r["std_ms"]), reps=int(r["reps"]))
                for r in csv.DictReader(fh)]


def plot_records(records: Sequence[BenchRecord], path) -> Path:
    """Forward and backward timings against n, one line per variant/worker count."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
    for ax, stage in zip(axes, ("forward", "backward")):
        series: dict[tuple[str, int], list[BenchRecord]] = {}
        for rec in records:
            if rec.variant.startswith(stage):
                series.setdefault((rec.variant, rec.workers), []).append(rec)
        for (variant, workers), recs in sorted(series.items()):
            recs = sorted(recs, key=lambda r: r.n)
            label = variant.split("_", 1)[1]
            if label == "parallel":
                label += f" ({workers} worker{'s' if workers > 1 else ''})"
            ax.errorbar([r.n for r in recs], [r.mean_ms for r in recs],
                        yerr=[r.std_ms for r in recs], marker="o", capsize=3, label=label)
        ax.set_title(stage)
        ax.set_xlabel("n")
        ax.set_ylabel("time [ms]")
        ax.set_yscale("log")
        if ax.has_data():
            ax.legend(frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
