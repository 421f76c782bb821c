"""Architecture sweep harness: filters-per-layer x kernel length.

Each grid cell trains one seeded model, scores it on the shared test split,
and records RMS, SNR and wall time. Selection formalizes the knee-then-budget
reading of such sweeps: keep rows past the quality knee whose wall time fits
the budget (with a small slack for "approximately"), then take the
lexicographic optimum. The default objective prefers, in order, low RMS,
low wall time, high SNR; the (rms, snr, time) ordering is also supported.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .metrics import evaluate_dataset
from .neural import CnnConfig, denoise, train
from .rng import derive_seed
from .viz import bar_chart

WORKERS_ENV = "ECG_LAB_WORKERS"

OBJECTIVE_KEYS = ("rms", "snr", "time")


@dataclass(frozen=True)
class DoeRow:
    sim_id: int
    filters: int
    kernel_len: int
    avg_rms_mv: float
    avg_snr_db: float
    wall_time_s: float

    def __post_init__(self):
        if not (math.isfinite(self.avg_rms_mv) and math.isfinite(self.avg_snr_db)):
            raise ValueError(f"sim {self.sim_id}: non-finite metrics")
        if self.wall_time_s <= 0:
            raise ValueError(f"sim {self.sim_id}: wall time must be positive")


@dataclass(frozen=True)
class SelectionPolicy:
    """Knee cut + time budget + lexicographic objective.

    min_sim_id_cut: explicit knee (sim id); when None the knee is the first
    row whose RMS drops below knee_rms_mv. Rows are admitted while
    wall_time_s <= time_threshold_s * (1 + time_slack).
    """

    min_sim_id_cut: Optional[int] = None
    knee_rms_mv: float = 0.14
    time_threshold_s: float = 5000.0
    time_slack: float = 0.05
    objective: tuple[str, ...] = ("rms", "time", "snr")

    def __post_init__(self):
        if self.time_threshold_s <= 0:
            raise ValueError("time threshold must be positive")
        if sorted(self.objective) != sorted(OBJECTIVE_KEYS):
            raise ValueError(f"objective must order {OBJECTIVE_KEYS}, got {self.objective}")


def _objective_key(row: DoeRow, objective: tuple[str, ...]):
    parts = {"rms": row.avg_rms_mv, "snr": -row.avg_snr_db, "time": row.wall_time_s}
    return tuple(parts[k] for k in objective)


def select_optimal(rows: list[DoeRow], policy: SelectionPolicy) -> tuple[DoeRow, list[DoeRow]]:
    """Returns (best row, shortlist in sim-id order)."""
    if not rows:
        raise ValueError("no sweep rows to select from")
    ordered = sorted(rows, key=lambda r: r.sim_id)
    if policy.min_sim_id_cut is not None:
        cut = policy.min_sim_id_cut
    else:
        cut = next((r.sim_id for r in ordered if r.avg_rms_mv < policy.knee_rms_mv), None)
        if cut is None:
            raise ValueError(f"no row reaches the quality knee (RMS < {policy.knee_rms_mv})")
    budget = policy.time_threshold_s * (1.0 + policy.time_slack)
    shortlist = [r for r in ordered if r.sim_id >= cut and r.wall_time_s <= budget]
    if not shortlist:
        raise ValueError("selection produced an empty shortlist")
    best = min(shortlist, key=lambda r: _objective_key(r, policy.objective))
    return best, shortlist


# ---------------------------------------------------------------------------
# live sweep
# ---------------------------------------------------------------------------

def _run_cell(args):
    sim_id, filters, kernel_len, base_config, dataset, seed = args
    start = time.perf_counter()
    try:
        config = replace(
            base_config,
            filters_per_layer=filters,
            kernel_len=kernel_len,
            seed=derive_seed(seed, f"cell-{sim_id}"),
        )
        model, _ = train(config, dataset)
    except Exception as exc:
        raise RuntimeError(f"sweep cell {sim_id} (filters={filters}, kernel={kernel_len}) failed") from exc
    elapsed = time.perf_counter() - start
    scored = [(clean, denoise(model, noisy)) for clean, noisy in dataset.test_pairs()]
    report = evaluate_dataset(scored)
    return DoeRow(
        sim_id=sim_id,
        filters=filters,
        kernel_len=kernel_len,
        avg_rms_mv=report.avg_rms_mv,
        avg_snr_db=min(report.avg_snr_db, 1e9),  # keep finite for the row invariant
        wall_time_s=max(elapsed, 1e-9),
    )


def run_sweep(
    grid: dict,
    dataset,
    train_budget_epochs: int,
    base_config: Optional[CnnConfig] = None,
    seed: int = 0,
    workers: Optional[int] = None,
) -> list[DoeRow]:
    """Train/score one model per (filters, kernel_len) cell, rows in grid order."""
    filters_list = list(grid.get("filters", []))
    kernel_list = list(grid.get("kernel_lens", []))
    if not filters_list or not kernel_list:
        raise ValueError("grid needs non-empty 'filters' and 'kernel_lens' lists")
    if base_config is None:
        base_config = CnnConfig()
    base_config = replace(base_config, epochs=train_budget_epochs)
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))

    jobs = []
    sim_id = 1
    for f in filters_list:
        for k in kernel_list:
            jobs.append((sim_id, int(f), int(k), base_config, dataset, seed))
            sim_id += 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_cell, jobs))
    return [_run_cell(job) for job in jobs]


# ---------------------------------------------------------------------------
# fixture and report files
# ---------------------------------------------------------------------------

def parse_kernel_label(label: str) -> int:
    """'23x1' -> 23, '45x45' -> 45, '13' -> 13."""
    head = label.strip().lower().split("x")[0]
    return int(head)


def read_fixture_csv(path: str | Path) -> list[DoeRow]:
    """Columns: sim_id,filters,kernel,rms,snr,time_s (kernel may be KxK)."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                DoeRow(
                    sim_id=int(rec["sim_id"]),
                    filters=int(rec["filters"]),
                    kernel_len=parse_kernel_label(rec["kernel"]),
                    avg_rms_mv=float(rec["rms"]),
                    avg_snr_db=float(rec["snr"]),
                    wall_time_s=float(rec["time_s"]),
                )
            )
    if not rows:
        raise ValueError(f"{path}: empty fixture")
    return rows


def emit_report(
    rows: list[DoeRow],
    selection: Optional[tuple[DoeRow, list[DoeRow]]],
    out_dir: str | Path,
) -> list[Path]:
    """report.csv plus three bar charts (RMS, SNR, wall time); deterministic."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    best = selection[0] if selection else None
    shortlist_ids = {r.sim_id for r in selection[1]} if selection else set()

    report = out / "report.csv"
    with open(report, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sim_id", "filters", "kernel_len", "rms_mv", "snr_db", "time_s",
                         "shortlisted", "best"])
        for r in sorted(rows, key=lambda r: r.sim_id):
            writer.writerow(
                [
                    r.sim_id,
                    r.filters,
                    r.kernel_len,
                    f"{r.avg_rms_mv:.6g}",
                    f"{r.avg_snr_db:.6g}",
                    f"{r.wall_time_s:.6g}",
                    int(r.sim_id in shortlist_ids),
                    int(best is not None and r.sim_id == best.sim_id),
                ]
            )

    ordered = sorted(rows, key=lambda r: r.sim_id)
    highlight = None
    if best is not None:
        highlight = next(i for i, r in enumerate(ordered) if r.sim_id == best.sim_id)
    paths = [report]
    for name, values, label in (
        ("rms", [r.avg_rms_mv for r in ordered], "average RMS [mV]"),
        ("snr", [r.avg_snr_db for r in ordered], "average SNR [dB]"),
        ("time", [r.wall_time_s for r in ordered], "wall time [s]"),
    ):
        path = out / f"{name}.svg"
        bar_chart(values, f"sweep {name} per simulation", label, path, highlight=highlight)
        paths.append(path)
    return paths
