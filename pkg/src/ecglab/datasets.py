"""Paired clean/noisy dataset construction with deterministic 3:1 splits.

Every noisy window is calibrated individually to its exact target SNR, so the
dataset's recorded levels re-verify against the metrics module to floating
point accuracy. Splits are disjoint and exhaustive by construction: the pair
indices are shuffled by the seed and the first quarter becomes the test set.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .metrics import EvalReport, evaluate_dataset
from .noise import NoiseSpec, apply_noise
from .rng import Rng, derive_seed
from .signals import Signal, find_peaks, read_binary, segment, write_binary
from .synth import generate_effort_family


@dataclass(frozen=True)
class PairedDataset:
    clean: tuple[Signal, ...]
    noisy: tuple[Signal, ...]
    meta: tuple[dict, ...]  # per item: record_id, snr_db, beat_rate
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    seed: int

    def __post_init__(self):
        n = len(self.clean)
        if not (n == len(self.noisy) == len(self.meta)):
            raise ValueError("clean, noisy and meta must align")
        combined = sorted(self.train_indices + self.test_indices)
        if combined != list(range(n)):
            raise ValueError("train/test indices must be disjoint and exhaustive")

    def __len__(self) -> int:
        return len(self.clean)

    def pairs(self, indices) -> list[tuple[Signal, Signal]]:
        return [(self.clean[i], self.noisy[i]) for i in indices]

    def train_pairs(self) -> list[tuple[Signal, Signal]]:
        return self.pairs(self.train_indices)

    def test_pairs(self) -> list[tuple[Signal, Signal]]:
        return self.pairs(self.test_indices)


def _split_indices(n: int, seed: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Shuffled 3:1 split: first quarter of the permutation is the test set."""
    perm = Rng(derive_seed(seed, "split")).permutation(n)
    n_test = n // 4
    test = tuple(int(i) for i in perm[:n_test])
    train = tuple(int(i) for i in perm[n_test:])
    return train, test


def _assemble(items, seed: int) -> PairedDataset:
    clean = tuple(c for c, _, _ in items)
    noisy = tuple(ns for _, ns, _ in items)
    meta = tuple(m for _, _, m in items)
    train, test = _split_indices(len(items), seed)
    return PairedDataset(clean, noisy, meta, train, test, seed)


def _pair_windows(
    windows: list[Signal],
    snr_levels: list[float],
    seed: int,
    record_id: str,
    beat_rate: Optional[float],
    noise_source: Optional[Signal],
    noise_draws: int = 1,
) -> list[tuple[Signal, Signal, dict]]:
    items = []
    for i, win in enumerate(windows):
        for level in snr_levels:
            if not math.isfinite(level):
                raise ValueError(f"non-finite SNR level {level!r}")
            for draw in range(noise_draws):
                spec = NoiseSpec(
                    kind="recorded" if noise_source is not None else "random",
                    target_snr_db=float(level),
                    seed=derive_seed(seed, f"{record_id}/{i}/{level!r}/{draw}"),
                    noise_source=noise_source,
                )
                items.append(
                    (
                        win,
                        apply_noise(win, spec),
                        {"record_id": record_id, "snr_db": float(level), "beat_rate": beat_rate},
                    )
                )
    return items


def build_single_record(
    clean_record: Signal,
    snr_levels: list[float],
    window_s: float = 1.0,
    seed: int = 0,
    record_id: str = "record-0",
    noise_source: Optional[Signal] = None,
) -> PairedDataset:
    """All 1-window patterns of one record, paired at each SNR level."""
    if not snr_levels:
        raise ValueError("snr_levels must be non-empty")
    windows = segment(clean_record, window_s)
    items = _pair_windows(windows, snr_levels, seed, record_id, None, noise_source)
    return _assemble(items, seed)


def build_multi_record(
    records: list[tuple[str, Signal]],
    snr_levels: list[float],
    window_s: float = 1.0,
    seed: int = 0,
    noise_source: Optional[Signal] = None,
) -> PairedDataset:
    """Windows of several records, each paired at every SNR level."""
    if not snr_levels:
        raise ValueError("snr_levels must be non-empty")
    ids = [rid for rid, _ in records]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate record ids in {ids}")
    items = []
    for rid, record in records:
        windows = segment(record, window_s)
        items.extend(_pair_windows(windows, snr_levels, seed, rid, None, noise_source))
    return _assemble(items, seed)


def extract_beat(rest_record: Signal) -> Signal:
    """One full beat cycle (R-to-R) from a resting record; the whole record
    when fewer than two R spikes are found."""
    x = rest_record.samples
    peaks = find_peaks(x, height=float(x.max()) * 0.5, min_distance=int(rest_record.fs * 0.25))
    if len(peaks) >= 2:
        return Signal(x[peaks[0] : peaks[1]], rest_record.fs)
    return rest_record


def build_effort_dataset(
    rest_record: Signal,
    rates_bpm: list[float],
    snr_levels: list[float] = (-6.0, 0.0, 6.0, 12.0),
    seed: int = 0,
    window_s: float = 1.0,
    windows_per_rate: int = 50,
    noise_source: Optional[Signal] = None,
    noise_draws: int = 1,
) -> PairedDataset:
    """Elevated-heart-rate windows generated from one resting beat, paired
    with noise at each level. ``noise_draws`` > 1 repeats every (window,
    level) cell with independent noise realizations (the extended build)."""
    if not snr_levels:
        raise ValueError("snr_levels must be non-empty")
    if not rates_bpm:
        raise ValueError("rates_bpm must be non-empty")
    if noise_draws < 1:
        raise ValueError("noise_draws must be >= 1")
    beat = extract_beat(rest_record)
    duration_s = windows_per_rate * window_s
    family = generate_effort_family(beat, list(rates_bpm), rest_record.fs, duration_s)
    items = []
    for rate, sig in zip(rates_bpm, family):
        windows = segment(sig, window_s)
        items.extend(
            _pair_windows(windows, snr_levels, seed, f"effort-{rate:g}bpm", float(rate),
                          noise_source, noise_draws)
        )
    return _assemble(items, seed)


def holdout_record_eval(model, pairs: list[tuple[Signal, Signal]], record_id: str) -> EvalReport:
    """Evaluate a trained model on pairs from a record it never saw.

    The leakage guard rejects any record id present in the model's training
    metadata.
    """
    if not pairs:
        raise ValueError("no pairs to evaluate")
    trained = getattr(model, "trained_record_ids", ())
    if str(record_id) in {str(r) for r in trained}:
        raise ValueError(f"record {record_id!r} was part of the training set; evaluation refused")
    scored = [(clean, model.denoise(noisy)) for clean, noisy in pairs]
    return evaluate_dataset(scored)


# ---------------------------------------------------------------------------
# on-disk layout: <dir>/pair<index>_{clean,noisy}.ecg plus manifest.csv with
# columns path,record_id,snr_db,beat_rate,split (path is the pair's prefix)
# ---------------------------------------------------------------------------

def write_dataset(dataset: PairedDataset, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    split_of = {i: "train" for i in dataset.train_indices}
    split_of.update({i: "test" for i in dataset.test_indices})
    manifest = out / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path", "record_id", "snr_db", "beat_rate", "split"])
        for i in range(len(dataset)):
            prefix = f"pair{i:06d}"
            write_binary(dataset.clean[i], out / f"{prefix}_clean.ecg")
            write_binary(dataset.noisy[i], out / f"{prefix}_noisy.ecg")
            m = dataset.meta[i]
            beat = "" if m.get("beat_rate") is None else f"{m['beat_rate']:g}"
            writer.writerow([prefix, m["record_id"], f"{m['snr_db']:g}", beat, split_of[i]])
    return manifest


def read_dataset(in_dir: str | Path, seed: int = 0) -> PairedDataset:
    src = Path(in_dir)
    manifest = src / "manifest.csv"
    if not manifest.exists():
        raise FileNotFoundError(f"no manifest.csv under {src}")
    clean: list[Signal] = []
    noisy: list[Signal] = []
    meta: list[dict] = []
    train: list[int] = []
    test: list[int] = []
    with open(manifest, newline="") as fh:
        for i, row in enumerate(csv.DictReader(fh)):
            clean.append(read_binary(src / f"{row['path']}_clean.ecg"))
            noisy.append(read_binary(src / f"{row['path']}_noisy.ecg"))
            meta.append(
                {
                    "record_id": row["record_id"],
                    "snr_db": float(row["snr_db"]),
                    "beat_rate": float(row["beat_rate"]) if row["beat_rate"] else None,
                }
            )
            (train if row["split"] == "train" else test).append(i)
    return PairedDataset(
        tuple(clean), tuple(noisy), tuple(meta), tuple(train), tuple(test), seed
    )
