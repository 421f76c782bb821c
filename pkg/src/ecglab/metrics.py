"""RMS / SNR evaluation between clean and predicted signals.

RMS is sqrt(mean squared error) in mV; SNR is 10*log10 of clean power over
error power in dB. Both are translation- and scale-sensitive by design: no
silent normalization happens here. An exact prediction yields the +inf SNR
sentinel, which is excluded from dataset averages.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .signals import Signal, power

RMS_LIMIT_MV = 0.3
SNR_THRESHOLD_DB = 8.0


def _check_pair(clean: Signal, pred: Signal) -> None:
    if len(clean) != len(pred):
        raise ValueError(f"length mismatch: clean {len(clean)} vs pred {len(pred)}")
    if clean.fs != pred.fs:
        raise ValueError(f"sampling-rate mismatch: clean {clean.fs} vs pred {pred.fs}")


def rms(clean: Signal, pred: Signal) -> float:
    """Root-mean-square error in mV over the common N samples."""
    _check_pair(clean, pred)
    diff = pred.samples - clean.samples
    return float(np.sqrt(np.dot(diff, diff) / len(clean)))


def snr_db(clean: Signal, pred: Signal) -> float:
    """10*log10(sum clean^2 / sum (pred - clean)^2); +inf on an exact match."""
    _check_pair(clean, pred)
    p_clean = power(clean)
    if p_clean <= 0.0:
        raise ValueError("clean signal has zero power; SNR undefined")
    diff = pred.samples - clean.samples
    p_err = float(np.dot(diff, diff))
    if p_err == 0.0:
        return math.inf
    return 10.0 * math.log10(p_clean / p_err)


@dataclass(frozen=True)
class PairMetrics:
    rms_mv: float
    snr_db: float

    @property
    def passes(self) -> bool:
        return self.rms_mv <= RMS_LIMIT_MV and self.snr_db >= SNR_THRESHOLD_DB


@dataclass(frozen=True)
class EvalReport:
    """Per-signal metrics plus arithmetic means and threshold verdicts."""

    per_signal: list[PairMetrics]
    avg_rms_mv: float
    avg_snr_db: float
    pass_fraction: float
    rms_limit_mv: float = RMS_LIMIT_MV
    snr_threshold_db: float = SNR_THRESHOLD_DB

    def __len__(self) -> int:
        return len(self.per_signal)


def evaluate_dataset(pairs: list[tuple[Signal, Signal]]) -> EvalReport:
    """Evaluate (clean, pred) pairs; the SNR average skips +inf sentinels."""
    if not pairs:
        raise ValueError("cannot evaluate an empty pair list")
    per = [PairMetrics(rms(c, p), snr_db(c, p)) for c, p in pairs]
    finite_snrs = [m.snr_db for m in per if math.isfinite(m.snr_db)]
    avg_snr = sum(finite_snrs) / len(finite_snrs) if finite_snrs else math.inf
    avg_rms = sum(m.rms_mv for m in per) / len(per)
    pass_fraction = sum(m.passes for m in per) / len(per)
    return EvalReport(per, avg_rms, avg_snr, pass_fraction)


def write_report_csv(report: EvalReport, path: str | Path) -> None:
    """One row per signal plus a final summary row; deterministic bytes."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "rms_mv", "snr_db", "passes"])
        for i, m in enumerate(report.per_signal):
            writer.writerow([i, f"{m.rms_mv:.9g}", f"{m.snr_db:.9g}", int(m.passes)])
        writer.writerow(
            [
                "summary",
                f"{report.avg_rms_mv:.9g}",
                f"{report.avg_snr_db:.9g}",
                f"{report.pass_fraction:.9g}",
            ]
        )
