"""Noise generation and exact-SNR mixing.

The SNR convention is the total power ratio 10*log10(P_clean / P_noise); the
gain applied to a noise template is solved in closed form, so the measured SNR
of every emitted noisy signal matches its target to floating-point accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rng import Rng, derive_seed
from .signals import Signal, power

NOISE_KINDS = ("random", "drift", "random_plus_drift", "recorded")

# relative weight of the drift component before SNR calibration ("strong drift")
DRIFT_WEIGHT = 2.0


@dataclass(frozen=True)
class NoiseSpec:
    """A noise recipe: what to add, how loud, and from which stream."""

    kind: str
    target_snr_db: float
    seed: int
    noise_source: Optional[Signal] = None

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not math.isfinite(self.target_snr_db):
            raise ValueError(f"target SNR must be finite, got {self.target_snr_db}")
        if self.kind == "recorded" and self.noise_source is None:
            raise ValueError("recorded noise requires a noise_source signal")


def scale_noise_to_snr(clean: Signal, noise: Signal, target_snr_db: float) -> Signal:
    """Return clean + g*noise with g solved so the power-ratio SNR is exact."""
    if len(noise) != len(clean):
        raise ValueError(f"noise length {len(noise)} != clean length {len(clean)}")
    if not math.isfinite(target_snr_db):
        raise ValueError(f"target SNR must be finite, got {target_snr_db}")
    p_clean = power(clean)
    p_noise = power(noise)
    if p_clean <= 0.0:
        raise ValueError("clean signal has zero power")
    if p_noise <= 0.0:
        raise ValueError("noise signal has zero power")
    # 10*log10(p_clean / (g^2 p_noise)) == target  =>  g in closed form
    g = math.sqrt(p_clean / (p_noise * 10.0 ** (target_snr_db / 10.0)))
    return Signal(clean.samples + g * noise.samples, clean.fs)


def random_noise(length: int, seed: int) -> np.ndarray:
    """Zero-mean unit-variance white noise; caller sets the level."""
    if length <= 0:
        raise ValueError("length must be positive")
    return Rng(seed).normal(length)


def drift_noise(length: int, fs: int, seed: int) -> np.ndarray:
    """Slow baseline drift: 1-3 sinusoids with frequencies in [0.05, 0.5] Hz
    and random phases, normalized to unit RMS."""
    if length <= 0:
        raise ValueError("length must be positive")
    rng = Rng(seed)
    n_components = rng.integer(1, 4)
    freqs = rng.uniform_range(0.05, 0.5, n_components)
    phases = rng.uniform_range(0.0, 2.0 * math.pi, n_components)
    t = np.arange(length, dtype=np.float64) / fs
    drift = np.zeros(length, dtype=np.float64)
    for f, ph in zip(freqs, phases):
        drift += np.sin(2.0 * math.pi * f * t + ph)
    rms = math.sqrt(float(np.dot(drift, drift)) / length)
    if rms == 0.0:  # cannot happen for these frequencies, guarded anyway
        raise ValueError("degenerate drift realization")
    return drift / rms


def _recorded_segment(source: Signal, length: int, seed: int) -> np.ndarray:
    """Deterministic segment of a noise record, tiled when too short."""
    reps = -(-length // len(source)) + 1  # ceil + 1 so any offset fits
    tiled = np.tile(source.samples, reps)
    offset = Rng(seed).integer(0, len(source))
    return tiled[offset : offset + length]


def make_noise(spec: NoiseSpec, length: int, fs: int) -> np.ndarray:
    """Render the unscaled noise template for a spec (unit-scale, pre-gain)."""
    if spec.kind == "random":
        return random_noise(length, spec.seed)
    if spec.kind == "drift":
        return drift_noise(length, fs, spec.seed)
    if spec.kind == "random_plus_drift":
        white = random_noise(length, derive_seed(spec.seed, "white"))
        drift = drift_noise(length, fs, derive_seed(spec.seed, "drift"))
        return white + DRIFT_WEIGHT * drift
    if spec.kind == "recorded":
        return _recorded_segment(spec.noise_source, length, spec.seed)
    raise ValueError(f"unknown noise kind {spec.kind!r}")


def apply_noise(clean: Signal, spec: NoiseSpec) -> Signal:
    """Render the recipe's noise template and mix it at the exact target SNR."""
    template = make_noise(spec, len(clean), clean.fs)
    return scale_noise_to_snr(clean, Signal(template, clean.fs), spec.target_snr_db)


def noise_stress_mix(
    clean_record: Signal,
    noise_record: Signal,
    snr_levels_db: list[float],
    seed: int = 0,
) -> list[tuple[float, Signal]]:
    """One noisy copy of the record per SNR level, each exactly calibrated.

    Segment selection from the noise record is deterministic in (seed, level
    index); the record is tiled when shorter than the clean signal.
    """
    out: list[tuple[float, Signal]] = []
    for i, level in enumerate(snr_levels_db):
        if not math.isfinite(level):
            raise ValueError(f"non-finite SNR level {level!r}")
        segment = _recorded_segment(noise_record, len(clean_record), derive_seed(seed, f"level-{i}"))
        noisy = scale_noise_to_snr(clean_record, Signal(segment, clean_record.fs), level)
        out.append((float(level), noisy))
    return out
