"""Core waveform value type, segmentation and scaling utilities.

Amplitudes are millivolts in double precision throughout; every value is
immutable after construction and safe to share between threads.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_BINARY_MAGIC = b"ECG1"


@dataclass(frozen=True, eq=False)
class Signal:
    """A uniformly sampled real-valued waveform.

    samples: amplitudes in mV (1-D float64, non-empty, read-only)
    fs: sampling rate in Hz (positive integer)
    """

    samples: np.ndarray
    fs: int

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not float(self.fs).is_integer() or int(self.fs) <= 0:
            raise ValueError(f"fs must be a positive integer, got {self.fs!r}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "fs", int(self.fs))

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_seconds(self) -> float:
        return len(self) / self.fs


@dataclass(frozen=True)
class Window:
    """A [start_index, start_index + length) slice of a parent signal."""

    start_index: int
    length: int

    def __post_init__(self):
        if self.start_index < 0 or self.length <= 0:
            raise ValueError("window needs start_index >= 0 and length > 0")

    def check_against(self, parent: Signal) -> None:
        if self.start_index + self.length > len(parent):
            raise ValueError(
                f"window [{self.start_index}, {self.start_index + self.length}) "
                f"exceeds signal of {len(parent)} samples"
            )

    def extract(self, parent: Signal) -> Signal:
        self.check_against(parent)
        return Signal(self.samples_of(parent), parent.fs)

    def samples_of(self, parent: Signal) -> np.ndarray:
        return parent.samples[self.start_index : self.start_index + self.length]


def window_sample_count(window_seconds: float, fs: int) -> int:
    """Exact sample count of a window, rejecting non-integer counts."""
    exact = window_seconds * fs
    count = round(exact)
    if count <= 0 or abs(exact - count) > 1e-9:
        raise ValueError(
            f"window of {window_seconds} s at fs={fs} Hz spans {exact} samples; "
            "an exact positive integer count is required"
        )
    return count


def segment(signal: Signal, window_seconds: float) -> list[Signal]:
    """Split into consecutive non-overlapping windows; the trailing remainder
    (if any) is dropped, never zero-padded."""
    count = window_sample_count(window_seconds, signal.fs)
    n_windows = len(signal) // count
    if n_windows == 0:
        raise ValueError(
            f"signal of {len(signal)} samples is shorter than one "
            f"{count}-sample window"
        )
    return [
        Signal(signal.samples[i * count : (i + 1) * count], signal.fs)
        for i in range(n_windows)
    ]


def concatenate(signals: list[Signal]) -> Signal:
    """Join consecutive windows back into one signal (shared fs required)."""
    if not signals:
        raise ValueError("nothing to concatenate")
    fs = signals[0].fs
    if any(s.fs != fs for s in signals):
        raise ValueError("all segments must share one sampling rate")
    return Signal(np.concatenate([s.samples for s in signals]), fs)


def power(signal: Signal) -> float:
    """Sum of squared amplitudes (a sum, not a mean)."""
    s = signal.samples
    return float(np.dot(s, s))


@dataclass(frozen=True)
class MinMaxRecord:
    """Inverse-transform record produced by :func:`minmax_scale`."""

    original_min: float
    original_max: float
    lo: float
    hi: float

    def invert(self, scaled: Signal) -> Signal:
        span = (self.original_max - self.original_min) / (self.hi - self.lo)
        samples = (scaled.samples - self.lo) * span + self.original_min
        return Signal(samples, scaled.fs)


def minmax_scale(signal: Signal, lo: float = 0.0, hi: float = 1.0) -> tuple[Signal, MinMaxRecord]:
    """Affine map sending min(samples) to lo and max(samples) to hi."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got lo={lo}, hi={hi}")
    mn = float(signal.samples.min())
    mx = float(signal.samples.max())
    if mx == mn:
        raise ValueError("constant signal has zero dynamic range; cannot scale")
    scaled = lo + (signal.samples - mn) * ((hi - lo) / (mx - mn))
    return Signal(scaled, signal.fs), MinMaxRecord(mn, mx, lo, hi)


def find_peaks(samples: np.ndarray, height: float, min_distance: int = 1) -> np.ndarray:
    """Indices of local maxima >= height, at least min_distance apart.

    Plateaus count once (their first sample). Greedy left-to-right suppression,
    which is all the R-spike counting here needs.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 3:
        return np.empty(0, dtype=int)
    rising = x[1:-1] > x[:-2]
    falling = x[1:-1] >= x[2:]
    candidates = np.nonzero(rising & falling & (x[1:-1] >= height))[0] + 1
    peaks: list[int] = []
    for idx in candidates:
        if not peaks or idx - peaks[-1] >= min_distance:
            peaks.append(int(idx))
        elif x[idx] > x[peaks[-1]]:
            peaks[-1] = int(idx)
    return np.asarray(peaks, dtype=int)


# ---------------------------------------------------------------------------
# On-disk formats: plain text (header "fs=<int>", one mV amplitude per line)
# and flat binary (magic ECG1, uint32-LE fs, float64-LE samples).
# ---------------------------------------------------------------------------

def write_text(signal: Signal, path: str | Path) -> None:
    lines = [f"fs={signal.fs}"]
    lines.extend(repr(float(v)) for v in signal.samples)
    Path(path).write_text("\n".join(lines) + "\n")


def read_text(path: str | Path) -> Signal:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or not lines[0].startswith("fs="):
        raise ValueError(f"{path}: expected a first line of the form fs=<int>")
    fs = int(lines[0][3:])
    samples = np.array([float(v) for v in lines[1:]], dtype=np.float64)
    return Signal(samples, fs)


def write_binary(signal: Signal, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(_BINARY_MAGIC)
        fh.write(struct.pack("<I", signal.fs))
        fh.write(signal.samples.astype("<f8").tobytes())


def read_binary(path: str | Path) -> Signal:
    raw = Path(path).read_bytes()
    if raw[:4] != _BINARY_MAGIC:
        raise ValueError(f"{path}: bad magic {raw[:4]!r}, expected {_BINARY_MAGIC!r}")
    fs = struct.unpack("<I", raw[4:8])[0]
    samples = np.frombuffer(raw[8:], dtype="<f8")
    return Signal(samples, fs)


def read_signal(path: str | Path) -> Signal:
    """Dispatch on the 4-byte magic: flat-binary if present, else text."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    return read_binary(path) if magic == _BINARY_MAGIC else read_text(path)
