"""Zero-phase IIR prefiltering chain.

First-order Butterworth prototypes are mapped to digital filters by the
bilinear transform with frequency pre-warping. The band-stop section is the
standard lowpass-to-bandstop transform of the first-order prototype, which is
a second-order digital section (a true first-order section cannot notch).
Zero-phase response comes from forward-backward filtering with odd reflection
padding and steady-state initial conditions.

The full classical chain runs, in order: 30 Hz low-pass, 0.1 Hz high-pass,
47.5-52.5 Hz band-stop, then wavelet baseline-wander removal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signals import Signal
from .wavelet import DwtCoeffs, dwt_array, idwt_array, wavelet

FILTER_KINDS = ("lowpass", "highpass", "bandstop")

LOWPASS_HZ = 30.0
HIGHPASS_HZ = 0.1
BANDSTOP_HZ = (47.5, 52.5)

# baseline removal digs down to roughly this corner frequency
BASELINE_CORNER_HZ = 0.67


@dataclass(frozen=True)
class FilterDesign:
    kind: str
    cutoffs_hz: tuple[float, ...]
    order: int
    fs: int


@dataclass(frozen=True)
class IirFilter:
    b: tuple[float, ...]
    a: tuple[float, ...]
    design: FilterDesign

    @property
    def order(self) -> int:
        return max(len(self.a), len(self.b)) - 1


def _check_cutoff(fc: float, fs: int) -> None:
    if not 0.0 < fc < fs / 2.0:
        raise ValueError(f"cutoff {fc} Hz must lie strictly inside (0, {fs / 2.0}) Hz")


def design_butterworth(kind: str, cutoffs_hz, order: int = 1, fs: int = 360) -> IirFilter:
    """Design a first-order-prototype Butterworth filter at sampling rate fs."""
    if kind not in FILTER_KINDS:
        raise ValueError(f"unknown filter kind {kind!r}; expected one of {FILTER_KINDS}")
    if order != 1:
        raise ValueError("only the first-order prototype is supported")
    cutoffs = tuple(float(c) for c in (cutoffs_hz if hasattr(cutoffs_hz, "__len__") else (cutoffs_hz,)))
    for fc in cutoffs:
        _check_cutoff(fc, fs)

    if kind in ("lowpass", "highpass"):
        if len(cutoffs) != 1:
            raise ValueError(f"{kind} takes exactly one cutoff, got {cutoffs}")
        c = math.tan(math.pi * cutoffs[0] / fs)  # pre-warped, normalized
        a = (1.0, (c - 1.0) / (c + 1.0))
        if kind == "lowpass":
            b = (c / (1.0 + c), c / (1.0 + c))
        else:
            b = (1.0 / (1.0 + c), -1.0 / (1.0 + c))
    else:
        if len(cutoffs) != 2 or not cutoffs[0] < cutoffs[1]:
            raise ValueError(f"bandstop needs (lower, upper) with lower < upper, got {cutoffs}")
        w1 = math.tan(math.pi * cutoffs[0] / fs)
        w2 = math.tan(math.pi * cutoffs[1] / fs)
        w0sq = w1 * w2
        bw = w2 - w1
        a0 = 1.0 + bw + w0sq
        b = ((1.0 + w0sq) / a0, 2.0 * (w0sq - 1.0) / a0, (1.0 + w0sq) / a0)
        a = (1.0, 2.0 * (w0sq - 1.0) / a0, (1.0 - bw + w0sq) / a0)

    filt = IirFilter(b=b, a=a, design=FilterDesign(kind, cutoffs, order, fs))
    _check_stable(filt)
    return filt


def _check_stable(filt: IirFilter) -> None:
    poles = np.roots(filt.a)
    if poles.size and np.max(np.abs(poles)) >= 1.0 - 1e-9:
        raise ValueError(f"unstable design: pole magnitude {np.max(np.abs(poles))}")


def frequency_response(filt: IirFilter, freqs_hz) -> np.ndarray:
    """Complex H(e^{j omega}) at the requested frequencies."""
    w = 2.0 * np.pi * np.asarray(freqs_hz, dtype=np.float64) / filt.design.fs
    z = np.exp(-1j * w)
    num = np.zeros_like(z)
    den = np.zeros_like(z)
    for k, bk in enumerate(filt.b):
        num += bk * z**k
    for k, ak in enumerate(filt.a):
        den += ak * z**k
    return num / den


def format_coefficients(filt: IirFilter) -> str:
    """Plain-text dump for cross-checking against other tools."""
    d = filt.design
    lines = [f"kind={d.kind}", f"cutoffs_hz={','.join(repr(c) for c in d.cutoffs_hz)}", f"fs={d.fs}"]
    lines.append("b=" + ",".join(repr(v) for v in filt.b))
    lines.append("a=" + ",".join(repr(v) for v in filt.a))
    return "\n".join(lines) + "\n"


def _lfilter(b, a, x: np.ndarray, zi: np.ndarray) -> np.ndarray:
    """Direct-form II transposed filtering with initial state zi."""
    n_coef = max(len(a), len(b))
    bb = list(b) + [0.0] * (n_coef - len(b))
    aa = list(a) + [0.0] * (n_coef - len(a))
    y = np.empty_like(x)
    if n_coef == 2:  # unrolled first-order loop
        b0, b1, a1 = bb[0], bb[1], aa[1]
        z0 = float(zi[0])
        for i, xi in enumerate(x):
            yi = b0 * xi + z0
            z0 = b1 * xi - a1 * yi
            y[i] = yi
        return y
    if n_coef == 3:  # unrolled biquad loop
        b0, b1, b2, a1, a2 = bb[0], bb[1], bb[2], aa[1], aa[2]
        z0, z1 = float(zi[0]), float(zi[1])
        for i, xi in enumerate(x):
            yi = b0 * xi + z0
            z0 = b1 * xi - a1 * yi + z1
            z1 = b2 * xi - a2 * yi
            y[i] = yi
        return y
    z = list(zi) + [0.0]
    for i, xi in enumerate(x):
        yi = bb[0] * xi + z[0]
        for k in range(1, n_coef):
            z[k - 1] = bb[k] * xi - aa[k] * yi + z[k]
        y[i] = yi
    return y


def _lfilter_zi(b, a) -> np.ndarray:
    """State giving the steady-state response to a unit step (scaled by the
    first sample at call time), so constant inputs produce no transient."""
    n_coef = max(len(a), len(b))
    bb = np.concatenate([np.asarray(b, dtype=np.float64), np.zeros(n_coef - len(b))])
    aa = np.concatenate([np.asarray(a, dtype=np.float64), np.zeros(n_coef - len(a))])
    n = n_coef - 1
    companion_t = np.zeros((n, n))
    companion_t[0, :] = -aa[1:]
    if n > 1:
        companion_t[1:, :-1] += np.eye(n - 1)
    rhs = bb[1:] - aa[1:] * bb[0]
    return np.linalg.solve(np.eye(n) - companion_t, rhs)


def filtfilt(filt: IirFilter, signal: Signal) -> Signal:
    """Forward-backward zero-phase filtering (squared magnitude response)."""
    order = filt.order
    padlen = 3 * order
    x = signal.samples
    if len(x) <= 3 * padlen:
        raise ValueError(
            f"signal of {len(x)} samples too short for zero-phase filtering "
            f"(needs more than {3 * padlen})"
        )
    left = 2.0 * x[0] - x[padlen:0:-1]
    right = 2.0 * x[-1] - x[-2 : -padlen - 2 : -1]
    ext = np.concatenate([left, x, right])
    zi = _lfilter_zi(filt.b, filt.a)
    y = _lfilter(filt.b, filt.a, ext, zi * ext[0])
    y = y[::-1]
    y = _lfilter(filt.b, filt.a, y, zi * y[0])
    y = y[::-1]
    return Signal(y[padlen : len(y) - padlen], signal.fs)


def baseline_levels(fs: int) -> int:
    """Decomposition depth whose coarsest band reaches ~0.67 Hz."""
    return int(math.floor(math.log2(fs / BASELINE_CORNER_HZ)))


def remove_baseline_wavelet(signal: Signal, family: str = "sym4") -> Signal:
    """Drop the coarsest approximation band of a deep wavelet decomposition,
    removing sub-hertz wander while keeping the beat morphology."""
    levels = baseline_levels(signal.fs)
    if len(signal) < 2**levels:
        raise ValueError(
            f"baseline removal at fs={signal.fs} needs >= {2**levels} samples, "
            f"got {len(signal)}"
        )
    spec = wavelet(family)
    coeffs = dwt_array(signal.samples, spec, levels, mode="symmetric")
    stripped = DwtCoeffs(
        approximation=np.zeros_like(coeffs.approximation),
        details=coeffs.details,
        level_lengths=coeffs.level_lengths,
        original_length=coeffs.original_length,
        family=coeffs.family,
        mode=coeffs.mode,
    )
    return Signal(idwt_array(stripped, spec), signal.fs)


def classical_chain(signal: Signal) -> Signal:
    """Low-pass 30 Hz, high-pass 0.1 Hz, band-stop 47.5-52.5 Hz (all
    zero-phase), then wavelet baseline-wander removal."""
    fs = signal.fs
    if fs <= 120:
        raise ValueError(f"chain needs fs > 120 Hz so the stop band fits, got {fs}")
    out = filtfilt(design_butterworth("lowpass", LOWPASS_HZ, 1, fs), signal)
    out = filtfilt(design_butterworth("highpass", HIGHPASS_HZ, 1, fs), out)
    out = filtfilt(design_butterworth("bandstop", BANDSTOP_HZ, 1, fs), out)
    return remove_baseline_wavelet(out)
