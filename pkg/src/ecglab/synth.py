"""Synthetic ECG generation from a three-variable limit-cycle model.

The trajectory spirals onto the unit circle in (x, y); five Gaussian bumps
anchored at fixed angles pull the z coordinate up and down once per
revolution, tracing a PQRST heartbeat. Integration is classical fixed-step
fourth-order Runge-Kutta, one step per output sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signals import Signal

SPIKE_LABELS = ("P", "Q", "R", "S", "T")


@dataclass(frozen=True)
class Spike:
    """One angular Gaussian event: position theta (rad), amplitude coefficient
    a (mV), angular width b (rad)."""

    label: str
    theta: float
    a: float
    b: float


@dataclass(frozen=True)
class EcgModelParams:
    spikes: tuple[Spike, ...]
    z0: float = 0.0
    heart_rate_bpm: float = 60.0
    voltage_scale: float = 2.0  # target peak-to-peak output, mV

    def __post_init__(self):
        labels = tuple(s.label for s in self.spikes)
        if labels != SPIKE_LABELS:
            raise ValueError(f"spikes must be labelled {SPIKE_LABELS} in order, got {labels}")
        thetas = [s.theta for s in self.spikes]
        if any(t <= -math.pi or t > math.pi for t in thetas):
            raise ValueError("spike angles must lie in (-pi, pi]")
        if any(t2 <= t1 for t1, t2 in zip(thetas, thetas[1:])):
            raise ValueError("spike angles must be strictly increasing P..T")
        if any(s.b <= 0 for s in self.spikes):
            raise ValueError("spike widths must be positive")
        if self.heart_rate_bpm <= 0:
            raise ValueError("heart rate must be positive")

    @property
    def omega(self) -> float:
        """Angular velocity around the unit circle (rad/s)."""
        return 2.0 * math.pi * self.heart_rate_bpm / 60.0


def default_params(heart_rate_bpm: float = 60.0, voltage_scale: float = 2.0) -> EcgModelParams:
    """Canonical PQRST parameter set reproducing a realistic beat morphology."""
    angles = (-math.pi / 3.0, -math.pi / 12.0, 0.0, math.pi / 12.0, math.pi / 2.0)
    amps = (1.2, -5.0, 30.0, -7.5, 0.75)
    widths = (0.25, 0.1, 0.1, 0.1, 0.4)
    spikes = tuple(
        Spike(lbl, th, a, b) for lbl, th, a, b in zip(SPIKE_LABELS, angles, amps, widths)
    )
    return EcgModelParams(spikes=spikes, z0=0.0, heart_rate_bpm=heart_rate_bpm,
                          voltage_scale=voltage_scale)


@dataclass(frozen=True)
class TrajectoryState:
    x: float
    y: float
    z: float
    t: float = 0.0


def _wrap_angle(d: float) -> float:
    """Wrap into (-pi, pi]."""
    w = math.fmod(d + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


def _derivatives(state: TrajectoryState, params: EcgModelParams) -> tuple[float, float, float]:
    x, y, z = state.x, state.y, state.z
    alpha = 1.0 - math.sqrt(x * x + y * y)
    omega = params.omega
    dx = alpha * x - omega * y
    dy = alpha * y + omega * x
    theta = math.atan2(y, x)
    dz = -(z - params.z0)
    for spike in params.spikes:
        dth = _wrap_angle(theta - spike.theta)
        dz -= spike.a * dth * math.exp(-dth * dth / (2.0 * spike.b * spike.b))
    return dx, dy, dz


def rk4_step(state: TrajectoryState, params: EcgModelParams, dt: float) -> TrajectoryState:
    """One classical Runge-Kutta-4 update of the coupled system."""
    if dt <= 0:
        raise ValueError("dt must be positive")

    def shifted(k: tuple[float, float, float], h: float) -> TrajectoryState:
        return TrajectoryState(state.x + h * k[0], state.y + h * k[1],
                               state.z + h * k[2], state.t)

    k1 = _derivatives(state, params)
    k2 = _derivatives(shifted(k1, dt / 2.0), params)
    k3 = _derivatives(shifted(k2, dt / 2.0), params)
    k4 = _derivatives(shifted(k3, dt), params)
    return TrajectoryState(
        state.x + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        state.y + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        state.z + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
        state.t + dt,
    )


def generate_ecg(params: EcgModelParams, duration_s: float, fs: int) -> Signal:
    """Integrate the model and sample z at fs.

    The trajectory starts on the unit circle at angle -pi (half a cycle before
    the first R event) with z at the baseline. Output is rescaled to span
    exactly voltage_scale mV peak-to-peak, centered on the midrange.
    """
    n_exact = duration_s * fs
    n = round(n_exact)
    if n <= 0 or abs(n_exact - n) > 1e-9:
        raise ValueError(f"duration {duration_s} s at fs={fs} is not an integer sample count")
    dt = 1.0 / fs
    state = TrajectoryState(x=-1.0, y=0.0, z=params.z0, t=0.0)
    z = np.empty(n, dtype=np.float64)
    for i in range(n):
        z[i] = state.z
        state = rk4_step(state, params, dt)
    span = float(z.max() - z.min())
    if span <= 0.0:
        return Signal(z, fs)  # degenerate flat trace (all spike amplitudes zero)
    mid = (float(z.max()) + float(z.min())) / 2.0
    return Signal((z - mid) * (params.voltage_scale / span), fs)


def _bandwidth_99(samples: np.ndarray, fs: int) -> float:
    """Smallest frequency containing 99% of spectral energy (alias guard)."""
    spectrum = np.abs(np.fft.rfft(samples)) ** 2
    cumulative = np.cumsum(spectrum)
    if cumulative[-1] == 0.0:
        return 0.0
    idx = int(np.searchsorted(cumulative, 0.99 * cumulative[-1]))
    return idx * fs / (2.0 * (len(spectrum) - 1))


def generate_effort_family(
    rest_beats: Signal,
    rates_bpm: list[float],
    fs: int,
    duration_s: float,
) -> list[Signal]:
    """Multi-heartbeat signals at elevated rates built from one resting beat.

    Each requested rate time-compresses the rest beat onto its own grid
    (periodic linear interpolation) and tiles it across the duration. Rates
    whose compression would push the beat's energy past fs/2 are rejected.
    """
    n_out = round(duration_s * fs)
    if n_out <= 0 or abs(duration_s * fs - n_out) > 1e-9:
        raise ValueError(f"duration {duration_s} s at fs={fs} is not an integer sample count")
    rest = rest_beats.samples
    n_rest = len(rest)
    rest_rate = 60.0 * rest_beats.fs / n_rest  # bpm implied by one beat's duration
    bandwidth = _bandwidth_99(rest, rest_beats.fs)

    out: list[Signal] = []
    for rate in rates_bpm:
        if rate <= 0:
            raise ValueError(f"heart rate must be positive, got {rate}")
        compression = rate / rest_rate
        if bandwidth * compression > fs / 2.0:
            raise ValueError(
                f"rate {rate} bpm compresses the beat's {bandwidth:.1f} Hz content "
                f"past the {fs / 2.0:.1f} Hz Nyquist limit"
            )
        n_beat = round(fs * 60.0 / rate)
        if n_beat < 2:
            raise ValueError(f"rate {rate} bpm leaves fewer than 2 samples per beat")
        j = np.arange(n_out, dtype=np.float64)
        beat_pos = (j % n_beat) / n_beat * n_rest  # periodic phase in rest-beat samples
        i0 = np.floor(beat_pos).astype(int) % n_rest
        frac = beat_pos - np.floor(beat_pos)
        i1 = (i0 + 1) % n_rest
        out.append(Signal(rest[i0] * (1.0 - frac) + rest[i1] * frac, fs))
    return out
