import math

import numpy as np
import pytest

from ecglab.signals import Signal, find_peaks
from ecglab.synth import (
    EcgModelParams,
    Spike,
    TrajectoryState,
    default_params,
    generate_ecg,
    generate_effort_family,
    rk4_step,
)


def flat_params(heart_rate=60.0):
    """All spike amplitudes zero: z decouples into dz/dt = -(z - z0)."""
    base = default_params(heart_rate_bpm=heart_rate)
    spikes = tuple(Spike(s.label, s.theta, 0.0, s.b) for s in base.spikes)
    return EcgModelParams(spikes=spikes, z0=0.0, heart_rate_bpm=heart_rate)


def integrate(state, params, dt, t_end):
    n = round(t_end / dt)
    for _ in range(n):
        state = rk4_step(state, params, dt)
    return state


def test_params_validation():
    base = default_params()
    with pytest.raises(ValueError):
        EcgModelParams(spikes=base.spikes[::-1])  # wrong label order
    bad = (Spike("P", 0.5, 1.0, 0.1),) + base.spikes[1:]
    with pytest.raises(ValueError):
        EcgModelParams(spikes=bad)  # angles no longer increasing
    with pytest.raises(ValueError):
        EcgModelParams(spikes=base.spikes, heart_rate_bpm=0.0)


def test_baseline_is_fixed_point():
    params = flat_params()
    state = TrajectoryState(x=-1.0, y=0.0, z=0.0)
    for _ in range(100):
        state = rk4_step(state, params, 1.0 / 360.0)
        assert state.z == 0.0


def test_exponential_decay_oracle():
    params = flat_params()
    state = TrajectoryState(x=-1.0, y=0.0, z=1.0)
    state = integrate(state, params, 1.0 / 360.0, 1.0)
    assert abs(state.z - math.exp(-1.0)) < 1e-8


def test_radius_converges_to_unit_circle():
    # radial dynamics decouple: dr/dt = r(1 - r), the logistic curve, so from
    # r0 = 2 the closed form is r(t) = 1 / (1 - 0.5 exp(-t))
    params = flat_params()
    coarse = integrate(TrajectoryState(x=2.0, y=0.0, z=0.0), params, 1.0 / 360.0, 5.0)
    fine = integrate(TrajectoryState(x=2.0, y=0.0, z=0.0), params, 1.0 / 3600.0, 5.0)
    expected_5s = 1.0 / (1.0 - 0.5 * math.exp(-5.0))  # 1.003380...
    for state in (coarse, fine):
        assert abs(math.hypot(state.x, state.y) - expected_5s) < 1e-8
    assert abs(math.hypot(coarse.x, coarse.y) - math.hypot(fine.x, fine.y)) < 1e-8
    # within 1e-3 of the limit cycle once exp(-t) < 2e-3, i.e. past ~6.3 s
    settled = integrate(TrajectoryState(x=2.0, y=0.0, z=0.0), params, 1.0 / 360.0, 8.0)
    assert abs(math.hypot(settled.x, settled.y) - 1.0) < 1e-3


def test_rk4_is_fourth_order():
    params = flat_params()
    errors = []
    dt = 0.1
    for _ in range(4):
        state = integrate(TrajectoryState(x=-1.0, y=0.0, z=1.0), params, dt, 1.0)
        errors.append(abs(state.z - math.exp(-1.0)))
        dt /= 2.0
    for coarse, fine in zip(errors, errors[1:]):
        assert coarse / fine >= 8.0


def count_r_peaks(sig: Signal, heart_rate) -> int:
    min_dist = int(0.6 * sig.fs * 60.0 / heart_rate)
    return len(find_peaks(sig.samples, height=0.5 * sig.samples.max(), min_distance=min_dist))


def test_generate_ecg_beat_counts():
    sig = generate_ecg(default_params(60.0), 10.0, 360)
    assert abs(count_r_peaks(sig, 60.0) - 10) <= 1
    sig90 = generate_ecg(default_params(90.0), 10.0, 360)
    assert count_r_peaks(sig90, 90.0) == 15


def test_generate_ecg_voltage_bounds():
    for hr in (57.0, 67.0):
        sig = generate_ecg(default_params(hr, voltage_scale=6.0), 10.0, 360)
        assert sig.samples.max() <= 3.0 + 1e-12
        assert sig.samples.min() >= -3.0 - 1e-12
        assert sig.samples.max() - sig.samples.min() == pytest.approx(6.0)


def test_generate_ecg_deterministic():
    a = generate_ecg(default_params(72.0), 2.0, 360)
    b = generate_ecg(default_params(72.0), 2.0, 360)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_generate_ecg_rejects_fractional_duration():
    with pytest.raises(ValueError):
        generate_ecg(default_params(), 1.0001, 360)


def test_phase_advances_at_omega():
    params = default_params(heart_rate_bpm=75.0)
    dt = 1.0 / 360.0
    state = TrajectoryState(x=-1.0, y=0.0, z=0.0)
    thetas = []
    for _ in range(3600):
        state = rk4_step(state, params, dt)
        thetas.append(math.atan2(state.y, state.x))
    unwrapped = np.unwrap(thetas)
    mean_rate = (unwrapped[-1] - unwrapped[0]) / (dt * (len(unwrapped) - 1))
    assert mean_rate == pytest.approx(params.omega, rel=0.01)


def one_beat(fs=360, hr=60.0) -> Signal:
    sig = generate_ecg(default_params(hr, voltage_scale=6.0), 60.0 / hr * 2, fs)
    # a full cycle: exactly one beat period of samples
    n = round(fs * 60.0 / hr)
    return Signal(sig.samples[:n], fs)


def test_effort_family_beat_counts():
    beat = one_beat()
    rates = [72.0, 78.0, 84.0, 90.0]
    family = generate_effort_family(beat, rates, 360, 10.0)
    counts = [count_r_peaks(sig, rate) for sig, rate in zip(family, rates)]
    assert counts == [12, 13, 14, 15]


def test_effort_identity_rate():
    beat = one_beat()
    out = generate_effort_family(beat, [60.0], 360, 10.0)[0]
    tiled = np.tile(beat.samples, 10)
    np.testing.assert_allclose(out.samples, tiled, atol=1e-6)


def test_effort_empty_rates():
    assert generate_effort_family(one_beat(), [], 360, 10.0) == []


def test_effort_alias_guard():
    with pytest.raises(ValueError):
        generate_effort_family(one_beat(), [30000.0], 360, 10.0)
