import math

import numpy as np
import pytest

from ecglab.metrics import snr_db
from ecglab.noise import (
    NoiseSpec,
    apply_noise,
    drift_noise,
    make_noise,
    noise_stress_mix,
    random_noise,
    scale_noise_to_snr,
)
from ecglab.signals import Signal, power

FOURTEEN_LEVELS = [36, 24, 20, 18, 14, 12, 8, 6, 3, 0, -1, -3, -6, -8]


def test_scale_to_0db_equalizes_power():
    rng = np.random.default_rng(0)
    clean = Signal(rng.normal(size=500) * 2.0, 360)
    noise = Signal(rng.normal(size=500), 360)
    noisy = scale_noise_to_snr(clean, noise, 0.0)
    injected = noisy.samples - clean.samples
    assert float(injected @ injected) == pytest.approx(power(clean), rel=1e-9)


def test_scale_gain_hand_case():
    clean = Signal([2.0], 1)  # power 4
    noise = Signal([1.0], 1)  # unit power
    target = 10.0 * math.log10(1.0 / 4.0)  # about -6.0206 dB
    noisy = scale_noise_to_snr(clean, noise, target)
    assert noisy.samples[0] - clean.samples[0] == pytest.approx(4.0)  # amplitude gain 4
    assert power(Signal(noisy.samples - clean.samples, 1)) == pytest.approx(16.0)


def test_scale_rejects_degenerate_inputs():
    clean = Signal([1.0, 2.0], 1)
    with pytest.raises(ValueError):
        scale_noise_to_snr(clean, Signal([0.0, 0.0], 1), 0.0)
    with pytest.raises(ValueError):
        scale_noise_to_snr(Signal([0.0, 0.0], 1), clean, 0.0)
    with pytest.raises(ValueError):
        scale_noise_to_snr(clean, Signal([1.0], 1), 0.0)
    with pytest.raises(ValueError):
        scale_noise_to_snr(clean, clean, math.inf)


def test_random_noise_statistics():
    draws = random_noise(1_000_000, seed=99)
    assert abs(draws.mean()) < 0.005
    assert 0.99 < draws.var() < 1.01


def test_random_noise_deterministic():
    np.testing.assert_array_equal(random_noise(1000, 5), random_noise(1000, 5))
    with pytest.raises(ValueError):
        random_noise(0, 5)


def test_drift_noise_is_low_frequency():
    fs = 360
    drift = drift_noise(fs * 30, fs, seed=4)
    spectrum = np.abs(np.fft.rfft(drift)) ** 2
    freqs = np.fft.rfftfreq(len(drift), 1.0 / fs)
    above_1hz = spectrum[freqs > 1.0].sum()
    assert above_1hz < 0.01 * spectrum.sum()
    assert math.sqrt(float(drift @ drift) / len(drift)) == pytest.approx(1.0, rel=1e-9)
    np.testing.assert_array_equal(drift, drift_noise(fs * 30, fs, seed=4))


def test_random_plus_drift_hits_target_exactly():
    rng = np.random.default_rng(1)
    clean = Signal(rng.normal(size=3600) + 2.0, 360)
    noisy = apply_noise(clean, NoiseSpec(kind="random_plus_drift", target_snr_db=-7.0, seed=8))
    assert snr_db(clean, noisy) == pytest.approx(-7.0, abs=1e-9)


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(kind="purple", target_snr_db=0.0, seed=1)
    with pytest.raises(ValueError):
        NoiseSpec(kind="random", target_snr_db=math.inf, seed=1)
    with pytest.raises(ValueError):
        NoiseSpec(kind="recorded", target_snr_db=0.0, seed=1)  # missing source


def test_noise_stress_mix_levels():
    rng = np.random.default_rng(2)
    clean = Signal(rng.normal(size=720) + 1.0, 360)
    noise_record = Signal(rng.normal(size=100), 360)  # shorter: forces tiling
    out = noise_stress_mix(clean, noise_record, [-6.0, 0.0, 6.0, 12.0], seed=3)
    assert [level for level, _ in out] == [-6.0, 0.0, 6.0, 12.0]
    for level, noisy in out:
        assert snr_db(clean, noisy) == pytest.approx(level, abs=1e-9)
    assert noise_stress_mix(clean, noise_record, [], seed=3) == []
    with pytest.raises(ValueError):
        noise_stress_mix(clean, noise_record, [math.inf], seed=3)


def test_fourteen_level_calibration():
    rng = np.random.default_rng(3)
    clean = Signal(rng.normal(size=360) + 0.5, 360)
    noise_record = Signal(rng.normal(size=5000), 360)
    for level, noisy in noise_stress_mix(clean, noise_record, FOURTEEN_LEVELS, seed=7):
        assert snr_db(clean, noisy) == pytest.approx(level, abs=1e-9)


def test_mixing_is_additive():
    rng = np.random.default_rng(4)
    clean = Signal(rng.normal(size=512) + 1.0, 256)
    template = Signal(random_noise(512, 21), 256)
    noisy = scale_noise_to_snr(clean, template, -3.0)
    g = math.sqrt(power(clean) / (power(template) * 10 ** (-0.3)))
    np.testing.assert_allclose(noisy.samples - clean.samples, g * template.samples,
                               rtol=1e-12, atol=1e-12)


def test_make_noise_recorded_deterministic():
    source = Signal(np.sin(np.arange(300) / 5.0) + 2.0, 100)
    spec = NoiseSpec(kind="recorded", target_snr_db=0.0, seed=5, noise_source=source)
    a = make_noise(spec, 450, 100)
    b = make_noise(spec, 450, 100)
    np.testing.assert_array_equal(a, b)
    assert len(a) == 450
