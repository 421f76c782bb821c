import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import Pipeline

from ecglab.estimators import (
    ClassicalDenoiser,
    CnnDenoiser,
    RbmDenoiser,
    WaveletDenoiser,
    check_paired,
    check_windows,
)
from ecglab.filters import classical_chain
from ecglab.noise import random_noise
from ecglab.signals import Signal, segment


def window_fixture(n=24, length=24, seed=0, noise=0.4):
    """Windows from a low-dimensional family (random-phase sinusoids), so a
    small bottlenecked network can actually learn the clean manifold."""
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    phases = rng.uniform(0, 2 * np.pi, size=(n, 1))
    amps = rng.uniform(0.8, 1.6, size=(n, 1))
    clean = amps * np.sin(2 * np.pi * t[None, :] / 12.0 + phases)
    noisy = clean + noise * rng.normal(size=(n, length))
    return noisy, clean


def test_check_windows_validation():
    with pytest.raises(ValueError):
        check_windows(np.ones((2, 2, 2)))
    with pytest.raises(ValueError):
        check_windows(np.array([[1.0, np.nan]]))
    with pytest.raises(ValueError):
        check_windows(np.ones((2, 3)), window_len=4)
    out = check_windows([1.0, 2.0, 3.0])
    assert out.shape == (1, 3)
    with pytest.raises(ValueError):
        check_paired(np.ones((2, 3)), np.ones((3, 3)))


def test_cnn_denoiser_fit_predict():
    noisy, clean = window_fixture()
    est = CnnDenoiser(num_conv_layers=2, filters_per_layer=4, kernel_len=5,
                      batch_size=12, epochs=60, seed=1)
    est.fit(noisy, clean)
    pred = est.predict(noisy)
    assert pred.shape == noisy.shape
    before = float(((noisy - clean) ** 2).mean())
    after = float(((pred - clean) ** 2).mean())
    assert after < before
    assert len(est.loss_trace_) == 60


def test_cnn_denoiser_not_fitted():
    with pytest.raises(NotFittedError):
        CnnDenoiser().predict(np.ones((2, 360)))


def test_cnn_denoiser_sklearn_protocol():
    est = CnnDenoiser(epochs=3, filters_per_layer=4)
    params = est.get_params()
    assert params["epochs"] == 3
    cloned = clone(est)
    assert cloned.get_params() == params
    est.set_params(epochs=7)
    assert est.epochs == 7


def test_wavelet_denoiser_transform():
    rng = np.random.default_rng(2)
    t = np.arange(256)
    clean = np.sin(2 * np.pi * t / 64.0)[None, :] * np.ones((5, 1))
    noisy = clean + 0.3 * rng.normal(size=clean.shape)
    out = WaveletDenoiser(family="sym4").fit().transform(noisy)
    assert out.shape == noisy.shape
    assert ((out - clean) ** 2).mean() < ((noisy - clean) ** 2).mean()


def test_wavelet_denoiser_in_pipeline():
    pipe = Pipeline([("denoise", WaveletDenoiser())])
    rng = np.random.default_rng(3)
    x = rng.normal(size=(2, 64))
    out = pipe.fit_transform(x)
    assert out.shape == (2, 64)


def test_rbm_denoiser_fit_transform():
    rng = np.random.default_rng(4)
    t = np.arange(36) / 36.0
    clean = np.sin(2 * np.pi * t)[None, :] * rng.uniform(0.8, 1.2, size=(30, 1))
    est = RbmDenoiser(n_hidden=12, epochs=15, batch_size=6, seed=5)
    est.fit(clean)
    noisy = clean + 0.1 * rng.normal(size=clean.shape)
    out = est.transform(noisy)
    assert out.shape == clean.shape
    assert np.isfinite(out).all()
    with pytest.raises(NotFittedError):
        RbmDenoiser().transform(clean)


def test_rbm_denoiser_rejects_constant_rows():
    with pytest.raises(ValueError):
        RbmDenoiser().fit(np.ones((3, 10)))


def test_classical_denoiser_matches_chain(ecg_10s):
    windows = np.stack([w.samples for w in segment(ecg_10s, 2.0)])  # 720-sample rows
    noisy = windows + 0.2 * random_noise(windows.size, 9).reshape(windows.shape)
    est = ClassicalDenoiser(fs=ecg_10s.fs)
    out = est.fit().transform(noisy)
    direct = classical_chain(Signal(noisy[0], ecg_10s.fs)).samples
    np.testing.assert_allclose(out[0], direct, atol=1e-12)


def test_estimators_expose_get_params():
    for est in (WaveletDenoiser(), ClassicalDenoiser(), RbmDenoiser()):
        params = est.get_params()
        cloned = clone(est)
        assert cloned.get_params() == params
