import math

import numpy as np
import pytest

from conftest import numeric_gradient, rel_grad_errors
from ecglab.neural import (
    AdamState,
    CnnConfig,
    adam_step,
    backward,
    clip_gradients,
    denoise,
    forward,
    init_model,
    load_model,
    save_model,
    train,
    train_arrays,
)
from ecglab.neural.layers import mse_loss
from ecglab.signals import Signal


def small_config(**overrides):
    base = dict(input_len=12, num_conv_layers=2, filters_per_layer=2, kernel_len=3,
                pool_stride=4, batch_size=4, epochs=0, seed=3)
    base.update(overrides)
    return CnnConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        CnnConfig(kernel_len=4)
    with pytest.raises(ValueError):
        CnnConfig(pool_mode="max")
    with pytest.raises(ValueError):
        CnnConfig(learning_rate=0.0)
    assert CnnConfig().block_lengths() == [90, 23, 6]
    assert CnnConfig().flattened_size == 36 * 6


def test_output_shape_contract():
    rng = np.random.default_rng(0)
    for input_len in (17, 23, 360):
        cfg = small_config(input_len=input_len)
        model = init_model(cfg)
        pred, _ = forward(model, rng.normal(size=(3, 1, input_len)), train=False)
        assert pred.shape == (3, input_len)


def test_whole_network_gradient_check():
    rng = np.random.default_rng(7)
    cfg = small_config()
    model = init_model(cfg)
    x = rng.normal(size=(4, 1, 12))
    target = rng.normal(size=(4, 12))
    saved = [(b.running_mean.copy(), b.running_var.copy()) for b in model.blocks]

    def restore():
        for blk, (m, v) in zip(model.blocks, saved):
            blk.running_mean, blk.running_var = m.copy(), v.copy()

    def objective():
        restore()
        pred, _ = forward(model, x, train=True)
        return mse_loss(pred, target)[0]

    restore()
    pred, caches = forward(model, x, train=True)
    _, grad_pred = mse_loss(pred, target)
    grads = backward(model, caches, grad_pred)
    params = model.trainable_params()
    assert len(grads) == len(params)
    for p, g in zip(params, grads):
        idx = rng.choice(p.size, size=min(6, p.size), replace=False)
        numeric = numeric_gradient(objective, p, 1e-6, idx)
        assert rel_grad_errors(numeric.ravel()[idx], g.ravel()[idx]) < 1e-4
    restore()


def test_clip_gradients():
    grads = [np.array([0.3, 0.4])]  # norm 0.5
    assert clip_gradients(grads, 1.0)[0] is grads[0]
    big = [np.array([1.2, 1.6])]  # norm 2
    clipped = clip_gradients(big, 1.0)
    assert math.isclose(float(np.sqrt(sum((g**2).sum() for g in clipped))), 1.0, abs_tol=1e-12)
    zeros = [np.zeros(3)]
    assert clip_gradients(zeros, 1.0)[0] is zeros[0]


def test_adam_first_step_hand_case():
    w = np.array([1.0])
    state = AdamState.zeros_like([w])
    grad = np.array([2.0])  # d(w^2)/dw at w=1
    adam_step([w], [grad], state, lr=0.01, t=1)
    assert abs(w[0] - 0.99) < 1e-8


def test_adam_zero_gradient_keeps_params():
    w = np.array([1.5, -2.0])
    state = AdamState.zeros_like([w])
    adam_step([w], [np.zeros(2)], state, lr=0.1, t=1)
    np.testing.assert_array_equal(w, [1.5, -2.0])


def test_adam_rejects_nonfinite():
    w = np.array([1.0])
    state = AdamState.zeros_like([w])
    with pytest.raises(FloatingPointError):
        adam_step([w], [np.array([math.nan])], state, lr=0.1, t=1)
    with pytest.raises(ValueError):
        adam_step([w], [np.array([1.0])], state, lr=0.1, t=0)


class ArrayDataset:
    """Minimal PairedDataset-shaped test double."""

    def __init__(self, noisy, clean, n_test=0):
        self.noisy = [Signal(row, 360) for row in noisy]
        self.clean = [Signal(row, 360) for row in clean]
        n = len(self.noisy)
        self.meta = [{"record_id": "test", "snr_db": 0.0, "beat_rate": None}] * n
        self.test_indices = tuple(range(n_test))
        self.train_indices = tuple(range(n_test, n))

    def test_pairs(self):
        return [(self.clean[i], self.noisy[i]) for i in self.test_indices]


def overfit_fixture(n=8, length=24, seed=0):
    rng = np.random.default_rng(seed)
    clean = np.cumsum(rng.normal(size=(n, length)), axis=1)
    clean -= clean.mean(axis=1, keepdims=True)
    noisy = clean + 0.5 * rng.normal(size=(n, length))
    return noisy, clean


def test_training_overfits_small_fixture():
    noisy, clean = overfit_fixture()
    cfg = small_config(input_len=24, filters_per_layer=4, kernel_len=5,
                       epochs=200, batch_size=8, learning_rate=0.01, seed=1)
    model, trace = train_arrays(cfg, noisy, clean)
    assert len(trace) == 200
    assert all(math.isfinite(row.loss) for row in trace)
    assert trace[-1].loss < 0.1 * trace[0].loss
    assert trace[-1].rms_mv < 0.05 * trace[0].rms_mv


def test_training_zero_epochs_returns_untrained():
    noisy, clean = overfit_fixture()
    cfg = small_config(input_len=24, epochs=0)
    model, trace = train_arrays(cfg, noisy, clean)
    assert trace == []
    fresh = init_model(cfg)
    for a, b in zip(model.trainable_params(), fresh.trainable_params()):
        np.testing.assert_array_equal(a, b)


def test_training_deterministic():
    noisy, clean = overfit_fixture()
    cfg = small_config(input_len=24, filters_per_layer=4, kernel_len=5, epochs=10,
                       batch_size=8, seed=9)
    m1, t1 = train_arrays(cfg, noisy, clean)
    m2, t2 = train_arrays(cfg, noisy, clean)
    for a, b in zip(m1.trainable_params(), m2.trainable_params()):
        np.testing.assert_array_equal(a, b)
    assert [r.loss for r in t1] == [r.loss for r in t2]


def test_training_window_mismatch():
    noisy, clean = overfit_fixture(length=24)
    cfg = small_config(input_len=23)
    with pytest.raises(ValueError):
        train_arrays(cfg, noisy, clean)


def test_training_divergence_aborts():
    # amplitudes whose squared error overflows float64 trip the loss guard
    noisy, clean = overfit_fixture(length=24)
    cfg = small_config(input_len=24, filters_per_layer=4, kernel_len=5, epochs=1,
                       batch_size=8)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(FloatingPointError, match="non-finite loss"):
            train_arrays(cfg, 1e160 * noisy, -1e160 * clean)


def test_train_accepts_dataset_and_records_ids():
    noisy, clean = overfit_fixture(n=8, length=24)
    ds = ArrayDataset(noisy, clean, n_test=2)
    cfg = small_config(input_len=24, epochs=1, batch_size=4)
    model, _ = train(cfg, ds)
    assert model.trained_record_ids == ("test",)


def test_denoise_segments_and_concatenates():
    cfg = small_config(input_len=360, filters_per_layer=2, kernel_len=3)
    model = init_model(cfg)
    sig = Signal(np.sin(np.arange(1800) / 10.0), 360)  # 5 s
    out = denoise(model, sig)
    assert len(out) == 1800
    assert out.fs == 360
    out2 = denoise(model, sig)
    np.testing.assert_array_equal(out.samples, out2.samples)
    outs = denoise(model, [sig, sig])
    assert len(outs) == 2
    with pytest.raises(ValueError):
        denoise(model, Signal(np.ones(100), 360))
    with pytest.raises(TypeError):
        denoise(model, np.ones(360))


def test_save_load_roundtrip(tmp_path):
    noisy, clean = overfit_fixture(n=8, length=24)
    cfg = small_config(input_len=24, filters_per_layer=4, kernel_len=5, epochs=5, batch_size=8)
    model, _ = train_arrays(cfg, noisy, clean, record_ids=("a", "b"))
    path = tmp_path / "model.cnn"
    save_model(model, path)
    assert path.read_bytes()[:4] == b"CNN1"
    loaded = load_model(path)
    assert loaded.config == model.config
    assert loaded.trained_record_ids == ("a", "b")
    x = np.random.default_rng(0).normal(size=(3, 1, 24))
    p1, _ = forward(model, x, train=False)
    p2, _ = forward(loaded, x, train=False)
    np.testing.assert_array_equal(p1, p2)


def test_mean_pool_mode_trains():
    noisy, clean = overfit_fixture(n=4, length=16)
    cfg = small_config(input_len=16, filters_per_layer=2, kernel_len=3, epochs=3,
                       batch_size=4, pool_mode="mean")
    model, trace = train_arrays(cfg, noisy, clean)
    assert all(math.isfinite(r.loss) for r in trace)
