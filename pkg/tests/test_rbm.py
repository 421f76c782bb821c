import itertools
import math

import numpy as np
import pytest

from ecglab.rbm import (
    RbmParams,
    RbmTrainConfig,
    denoise_rbm,
    energy,
    hidden_given_visible,
    joint_probability,
    load_rbm,
    partition_function,
    reconstruct,
    save_rbm,
    train_cd1,
    visible_given_hidden,
)
from ecglab.rng import Rng
from ecglab.signals import Signal


def rbm(nv=3, nh=2, seed=0, scale=0.5):
    rng = np.random.default_rng(seed)
    return RbmParams(
        weights=scale * rng.normal(size=(nv, nh)),
        visible_bias=scale * rng.normal(size=nv),
        hidden_bias=scale * rng.normal(size=nh),
    )


def test_energy_hand_case():
    params = RbmParams(np.array([[2.0]]), np.array([0.5]), np.array([-0.25]))
    assert energy(params, np.array([1.0]), np.array([1.0])) == pytest.approx(-2.25)


def test_energy_zero_states_and_params():
    params = rbm()
    assert energy(params, np.zeros(3), np.zeros(2)) == 0.0
    flat = RbmParams(np.zeros((3, 2)), np.zeros(3), np.zeros(2))
    for v in itertools.product([0.0, 1.0], repeat=3):
        for h in itertools.product([0.0, 1.0], repeat=2):
            assert energy(flat, np.array(v), np.array(h)) == 0.0


def test_energy_dimension_mismatch():
    with pytest.raises(ValueError):
        energy(rbm(), np.zeros(4), np.zeros(2))
    with pytest.raises(ValueError):
        RbmParams(np.zeros((3, 2)), np.zeros(2), np.zeros(2))


def test_hidden_given_visible_cases():
    flat = RbmParams(np.zeros((3, 2)), np.zeros(3), np.zeros(2))
    np.testing.assert_allclose(hidden_given_visible(flat, np.ones(3)), 0.5)
    hot = RbmParams(np.full((1, 1), 30.0), np.zeros(1), np.zeros(1))
    assert hidden_given_visible(hot, np.ones(1))[0] > 1.0 - 1e-9
    hand = RbmParams(np.array([[1.0], [-1.0]]), np.zeros(2), np.zeros(1))
    assert hidden_given_visible(hand, np.array([1.0, 1.0]))[0] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        hidden_given_visible(flat, np.ones(4))


def test_visible_given_hidden_mirrors():
    flat = RbmParams(np.zeros((3, 2)), np.zeros(3), np.zeros(2))
    np.testing.assert_allclose(visible_given_hidden(flat, np.ones(2)), 0.5)
    hot = RbmParams(np.full((1, 1), 30.0), np.zeros(1), np.zeros(1))
    assert visible_given_hidden(hot, np.ones(1))[0] > 1.0 - 1e-9
    with pytest.raises(ValueError):
        visible_given_hidden(flat, np.ones(3))


def test_conditional_symmetry():
    params = rbm(4, 3, seed=5)
    swapped = RbmParams(params.weights.T.copy(), params.hidden_bias, params.visible_bias)
    state = np.random.default_rng(1).uniform(size=3)
    np.testing.assert_allclose(
        hidden_given_visible(swapped, state), visible_given_hidden(params, state)
    )


def test_joint_probability_uniform_when_flat():
    flat = RbmParams(np.zeros((3, 2)), np.zeros(3), np.zeros(2))
    for v in itertools.product([0.0, 1.0], repeat=3):
        for h in itertools.product([0.0, 1.0], repeat=2):
            assert joint_probability(flat, np.array(v), np.array(h)) == pytest.approx(1 / 32)


def test_joint_probability_normalizes():
    params = rbm(3, 2, seed=7)
    total = sum(
        joint_probability(params, np.array(v, dtype=float), np.array(h, dtype=float))
        for v in itertools.product([0, 1], repeat=3)
        for h in itertools.product([0, 1], repeat=2)
    )
    assert total == pytest.approx(1.0, abs=1e-12)


def test_partition_function_matches_incremental_enumeration():
    params = rbm(4, 3, seed=11)
    incremental = sum(
        math.exp(-energy(params, np.array(v, dtype=float), np.array(h, dtype=float)))
        for v in itertools.product([0, 1], repeat=4)
        for h in itertools.product([0, 1], repeat=3)
    )
    assert partition_function(params) == pytest.approx(incremental, rel=1e-12)


def test_joint_probability_size_guard():
    big = RbmParams(np.zeros((15, 15)), np.zeros(15), np.zeros(15))
    with pytest.raises(ValueError):
        partition_function(big)


def windows_fixture(n=50, width=36, seed=2):
    rng = np.random.default_rng(seed)
    t = np.arange(width) / width
    base = np.sin(2 * np.pi * t)[None, :] * rng.uniform(0.5, 1.0, size=(n, 1))
    base += 0.1 * rng.normal(size=(n, width))
    lo = base.min(axis=1, keepdims=True)
    hi = base.max(axis=1, keepdims=True)
    return (base - lo) / (hi - lo)


def test_cd1_reconstruction_error_decreases():
    data = windows_fixture()
    _, errors = train_cd1(data, RbmTrainConfig(n_hidden=16, epochs=20, batch_size=10, seed=4))
    assert len(errors) == 20
    assert errors[19] < errors[0]


def test_cd1_zero_learning_rate_keeps_params():
    data = windows_fixture(n=10)
    params0, _ = train_cd1(data, RbmTrainConfig(n_hidden=8, learning_rate=0.0, epochs=0, seed=6))
    params1, _ = train_cd1(data, RbmTrainConfig(n_hidden=8, learning_rate=0.0, epochs=3, seed=6))
    np.testing.assert_array_equal(params0.weights, params1.weights)
    np.testing.assert_array_equal(params0.visible_bias, params1.visible_bias)
    np.testing.assert_array_equal(params0.hidden_bias, params1.hidden_bias)


def test_cd1_seed_determinism():
    data = windows_fixture(n=20)
    cfg = RbmTrainConfig(n_hidden=8, epochs=5, batch_size=5, seed=13)
    p1, e1 = train_cd1(data, cfg)
    p2, e2 = train_cd1(data, cfg)
    np.testing.assert_array_equal(p1.weights, p2.weights)
    assert e1 == e2


def test_cd1_rejects_unscaled_input():
    data = windows_fixture(n=5) * 3.0 - 1.0
    with pytest.raises(ValueError):
        train_cd1(data, RbmTrainConfig(n_hidden=4, epochs=1))


def test_gibbs_chain_energy_trend():
    # energies along short Gibbs chains drop on average (statistical check)
    params = rbm(6, 4, seed=21, scale=1.5)
    rng = Rng(17)
    chains = 1000
    v = (rng.uniform(chains * 6).reshape(chains, 6) < 0.5).astype(float)
    h = (rng.uniform(chains * 4).reshape(chains, 4) < 0.5).astype(float)
    start = np.mean([energy(params, vi, hi) for vi, hi in zip(v, h)])
    for _ in range(5):
        ph = hidden_given_visible(params, v)
        h = (rng.uniform(ph.size).reshape(ph.shape) < ph).astype(float)
        pv = visible_given_hidden(params, h)
        v = (rng.uniform(pv.size).reshape(pv.shape) < pv).astype(float)
    end = np.mean([energy(params, vi, hi) for vi, hi in zip(v, h)])
    print(f"gibbs energy trend: start {start:.4f} -> end {end:.4f}")
    assert end <= start + 0.1


def test_reconstruct_of_zeros_is_defined():
    params = rbm(5, 3, seed=8)
    out = reconstruct(params, np.zeros(5))
    expected = visible_given_hidden(params, hidden_given_visible(params, np.zeros(5)))
    np.testing.assert_allclose(out, expected)
    assert out.shape == (5,)


def test_denoise_rbm_roundtrip_properties():
    params = rbm(36, 12, seed=9)
    sig = Signal(np.sin(np.arange(36) / 3.0) * 2.0 + 0.3, 36)
    out1 = denoise_rbm(params, sig)
    out2 = denoise_rbm(params, sig)
    np.testing.assert_array_equal(out1.samples, out2.samples)
    assert len(out1) == 36
    with pytest.raises(ValueError):
        denoise_rbm(params, Signal(np.ones(35), 36))


def test_save_load_roundtrip(tmp_path):
    params = rbm(7, 4, seed=10)
    path = tmp_path / "model.rbm"
    save_rbm(params, path)
    assert path.read_bytes()[:4] == b"RBM1"
    loaded = load_rbm(path)
    np.testing.assert_array_equal(loaded.weights, params.weights)
    np.testing.assert_array_equal(loaded.visible_bias, params.visible_bias)
    np.testing.assert_array_equal(loaded.hidden_bias, params.hidden_bias)
