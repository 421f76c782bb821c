"""Restricted Boltzmann machine: energy, conditionals, CD-1 training and
reconstruction-based denoising.

Visible units carry real-valued (minmax-scaled) amplitudes, so mean-field
probabilities stand in for visible samples throughout; hidden states are
Bernoulli-sampled only to generate the CD-1 reconstruction. Energy of a
joint state is ``-a.v - b.h - v.W.h``.

Model files: magic ``RBM1``, uint32 version, uint32 header length, UTF-8
``key=value`` header, then float64-LE blocks: weights (visible x hidden,
row-major), visible bias, hidden bias.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import Rng
from .signals import Signal, minmax_scale

_MAGIC = b"RBM1"
_VERSION = 1

_JOINT_ENUM_LIMIT = 20


@dataclass
class RbmParams:
    weights: np.ndarray  # (n_visible, n_hidden)
    visible_bias: np.ndarray
    hidden_bias: np.ndarray

    def __post_init__(self):
        if self.weights.shape != (self.visible_bias.size, self.hidden_bias.size):
            raise ValueError(
                f"weights {self.weights.shape} inconsistent with biases "
                f"({self.visible_bias.size}, {self.hidden_bias.size})"
            )

    @property
    def n_visible(self) -> int:
        return self.visible_bias.size

    @property
    def n_hidden(self) -> int:
        return self.hidden_bias.size

    def denoise(self, noisy):
        return denoise_rbm(self, noisy)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def energy(params: RbmParams, visible: np.ndarray, hidden: np.ndarray) -> float:
    visible = np.asarray(visible, dtype=np.float64)
    hidden = np.asarray(hidden, dtype=np.float64)
    if visible.shape != (params.n_visible,) or hidden.shape != (params.n_hidden,):
        raise ValueError(
            f"state shapes {visible.shape}/{hidden.shape} do not match "
            f"({params.n_visible},)/({params.n_hidden},)"
        )
    return float(
        -params.visible_bias @ visible
        - params.hidden_bias @ hidden
        - visible @ params.weights @ hidden
    )


def hidden_given_visible(params: RbmParams, visible: np.ndarray) -> np.ndarray:
    """Activation probabilities sigma(b + v.W); accepts a vector or a batch."""
    visible = np.asarray(visible, dtype=np.float64)
    if visible.shape[-1] != params.n_visible:
        raise ValueError(f"visible size {visible.shape[-1]} != {params.n_visible}")
    return _sigmoid(visible @ params.weights + params.hidden_bias)


def visible_given_hidden(params: RbmParams, hidden: np.ndarray) -> np.ndarray:
    """Reconstruction means sigma(a + W.h); accepts a vector or a batch."""
    hidden = np.asarray(hidden, dtype=np.float64)
    if hidden.shape[-1] != params.n_hidden:
        raise ValueError(f"hidden size {hidden.shape[-1]} != {params.n_hidden}")
    return _sigmoid(hidden @ params.weights.T + params.visible_bias)


def _all_states(n: int) -> np.ndarray:
    """(2^n, n) matrix of all binary states."""
    grid = np.indices((2,) * n).reshape(n, -1).T
    return grid.astype(np.float64)


def partition_function(params: RbmParams) -> float:
    """Exhaustive normalizer over all binary state pairs (small models only)."""
    if params.n_visible + params.n_hidden > _JOINT_ENUM_LIMIT:
        raise ValueError(
            f"exhaustive enumeration limited to {_JOINT_ENUM_LIMIT} total units, "
            f"got {params.n_visible + params.n_hidden}"
        )
    vs = _all_states(params.n_visible)
    hs = _all_states(params.n_hidden)
    # energies for every (visible, hidden) pair
    e = (
        -(vs @ params.visible_bias)[:, None]
        - (hs @ params.hidden_bias)[None, :]
        - vs @ params.weights @ hs.T
    )
    return float(np.exp(-e).sum())


def joint_probability(params: RbmParams, visible: np.ndarray, hidden: np.ndarray) -> float:
    """exp(-E)/T with T enumerated exhaustively."""
    return math.exp(-energy(params, visible, hidden)) / partition_function(params)


@dataclass(frozen=True)
class RbmTrainConfig:
    n_hidden: int = 64
    learning_rate: float = 0.01
    epochs: int = 20
    batch_size: int = 10
    seed: int = 0

    def __post_init__(self):
        if min(self.n_hidden, self.epochs, self.batch_size) < 1 and self.epochs != 0:
            raise ValueError("n_hidden and batch_size must be >= 1, epochs >= 0")


def train_cd1(data: np.ndarray, config: RbmTrainConfig) -> tuple[RbmParams, list[float]]:
    """One-step contrastive divergence on rows of ``data`` (minmax-scaled to
    [0, 1]). Returns the trained parameters and the per-epoch mean squared
    reconstruction error."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.size == 0:
        raise ValueError("training data must be a non-empty (n_windows, n_visible) array")
    if data.min() < -1e-9 or data.max() > 1.0 + 1e-9:
        raise ValueError(
            f"inputs must be scaled to [0, 1]; found range "
            f"[{data.min():.3g}, {data.max():.3g}]"
        )
    n, n_visible = data.shape
    rng = Rng(config.seed)
    init = rng.spawn("init")
    weights = 0.01 * init.normal(n_visible * config.n_hidden).reshape(n_visible, config.n_hidden)
    params = RbmParams(weights, np.zeros(n_visible), np.zeros(config.n_hidden))

    shuffle = rng.spawn("shuffle")
    gibbs = rng.spawn("gibbs")
    errors: list[float] = []
    for _ in range(config.epochs):
        perm = shuffle.permutation(n)
        sq_err = 0.0
        for start in range(0, n, config.batch_size):
            v0 = data[perm[start : start + config.batch_size]]
            p_h0 = hidden_given_visible(params, v0)
            h0 = (gibbs.uniform(p_h0.size).reshape(p_h0.shape) < p_h0).astype(np.float64)
            v1 = visible_given_hidden(params, h0)  # mean-field reconstruction
            p_h1 = hidden_given_visible(params, v1)
            m = v0.shape[0]
            lr = config.learning_rate
            params.weights += lr * (v0.T @ p_h0 - v1.T @ p_h1) / m
            params.visible_bias += lr * (v0 - v1).mean(axis=0)
            params.hidden_bias += lr * (p_h0 - p_h1).mean(axis=0)
            sq_err += float(((v1 - v0) ** 2).sum())
        errors.append(sq_err / (n * n_visible))
    return params, errors


def reconstruct(params: RbmParams, scaled: np.ndarray) -> np.ndarray:
    """One deterministic up-down pass on already-scaled [0, 1] data."""
    return visible_given_hidden(params, hidden_given_visible(params, scaled))


def denoise_rbm(params: RbmParams, noisy: Signal) -> Signal:
    """Scale to [0, 1], one up-down mean-field pass, inverse scale."""
    if len(noisy) != params.n_visible:
        raise ValueError(f"signal length {len(noisy)} != n_visible {params.n_visible}")
    scaled, record = minmax_scale(noisy, 0.0, 1.0)
    recon = reconstruct(params, scaled.samples)
    return record.invert(Signal(recon, noisy.fs))


def save_rbm(params: RbmParams, path: str | Path) -> None:
    header = f"n_visible={params.n_visible}\nn_hidden={params.n_hidden}\n".encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(header)))
        fh.write(header)
        for arr in (params.weights, params.visible_bias, params.hidden_bias):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_rbm(path: str | Path) -> RbmParams:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: bad magic {raw[:4]!r}, expected {_MAGIC!r}")
    version, header_len = struct.unpack("<II", raw[4:12])
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported model version {version}")
    header = dict(
        line.split("=", 1) for line in raw[12 : 12 + header_len].decode("utf-8").strip().splitlines()
    )
    n_visible = int(header["n_visible"])
    n_hidden = int(header["n_hidden"])
    data = np.frombuffer(raw[12 + header_len :], dtype="<f8")
    expected = n_visible * n_hidden + n_visible + n_hidden
    if data.size != expected:
        raise ValueError(f"{path}: expected {expected} parameter values, found {data.size}")
    weights = data[: n_visible * n_hidden].reshape(n_visible, n_hidden).copy()
    visible_bias = data[n_visible * n_hidden : n_visible * n_hidden + n_visible].copy()
    hidden_bias = data[n_visible * n_hidden + n_visible :].copy()
    return RbmParams(weights, visible_bias, hidden_bias)
