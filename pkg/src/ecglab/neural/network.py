"""Trainable 1-D convolutional regression network.

Architecture: repeated [conv(stride 1, same padding) -> batch norm -> ReLU ->
stride-4 pooling] blocks, then one fully connected layer mapping back to the
input length, trained against mean-squared error with Adam and global
gradient-norm clipping. Inputs are zero-centered by the per-position mean of
the training windows; that mean is stored in the model for inference.

Model files: magic ``CNN1``, uint32 version, uint32 header length, a UTF-8
``key=value`` header block, then little-endian float64 parameter blocks in
this order: input_mean; per block kernels, bias, gamma, beta, running_mean,
running_var; fc weights (row-major), fc bias.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..rng import Rng
from ..signals import Signal, concatenate, segment
from . import layers

_MAGIC = b"CNN1"
_VERSION = 1

POOL_MODES = ("subsample", "mean")


@dataclass(frozen=True)
class CnnConfig:
    input_len: int = 360
    num_conv_layers: int = 3
    filters_per_layer: int = 36
    kernel_len: int = 23
    pool_stride: int = 4
    pool_mode: str = "subsample"
    learning_rate: float = 0.01
    grad_clip_norm: float = 1.0
    batch_size: int = 200
    epochs: int = 100
    seed: int = 0
    bn_momentum: float = 0.9
    bn_eps: float = 1e-5

    def __post_init__(self):
        if self.kernel_len % 2 == 0 or self.kernel_len < 1:
            raise ValueError(f"kernel_len must be odd and positive, got {self.kernel_len}")
        if min(self.input_len, self.num_conv_layers, self.filters_per_layer,
               self.pool_stride, self.batch_size) < 1:
            raise ValueError("structural config values must be >= 1")
        if self.pool_mode not in POOL_MODES:
            raise ValueError(f"pool_mode must be one of {POOL_MODES}, got {self.pool_mode!r}")
        if self.learning_rate <= 0 or self.grad_clip_norm <= 0 or self.epochs < 0:
            raise ValueError("learning_rate and grad_clip_norm must be positive, epochs >= 0")

    def block_lengths(self) -> list[int]:
        """Sequence lengths after each pooling stage."""
        lengths = []
        n = self.input_len
        for _ in range(self.num_conv_layers):
            n = layers.pooled_length(n, self.pool_stride)
            lengths.append(n)
        return lengths

    @property
    def flattened_size(self) -> int:
        return self.filters_per_layer * self.block_lengths()[-1]


@dataclass
class ConvBlock:
    kernels: np.ndarray  # (out_channels, in_channels, kernel_len)
    bias: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray


@dataclass
class CnnModel:
    config: CnnConfig
    input_mean: np.ndarray  # per-position training mean, shape (input_len,)
    blocks: list[ConvBlock]
    fc_weights: np.ndarray  # (flattened_size, input_len)
    fc_bias: np.ndarray
    trained_record_ids: tuple[str, ...] = ()

    def trainable_params(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for blk in self.blocks:
            out.extend([blk.kernels, blk.bias, blk.gamma, blk.beta])
        out.extend([self.fc_weights, self.fc_bias])
        return out

    def denoise(self, noisy):
        return denoise(self, noisy)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    rms_mv: float


def init_model(config: CnnConfig) -> CnnModel:
    """Seeded init: kernels/weights uniform in +-1/sqrt(fan_in), biases zero,
    batch-norm at identity."""
    rng = Rng(config.seed).spawn("init")

    def uniform_pm(shape, fan_in):
        n = int(np.prod(shape))
        return ((rng.uniform(n) * 2.0 - 1.0) / math.sqrt(fan_in)).reshape(shape)

    blocks = []
    in_ch = 1
    f = config.filters_per_layer
    for _ in range(config.num_conv_layers):
        blocks.append(
            ConvBlock(
                kernels=uniform_pm((f, in_ch, config.kernel_len), in_ch * config.kernel_len),
                bias=np.zeros(f),
                gamma=np.ones(f),
                beta=np.zeros(f),
                running_mean=np.zeros(f),
                running_var=np.ones(f),
            )
        )
        in_ch = f
    d = config.flattened_size
    return CnnModel(
        config=config,
        input_mean=np.zeros(config.input_len),
        blocks=blocks,
        fc_weights=uniform_pm((d, config.input_len), d),
        fc_bias=np.zeros(config.input_len),
    )


def forward(model: CnnModel, x: np.ndarray, train: bool = False):
    """x: (B, 1, input_len) already zero-centered. Returns (pred, caches);
    caches is None in inference mode. Train mode updates running stats."""
    cfg = model.config
    caches = [] if train else None
    out = x
    for blk in model.blocks:
        conv_in = out
        out = layers.conv1d_forward(out, blk.kernels, blk.bias)
        out, bn_cache, new_mean, new_var = layers.batchnorm_forward(
            out, blk.gamma, blk.beta, blk.running_mean, blk.running_var,
            train=train, momentum=cfg.bn_momentum, eps=cfg.bn_eps,
        )
        if train:
            blk.running_mean = new_mean
            blk.running_var = new_var
        relu_in = out
        out = layers.relu_forward(out)
        pool_in_len = out.shape[2]
        out = layers.avgpool_forward(out, cfg.pool_stride, cfg.pool_mode)
        if train:
            caches.append((conv_in, bn_cache, relu_in, pool_in_len))
    fc_in = out
    pred = layers.fc_forward(out, model.fc_weights, model.fc_bias)
    if train:
        caches.append(fc_in)
    return pred, caches


def backward(model: CnnModel, caches, grad_pred: np.ndarray) -> list[np.ndarray]:
    """Gradients for trainable_params(), same order."""
    cfg = model.config
    fc_in = caches[-1]
    grad, grad_fc_w, grad_fc_b = layers.fc_backward(fc_in, model.fc_weights, grad_pred)
    block_grads: list[list[np.ndarray]] = []
    for blk, cache in zip(reversed(model.blocks), reversed(caches[:-1])):
        conv_in, bn_cache, relu_in, pool_in_len = cache
        grad = layers.avgpool_backward(grad, pool_in_len, cfg.pool_stride, cfg.pool_mode)
        grad = layers.relu_backward(grad, relu_in)
        grad, grad_gamma, grad_beta = layers.batchnorm_backward(grad, bn_cache)
        grad, grad_k, grad_b = layers.conv1d_backward(conv_in, blk.kernels, grad)
        block_grads.append([grad_k, grad_b, grad_gamma, grad_beta])
    grads: list[np.ndarray] = []
    for g in reversed(block_grads):
        grads.extend(g)
    grads.extend([grad_fc_w, grad_fc_b])
    return grads


# ---------------------------------------------------------------------------
# optimization
# ---------------------------------------------------------------------------

def clip_gradients(grads: list[np.ndarray], max_norm: float = 1.0) -> list[np.ndarray]:
    """Scale all gradients by max_norm/norm when the global L2 norm exceeds it."""
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if total <= max_norm or total == 0.0:
        return grads
    scale = max_norm / total
    return [g * scale for g in grads]


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]

    @classmethod
    def zeros_like(cls, params: list[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    t: int,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Bias-corrected Adam update, in place, for step number t (1-based)."""
    if t < 1:
        raise ValueError("step number t must be >= 1")
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient; training aborted")
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


# ---------------------------------------------------------------------------
# training and inference
# ---------------------------------------------------------------------------

def train(config: CnnConfig, dataset) -> tuple[CnnModel, list[EpochStats]]:
    """Train on the dataset's training split (paired noisy inputs and clean
    targets). Deterministic under the config seed; returns the model and a
    per-epoch loss/RMS trace."""
    idx = list(dataset.train_indices)
    if not idx:
        raise ValueError("dataset has an empty training split")
    noisy = np.stack([dataset.noisy[i].samples for i in idx])
    clean = np.stack([dataset.clean[i].samples for i in idx])
    record_ids = tuple(sorted({str(dataset.meta[i]["record_id"]) for i in idx}))
    return train_arrays(config, noisy, clean, record_ids)


def train_arrays(
    config: CnnConfig,
    noisy: np.ndarray,
    clean: np.ndarray,
    record_ids: tuple[str, ...] = (),
) -> tuple[CnnModel, list[EpochStats]]:
    """Array-level training core: noisy/clean are (n_windows, input_len)."""
    noisy = np.asarray(noisy, dtype=np.float64)
    clean = np.asarray(clean, dtype=np.float64)
    if noisy.shape != clean.shape or noisy.ndim != 2 or noisy.size == 0:
        raise ValueError("noisy and clean must be equal non-empty (n, input_len) arrays")
    if noisy.shape[1] != config.input_len:
        raise ValueError(
            f"dataset windows have {noisy.shape[1]} samples but the model "
            f"expects input_len={config.input_len}"
        )

    model = init_model(config)
    model.input_mean = noisy.mean(axis=0)
    model.trained_record_ids = tuple(record_ids)
    x_all = (noisy - model.input_mean)[:, None, :]

    params = model.trainable_params()
    state = AdamState.zeros_like(params)
    shuffle_rng = Rng(config.seed).spawn("shuffle")
    trace: list[EpochStats] = []
    step = 0
    n = x_all.shape[0]
    for epoch in range(config.epochs):
        perm = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = perm[start : start + config.batch_size]
            pred, caches = forward(model, x_all[batch], train=True)
            loss, grad_pred = layers.mse_loss(pred, clean[batch])
            if not math.isfinite(loss):
                raise FloatingPointError(f"non-finite loss at epoch {epoch}; training aborted")
            grads = backward(model, caches, grad_pred)
            grads = clip_gradients(grads, config.grad_clip_norm)
            step += 1
            adam_step(params, grads, state, config.learning_rate, step)
            epoch_loss += loss * len(batch)
        epoch_loss /= n
        trace.append(EpochStats(epoch=epoch, loss=epoch_loss, rms_mv=math.sqrt(epoch_loss)))
    return model, trace


def denoise(model: CnnModel, noisy):
    """Inference on a Signal (or list of Signals) using running batch-norm
    statistics. Longer signals are segmented into input_len windows and the
    denoised windows re-concatenated; lengths must divide evenly."""
    if isinstance(noisy, list):
        return [denoise(model, s) for s in noisy]
    if not isinstance(noisy, Signal):
        raise TypeError(f"expected Signal or list of Signals, got {type(noisy)!r}")
    input_len = model.config.input_len
    if len(noisy) % input_len != 0:
        raise ValueError(
            f"signal length {len(noisy)} is not a multiple of the model window {input_len}"
        )
    windows = segment(noisy, input_len / noisy.fs)
    x = np.stack([w.samples for w in windows]) - model.input_mean
    pred, _ = forward(model, x[:, None, :], train=False)
    return concatenate([Signal(row, noisy.fs) for row in pred])


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _header_text(model: CnnModel) -> str:
    cfg = model.config
    pairs = [
        ("input_len", cfg.input_len),
        ("num_conv_layers", cfg.num_conv_layers),
        ("filters_per_layer", cfg.filters_per_layer),
        ("kernel_len", cfg.kernel_len),
        ("pool_stride", cfg.pool_stride),
        ("pool_mode", cfg.pool_mode),
        ("learning_rate", repr(cfg.learning_rate)),
        ("grad_clip_norm", repr(cfg.grad_clip_norm)),
        ("batch_size", cfg.batch_size),
        ("epochs", cfg.epochs),
        ("seed", cfg.seed),
        ("bn_momentum", repr(cfg.bn_momentum)),
        ("bn_eps", repr(cfg.bn_eps)),
        ("records", ";".join(model.trained_record_ids)),
    ]
    return "\n".join(f"{k}={v}" for k, v in pairs) + "\n"


def save_model(model: CnnModel, path: str | Path) -> None:
    header = _header_text(model).encode("utf-8")
    blocks: list[np.ndarray] = [model.input_mean]
    for blk in model.blocks:
        blocks.extend([blk.kernels, blk.bias, blk.gamma, blk.beta,
                       blk.running_mean, blk.running_var])
    blocks.extend([model.fc_weights, model.fc_bias])
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(header)))
        fh.write(header)
        for arr in blocks:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path: str | Path) -> CnnModel:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: bad magic {raw[:4]!r}, expected {_MAGIC!r}")
    version, header_len = struct.unpack("<II", raw[4:12])
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported model version {version}")
    header = dict(
        line.split("=", 1) for line in raw[12 : 12 + header_len].decode("utf-8").strip().splitlines()
    )
    config = CnnConfig(
        input_len=int(header["input_len"]),
        num_conv_layers=int(header["num_conv_layers"]),
        filters_per_layer=int(header["filters_per_layer"]),
        kernel_len=int(header["kernel_len"]),
        pool_stride=int(header["pool_stride"]),
        pool_mode=header["pool_mode"],
        learning_rate=float(header["learning_rate"]),
        grad_clip_norm=float(header["grad_clip_norm"]),
        batch_size=int(header["batch_size"]),
        epochs=int(header["epochs"]),
        seed=int(header["seed"]),
        bn_momentum=float(header["bn_momentum"]),
        bn_eps=float(header["bn_eps"]),
    )
    records = tuple(r for r in header.get("records", "").split(";") if r)

    offset = 12 + header_len
    data = np.frombuffer(raw[offset:], dtype="<f8")
    pos = 0

    def take(shape) -> np.ndarray:
        nonlocal pos
        count = int(np.prod(shape))
        out = data[pos : pos + count].reshape(shape).copy()
        pos += count
        return out

    input_mean = take((config.input_len,))
    blocks = []
    in_ch = 1
    f = config.filters_per_layer
    for _ in range(config.num_conv_layers):
        blocks.append(
            ConvBlock(
                kernels=take((f, in_ch, config.kernel_len)),
                bias=take((f,)),
                gamma=take((f,)),
                beta=take((f,)),
                running_mean=take((f,)),
                running_var=take((f,)),
            )
        )
        in_ch = f
    fc_w = take((config.flattened_size, config.input_len))
    fc_b = take((config.input_len,))
    if pos != data.size:
        raise ValueError(f"{path}: {data.size - pos} unexpected trailing values")
    return CnnModel(
        config=config,
        input_mean=input_mean,
        blocks=blocks,
        fc_weights=fc_w,
        fc_bias=fc_b,
        trained_record_ids=records,
    )
