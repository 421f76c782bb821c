"""Forward/backward primitives for the 1-D convolutional regression network.

All tensors are float64 numpy arrays shaped (batch, channels, length) unless
stated otherwise. Every backward function is the exact adjoint of its forward
counterpart; the test suite pins this with central finite differences.
"""

from __future__ import annotations

import numpy as np


def _check_3d(x: np.ndarray, name: str = "input") -> None:
    if x.ndim != 3:
        raise ValueError(f"{name} must be (batch, channels, length), got shape {x.shape}")


# ---------------------------------------------------------------------------
# convolution, stride 1, zero 'same' padding
# ---------------------------------------------------------------------------

def conv1d_forward(x: np.ndarray, kernels: np.ndarray, biases: np.ndarray) -> np.ndarray:
    """x: (B, C, L), kernels: (O, C, K) with K odd, biases: (O,) -> (B, O, L)."""
    _check_3d(x)
    n_out, n_in, k_len = kernels.shape
    if k_len % 2 == 0:
        raise ValueError(f"kernel length must be odd, got {k_len}")
    if x.shape[1] != n_in:
        raise ValueError(f"channel mismatch: input {x.shape[1]}, kernels expect {n_in}")
    if biases.shape != (n_out,):
        raise ValueError(f"biases must have shape ({n_out},), got {biases.shape}")
    batch, _, length = x.shape
    pad = (k_len - 1) // 2
    xp = np.zeros((batch, n_in, length + k_len - 1))
    xp[:, :, pad : pad + length] = x
    out = np.broadcast_to(biases[None, :, None], (batch, n_out, length)).copy()
    for kk in range(k_len):
        # (B, C, L) . (O, C) over C, one BLAS product per tap
        out += np.tensordot(xp[:, :, kk : kk + length], kernels[:, :, kk], axes=([1], [1])).transpose(0, 2, 1)
    return out


def conv1d_backward(
    x: np.ndarray, kernels: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients w.r.t. (input, kernels, biases) for the same-padded conv."""
    _check_3d(x)
    _check_3d(grad_out, "grad_out")
    n_out, n_in, k_len = kernels.shape
    batch, _, length = x.shape
    if grad_out.shape != (batch, n_out, length):
        raise ValueError(f"grad_out shape {grad_out.shape} != {(batch, n_out, length)}")
    pad = (k_len - 1) // 2
    xp = np.zeros((batch, n_in, length + k_len - 1))
    xp[:, :, pad : pad + length] = x

    grad_b = grad_out.sum(axis=(0, 2))
    grad_k = np.empty_like(kernels)
    grad_xp = np.zeros_like(xp)
    for kk in range(k_len):
        grad_k[:, :, kk] = np.tensordot(grad_out, xp[:, :, kk : kk + length], axes=([0, 2], [0, 2]))
        grad_xp[:, :, kk : kk + length] += np.tensordot(
            grad_out, kernels[:, :, kk], axes=([1], [0])
        ).transpose(0, 2, 1)
    grad_x = grad_xp[:, :, pad : pad + length]
    return grad_x, grad_k, grad_b


# ---------------------------------------------------------------------------
# batch normalization, per channel over (batch, length)
# ---------------------------------------------------------------------------

def batchnorm_forward(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    train: bool,
    momentum: float = 0.9,
    eps: float = 1e-5,
):
    """Returns (out, cache, new_running_mean, new_running_var).

    Train mode normalizes by batch statistics and blends them into the running
    averages (running = momentum * running + (1 - momentum) * batch);
    inference mode normalizes by the running statistics. cache is None in
    inference mode.
    """
    _check_3d(x)
    if train:
        mean = x.mean(axis=(0, 2))
        var = x.var(axis=(0, 2))
        new_mean = momentum * running_mean + (1.0 - momentum) * mean
        new_var = momentum * running_var + (1.0 - momentum) * var
    else:
        mean, var = running_mean, running_var
        new_mean, new_var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean[None, :, None]) * inv_std[None, :, None]
    out = gamma[None, :, None] * x_hat + beta[None, :, None]
    cache = (x_hat, inv_std, gamma) if train else None
    return out, cache, new_mean, new_var


def batchnorm_backward(grad_out: np.ndarray, cache) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients w.r.t. (input, gamma, beta) in train mode."""
    x_hat, inv_std, gamma = cache
    batch, _, length = grad_out.shape
    n = batch * length
    grad_gamma = (grad_out * x_hat).sum(axis=(0, 2))
    grad_beta = grad_out.sum(axis=(0, 2))
    gxh = grad_out * gamma[None, :, None]
    grad_x = (
        inv_std[None, :, None]
        / n
        * (n * gxh - gxh.sum(axis=(0, 2))[None, :, None] - x_hat * (gxh * x_hat).sum(axis=(0, 2))[None, :, None])
    )
    return grad_x, grad_gamma, grad_beta


# ---------------------------------------------------------------------------
# ReLU
# ---------------------------------------------------------------------------

def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(grad_out: np.ndarray, x: np.ndarray) -> np.ndarray:
    # the subgradient at exactly 0 is taken as 0
    return grad_out * (x > 0.0)


# ---------------------------------------------------------------------------
# pooling with stride 4; "subsample" keeps every stride-th sample
# (pool window of size 1), "mean" averages each stride-wide window
# ---------------------------------------------------------------------------

def pooled_length(length: int, stride: int) -> int:
    return -(-length // stride)  # ceil


def avgpool_forward(x: np.ndarray, stride: int = 4, mode: str = "subsample") -> np.ndarray:
    _check_3d(x)
    if mode == "subsample":
        return x[:, :, ::stride].copy()
    if mode == "mean":
        batch, chans, length = x.shape
        starts = np.arange(0, length, stride)
        out = np.add.reduceat(x, starts, axis=2)
        counts = np.minimum(starts + stride, length) - starts
        return out / counts[None, None, :]
    raise ValueError(f"unknown pool mode {mode!r}")


def avgpool_backward(grad_out: np.ndarray, input_length: int, stride: int = 4,
                     mode: str = "subsample") -> np.ndarray:
    batch, chans, _ = grad_out.shape
    grad_x = np.zeros((batch, chans, input_length))
    if mode == "subsample":
        grad_x[:, :, ::stride] = grad_out
        return grad_x
    if mode == "mean":
        starts = np.arange(0, input_length, stride)
        counts = np.minimum(starts + stride, input_length) - starts
        scaled = grad_out / counts[None, None, :]
        idx = np.arange(input_length)
        grad_x[:, :, :] = scaled[:, :, idx // stride]
        return grad_x
    raise ValueError(f"unknown pool mode {mode!r}")


# ---------------------------------------------------------------------------
# fully connected regression head: flatten -> weights (D, out) -> + bias
# ---------------------------------------------------------------------------

def fc_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    _check_3d(x)
    flat = x.reshape(x.shape[0], -1)
    if flat.shape[1] != weights.shape[0]:
        raise ValueError(f"flattened size {flat.shape[1]} != weight rows {weights.shape[0]}")
    return flat @ weights + bias


def fc_backward(
    x: np.ndarray, weights: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    flat = x.reshape(x.shape[0], -1)
    grad_w = flat.T @ grad_out
    grad_b = grad_out.sum(axis=0)
    grad_x = (grad_out @ weights.T).reshape(x.shape)
    return grad_x, grad_w, grad_b


# ---------------------------------------------------------------------------
# mean-squared-error over every (batch, position) element
# ---------------------------------------------------------------------------

def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    grad = 2.0 * diff / diff.size
    return loss, grad
