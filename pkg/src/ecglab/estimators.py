"""scikit-learn style estimators wrapping the denoisers.

Each estimator works on 2-D arrays of shape (n_windows, window_len) so the
denoisers drop into sklearn pipelines, grid search and metric tooling:

* ``CnnDenoiser`` — supervised regressor, fit(noisy, clean), predict(noisy);
* ``RbmDenoiser`` — fit on clean windows, transform reconstructs;
* ``WaveletDenoiser`` — stateless transformer (universal threshold);
* ``ClassicalDenoiser`` — stateless transformer running the filter chain.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import rbm as rbm_mod
from .filters import classical_chain
from .neural import CnnConfig, forward, train_arrays
from .signals import Signal
from .wavelet import default_levels, dwt_array, idwt_array, soft_threshold, universal_threshold, wavelet


def check_windows(X, window_len: int | None = None) -> np.ndarray:
    """Validate a (n_windows, window_len) float array: 2-D, non-empty, finite."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.size == 0:
        raise ValueError(f"expected a non-empty (n_windows, window_len) array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("windows contain non-finite values")
    if window_len is not None and X.shape[1] != window_len:
        raise ValueError(f"windows have {X.shape[1]} samples, expected {window_len}")
    return X


def check_paired(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = check_windows(X)
    y = check_windows(y)
    if X.shape != y.shape:
        raise ValueError(f"noisy {X.shape} and clean {y.shape} windows must align")
    return X, y


class CnnDenoiser(RegressorMixin, BaseEstimator):
    """Convolutional regression denoiser: fit on (noisy, clean) window pairs.

    After fit, ``model_`` holds the trained network and ``loss_trace_`` the
    per-epoch loss/RMS history.
    """

    def __init__(
        self,
        num_conv_layers: int = 3,
        filters_per_layer: int = 36,
        kernel_len: int = 23,
        pool_stride: int = 4,
        pool_mode: str = "subsample",
        learning_rate: float = 0.01,
        grad_clip_norm: float = 1.0,
        batch_size: int = 200,
        epochs: int = 100,
        seed: int = 0,
    ):
        self.num_conv_layers = num_conv_layers
        self.filters_per_layer = filters_per_layer
        self.kernel_len = kernel_len
        self.pool_stride = pool_stride
        self.pool_mode = pool_mode
        self.learning_rate = learning_rate
        self.grad_clip_norm = grad_clip_norm
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed

    def fit(self, X, y):
        X, y = check_paired(X, y)
        config = CnnConfig(
            input_len=X.shape[1],
            num_conv_layers=self.num_conv_layers,
            filters_per_layer=self.filters_per_layer,
            kernel_len=self.kernel_len,
            pool_stride=self.pool_stride,
            pool_mode=self.pool_mode,
            learning_rate=self.learning_rate,
            grad_clip_norm=self.grad_clip_norm,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.seed,
        )
        self.model_, self.loss_trace_ = train_arrays(config, X, y)
        return self

    def predict(self, X):
        if not hasattr(self, "model_"):
            raise NotFittedError("CnnDenoiser must be fitted before predict")
        X = check_windows(X, self.model_.config.input_len)
        pred, _ = forward(self.model_, (X - self.model_.input_mean)[:, None, :], train=False)
        return pred


class RbmDenoiser(TransformerMixin, BaseEstimator):
    """Reconstruction denoiser: CD-1 trained on clean windows, one up-down
    mean-field pass at transform time. Windows are minmax-scaled per row."""

    def __init__(self, n_hidden: int = 64, learning_rate: float = 0.01,
                 epochs: int = 20, batch_size: int = 10, seed: int = 0):
        self.n_hidden = n_hidden
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed

    @staticmethod
    def _scale_rows(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        lo = X.min(axis=1, keepdims=True)
        hi = X.max(axis=1, keepdims=True)
        if np.any(hi <= lo):
            raise ValueError("constant window has zero dynamic range; cannot scale")
        return (X - lo) / (hi - lo), lo, hi

    def fit(self, X, y=None):
        X = check_windows(X)
        scaled, _, _ = self._scale_rows(X)
        config = rbm_mod.RbmTrainConfig(
            n_hidden=self.n_hidden,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
        )
        self.params_, self.reconstruction_errors_ = rbm_mod.train_cd1(scaled, config)
        return self

    def transform(self, X):
        if not hasattr(self, "params_"):
            raise NotFittedError("RbmDenoiser must be fitted before transform")
        X = check_windows(X, self.params_.n_visible)
        scaled, lo, hi = self._scale_rows(X)
        recon = rbm_mod.reconstruct(self.params_, scaled)
        return recon * (hi - lo) + lo


class WaveletDenoiser(TransformerMixin, BaseEstimator):
    """Stateless universal-threshold wavelet shrinkage, row per window."""

    def __init__(self, family: str = "sym4", levels: int | None = None,
                 mode: str = "symmetric"):
        self.family = family
        self.levels = levels
        self.mode = mode

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        X = check_windows(X)
        spec = wavelet(self.family)
        out = np.empty_like(X)
        for i, row in enumerate(X):
            levels = self.levels or default_levels(len(row), spec, self.mode)
            coeffs = dwt_array(row, spec, levels, self.mode)
            lam = universal_threshold(coeffs)
            shrunk = type(coeffs)(
                approximation=coeffs.approximation,
                details=tuple(soft_threshold(d, lam) for d in coeffs.details),
                level_lengths=coeffs.level_lengths,
                original_length=coeffs.original_length,
                family=coeffs.family,
                mode=coeffs.mode,
            )
            out[i] = idwt_array(shrunk, spec)
        return out


class ClassicalDenoiser(TransformerMixin, BaseEstimator):
    """Stateless zero-phase filter chain (low-pass, high-pass, band-stop,
    baseline removal). Windows must be long enough for the baseline stage."""

    def __init__(self, fs: int = 360):
        self.fs = fs

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        X = check_windows(X)
        out = np.empty_like(X)
        for i, row in enumerate(X):
            out[i] = classical_chain(Signal(row, self.fs)).samples
        return out
