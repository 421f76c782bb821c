import numpy as np
import pytest

from ecglab.signals import Signal
from ecglab.synth import default_params, generate_ecg


@pytest.fixture(scope="session")
def ecg_10s() -> Signal:
    """10 s synthetic ECG at 360 Hz, 60 bpm, +-3 mV range."""
    return generate_ecg(default_params(heart_rate_bpm=60.0, voltage_scale=6.0), 10.0, 360)


@pytest.fixture(scope="session")
def ecg_record_100s() -> Signal:
    """100 s synthetic ECG at 360 Hz, 66 bpm, +-3 mV range (single-source record)."""
    return generate_ecg(default_params(heart_rate_bpm=66.0, voltage_scale=6.0), 100.0, 360)


def rel_grad_errors(numeric: np.ndarray, analytic: np.ndarray, floor: float = 1e-8) -> float:
    """Worst relative disagreement; pairs where both sides sit below the
    finite-difference noise floor count as exact."""
    numeric = np.asarray(numeric, dtype=np.float64)
    analytic = np.asarray(analytic, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(numeric), np.abs(analytic)), 1e-300)
    rel = np.abs(numeric - analytic) / denom
    rel[(np.abs(numeric) < floor) & (np.abs(analytic) < floor)] = 0.0
    return float(rel.max())


def numeric_gradient(fn, arr: np.ndarray, eps: float = 1e-6, indices=None) -> np.ndarray:
    """Central differences of scalar fn w.r.t. selected entries of arr
    (all entries when indices is None); untouched entries return 0."""
    flat = arr.ravel()
    grad = np.zeros_like(flat)
    if indices is None:
        indices = range(flat.size)
    for i in indices:
        orig = flat[i]
        flat[i] = orig + eps
        hi = fn()
        flat[i] = orig - eps
        lo = fn()
        flat[i] = orig
        grad[i] = (hi - lo) / (2.0 * eps)
    return grad.reshape(arr.shape)
