"""ecglab: ECG denoising laboratory.

Synthetic ECG generation, exact-SNR noise injection, a classical zero-phase
filter chain, wavelet shrinkage, a from-scratch trainable 1-D convolutional
regression network, an RBM reconstruction denoiser, RMS/SNR evaluation, and
an architecture sweep harness — wired together by a deterministic,
manifest-writing CLI.
"""

__version__ = "0.1.0"

from .signals import Signal, Window, concatenate, minmax_scale, power, segment
from .metrics import evaluate_dataset, rms, snr_db

__all__ = [
    "Signal",
    "Window",
    "__version__",
    "concatenate",
    "evaluate_dataset",
    "minmax_scale",
    "power",
    "rms",
    "segment",
    "snr_db",
]
