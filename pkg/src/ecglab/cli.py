"""Command-line entry point.

Every subcommand builds an :class:`ExperimentConfig` and dispatches through
:func:`ecglab.experiments.run`, so each run lands with a replayable manifest
next to its artifacts. Exit codes: 0 success, 1 runtime failure, 2 invalid
configuration.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import (
    ConfigError,
    ExperimentConfig,
    parse_config_file,
    parse_params_file,
    replay,
    run,
)
from .signals import read_signal
from .viz import plot_signals


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out-dir", required=True, help="directory for artifacts + manifest")
    sub.add_argument("--seed", type=int, default=0, help="experiment seed (default 0)")


def _params_from(args: argparse.Namespace, mapping: dict[str, str]) -> dict[str, str]:
    params: dict[str, str] = {}
    if getattr(args, "params", None):
        _, file_params = parse_params_file(args.params)
        params.update(file_params)
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            params[key] = str(value)
    return params


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecglab",
        description="ECG denoising lab: generation, noise, filters, wavelets, CNN/RBM, sweeps",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("run", help="run a recipe described by a config file")
    p.add_argument("config", help="flat key=value config with [run] and [params] sections")
    p.add_argument("--out-dir", help="override the config's out_dir")

    p = subs.add_parser("replay", help="re-run a manifest and check output hashes")
    p.add_argument("manifest")
    p.add_argument("--out-dir", required=True)

    p = subs.add_parser("synth", help="generate a synthetic ECG record")
    _add_common(p)
    p.add_argument("--params", help="key=value parameter file ([params] section)")
    p.add_argument("--duration-s", type=float)
    p.add_argument("--fs", type=int)
    p.add_argument("--heart-rate-bpm", type=float)
    p.add_argument("--voltage-scale", type=float)
    p.add_argument("--format", choices=("text", "binary"))
    p.add_argument("--name")

    p = subs.add_parser("add-noise", help="mix calibrated noise into a signal")
    _add_common(p)
    p.add_argument("--in", dest="inp", required=True, help="input signal file")
    p.add_argument("--kind", choices=("random", "drift", "random_plus_drift", "recorded"))
    p.add_argument("--snr", required=True, help="comma-separated SNR levels in dB")
    p.add_argument("--noise-record", help="noise source signal (kind=recorded)")

    p = subs.add_parser("filter", help="zero-phase filtering")
    _add_common(p)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--chain", choices=("classical",), help="run the full chain")
    p.add_argument("--stage", choices=("lowpass", "highpass", "bandstop", "baseline"))
    p.add_argument("--cutoffs-hz", help="comma-separated cutoff(s) for a single stage")

    p = subs.add_parser("wavelet-denoise", help="universal-threshold shrinkage")
    _add_common(p)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--family", choices=("haar", "db4", "sym4"))
    p.add_argument("--levels", type=int)
    p.add_argument("--mode", choices=("symmetric", "periodized"))

    p = subs.add_parser("build-dataset", help="paired clean/noisy dataset from records")
    _add_common(p)
    p.add_argument("--records", required=True, help="comma-separated record files")
    p.add_argument("--snr", help="comma-separated SNR levels (default -6,0,6,12)")
    p.add_argument("--window-s", type=float)
    p.add_argument("--noise-record")

    p = subs.add_parser("train", help="train the convolutional denoiser")
    _add_common(p)
    p.add_argument("--dataset", required=True, help="dataset directory (manifest.csv)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--filters", type=int)
    p.add_argument("--kernel-len", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--pool-mode", choices=("subsample", "mean"))

    p = subs.add_parser("denoise", help="denoise a signal with a trained model")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--clean", help="reference signal; adds eval.csv and overlay.svg")

    p = subs.add_parser("rbm-train", help="train the RBM reconstruction denoiser")
    _add_common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--n-hidden", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)

    p = subs.add_parser("rbm-denoise", help="denoise a signal with a trained RBM")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="inp", required=True)

    p = subs.add_parser("eval", help="RMS/SNR report between clean and predicted signals")
    _add_common(p)
    p.add_argument("--clean", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--window-s", type=float, help="evaluate per window instead of whole-signal")

    p = subs.add_parser("doe", help="architecture sweep / selection report")
    _add_common(p)
    p.add_argument("--fixture", help="sweep fixture CSV (sim_id,filters,kernel,rms,snr,time_s)")
    p.add_argument("--dataset", help="dataset directory for a live sweep")
    p.add_argument("--filters", help="comma-separated filter counts (live sweep)")
    p.add_argument("--kernels", help="comma-separated kernel lengths (live sweep)")
    p.add_argument("--epochs", type=int, help="training budget per cell (live sweep)")
    p.add_argument("--time-threshold-s", type=float)
    p.add_argument("--objective", help="comma order of rms,snr,time (default rms,time,snr)")
    p.add_argument("--min-sim-id-cut", type=int)
    p.add_argument("--workers", type=int, help="parallel cells (default $ECG_LAB_WORKERS or 1)")

    p = subs.add_parser("exp-single-record", help="single-source train/test experiment")
    _add_common(p)
    p.add_argument("--desk-scale", action="store_true", help="use the desk-scale defaults")
    p.add_argument("--duration-s", type=float)
    p.add_argument("--snr")
    p.add_argument("--epochs", type=int)
    p.add_argument("--filters", type=int)
    p.add_argument("--kernel-len", type=int)
    p.add_argument("--batch-size", type=int)

    p = subs.add_parser("exp-effort", help="rest-to-effort multi-heartbeat experiment")
    _add_common(p)
    p.add_argument("--desk-scale", action="store_true")
    p.add_argument("--rates-bpm")
    p.add_argument("--windows-per-rate", type=int)
    p.add_argument("--snr")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)

    p = subs.add_parser("plot", help="overlay up to three signals as SVG")
    p.add_argument("--in", dest="inputs", action="append", required=True,
                   help="signal file (repeat up to 3 times)")
    p.add_argument("--labels", required=True, help="comma-separated labels")
    p.add_argument("--out", required=True, help="output SVG path")

    return parser


_FLAG_MAPS = {
    "synth": {"duration_s": "duration_s", "fs": "fs", "heart_rate_bpm": "heart_rate_bpm",
              "voltage_scale": "voltage_scale", "format": "format", "name": "name"},
    "add-noise": {"inp": "in", "kind": "kind", "snr": "snr", "noise_record": "noise_record"},
    "filter": {"inp": "in", "chain": "chain", "stage": "stage", "cutoffs_hz": "cutoffs_hz"},
    "wavelet-denoise": {"inp": "in", "family": "family", "levels": "levels", "mode": "mode"},
    "build-dataset": {"records": "records", "snr": "snr", "window_s": "window_s",
                      "noise_record": "noise_record"},
    "train": {"dataset": "dataset", "epochs": "epochs", "filters": "filters",
              "kernel_len": "kernel_len", "batch_size": "batch_size",
              "learning_rate": "learning_rate", "pool_mode": "pool_mode"},
    "denoise": {"model": "model", "inp": "in", "clean": "clean"},
    "rbm-train": {"dataset": "dataset", "n_hidden": "n_hidden", "epochs": "epochs",
                  "batch_size": "batch_size", "learning_rate": "learning_rate"},
    "rbm-denoise": {"model": "model", "inp": "in"},
    "eval": {"clean": "clean", "pred": "pred", "window_s": "window_s"},
    "doe": {"fixture": "fixture", "dataset": "dataset", "filters": "filters",
            "kernels": "kernels", "epochs": "epochs", "time_threshold_s": "time_threshold_s",
            "objective": "objective", "min_sim_id_cut": "min_sim_id_cut", "workers": "workers"},
    "exp-single-record": {"duration_s": "duration_s", "snr": "snr", "epochs": "epochs",
                          "filters": "filters", "kernel_len": "kernel_len",
                          "batch_size": "batch_size"},
    "exp-effort": {"rates_bpm": "rates_bpm", "windows_per_rate": "windows_per_rate",
                   "snr": "snr", "epochs": "epochs", "batch_size": "batch_size"},
}

# desk-scale defaults sized so the experiments finish in minutes on one core
_DESK_SCALE = {
    "exp-single-record": {"duration_s": "100", "epochs": "60", "batch_size": "100"},
    "exp-effort": {"windows_per_rate": "25", "epochs": "60", "batch_size": "100"},
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = parse_config_file(args.config)
            if args.out_dir:
                from dataclasses import replace

                config = replace(config, out_dir=Path(args.out_dir))
            run(config)
            return 0
        if args.command == "replay":
            ok = replay(args.manifest, args.out_dir)
            print("replay: hashes match" if ok else "replay: HASH MISMATCH")
            return 0 if ok else 1
        if args.command == "plot":
            signals = [read_signal(p) for p in args.inputs]
            labels = [s.strip() for s in args.labels.split(",")]
            plot_signals(signals, labels, args.out)
            return 0
        params = _params_from(args, _FLAG_MAPS[args.command])
        if getattr(args, "desk_scale", False):
            for key, value in _DESK_SCALE.get(args.command, {}).items():
                params.setdefault(key, value)
        config = ExperimentConfig(args.command, args.seed, Path(args.out_dir), params)
        run(config)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
