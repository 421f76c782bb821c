"""Experiment recipes with deterministic configs and replayable manifests.

A recipe is a named pipeline (generate, corrupt, filter, train, evaluate,
sweep) driven by an :class:`ExperimentConfig`: its name, a mandatory seed and
a flat string parameter map. Every run writes its artifacts plus a
``manifest.txt`` recording the resolved config, package version, input file
hashes and the SHA-256 of every artifact — enough to replay the run and check
byte-identical outputs.

Config files are flat ``key=value`` text with two section headers::

    [run]
    recipe=exp-single-record
    seed=42

    [params]
    epochs=120
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import (
    PairedDataset,
    build_effort_dataset,
    build_multi_record,
    build_single_record,
    read_dataset,
    write_dataset,
)
from .doe import (
    SelectionPolicy,
    emit_report,
    read_fixture_csv,
    run_sweep,
    select_optimal,
)
from .filters import (
    classical_chain,
    design_butterworth,
    filtfilt,
    format_coefficients,
    remove_baseline_wavelet,
)
from .metrics import evaluate_dataset, write_report_csv
from .neural import CnnConfig, load_model, save_model, train
from .noise import NOISE_KINDS, NoiseSpec, apply_noise
from .rbm import RbmTrainConfig, load_rbm, save_rbm, train_cd1
from .rng import derive_seed
from .signals import Signal, read_signal, segment, write_binary, write_text
from .synth import default_params, generate_ecg
from .viz import plot_signals
from .wavelet import wavelet, wavelet_denoise

RECIPES = (
    "synth",
    "add-noise",
    "filter",
    "wavelet-denoise",
    "build-dataset",
    "train",
    "denoise",
    "rbm-train",
    "rbm-denoise",
    "eval",
    "doe",
    "exp-single-record",
    "exp-effort",
)

# params interpreted as input paths, per recipe, for existence validation
_PATH_PARAMS = {
    "add-noise": ("in", "noise_record"),
    "filter": ("in",),
    "wavelet-denoise": ("in",),
    "build-dataset": ("records",),
    "train": ("dataset",),
    "denoise": ("model", "in", "clean"),
    "rbm-train": ("dataset",),
    "rbm-denoise": ("model", "in"),
    "eval": ("clean", "pred"),
    "doe": ("fixture", "dataset"),
}


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class ExperimentConfig:
    recipe: str
    seed: int
    out_dir: Path
    params: dict = field(default_factory=dict)

    def get(self, key: str, default=None) -> str | None:
        value = self.params.get(key)
        return default if value in (None, "") else value

    def get_float(self, key: str, default: float) -> float:
        return float(self.get(key, default))

    def get_int(self, key: str, default: int) -> int:
        return int(self.get(key, default))

    def get_list(self, key: str, default: str = "") -> list[float]:
        raw = self.get(key, default)
        return [float(v) for v in str(raw).split(",") if v.strip() != ""]


def validate_config(config: ExperimentConfig) -> None:
    if config.recipe not in RECIPES:
        raise ConfigError(f"unknown recipe {config.recipe!r}; expected one of {RECIPES}")
    for key in _PATH_PARAMS.get(config.recipe, ()):
        value = config.get(key)
        if value is None:
            continue
        for part in str(value).split(","):
            if part and not Path(part).exists():
                raise ConfigError(f"{config.recipe}: path for {key!r} does not exist: {part}")


def parse_params_file(path: str | Path) -> tuple[dict[str, str], dict[str, str]]:
    """Flat key=value parser; returns ([run] entries, everything else)."""
    section = None
    run: dict[str, str] = {}
    params: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        (run if section == "run" else params)[key] = value
    return run, params


def parse_config_file(path: str | Path) -> ExperimentConfig:
    run, params = parse_params_file(path)
    if "recipe" not in run:
        raise ConfigError(f"{path}: missing recipe in [run] section")
    if "seed" not in run:
        raise ConfigError(f"{path}: missing mandatory seed in [run] section")
    out_dir = Path(run.get("out_dir", "."))
    return ExperimentConfig(run["recipe"], int(run["seed"]), out_dir, params)


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(config: ExperimentConfig, artifacts: list[Path]) -> Path:
    lines = [f"recipe={config.recipe}", f"seed={config.seed}", f"version={__version__}"]
    for key in sorted(config.params):
        lines.append(f"param.{key}={config.params[key]}")
    for key in _PATH_PARAMS.get(config.recipe, ()):
        value = config.get(key)
        if value is None:
            continue
        for part in str(value).split(","):
            if part and Path(part).is_file():
                lines.append(f"input.{part}={_sha256(Path(part))}")
    for art in sorted(artifacts, key=lambda p: p.name):
        lines.append(f"sha256.{art.name}={_sha256(art)}")
    manifest = config.out_dir / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


def read_manifest(path: str | Path) -> tuple[ExperimentConfig, dict[str, str]]:
    """Returns the embedded config (without out_dir) and the artifact hashes."""
    recipe = None
    seed = None
    params: dict[str, str] = {}
    hashes: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        key, value = line.split("=", 1)
        if key == "recipe":
            recipe = value
        elif key == "seed":
            seed = int(value)
        elif key.startswith("param."):
            params[key[len("param.") :]] = value
        elif key.startswith("sha256."):
            hashes[key[len("sha256.") :]] = value
    if recipe is None or seed is None:
        raise ConfigError(f"{path}: manifest lacks recipe/seed")
    return ExperimentConfig(recipe, seed, Path("."), params), hashes


def replay(manifest_path: str | Path, out_dir: str | Path) -> bool:
    """Re-run a recipe from its manifest; True when every artifact hash matches."""
    config, expected = read_manifest(manifest_path)
    config = replace(config, out_dir=Path(out_dir))
    artifacts = run(config)
    produced = {p.name: _sha256(p) for p in artifacts}
    return all(produced.get(name) == digest for name, digest in expected.items())


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------

def _write_signal(sig: Signal, path: Path, fmt: str) -> Path:
    if fmt == "text":
        write_text(sig, path)
    elif fmt == "binary":
        write_binary(sig, path)
    else:
        raise ConfigError(f"unknown signal format {fmt!r}; use text or binary")
    return path


def _cnn_config_from(config: ExperimentConfig, input_len: int) -> CnnConfig:
    return CnnConfig(
        input_len=input_len,
        num_conv_layers=config.get_int("num_conv_layers", 3),
        filters_per_layer=config.get_int("filters", 36),
        kernel_len=config.get_int("kernel_len", 23),
        pool_stride=config.get_int("pool_stride", 4),
        pool_mode=config.get("pool_mode", "subsample"),
        learning_rate=config.get_float("learning_rate", 0.01),
        grad_clip_norm=config.get_float("grad_clip_norm", 1.0),
        batch_size=config.get_int("batch_size", 200),
        epochs=config.get_int("epochs", 100),
        seed=config.seed,
    )


def _write_trace_csv(trace, path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "loss", "rms_mv"])
        for row in trace:
            writer.writerow([row.epoch, f"{row.loss:.9g}", f"{row.rms_mv:.9g}"])
    return path


def _write_summary_csv(path: Path, entries: list[tuple[str, float]]) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric", "value"])
        for name, value in entries:
            writer.writerow([name, f"{value:.9g}"])
    return path


def _overlay(out: Path, clean: Signal, noisy: Signal, denoised: Signal) -> Path:
    plot_signals([clean, noisy, denoised], ["clean", "noisy", "denoised"], out)
    return out


def _train_eval_experiment(config: ExperimentConfig, dataset: PairedDataset,
                           out: Path) -> list[Path]:
    """Shared tail of the experiment recipes: train, evaluate both the raw
    noisy input and the denoised output on the held-out quarter, report."""
    input_len = len(dataset.clean[0])
    cnn = _cnn_config_from(config, input_len)
    model, trace = train(cnn, dataset)

    test_pairs = dataset.test_pairs()
    noisy_report = evaluate_dataset(test_pairs)
    denoised_pairs = [(c, model.denoise(n)) for c, n in test_pairs]
    denoised_report = evaluate_dataset(denoised_pairs)

    artifacts = []
    save_model(model, out / "model.cnn")
    artifacts.append(out / "model.cnn")
    artifacts.append(_write_trace_csv(trace, out / "trace.csv"))
    write_report_csv(noisy_report, out / "eval_noisy.csv")
    artifacts.append(out / "eval_noisy.csv")
    write_report_csv(denoised_report, out / "eval_denoised.csv")
    artifacts.append(out / "eval_denoised.csv")
    gain = denoised_report.avg_snr_db - noisy_report.avg_snr_db
    artifacts.append(
        _write_summary_csv(
            out / "summary.csv",
            [
                ("avg_input_snr_db", noisy_report.avg_snr_db),
                ("avg_output_snr_db", denoised_report.avg_snr_db),
                ("snr_gain_db", gain),
                ("avg_output_rms_mv", denoised_report.avg_rms_mv),
                ("pass_fraction", denoised_report.pass_fraction),
            ],
        )
    )
    clean0, noisy0 = test_pairs[0]
    artifacts.append(_overlay(out / "overlay.svg", clean0, noisy0, denoised_pairs[0][1]))
    return artifacts


# ---------------------------------------------------------------------------
# recipes
# ---------------------------------------------------------------------------

def _run_synth(config: ExperimentConfig, out: Path) -> list[Path]:
    params = default_params(
        heart_rate_bpm=config.get_float("heart_rate_bpm", 60.0),
        voltage_scale=config.get_float("voltage_scale", 2.0),
    )
    sig = generate_ecg(params, config.get_float("duration_s", 10.0), config.get_int("fs", 360))
    fmt = config.get("format", "text")
    ext = "txt" if fmt == "text" else "ecg"
    return [_write_signal(sig, out / f"{config.get('name', 'ecg')}.{ext}", fmt)]


def _run_add_noise(config: ExperimentConfig, out: Path) -> list[Path]:
    source = config.get("in")
    if source is None:
        raise ConfigError("add-noise needs an input signal (in=...)")
    clean = read_signal(source)
    kind = config.get("kind", "random")
    if kind not in NOISE_KINDS:
        raise ConfigError(f"unknown noise kind {kind!r}; expected one of {NOISE_KINDS}")
    levels = config.get_list("snr")
    if not levels:
        raise ConfigError("add-noise needs at least one SNR level (snr=-6,0,6)")
    noise_record = config.get("noise_record")
    noise_source = read_signal(noise_record) if noise_record else None
    if kind == "recorded" and noise_source is None:
        raise ConfigError("recorded noise needs noise_record=...")

    artifacts = []
    rows = []
    from .metrics import snr_db as measure_snr

    for i, level in enumerate(levels):
        spec = NoiseSpec(
            kind=kind,
            target_snr_db=level,
            seed=derive_seed(config.seed, f"level-{i}"),
            noise_source=noise_source,
        )
        noisy = apply_noise(clean, spec)
        path = out / f"noisy_snr{level:g}.ecg"
        write_binary(noisy, path)
        artifacts.append(path)
        rows.append((level, measure_snr(clean, noisy)))
    levels_csv = out / "levels.csv"
    with open(levels_csv, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["target_snr_db", "measured_snr_db"])
        for target, measured in rows:
            writer.writerow([f"{target:g}", f"{measured:.12g}"])
    artifacts.append(levels_csv)
    return artifacts


def _run_filter(config: ExperimentConfig, out: Path) -> list[Path]:
    source = config.get("in")
    if source is None:
        raise ConfigError("filter needs an input signal (in=...)")
    sig = read_signal(source)
    chain = config.get("chain")
    stage = config.get("stage")
    artifacts = []
    if chain == "classical" or (chain is None and stage is None):
        filtered = classical_chain(sig)
        coeffs_text = "".join(
            format_coefficients(design_butterworth(kind, cut, 1, sig.fs)) + "\n"
            for kind, cut in (
                ("lowpass", 30.0),
                ("highpass", 0.1),
                ("bandstop", (47.5, 52.5)),
            )
        )
    elif stage in ("lowpass", "highpass", "bandstop"):
        cutoffs = config.get_list("cutoffs_hz")
        if not cutoffs:
            raise ConfigError(f"stage {stage} needs cutoffs_hz=...")
        filt = design_butterworth(stage, cutoffs if len(cutoffs) > 1 else cutoffs[0], 1, sig.fs)
        filtered = filtfilt(filt, sig)
        coeffs_text = format_coefficients(filt)
    elif stage == "baseline":
        filtered = remove_baseline_wavelet(sig)
        coeffs_text = "stage=baseline (wavelet)\n"
    else:
        raise ConfigError(f"unknown filter stage {stage!r}")
    path = out / "filtered.ecg"
    write_binary(filtered, path)
    artifacts.append(path)
    coeffs_path = out / "coefficients.txt"
    coeffs_path.write_text(coeffs_text)
    artifacts.append(coeffs_path)
    return artifacts


def _run_wavelet_denoise(config: ExperimentConfig, out: Path) -> list[Path]:
    source = config.get("in")
    if source is None:
        raise ConfigError("wavelet-denoise needs an input signal (in=...)")
    sig = read_signal(source)
    spec = wavelet(config.get("family", "sym4"))
    levels = config.get("levels")
    denoised = wavelet_denoise(sig, spec, int(levels) if levels else None,
                               config.get("mode", "symmetric"))
    path = out / "denoised.ecg"
    write_binary(denoised, path)
    return [path]


def _run_build_dataset(config: ExperimentConfig, out: Path) -> list[Path]:
    records_param = config.get("records")
    if records_param is None:
        raise ConfigError("build-dataset needs records=path[,path...]")
    levels = config.get_list("snr", "-6,0,6,12")
    window_s = config.get_float("window_s", 1.0)
    noise_record = config.get("noise_record")
    noise_source = read_signal(noise_record) if noise_record else None
    records = [(Path(p).stem, read_signal(p)) for p in str(records_param).split(",") if p]
    if len(records) == 1:
        dataset = build_single_record(
            records[0][1], levels, window_s, config.seed,
            record_id=records[0][0], noise_source=noise_source,
        )
    else:
        dataset = build_multi_record(records, levels, window_s, config.seed,
                                     noise_source=noise_source)
    data_dir = out / "dataset"
    manifest = write_dataset(dataset, data_dir)
    return [manifest, *sorted(data_dir.glob("*.ecg"))]


def _run_train(config: ExperimentConfig, out: Path) -> list[Path]:
    dataset_dir = config.get("dataset")
    if dataset_dir is None:
        raise ConfigError("train needs dataset=<dir>")
    dataset = read_dataset(dataset_dir, seed=config.seed)
    cnn = _cnn_config_from(config, len(dataset.clean[0]))
    model, trace = train(cnn, dataset)
    save_model(model, out / "model.cnn")
    return [out / "model.cnn", _write_trace_csv(trace, out / "trace.csv")]


def _run_denoise(config: ExperimentConfig, out: Path) -> list[Path]:
    model_path = config.get("model")
    source = config.get("in")
    if model_path is None or source is None:
        raise ConfigError("denoise needs model=<file> and in=<signal>")
    model = load_model(model_path)
    noisy = read_signal(source)
    denoised = model.denoise(noisy)
    artifacts = [out / "denoised.ecg"]
    write_binary(denoised, artifacts[0])
    clean_path = config.get("clean")
    if clean_path:
        clean = read_signal(clean_path)
        report = evaluate_dataset([(clean, denoised)])
        write_report_csv(report, out / "eval.csv")
        artifacts.append(out / "eval.csv")
        artifacts.append(_overlay(out / "overlay.svg", clean, noisy, denoised))
    return artifacts


def _run_rbm_train(config: ExperimentConfig, out: Path) -> list[Path]:
    dataset_dir = config.get("dataset")
    if dataset_dir is None:
        raise ConfigError("rbm-train needs dataset=<dir>")
    dataset = read_dataset(dataset_dir, seed=config.seed)
    windows = np.stack([dataset.clean[i].samples for i in dataset.train_indices])
    lo = windows.min(axis=1, keepdims=True)
    hi = windows.max(axis=1, keepdims=True)
    if np.any(hi <= lo):
        raise ConfigError("rbm-train: constant window in the dataset cannot be scaled")
    scaled = (windows - lo) / (hi - lo)
    rbm_config = RbmTrainConfig(
        n_hidden=config.get_int("n_hidden", 64),
        learning_rate=config.get_float("learning_rate", 0.01),
        epochs=config.get_int("epochs", 20),
        batch_size=config.get_int("batch_size", 10),
        seed=config.seed,
    )
    params, errors = train_cd1(scaled, rbm_config)
    save_rbm(params, out / "model.rbm")
    errors_csv = out / "reconstruction_errors.csv"
    with open(errors_csv, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "mean_squared_error"])
        for i, err in enumerate(errors):
            writer.writerow([i, f"{err:.9g}"])
    return [out / "model.rbm", errors_csv]


def _run_rbm_denoise(config: ExperimentConfig, out: Path) -> list[Path]:
    model_path = config.get("model")
    source = config.get("in")
    if model_path is None or source is None:
        raise ConfigError("rbm-denoise needs model=<file> and in=<signal>")
    params = load_rbm(model_path)
    noisy = read_signal(source)
    if len(noisy) % params.n_visible != 0:
        raise ConfigError(
            f"signal length {len(noisy)} is not a multiple of n_visible {params.n_visible}"
        )
    from .signals import concatenate

    windows = segment(noisy, params.n_visible / noisy.fs)
    denoised = concatenate([params.denoise(w) for w in windows])
    path = out / "denoised.ecg"
    write_binary(denoised, path)
    return [path]


def _run_eval(config: ExperimentConfig, out: Path) -> list[Path]:
    clean_path = config.get("clean")
    pred_path = config.get("pred")
    if clean_path is None or pred_path is None:
        raise ConfigError("eval needs clean=<signal> and pred=<signal>")
    clean = read_signal(clean_path)
    pred = read_signal(pred_path)
    window_s = config.get("window_s")
    if window_s:
        pairs = list(zip(segment(clean, float(window_s)), segment(pred, float(window_s))))
    else:
        pairs = [(clean, pred)]
    report = evaluate_dataset(pairs)
    write_report_csv(report, out / "report.csv")
    return [out / "report.csv"]


def _selection_policy_from(config: ExperimentConfig) -> SelectionPolicy:
    objective = tuple(str(config.get("objective", "rms,time,snr")).split(","))
    cut = config.get("min_sim_id_cut")
    return SelectionPolicy(
        min_sim_id_cut=int(cut) if cut else None,
        knee_rms_mv=config.get_float("knee_rms_mv", 0.14),
        time_threshold_s=config.get_float("time_threshold_s", 5000.0),
        time_slack=config.get_float("time_slack", 0.05),
        objective=objective,
    )


def _run_doe(config: ExperimentConfig, out: Path) -> list[Path]:
    fixture = config.get("fixture")
    if fixture:
        rows = read_fixture_csv(fixture)
    else:
        dataset_dir = config.get("dataset")
        if dataset_dir is None:
            raise ConfigError("doe needs fixture=<csv> or dataset=<dir>")
        dataset = read_dataset(dataset_dir, seed=config.seed)
        grid = {
            "filters": [int(v) for v in config.get_list("filters", "16,36")],
            "kernel_lens": [int(v) for v in config.get_list("kernels", "9,23")],
        }
        workers = config.get("workers")
        # the grid owns filters/kernel_len; strip them before building the base
        base_params = {k: v for k, v in config.params.items() if k not in ("filters", "kernels")}
        base_config = _cnn_config_from(
            replace(config, params=base_params), len(dataset.clean[0])
        )
        rows = run_sweep(
            grid,
            dataset,
            train_budget_epochs=config.get_int("epochs", 10),
            base_config=base_config,
            seed=config.seed,
            workers=int(workers) if workers else None,
        )
    selection = select_optimal(rows, _selection_policy_from(config))
    artifacts = emit_report(rows, selection, out)
    best, shortlist = selection
    selection_csv = out / "selection.csv"
    with open(selection_csv, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["best_sim_id", "filters", "kernel_len", "rms_mv", "snr_db", "time_s"])
        writer.writerow(
            [
                best.sim_id,
                best.filters,
                best.kernel_len,
                f"{best.avg_rms_mv:.6g}",
                f"{best.avg_snr_db:.6g}",
                f"{best.wall_time_s:.6g}",
            ]
        )
        writer.writerow([])
        writer.writerow(["shortlist_sim_ids"])
        writer.writerow([";".join(str(r.sim_id) for r in shortlist)])
    artifacts.append(selection_csv)
    return artifacts


def _run_exp_single_record(config: ExperimentConfig, out: Path) -> list[Path]:
    """Desk-scale single-source scenario: synthesize one record, corrupt its
    windows at several SNR levels, train the network, report the held-out
    quarter (noisy vs denoised)."""
    fs = config.get_int("fs", 360)
    duration = config.get_float("duration_s", 100.0)
    levels = config.get_list("snr", "-6,0,6,12")
    record = generate_ecg(
        default_params(
            heart_rate_bpm=config.get_float("heart_rate_bpm", 66.0),
            voltage_scale=config.get_float("voltage_scale", 6.0),
        ),
        duration,
        fs,
    )
    dataset = build_single_record(
        record, levels, config.get_float("window_s", 1.0),
        derive_seed(config.seed, "dataset"), record_id="synth-single",
    )
    return _train_eval_experiment(config, dataset, out)


def _run_exp_effort(config: ExperimentConfig, out: Path) -> list[Path]:
    """Rest-to-effort scenario: one resting beat expanded into elevated-rate
    multi-beat signals, corrupted, then used to train and test the network."""
    fs = config.get_int("fs", 360)
    rest = generate_ecg(
        default_params(
            heart_rate_bpm=config.get_float("rest_rate_bpm", 60.0),
            voltage_scale=config.get_float("voltage_scale", 6.0),
        ),
        config.get_float("rest_duration_s", 10.0),
        fs,
    )
    rates = config.get_list("rates_bpm", "72,78,84,90")
    dataset = build_effort_dataset(
        rest,
        rates,
        config.get_list("snr", "-6,0,6,12"),
        derive_seed(config.seed, "dataset"),
        window_s=config.get_float("window_s", 1.0),
        windows_per_rate=config.get_int("windows_per_rate", 50),
    )
    return _train_eval_experiment(config, dataset, out)


_RUNNERS = {
    "synth": _run_synth,
    "add-noise": _run_add_noise,
    "filter": _run_filter,
    "wavelet-denoise": _run_wavelet_denoise,
    "build-dataset": _run_build_dataset,
    "train": _run_train,
    "denoise": _run_denoise,
    "rbm-train": _run_rbm_train,
    "rbm-denoise": _run_rbm_denoise,
    "eval": _run_eval,
    "doe": _run_doe,
    "exp-single-record": _run_exp_single_record,
    "exp-effort": _run_exp_effort,
}


def run(config: ExperimentConfig) -> list[Path]:
    """Validate, execute and manifest one recipe; returns the artifact paths."""
    validate_config(config)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = _RUNNERS[config.recipe](config, out)
    write_manifest(config, artifacts)
    return artifacts
