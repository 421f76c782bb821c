import numpy as np
import pytest

from ecglab.signals import Signal
from ecglab.viz import bar_chart, plot_signals


def signals(n=3, length=360):
    t = np.arange(length) / 360.0
    return [Signal(np.sin(2 * np.pi * (i + 1) * t), 360) for i in range(n)]


def test_plot_three_signals(tmp_path):
    path = tmp_path / "overlay.svg"
    plot_signals(signals(3), ["clean", "noisy", "denoised"], path)
    svg = path.read_text()
    assert svg.count("<polyline") == 3
    assert "mV" in svg and " s</text>" in svg


def test_plot_single_signal(tmp_path):
    path = tmp_path / "one.svg"
    plot_signals(signals(1), ["only"], path)
    assert path.read_text().count("<polyline") == 1


def test_plot_validation(tmp_path):
    sigs = signals(2)
    with pytest.raises(ValueError):
        plot_signals(sigs, ["a"], tmp_path / "x.svg")
    with pytest.raises(ValueError):
        plot_signals([], [], tmp_path / "x.svg")
    with pytest.raises(ValueError):
        plot_signals([sigs[0], Signal(np.ones(10), 360)], ["a", "b"], tmp_path / "x.svg")
    with pytest.raises(ValueError):
        plot_signals(signals(4), ["a", "b", "c", "d"], tmp_path / "x.svg")


def test_plot_byte_deterministic(tmp_path):
    a = tmp_path / "a.svg"
    b = tmp_path / "b.svg"
    plot_signals(signals(2), ["x", "y"], a)
    plot_signals(signals(2), ["x", "y"], b)
    assert a.read_bytes() == b.read_bytes()


def test_bar_chart(tmp_path):
    path = tmp_path / "bars.svg"
    bar_chart([1.0, 2.0, 3.0], "title", "ylabel", path, highlight=1)
    svg = path.read_text()
    assert svg.count("<rect") == 5  # background + frame + 3 bars
    assert "#2ca02c" in svg  # highlighted bar
    with pytest.raises(ValueError):
        bar_chart([], "t", "y", tmp_path / "empty.svg")
