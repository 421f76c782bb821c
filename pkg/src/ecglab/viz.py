"""Deterministic SVG figures: signal overlays and bar charts.

Plain generated markup, no renderer dependency; identical inputs always
produce byte-identical files (fixed float formatting throughout).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .signals import Signal

_COLORS = ("#1f77b4", "#d62728", "#2ca02c")

_W, _H = 900, 360
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 60, 20, 30, 40


def _fmt(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def plot_signals(signals: list[Signal], labels: list[str], path: str | Path) -> None:
    """Overlay up to three equal-length signals (time in s, amplitude in mV)."""
    if not 1 <= len(signals) <= 3:
        raise ValueError(f"plot_signals takes 1-3 signals, got {len(signals)}")
    if len(labels) != len(signals):
        raise ValueError("one label per signal required")
    n = len(signals[0])
    if any(len(s) != n or s.fs != signals[0].fs for s in signals):
        raise ValueError("signals must share length and sampling rate")
    fs = signals[0].fs
    t_max = n / fs
    lo = min(float(s.samples.min()) for s in signals)
    hi = max(float(s.samples.max()) for s in signals)
    if hi <= lo:
        hi = lo + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    plot_w = _W - _MARGIN_L - _MARGIN_R
    plot_h = _H - _MARGIN_T - _MARGIN_B

    def sx(t: float) -> float:
        return _MARGIN_L + t / t_max * plot_w

    def sy(v: float) -> float:
        return _MARGIN_T + (hi - v) / (hi - lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#333" stroke-width="1"/>',
    ]
    for tv in _ticks(0.0, t_max, 6):
        x = _fmt(sx(tv))
        parts.append(
            f'<line x1="{x}" y1="{_MARGIN_T + plot_h}" x2="{x}" '
            f'y2="{_MARGIN_T + plot_h + 5}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{x}" y="{_MARGIN_T + plot_h + 18}" font-size="11" '
            f'text-anchor="middle">{_fmt(tv)} s</text>'
        )
    for tv in _ticks(lo, hi, 5):
        y = _fmt(sy(tv))
        parts.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{y}" x2="{_MARGIN_L}" y2="{y}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{y}" font-size="11" '
            f'text-anchor="end" dominant-baseline="middle">{_fmt(tv)} mV</text>'
        )
    t = np.arange(n) / fs
    for sig, label, color in zip(signals, labels, _COLORS):
        pts = " ".join(f"{_fmt(sx(ti))},{_fmt(sy(vi))}" for ti, vi in zip(t, sig.samples))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1"/>'
        )
    for i, (label, color) in enumerate(zip(labels, _COLORS)):
        y = _MARGIN_T + 14 + 16 * i
        parts.append(
            f'<line x1="{_W - 170}" y1="{y - 4}" x2="{_W - 150}" y2="{y - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{_W - 144}" y="{y}" font-size="12">{label}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def bar_chart(values: list[float], title: str, ylabel: str, path: str | Path,
              highlight: int | None = None) -> None:
    """One bar per value, 1-based x labels; highlight draws one bar in green."""
    if not values:
        raise ValueError("no values to chart")
    plot_w = _W - _MARGIN_L - _MARGIN_R
    plot_h = _H - _MARGIN_T - _MARGIN_B
    v_max = max(max(values), 0.0)
    if v_max <= 0:
        v_max = 1.0
    bar_w = plot_w / len(values)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W // 2}" y="18" font-size="14" text-anchor="middle">{title}</text>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#333" stroke-width="1"/>',
    ]
    for tv in _ticks(0.0, v_max, 5):
        y = _fmt(_MARGIN_T + (1.0 - tv / v_max) * plot_h)
        parts.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{y}" x2="{_MARGIN_L}" y2="{y}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{y}" font-size="11" text-anchor="end" '
            f'dominant-baseline="middle">{_fmt(tv)}</text>'
        )
    parts.append(
        f'<text x="14" y="{_MARGIN_T + plot_h / 2}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 14 {_MARGIN_T + plot_h / 2})">{ylabel}</text>'
    )
    for i, v in enumerate(values):
        h = max(v, 0.0) / v_max * plot_h
        x = _MARGIN_L + i * bar_w
        color = "#2ca02c" if highlight is not None and i == highlight else "#1f77b4"
        parts.append(
            f'<rect x="{_fmt(x + 0.1 * bar_w)}" y="{_fmt(_MARGIN_T + plot_h - h)}" '
            f'width="{_fmt(0.8 * bar_w)}" height="{_fmt(h)}" fill="{color}"/>'
        )
        if len(values) <= 60 and (i % max(1, len(values) // 20) == 0 or len(values) <= 20):
            parts.append(
                f'<text x="{_fmt(x + 0.5 * bar_w)}" y="{_MARGIN_T + plot_h + 14}" '
                f'font-size="9" text-anchor="middle">{i + 1}</text>'
            )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
