"""Static SVG charts for a change report: one per signal, one per lag curve.

Output is byte-stable for a given report: no timestamps, fixed element-id salt.
"""
from __future__ import annotations

import datetime as dt
from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

from .metrics import SignalSeries

EVENT_GID = "event-marker"

_RC = {"svg.hashsalt": "narrative-topology", "svg.fonttype": "path", "font.size": 9}


def event_position(report, event_date: str | dt.date) -> float | None:
    """Fractional window index whose centre day is ``event_date``."""
    if not report.windows:
        return None
    if isinstance(event_date, str):
        event_date = dt.date.fromisoformat(event_date)
    first = dt.date.fromisoformat(report.windows[0].first_day)
    w = int(report.meta.get("w", 1))
    s = int(report.meta.get("s", 1))
    return report.windows[0].index + ((event_date - first).days - w // 2) / s


def _save(fig: Figure, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def _mark(ax, x: float | None) -> None:
    if x is not None:
        ax.axvline(x, color="crimson", linestyle="--", linewidth=1.0, gid=EVENT_GID)


def plot_signal(series: SignalSeries, path: Path, event_x: float | None = None) -> Path:
    fig = Figure(figsize=(7, 4.5))
    top, bottom = fig.subplots(2, 1, sharex=True)
    x = series.window_index
    top.plot(x, series.raw, color="0.6", linewidth=0.8, label="raw")
    top.plot(x, series.smoothed, color="tab:blue", linewidth=1.6, label="smoothed")
    top.set_ylabel(series.name)
    top.legend(loc="upper right", frameon=False)
    bottom.axhline(0.0, color="0.8", linewidth=0.8)
    bottom.plot(x, series.d1, color="tab:orange", linewidth=1.2, label="first derivative")
    bottom.plot(x, series.d2, color="tab:green", linewidth=1.0, label="second derivative")
    bottom.set_xlabel("window")
    bottom.legend(loc="upper right", frameon=False)
    for ax in (top, bottom):
        _mark(ax, event_x)
    fig.tight_layout()
    return _save(fig, path)


def plot_lag(lag, path: Path) -> Path:
    fig = Figure(figsize=(7, 3.2))
    ax = fig.subplots()
    ax.axhline(0.0, color="0.8", linewidth=0.8)
    ax.plot(lag.lags, lag.correlations, color="tab:purple", marker="o", markersize=2.5, linewidth=1.2)
    ax.axvline(lag.peak_lag, color="0.3", linestyle=":", linewidth=1.0)
    ax.set_xlabel(f"lag ({lag.a} vs {lag.b})")
    ax.set_ylabel("correlation")
    ax.set_title(lag.describe(), fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def emit_plots(report, output_dir: str | Path, event_date: str | dt.date | None = None) -> list[Path]:
    """Write every chart for ``report`` into ``output_dir``; returns the paths in a fixed order."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    event_x = event_position(report, event_date) if event_date else None
    paths = []
    with matplotlib.rc_context(_RC):
        for name, series in report.signals.items():
            paths.append(plot_signal(series, out / f"{name}.svg", event_x))
        for lag in report.lags:
            paths.append(plot_lag(lag, out / f"lag_{lag.a}_{lag.b}.svg"))
    return paths
