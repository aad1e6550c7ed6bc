"""Static SVG plots of simulation artifacts.

Rendering is deterministic so artifacts can be diffed and regenerated
byte-for-byte: figures are built directly (no pyplot global state), the SVG
hash salt is pinned, and the creation-date metadata is stripped.  Dense
traces are decimated to a bounded point count before plotting; at typical
figure sizes the decimated polyline is visually indistinguishable from the
full one.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

matplotlib.rcParams["svg.hashsalt"] = "pvfreq"

#: Upper bound on points per plotted line.
MAX_PLOT_POINTS = 6000

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def _decimate(t: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = t.size
    if n <= MAX_PLOT_POINTS:
        return t, y
    stride = -(-n // MAX_PLOT_POINTS)  # ceil
    idx = np.arange(0, n, stride)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    return t[idx], y[idx]


def _new_figure() -> tuple[Figure, object]:
    fig = Figure(figsize=(8.0, 4.5), dpi=100)
    ax = fig.subplots()
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig: Figure, path: str | Path) -> None:
    fig.savefig(Path(path), format="svg", metadata={"Date": None})


def render_frequency_svg(
    path: str | Path, t: np.ndarray, frequency: np.ndarray, title: str
) -> None:
    """Single frequency trace versus time."""
    fig, ax = _new_figure()
    td, fd = _decimate(np.asarray(t, float), np.asarray(frequency, float))
    ax.plot(td, fd, color=_COLORS[0], linewidth=1.2)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("frequency (Hz)")
    ax.set_title(title)
    _save(fig, path)


def render_overlay_svg(
    path: str | Path,
    series: list[tuple[str, np.ndarray, np.ndarray]],
    title: str,
) -> None:
    """Several labeled frequency traces on shared axes."""
    fig, ax = _new_figure()
    for i, (label, t, f) in enumerate(series):
        td, fd = _decimate(np.asarray(t, float), np.asarray(f, float))
        ax.plot(td, fd, color=_COLORS[i % len(_COLORS)], linewidth=1.2, label=label)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("frequency (Hz)")
    ax.set_title(title)
    ax.legend(loc="lower right")
    _save(fig, path)


def render_shed_error_svg(
    path: str | Path,
    entries: list[tuple[float, str, float]],
    title: str = "shed error by penetration level",
) -> None:
    """Grouped bars of shed error (%) per penetration level and scheme.

    ``entries`` holds ``(penetration, scheme, shed_error_pct)`` tuples.
    """
    fig, ax = _new_figure()
    levels = sorted({p for p, _, _ in entries})
    schemes = sorted({s for _, s, _ in entries})
    width = 0.8 / max(1, len(schemes))
    x0 = np.arange(len(levels), dtype=float)
    lookup = {(p, s): e for p, s, e in entries}
    for j, scheme in enumerate(schemes):
        offsets = x0 + (j - (len(schemes) - 1) / 2.0) * width
        heights = [lookup.get((p, scheme), np.nan) for p in levels]
        ax.bar(offsets, heights, width=width, color=_COLORS[j % len(_COLORS)], label=scheme)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xticks(x0)
    ax.set_xticklabels([f"{p * 100:g}%" for p in levels])
    ax.set_xlabel("instantaneous PV penetration")
    ax.set_ylabel("shed error (% of true imbalance)")
    ax.set_title(title)
    ax.legend()
    _save(fig, path)
