"""Render simulation trace/summary CSV files into multi-panel figures.

Reads only the exported file formats (trace.csv, summary.csv,
effective_config.cfg); no simulation code is imported.  SVG output is
deterministic: a fixed hash salt and suppressed date metadata make
re-renders byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "figrender"
matplotlib.rcParams["svg.fonttype"] = "none"  # text as text: diffable output

import matplotlib.pyplot as plt
import numpy as np

TRACE_COLUMNS = ("time", "u_o", "i_f", "i_o", "x_d", "s_raw", "s_used",
                 "s_error", "x_comp", "t_level", "v_dc", "region_margin",
                 "region_ok")

TRACE_PRESETS = ("fig4", "fig5", "fig6", "fig7", "case1", "case2", "case3")
SWEEP_PRESETS = ("fig3",)
PRESETS = SWEEP_PRESETS + TRACE_PRESETS

DC_FLOOR_MARKER_V = 181.0  # documented headroom recipe (V_n + 20) * sqrt(2)

MAX_POINTS_PER_LINE = 4000


class MissingColumnError(KeyError):
    """A referenced column is absent from the CSV."""


class EmptyTraceError(ValueError):
    """The CSV carries a header but no data rows."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render: inputs are (csv path, column, axis, label) rows."""

    figure_id: str
    inputs: tuple = ()
    out_path: str = "figure.svg"
    image_format: str = "svg"

    def __post_init__(self):
        if self.image_format not in ("svg", "png"):
            raise ValueError(f"image format must be svg or png, "
                             f"got {self.image_format!r}")

    @staticmethod
    def from_json(path) -> "FigureSpec":
        blob = json.loads(Path(path).read_text())
        return FigureSpec(
            figure_id=blob["figure_id"],
            inputs=tuple((row["path"], row["column"], row.get("axis", 0),
                          row.get("label", row["column"]))
                         for row in blob.get("inputs", ())),
            out_path=blob["out"],
            image_format=blob.get("format", "svg"),
        )


def read_csv_columns(path):
    """Parse a CSV with a header row into {name: float array}."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise EmptyTraceError(f"{path} is empty")
    names = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:] if line]
    if not rows:
        raise EmptyTraceError(f"{path} has a header but no records")
    data = np.array(rows, dtype=np.float64)
    return {name: data[:, i] for i, name in enumerate(names)}


def require_columns(table, names, source):
    for name in names:
        if name not in table:
            raise MissingColumnError(
                f"{source} lacks required column {name!r} "
                f"(has: {', '.join(sorted(table))})")


def minmax_decimate(t, y, max_points=MAX_POINTS_PER_LINE):
    """Envelope-preserving decimation for dense chatter waveforms."""
    n = len(t)
    if n <= max_points:
        return t, y
    n_bins = max_points // 2
    edges = np.linspace(0, n, n_bins + 1, dtype=int)
    ts, ys = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if a == b:
            continue
        seg = y[a:b]
        i_min = a + int(np.argmin(seg))
        i_max = a + int(np.argmax(seg))
        for i in sorted((i_min, i_max)):
            ts.append(t[i])
            ys.append(y[i])
    return np.asarray(ts), np.asarray(ys)


def _style_axes(ax, ylabel):
    ax.grid(True, alpha=0.3)
    ax.set_ylabel(ylabel)


def render_trace_panels(trace, band=None, title=""):
    """The standard three-panel layout from one trace table.

    Panel 1: u_o against its reference.  Panel 2: sliding variables with
    the hysteresis band.  Panel 3: dc-link level with shading where the
    precision predicate fails.
    """
    require_columns(trace, TRACE_COLUMNS, "trace")
    t = trace["time"]
    fig, axes = plt.subplots(3, 1, figsize=(9.0, 7.5), sharex=True)

    ax = axes[0]
    ax.plot(*minmax_decimate(t, trace["u_o"]), lw=0.7, color="#1f77b4",
            label="u_o")
    ax.plot(*minmax_decimate(t, trace["x_d"]), lw=0.7, color="#d62728",
            ls="--", label="reference")
    _style_axes(ax, "voltage [V]")
    ax.legend(loc="upper right", fontsize=8)
    if title:
        ax.set_title(title)

    ax = axes[1]
    ax.plot(*minmax_decimate(t, trace["s_raw"]), lw=0.5, color="#7f7f7f",
            label="s_raw")
    ax.plot(*minmax_decimate(t, trace["s_used"]), lw=0.5, color="#2ca02c",
            label="s_used")
    if band:
        ax.axhline(+band, color="k", lw=0.8, ls=":")
        ax.axhline(-band, color="k", lw=0.8, ls=":")
    _style_axes(ax, "sliding value [V/s]")
    ax.legend(loc="upper right", fontsize=8)

    ax = axes[2]
    ax.plot(*minmax_decimate(t, trace["v_dc"]), lw=1.0, color="#9467bd",
            label="v_dc")
    bad = trace["region_ok"] == 0.0
    if np.any(bad):
        ax.fill_between(t, 0.0, trace["v_dc"].max() * 1.05, where=bad,
                        color="#d62728", alpha=0.15, linewidth=0,
                        label="region violated")
    _style_axes(ax, "dc link [V]")
    ax.set_xlabel("time [s]")
    ax.legend(loc="lower right", fontsize=8)

    fig.align_ylabels(axes)
    fig.tight_layout()
    return fig


def render_sweep_panel(summary, title=""):
    """Feasibility staircase from a sweep summary: tracking envelope per
    dc-link level with the documented headroom marker."""
    require_columns(summary, ("error_envelope@w0",), "summary")
    axis_key = next(iter(summary))  # first column is the swept axis
    levels = summary[axis_key]
    env = summary["error_envelope@w0"]
    order = np.argsort(levels)

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.step(levels[order], env[order], where="post", marker="o",
            color="#1f77b4", label="error envelope")
    ax.axvline(DC_FLOOR_MARKER_V, color="#d62728", ls="--", lw=1.0,
               label=f"{DC_FLOOR_MARKER_V:.0f} V headroom recipe")
    ax.set_xlabel("dc-link voltage [V]")
    _style_axes(ax, "tracking error envelope [V]")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    return fig


def _save(fig, out_path, image_format):
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, format=image_format, metadata={"Date": None}
                if image_format == "svg" else None)
    plt.close(fig)
    return out_path


def render_preset(preset, in_dir, out_path, image_format="svg",
                  band=20000.0):
    """Render one bundled layout from a run (or sweep) output directory."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r} (have: {', '.join(PRESETS)})")
    in_dir = Path(in_dir)
    if preset in SWEEP_PRESETS:
        summary = read_csv_columns(in_dir / "summary.csv")
        fig = render_sweep_panel(summary, title=preset)
    else:
        trace = read_csv_columns(in_dir / "trace.csv")
        fig = render_trace_panels(trace, band=band, title=preset)
    return _save(fig, out_path, image_format)


def render_figure(spec: FigureSpec):
    """Render an explicit FigureSpec (one subplot per distinct axis)."""
    if spec.figure_id in PRESETS and not spec.inputs:
        raise ValueError("preset specs need render_preset with an input dir")
    if not spec.inputs:
        raise ValueError("spec has no inputs")
    tables = {}
    axes_ids = sorted({row[2] for row in spec.inputs})
    fig, axes = plt.subplots(len(axes_ids), 1, figsize=(9.0, 2.6 * len(axes_ids)),
                             sharex=True, squeeze=False)
    axes = axes[:, 0]
    for path, column, axis, label in spec.inputs:
        table = tables.setdefault(path, read_csv_columns(path))
        require_columns(table, ("time", column), path)
        ax = axes[axes_ids.index(axis)]
        ax.plot(*minmax_decimate(table["time"], table[column]), lw=0.7,
                label=label)
    for ax in axes:
        ax.grid(True, alpha=0.3)
        ax.legend(loc="upper right", fontsize=8)
    axes[-1].set_xlabel("time [s]")
    axes[0].set_title(spec.figure_id)
    fig.tight_layout()
    return _save(fig, spec.out_path, spec.image_format)
