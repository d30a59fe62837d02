"""CSV, JSON and plot-script writers for grids, trajectories and spectra."""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

from .complexity import ComplexitySpectrum
from .dynamics import Trajectory
from .sweep import AxisSpec, Grid


def format_value(v) -> str:
    """Shortest round-trip decimal (``repr``); NaN as ``NaN``."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "NaN"
    return repr(v)


def write_text(path, text: str) -> Path:
    path = Path(path)
    # newline="\n" keeps output byte-identical across platforms
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _axis_line(tag: str, axis: AxisSpec) -> str:
    return (
        f"# axis_{tag}={axis.name} start={format_value(axis.start)} "
        f"step={format_value(axis.step)} stop={format_value(axis.stop)}"
    )


def grid_to_csv(grid: Grid) -> str:
    lines = [_axis_line("x", grid.x_axis), _axis_line("y", grid.y_axis), f"# kind={grid.kind}"]
    values = grid.values
    for row in values:
        if grid.kind == "category":
            lines.append(",".join(str(int(v)) for v in row))
        else:
            lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_grid_csv(grid: Grid, path) -> Path:
    return write_text(path, grid_to_csv(grid))


def _parse_axis(line: str, tag: str) -> AxisSpec:
    head, *fields = line[1:].split()
    key, name = head.split("=", 1)
    if key != f"axis_{tag}":
        raise ValueError(f"expected axis_{tag} header, got {key!r}")
    kv = dict(f.split("=", 1) for f in fields)
    return AxisSpec(name, float(kv["start"]), float(kv["stop"]), float(kv["step"]))


def read_grid_csv(path) -> Grid:
    """Inverse of :func:`write_grid_csv` (metadata is not stored in the CSV)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    data = [ln for ln in lines if ln and not ln.startswith("#")]
    x_axis = _parse_axis(comments[0], "x")
    y_axis = _parse_axis(comments[1], "y")
    kind = comments[2].split("=", 1)[1].strip()
    if kind == "category":
        values = np.array([[int(f) for f in ln.split(",")] for ln in data], dtype=np.int64)
    else:
        values = np.array([[float(f) for f in ln.split(",")] for ln in data], dtype=np.float64)
    values = values.reshape(len(data), -1)
    escapes = int(np.isnan(values).sum()) if kind == "scalar" else 0
    return Grid(x_axis, y_axis, values, kind, {}, escapes)


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    n = traj.states.shape[1]
    lines = ["step," + ",".join(f"x{i + 1}" for i in range(n))]
    for k, row in enumerate(traj.states):
        lines.append(f"{traj.n_transient + k + 1}," + ",".join(format_value(v) for v in row))
    return write_text(path, "\n".join(lines) + "\n")


def write_spectrum_csv(spec: ComplexitySpectrum, normalized: np.ndarray, path) -> Path:
    """Columns: sample index, threshold, rescaled threshold X_i, K_i."""
    lines = ["index,threshold,X,K"]
    for i, (t, xn, k) in enumerate(zip(spec.thresholds, normalized, spec.values)):
        lines.append(f"{i},{format_value(t)},{format_value(xn)},{format_value(k)}")
    return write_text(path, "\n".join(lines) + "\n")


def write_json(obj, path) -> Path:
    return write_text(path, json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


# plot scripts ----------------------------------------------------------------

# stable / unstable / indeterminate
CATEGORY_COLORS = ("dimgray", "lightgray", "white")
CATEGORY_LABELS = ("stable", "unstable", "indeterminate")

_GRID_TEMPLATE = '''"""Render {csv_name} (generated by cellring)."""
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
{extra_imports}
data = np.genfromtxt({csv_name!r}, delimiter=",", comments="#")
data = np.atleast_2d(data)
extent = ({x0!r} - {dx!r} / 2, {x1!r} + {dx!r} / 2, {y0!r} - {dy!r} / 2, {y1!r} + {dy!r} / 2)
fig, ax = plt.subplots(figsize=(6, 5))
{body}
ax.set_xlabel({xlabel!r})
ax.set_ylabel({ylabel!r})
ax.set_title({title!r})
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else {png_name!r}, dpi=150)
'''

_CATEGORY_BODY = """cmap = ListedColormap({colors!r})
im = ax.imshow(data, origin="lower", extent=extent, aspect="auto", cmap=cmap,
               vmin=-0.5, vmax=2.5, interpolation="nearest")
handles = [Patch(facecolor=c, edgecolor="black", label=l) for c, l in zip({colors!r}, {labels!r})]
ax.legend(handles=handles, loc="upper right", fontsize=8)"""

_SCALAR_BODY = """im = ax.imshow(np.ma.masked_invalid(data), origin="lower", extent=extent, aspect="auto",
               cmap="viridis", interpolation="nearest")
fig.colorbar(im, ax=ax, label={label!r})"""


def plot_script_for_grid(grid: Grid, csv_name: str, title: str = "") -> str:
    xs, ys = grid.x_axis.values(), grid.y_axis.values()
    if grid.kind == "category":
        body = _CATEGORY_BODY.format(colors=list(CATEGORY_COLORS), labels=list(CATEGORY_LABELS))
        extra = "from matplotlib.colors import ListedColormap\nfrom matplotlib.patches import Patch\n"
    else:
        body = _SCALAR_BODY.format(label=grid.metadata.get("quantity", "value"))
        extra = ""
    return _GRID_TEMPLATE.format(
        csv_name=csv_name,
        extra_imports=extra,
        x0=float(xs[0]), x1=float(xs[-1]), dx=grid.x_axis.step,
        y0=float(ys[0]), y1=float(ys[-1]), dy=grid.y_axis.step,
        body=body,
        xlabel=grid.x_axis.name,
        ylabel=grid.y_axis.name,
        title=title or grid.metadata.get("quantity", ""),
        png_name=os.path.splitext(csv_name)[0] + ".png",
    )


def write_plot_script(grid: Grid, path, csv_name: str | None = None, title: str = "") -> Path:
    path = Path(path)
    csv_name = csv_name or path.with_suffix(".csv").name
    return write_text(path, plot_script_for_grid(grid, csv_name, title))


_SPECTRUM_TEMPLATE = '''"""Scatter of K_i against the rescaled threshold X_i from {csv_name} (generated by cellring)."""
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

data = np.genfromtxt({csv_name!r}, delimiter=",", names=True)
fig, ax = plt.subplots(figsize=(6, 4))
ax.scatter(data["X"], data["K"], s=4, color="black")
ax.set_xlabel("X (rescaled concentration)")
ax.set_ylabel("K")
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else {png_name!r}, dpi=150)
'''


def write_spectrum_plot_script(path, csv_name: str) -> Path:
    return write_text(
        path,
        _SPECTRUM_TEMPLATE.format(csv_name=csv_name, png_name=os.path.splitext(csv_name)[0] + ".png"),
    )
