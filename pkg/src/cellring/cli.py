"""``cellring`` command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import serialize
from .complexity import complexity_spectrum, kc_single, normalize_series
from .config import COMMANDS, RunConfig, parse_config
from .dynamics import find_fixed_point, simulate
from .errors import (
    CellRingError,
    ConfigError,
    DegenerateRange,
    DomainError,
    NotConverged,
    NumericalFailure,
    RangeEscape,
    SingularEntry,
    SingularJacobian,
)
from .stability import analyze_equilibrium
from .sweep import complexity_map, eigen_surface_map, ring_stability_sample, stability_region_map

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

log = logging.getLogger("cellring")


def _grid_outputs(cfg: RunConfig, out: Path, grid, stem: str, title: str) -> dict:
    csv_path = serialize.write_grid_csv(grid, out / f"{stem}.csv")
    if cfg.plot:
        serialize.write_plot_script(grid, out / f"{stem}_plot.py", csv_path.name, title)
    return {"file": csv_path.name, "shape": list(grid.values.shape)}


def _run_simulate(cfg: RunConfig, out: Path) -> dict:
    traj = simulate(cfg.params, cfg.x0, cfg.n_total, cfg.n_transient)
    serialize.write_trajectory_csv(traj, out / "trajectory.csv")
    return {"length": len(traj), "final_state": traj.states[-1].tolist(), "file": "trajectory.csv"}


def _run_complexity(cfg: RunConfig, out: Path) -> dict:
    traj = simulate(cfg.params, cfg.x0, cfg.n_total, cfg.n_transient)
    cells = []
    for i in range(cfg.params.n_cells):
        series = traj.series(i)
        spec = complexity_spectrum(series)
        cells.append({
            "cell": i,
            "kc_mean_threshold": kc_single(series),
            "kc_max": spec.max_value,
            "kc_max_threshold": float(spec.thresholds[spec.max_index]),
        })
    return {"length": len(traj), "cells": cells}


def _run_spectrum(cfg: RunConfig, out: Path) -> dict:
    traj = simulate(cfg.params, cfg.x0, cfg.n_total, cfg.n_transient)
    series = traj.series(cfg.cell)
    spec = complexity_spectrum(series)
    norm = normalize_series(series)
    serialize.write_spectrum_csv(spec, norm, out / "spectrum.csv")
    if cfg.plot:
        serialize.write_spectrum_plot_script(out / "spectrum_plot.py", "spectrum.csv")
    return {
        "cell": cfg.cell,
        "kc_max": spec.max_value,
        "max_index": spec.max_index,
        "file": "spectrum.csv",
    }


def _equilibrium_report(cfg: RunConfig) -> dict:
    try:
        eq = find_fixed_point(cfg.params, cfg.x0)
    except (NotConverged, SingularJacobian) as exc:
        return {"found": False, "reason": f"{type(exc).__name__}: {exc}"}
    report = analyze_equilibrium(eq, cfg.params)
    return {"found": True, **report.to_dict()}


def _run_stability2(cfg: RunConfig, out: Path) -> dict:
    if cfg.params.n_cells != 2:
        raise ConfigError("model.n_cells: stability2 needs 2 cells")
    grid = stability_region_map(cfg.x_axis, cfg.y_axis, cfg.params)
    return {
        "equilibrium": _equilibrium_report(cfg),
        "map": _grid_outputs(cfg, out, grid, "stability_map", "stability classes"),
        "counts": {str(k): int((grid.values == k).sum()) for k in (0, 1, 2)},
    }


def _run_ring_stability(cfg: RunConfig, out: Path) -> dict:
    rep = ring_stability_sample(cfg.n_samples, cfg.seed, cfg.sampler, cfg.workers)
    lines = ["index,n_cells,r,in_S,norm_check,spectral_radius,coupling_flips"]
    for k, s in enumerate(rep.samples):
        lines.append(
            f"{k},{s.n_cells},{serialize.format_value(s.r)},{int(s.in_S)},{int(s.norm_check)},"
            f"{serialize.format_value(s.spectral_radius)},{s.coupling_flips}"
        )
    serialize.write_text(out / "ring_samples.csv", "\n".join(lines) + "\n")
    summary = rep.summary()
    summary["file"] = "ring_samples.csv"
    if cfg.params.n_cells > 2:
        summary["equilibrium"] = _equilibrium_report(cfg)
    return summary


def _run_map_complexity(cfg: RunConfig, out: Path) -> dict:
    two = cfg.params.with_convention("two-cell")
    if two.n_cells != 2 or not two.uniform_coupling:
        raise ConfigError("model: map-complexity needs a two-cell model with one coupling value")
    grid = complexity_map(
        cfg.y_axis, cfg.x_axis, two.coupling[0], cfg.x0, cfg.n_total, cfg.n_transient,
        cfg.cell, cfg.workers,
    )
    res = _grid_outputs(cfg, out, grid, "complexity_map", "max complexity")
    finite = grid.values[np.isfinite(grid.values)]
    res.update(escapes=grid.escapes, mean=float(finite.mean()) if finite.size else None)
    return res


def _run_map_stability(cfg: RunConfig, out: Path) -> dict:
    if cfg.params.n_cells != 2:
        raise ConfigError("model.n_cells: map-stability needs 2 cells")
    grid = stability_region_map(cfg.x_axis, cfg.y_axis, cfg.params)
    res = _grid_outputs(cfg, out, grid, "stability_map", "stability classes")
    res["singular_cells"] = len(grid.metadata["singular_cells"])
    res["counts"] = {str(k): int((grid.values == k).sum()) for k in (0, 1, 2)}
    return res


def _run_map_eigs(cfg: RunConfig, out: Path) -> dict:
    if cfg.params.n_cells != 2:
        raise ConfigError("model.n_cells: map-eigs needs 2 cells")
    hi, lo = eigen_surface_map(cfg.x_axis, cfg.y_axis, cfg.params)
    return {
        "eigen_max": _grid_outputs(cfg, out, hi, "eigen_max", "max |eigenvalue|"),
        "eigen_min": _grid_outputs(cfg, out, lo, "eigen_min", "min |eigenvalue|"),
    }


RUNNERS = {
    "simulate": _run_simulate,
    "complexity": _run_complexity,
    "spectrum": _run_spectrum,
    "stability2": _run_stability2,
    "ring-stability": _run_ring_stability,
    "map-complexity": _run_map_complexity,
    "map-stability": _run_map_stability,
    "map-eigs": _run_map_eigs,
}


def run(cfg: RunConfig) -> dict:
    """Execute ``cfg`` and write config.json, summary.json and the command's artifacts."""
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    serialize.write_json(cfg.echo(), out / "config.json")
    summary = RUNNERS[cfg.command](cfg, out)
    serialize.write_json({"command": cfg.command, "result": summary}, out / "summary.json")
    return summary


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cellring", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config file; flags override its values")
    ap.add_argument("--r", type=float)
    ap.add_argument("--c", type=float)
    ap.add_argument("--p", type=float)
    ap.add_argument("--n-cells", type=int, dest="n_cells")
    ap.add_argument("--x0", type=float, nargs="+")
    ap.add_argument("--steps", type=int, help="total number of map iterations")
    ap.add_argument("--transient", type=int, help="leading iterations to discard")
    ap.add_argument("--cell", type=int, help="cell whose series is analysed")
    ap.add_argument("--grid-step", type=float, dest="grid_step")
    ap.add_argument("--samples", type=int, help="ring-stability sample count")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--convention", choices=("two-cell", "ring"))
    ap.add_argument("--full-res", action="store_true", default=None, dest="full_res")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--no-plot", action="store_false", default=None, dest="plot")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _overrides(ns: argparse.Namespace) -> dict:
    model = {"r": ns.r, "c": ns.c, "p": ns.p, "n_cells": ns.n_cells, "convention": ns.convention}
    sim = {"x0": ns.x0, "n_total": ns.steps, "n_transient": ns.transient, "cell": ns.cell}
    over = {
        "command": ns.command,
        "model": {k: v for k, v in model.items() if v is not None},
        "sim": {k: v for k, v in sim.items() if v is not None},
        "grid_step": ns.grid_step,
        "ring": {"n_samples": ns.samples} if ns.samples is not None else {},
        "output": ns.out,
        "seed": ns.seed,
        "full_res": ns.full_res,
        "workers": ns.workers,
        "plot": ns.plot,
    }
    return {k: v for k, v in over.items() if v not in (None, {})}


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        text = Path(ns.config).read_text(encoding="utf-8") if ns.config else None
    except OSError as exc:
        print(f"cellring: cannot read config {ns.config}: {exc}", file=sys.stderr)
        return EXIT_IO
    except UnicodeDecodeError as exc:
        print(f"cellring: config error: {ns.config} is not UTF-8 ({exc})", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text, _overrides(ns))
        t0 = time.perf_counter()
        run(cfg)
        log.info("%s finished in %.2f s", cfg.command, time.perf_counter() - t0)
    except (ConfigError, DomainError) as exc:
        print(f"cellring: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RangeEscape as exc:
        print(f"cellring: numerical failure: orbit escaped: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (NotConverged, NumericalFailure, SingularJacobian, SingularEntry, DegenerateRange) as exc:
        print(f"cellring: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"cellring: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except CellRingError as exc:
        print(f"cellring: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
