"""Run configuration: JSON schema, defaults and validation.

A config is a JSON object.  Every section is optional; missing values are
filled from defaults.  Unknown keys are rejected.

    {
      "command": "map-complexity",
      "model":  {"r": 3.95, "c": 0.02, "p": 0.5, "n_cells": 2, "convention": "two-cell"},
      "sim":    {"x0": [0.3, 0.5], "n_total": 5000, "n_transient": 1000, "cell": 0},
      "axes":   {"x": {"name": "p", "start": 0.02, "stop": 0.98, "step": 0.02},
                 "y": {"name": "r", "start": 3.6, "stop": 4.0, "step": 0.02}},
      "grid_step": 0.02,
      "ring":   {"n_samples": 500, "n_cells": [2, 3, 5, 10, 20, 50, 100],
                 "placement": "region_S", "r_range": [1.0, 4.0],
                 "coupling_range": [0.0, 1.0], "redraws": 3, "convention": "ring"},
      "output": "out", "seed": 0, "workers": 1, "full_res": false, "plot": true
    }

``c`` and ``p`` may be lists (one entry per cell).  A scalar ``p`` is only
meaningful for two cells, where it means affinities ``(p, 1 - p)``; for
larger rings a missing ``p`` means equal affinities ``1/N``.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass

from .dynamics import Convention, ModelParams
from .errors import ConfigError, DomainError
from .sweep import AxisSpec, RingSampler

COMMANDS = (
    "simulate",
    "complexity",
    "spectrum",
    "stability2",
    "ring-stability",
    "map-complexity",
    "map-stability",
    "map-eigs",
)

GRID_COMMANDS = ("stability2", "map-complexity", "map-stability", "map-eigs")

TOP_KEYS = {"command", "model", "sim", "axes", "grid_step", "ring", "output", "seed", "workers",
            "full_res", "plot"}
MODEL_KEYS = {"r", "c", "p", "n_cells", "convention"}
SIM_KEYS = {"x0", "n_total", "n_transient", "cell"}
AXIS_KEYS = {"name", "start", "stop", "step"}
RING_KEYS = {"n_samples", "n_cells", "placement", "r_range", "coupling_range", "redraws", "convention"}

# a missing p means equal affinities, i.e. p = 0.5 for two cells
DEFAULT_MODEL = {"r": 3.95, "c": 0.02}
DEFAULT_X0 = [0.3, 0.5]
DEFAULT_N_TOTAL = 5000
DEFAULT_N_TRANSIENT = 1000
REDUCED_N_TOTAL = 3000
REDUCED_STEP = 0.02
FULL_STEP = 0.005
STABILITY_STEP = 0.005
R_RANGE_COMPLEXITY = (3.6, 4.0)


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: ModelParams
    x0: tuple[float, ...]
    n_total: int
    n_transient: int
    cell: int
    x_axis: AxisSpec | None
    y_axis: AxisSpec | None
    sampler: RingSampler
    n_samples: int
    output: str
    seed: int
    workers: int
    plot: bool
    resolved: dict

    def echo(self) -> dict:
        return copy.deepcopy(self.resolved)


def _fail(key: str, msg: str) -> ConfigError:
    return ConfigError(f"{key}: {msg}")


def _check_keys(section: dict, allowed: set, where: str) -> None:
    if not isinstance(section, dict):
        raise _fail(where or "config", "expected an object")
    unknown = sorted(set(section) - allowed)
    if unknown:
        prefix = f"{where}." if where else ""
        raise _fail(prefix + unknown[0], f"unknown key (allowed: {', '.join(sorted(allowed))})")


def _num(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(key, f"expected a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise _fail(key, f"must be finite, got {value!r}")
    return v


def _int(value, key: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _fail(key, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise _fail(key, f"must be >= {minimum}, got {value}")
    return value


def _num_or_list(value, key: str):
    if isinstance(value, list):
        if not value:
            raise _fail(key, "list must not be empty")
        return [_num(v, f"{key}[{i}]") for i, v in enumerate(value)]
    return _num(value, key)


def _num_pair(value, key: str) -> list[float]:
    if not isinstance(value, list) or len(value) != 2:
        raise _fail(key, f"expected a two-element list, got {value!r}")
    lo, hi = (_num(v, f"{key}[{i}]") for i, v in enumerate(value))
    if not lo < hi:
        raise _fail(key, f"needs lo < hi, got {value!r}")
    return [lo, hi]


def load_config_text(text: str) -> dict:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return raw


def merge(base: dict, override: dict) -> dict:
    """Recursive dict merge; ``override`` wins, ``None`` values are skipped."""
    out = copy.deepcopy(base)
    for k, v in override.items():
        if v is None:
            continue
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _build_params(model: dict) -> tuple[ModelParams, dict]:
    r = _num(model["r"], "model.r")
    if not 0.0 < r <= 4.0:
        raise _fail("model.r", f"r={r!r} violates 0 < r <= 4")
    c = _num_or_list(model["c"], "model.c")
    p = model.get("p")
    if p is not None:
        p = _num_or_list(p, "model.p")
    n = model.get("n_cells")
    if n is None:
        n = len(p) if isinstance(p, list) else len(c) if isinstance(c, list) else 2
    n = _int(n, "model.n_cells", 2)
    if p is None:
        affinities = [1.0 / n] * n
    elif isinstance(p, list):
        affinities = p
    elif n == 2:
        affinities = [p, 1.0 - p]
    else:
        raise _fail("model.p", f"scalar p only defines affinities for 2 cells; give a list of {n}")
    if len(affinities) != n:
        raise _fail("model.p", f"has {len(affinities)} entries but n_cells is {n}")
    coupling = c if isinstance(c, list) else [c] * n
    if len(coupling) != n:
        raise _fail("model.c", f"has {len(coupling)} entries but n_cells is {n}")
    conv = model.get("convention", "two-cell" if n == 2 else "ring")
    if conv not in ("two-cell", "ring"):
        raise _fail("model.convention", f"must be 'two-cell' or 'ring', got {conv!r}")
    try:
        params = ModelParams(r, tuple(coupling), tuple(affinities), Convention(conv))
    except DomainError as exc:
        raise _fail("model", str(exc)) from exc
    resolved = {"r": r, "c": c, "n_cells": n, "convention": conv}
    resolved["p"] = p if p is not None else affinities
    return params, resolved


def _axis(section: dict, key: str) -> AxisSpec:
    _check_keys(section, AXIS_KEYS, key)
    missing = AXIS_KEYS - set(section)
    if missing:
        raise _fail(f"{key}.{sorted(missing)[0]}", "missing")
    name = section["name"]
    if not isinstance(name, str) or not name:
        raise _fail(f"{key}.name", "expected a non-empty string")
    try:
        return AxisSpec(
            name,
            _num(section["start"], f"{key}.start"),
            _num(section["stop"], f"{key}.stop"),
            _num(section["step"], f"{key}.step"),
        )
    except DomainError as exc:
        raise _fail(key, str(exc)) from exc


def _default_axes(command: str, step: float) -> dict:
    last = round(1.0 - step, 12)
    if command == "map-complexity":
        return {
            "x": {"name": "p", "start": step, "stop": last, "step": step},
            "y": {"name": "r", "start": R_RANGE_COMPLEXITY[0], "stop": R_RANGE_COMPLEXITY[1],
                  "step": step},
        }
    return {
        "x": {"name": "x", "start": step, "stop": last, "step": step},
        "y": {"name": "y", "start": step, "stop": last, "step": step},
    }


def resolve(raw: dict) -> RunConfig:
    """Validate ``raw`` and fill defaults; the result's ``resolved`` dict is a complete config."""
    _check_keys(raw, TOP_KEYS, "")
    command = raw.get("command")
    if command not in COMMANDS:
        raise _fail("command", f"must be one of {', '.join(COMMANDS)}, got {command!r}")
    full_res = raw.get("full_res", False)
    if not isinstance(full_res, bool):
        raise _fail("full_res", "expected true or false")
    plot = raw.get("plot", True)
    if not isinstance(plot, bool):
        raise _fail("plot", "expected true or false")

    model = raw.get("model", {})
    _check_keys(model, MODEL_KEYS, "model")
    params, model_res = _build_params(merge(DEFAULT_MODEL, model))
    n = params.n_cells

    sim = raw.get("sim", {})
    _check_keys(sim, SIM_KEYS, "sim")
    reduced_map = command == "map-complexity" and not full_res
    default_x0 = DEFAULT_X0 if n == 2 else [0.5] * n
    x0_raw = sim.get("x0", default_x0)
    if not isinstance(x0_raw, list) or len(x0_raw) != n:
        raise _fail("sim.x0", f"expected a list of {n} numbers, got {x0_raw!r}")
    x0 = [_num(v, f"sim.x0[{i}]") for i, v in enumerate(x0_raw)]
    for i, v in enumerate(x0):
        if not 0.0 < v < 1.0:
            raise _fail(f"sim.x0[{i}]", f"{v!r} violates 0 < x < 1")
    n_total = _int(sim.get("n_total", REDUCED_N_TOTAL if reduced_map else DEFAULT_N_TOTAL),
                   "sim.n_total", 1)
    n_transient = _int(sim.get("n_transient", DEFAULT_N_TRANSIENT), "sim.n_transient", 0)
    if n_total <= n_transient:
        raise _fail("sim.n_total", f"must exceed n_transient ({n_total} <= {n_transient})")
    cell = _int(sim.get("cell", 0), "sim.cell", 0)
    if cell >= n:
        raise _fail("sim.cell", f"must be < n_cells={n}")

    resolved = {
        "command": command,
        "model": model_res,
        "sim": {"x0": x0, "n_total": n_total, "n_transient": n_transient, "cell": cell},
        "full_res": full_res,
        "plot": plot,
    }

    x_axis = y_axis = None
    if command in GRID_COMMANDS:
        if "grid_step" in raw:
            step = _num(raw["grid_step"], "grid_step")
            if not 0.0 < step < 0.5:
                raise _fail("grid_step", f"{step!r} violates 0 < step < 0.5")
        elif command == "map-complexity":
            step = FULL_STEP if full_res else REDUCED_STEP
        else:
            step = STABILITY_STEP
        axes = merge(_default_axes(command, step), raw.get("axes", {}))
        _check_keys(axes, {"x", "y"}, "axes")
        x_axis = _axis(axes["x"], "axes.x")
        y_axis = _axis(axes["y"], "axes.y")
        resolved["grid_step"] = step
        resolved["axes"] = {"x": x_axis.to_dict(), "y": y_axis.to_dict()}
    elif "axes" in raw:
        _check_keys(raw["axes"], {"x", "y"}, "axes")

    ring = raw.get("ring", {})
    _check_keys(ring, RING_KEYS, "ring")
    sizes = ring.get("n_cells", list(RingSampler().n_cells))
    if isinstance(sizes, int) and not isinstance(sizes, bool):
        sizes = [sizes]
    if not isinstance(sizes, list) or not sizes:
        raise _fail("ring.n_cells", "expected an integer or a list of integers")
    sizes = [_int(v, f"ring.n_cells[{i}]", 2) for i, v in enumerate(sizes)]
    for i, v in enumerate(sizes):
        if v > 1024:
            raise _fail(f"ring.n_cells[{i}]", f"{v} exceeds 1024")
    placement = ring.get("placement", "region_S")
    if placement not in ("region_S", "cube", "center"):
        raise _fail("ring.placement", f"must be region_S, cube or center, got {placement!r}")
    r_range = _num_pair(ring.get("r_range", [1.0, 4.0]), "ring.r_range")
    if r_range[0] < 1.0 or r_range[1] > 4.0:
        raise _fail("ring.r_range", "must lie within [1, 4] (region S needs r > 1)")
    c_range = _num_pair(ring.get("coupling_range", [0.0, 1.0]), "ring.coupling_range")
    if c_range[0] < 0.0 or c_range[1] > 1.0:
        raise _fail("ring.coupling_range", "must lie within [0, 1]")
    redraws = _int(ring.get("redraws", 3), "ring.redraws", 0)
    n_samples = _int(ring.get("n_samples", 500), "ring.n_samples", 1)
    ring_conv = ring.get("convention", "ring")
    if ring_conv not in ("two-cell", "ring"):
        raise _fail("ring.convention", f"must be 'two-cell' or 'ring', got {ring_conv!r}")
    sampler = RingSampler(
        n_cells=tuple(sizes),
        r_range=tuple(r_range),
        coupling_range=tuple(c_range),
        placement=placement,
        convention=ring_conv,
        coupling_redraws=redraws,
    )
    if command == "ring-stability":
        resolved["ring"] = {
            "n_samples": n_samples, "n_cells": sizes, "placement": placement,
            "r_range": r_range, "coupling_range": c_range, "redraws": redraws,
            "convention": ring_conv,
        }

    output = raw.get("output", "out")
    if not isinstance(output, str) or not output:
        raise _fail("output", "expected a non-empty path string")
    seed = _int(raw.get("seed", 0), "seed", 0)
    workers = _int(raw.get("workers", 1), "workers", 1)
    resolved.update(output=output, seed=seed, workers=workers)

    return RunConfig(
        command=command,
        params=params,
        x0=tuple(x0),
        n_total=n_total,
        n_transient=n_transient,
        cell=cell,
        x_axis=x_axis,
        y_axis=y_axis,
        sampler=sampler,
        n_samples=n_samples,
        output=output,
        seed=seed,
        workers=workers,
        plot=plot,
        resolved=resolved,
    )


def parse_config(text: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Parse JSON ``text`` (may be empty) and apply ``overrides`` on top."""
    raw = load_config_text(text) if text and text.strip() else {}
    if overrides:
        raw = merge(raw, overrides)
    return resolve(raw)
