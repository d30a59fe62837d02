"""Parameter-space sweeps producing 2D grids.

Every grid cell is computed by the same single-point functions a caller
would use directly, rows are distributed over worker processes, and results
are written back in row order, so the output does not depend on the worker
count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .complexity import max_complexity
from .dynamics import ModelParams, simulate
from .errors import DomainError, RangeEscape, SingularEntry
from .linalg import spectral_radius
from .stability import (
    Classification,
    classify_equilibrium,
    eigenvalues_two_cell,
    jacobian_ring,
    jacobian_two_cell,
    norm_stability_check,
    region_S_membership,
    region_S_windows,
)


@dataclass(frozen=True)
class AxisSpec:
    name: str
    start: float
    stop: float
    step: float

    def __post_init__(self):
        for attr in ("start", "stop", "step"):
            v = float(getattr(self, attr))
            if not math.isfinite(v):
                raise DomainError(f"axis {self.name!r}: {attr}={v!r} is not finite")
            object.__setattr__(self, attr, v)
        if not self.step > 0:
            raise DomainError(f"axis {self.name!r}: step={self.step!r} must be positive")
        if self.stop < self.start:
            raise DomainError(f"axis {self.name!r}: stop={self.stop!r} is below start={self.start!r}")

    @property
    def n_points(self) -> int:
        # small slack so that e.g. (4.0 - 3.6) / 0.02 counts the endpoint
        return int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1

    def values(self) -> np.ndarray:
        return np.round(self.start + self.step * np.arange(self.n_points), 12)

    def to_dict(self) -> dict:
        return {"name": self.name, "start": self.start, "stop": self.stop, "step": self.step}


@dataclass
class Grid:
    """``values[i, j]`` belongs to ``y_axis`` point i and ``x_axis`` point j."""

    x_axis: AxisSpec
    y_axis: AxisSpec
    values: np.ndarray
    kind: str = "scalar"
    metadata: dict = field(default_factory=dict)
    escapes: int = 0

    def __post_init__(self):
        shape = (self.y_axis.n_points, self.x_axis.n_points)
        if self.values.shape != shape:
            raise DomainError(f"grid values have shape {self.values.shape}, axes imply {shape}")
        if self.kind not in ("scalar", "category"):
            raise DomainError(f"unknown grid kind {self.kind!r}")


def _run_rows(fn: Callable, rows: Sequence, workers: int) -> list:
    if workers is None or workers <= 1 or len(rows) <= 1:
        return [fn(row) for row in rows]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, rows, chunksize=1))


# --- complexity maps -------------------------------------------------------


def complexity_cell(
    r: float,
    p: float,
    c: float,
    x0=(0.3, 0.5),
    n_total: int = 5000,
    n_transient: int = 1000,
    cell: int = 0,
) -> float:
    """K_m^C of one cell's series for the two-cell model; NaN if the orbit escapes."""
    params = ModelParams.two_cell(r, c, p)
    try:
        traj = simulate(params, x0, n_total, n_transient)
    except RangeEscape:
        return math.nan
    return max_complexity(traj.series(cell))


@dataclass(frozen=True)
class _ComplexityRow:
    c: float
    x0: tuple
    n_total: int
    n_transient: int
    cell: int
    p_values: tuple

    def __call__(self, r: float) -> list[float]:
        return [
            complexity_cell(r, p, self.c, self.x0, self.n_total, self.n_transient, self.cell)
            for p in self.p_values
        ]


def complexity_map(
    r_axis: AxisSpec,
    p_axis: AxisSpec,
    c: float,
    x0=(0.3, 0.5),
    n_total: int = 5000,
    n_transient: int = 1000,
    cell: int = 0,
    workers: int = 1,
) -> Grid:
    """K_m^C over (p, r); p runs along x, r along y."""
    p_vals = p_axis.values()
    r_vals = r_axis.values()
    # validate every parameter up front instead of inside worker processes
    for r in (r_vals[0], r_vals[-1]):
        for p in (p_vals[0], p_vals[-1]):
            ModelParams.two_cell(float(r), c, float(p))
    row_fn = _ComplexityRow(
        float(c), tuple(float(v) for v in x0), int(n_total), int(n_transient), int(cell),
        tuple(float(p) for p in p_vals),
    )
    rows = _run_rows(row_fn, [float(r) for r in r_vals], workers)
    values = np.array(rows, dtype=np.float64).reshape(len(r_vals), len(p_vals))
    escapes = int(np.isnan(values).sum())
    meta = {
        "quantity": "max_complexity",
        "model": "two-cell",
        "c": float(c),
        "x0": list(row_fn.x0),
        "n_total": row_fn.n_total,
        "n_transient": row_fn.n_transient,
        "cell": row_fn.cell,
        "escapes": escapes,
    }
    return Grid(p_axis, r_axis, values, "scalar", meta, escapes)


# --- two-cell stability maps ----------------------------------------------


def stability_cell(x: float, y: float, params: ModelParams) -> tuple[int, bool]:
    """(category code, singular flag) at the equilibrium candidate (x, y)."""
    try:
        lams = eigenvalues_two_cell(jacobian_two_cell((x, y), params))
    except SingularEntry:
        return Classification.INDETERMINATE.code, True
    return classify_equilibrium(lams).code, False


def eigen_cell(x: float, y: float, params: ModelParams) -> tuple[float, float]:
    """(max |lambda|, min |lambda|); NaN pair at singular points."""
    try:
        l1, l2 = eigenvalues_two_cell(jacobian_two_cell((x, y), params))
    except SingularEntry:
        return math.nan, math.nan
    return abs(l1), abs(l2)


def _check_two_cell(params: ModelParams) -> None:
    if params.n_cells != 2:
        raise DomainError("two-cell maps need N = 2")


def _params_meta(params: ModelParams) -> dict:
    return {"model": params.to_dict()}


def stability_region_map(x_axis: AxisSpec, y_axis: AxisSpec, params: ModelParams) -> Grid:
    """Category grid: 0 stable, 1 unstable, 2 indeterminate."""
    _check_two_cell(params)
    xs, ys = x_axis.values(), y_axis.values()
    codes = np.empty((len(ys), len(xs)), dtype=np.int64)
    singular = []
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            code, sing = stability_cell(float(x), float(y), params)
            codes[i, j] = code
            if sing:
                singular.append([i, j])
    meta = _params_meta(params)
    meta.update(
        quantity="classification",
        categories={"0": Classification.STABLE.value, "1": Classification.UNSTABLE.value,
                    "2": Classification.INDETERMINATE.value},
        singular_cells=singular,
    )
    return Grid(x_axis, y_axis, codes, "category", meta)


def eigen_surface_map(x_axis: AxisSpec, y_axis: AxisSpec, params: ModelParams) -> tuple[Grid, Grid]:
    """Grids of max |lambda| and min |lambda| over equilibrium candidates."""
    _check_two_cell(params)
    xs, ys = x_axis.values(), y_axis.values()
    hi = np.empty((len(ys), len(xs)))
    lo = np.empty_like(hi)
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            hi[i, j], lo[i, j] = eigen_cell(float(x), float(y), params)
    base = _params_meta(params)
    return (
        Grid(x_axis, y_axis, hi, "scalar", {**base, "quantity": "eigen_max"}),
        Grid(x_axis, y_axis, lo, "scalar", {**base, "quantity": "eigen_min"}),
    )


# --- ring sampling ---------------------------------------------------------


@dataclass(frozen=True)
class RingSampler:
    """How random ring instances are drawn.

    ``placement``: ``"region_S"`` samples each component uniformly inside its
    S window, ``"cube"`` uniformly in (lo, hi)^N, ``"center"`` puts every
    component at 0.5.  Affinities are Dirichlet(1, ..., 1) unless
    ``affinities`` is given.  ``coupling_redraws`` extra coupling vectors are
    drawn per sample to test that the norm check does not depend on them.
    """

    n_cells: tuple[int, ...] = (2, 3, 5, 10, 20, 50, 100)
    r_range: tuple[float, float] = (1.0, 4.0)
    coupling_range: tuple[float, float] = (0.0, 1.0)
    placement: str = "region_S"
    cube: tuple[float, float] = (0.0, 1.0)
    affinities: tuple[float, ...] | None = None
    convention: str = "ring"
    coupling_redraws: int = 3

    def __post_init__(self):
        if self.placement not in ("region_S", "cube", "center"):
            raise DomainError(f"unknown placement {self.placement!r}")
        if not self.n_cells or min(self.n_cells) < 2:
            raise DomainError("ring sizes must be >= 2")

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


def _open_uniform(rng: np.random.Generator, lo, hi, size=None):
    # uniform on the open interval (lo, hi): redraw exact endpoints
    while True:
        v = rng.uniform(lo, hi, size=size)
        if np.all(v > lo) and np.all(v < hi):
            return v


@dataclass(frozen=True)
class RingSample:
    n_cells: int
    r: float
    in_S: bool
    norm_check: bool
    spectral_radius: float
    coupling_flips: int


@dataclass
class RingSampleReport:
    samples: list[RingSample]
    seed: int
    sampler: RingSampler

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def in_S(self) -> int:
        return sum(s.in_S for s in self.samples)

    @property
    def norm_ok(self) -> int:
        return sum(s.norm_check for s in self.samples)

    @property
    def rho_lt_1(self) -> int:
        return sum(s.spectral_radius < 1.0 for s in self.samples)

    @property
    def violations(self) -> list[int]:
        """Indices breaking ``in S => norm check => rho < 1``."""
        bad = []
        for k, s in enumerate(self.samples):
            if (s.in_S and not s.norm_check) or (s.norm_check and not s.spectral_radius < 1.0):
                bad.append(k)
        return bad

    @property
    def coupling_flips(self) -> int:
        return sum(s.coupling_flips for s in self.samples if s.in_S)

    def summary(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "in_S": self.in_S,
            "norm_check": self.norm_ok,
            "rho_lt_1": self.rho_lt_1,
            "violations": self.violations,
            "coupling_flips_in_S": self.coupling_flips,
            "seed": self.seed,
            "sampler": self.sampler.to_dict(),
        }


def draw_ring_instance(rng: np.random.Generator, sampler: RingSampler) -> tuple[ModelParams, np.ndarray]:
    n = int(rng.choice(np.asarray(sampler.n_cells)))
    r = float(_open_uniform(rng, *sampler.r_range))
    if sampler.affinities is not None:
        aff = np.asarray(sampler.affinities, dtype=np.float64)
        if aff.size != n:
            raise DomainError("fixed affinities need a single matching ring size")
    else:
        while True:
            aff = rng.dirichlet(np.ones(n))
            if np.all(aff > 0.0) and np.all(aff < 1.0):
                break
        aff[-1] = 1.0 - math.fsum(aff[:-1])
    c = rng.uniform(*sampler.coupling_range, size=n)
    params = ModelParams.ring(r, c, tuple(aff), convention=sampler.convention)
    if sampler.placement == "center":
        x = np.full(n, 0.5)
    elif sampler.placement == "cube":
        x = _open_uniform(rng, *sampler.cube, size=n)
    else:
        win = region_S_windows(params)
        x = np.array([_open_uniform(rng, lo, hi) for lo, hi in win])
    return params, x


def ring_stability_point(params: ModelParams, x, rng: np.random.Generator, redraws: int,
                         coupling_range=(0.0, 1.0)) -> RingSample:
    in_s = region_S_membership(x, params)
    ok = norm_stability_check(x, params)
    rho = spectral_radius(jacobian_ring(x, params))
    flips = 0
    for _ in range(redraws):
        c = rng.uniform(*coupling_range, size=params.n_cells)
        other = ModelParams(params.r, tuple(c), params.affinities, params.convention)
        flips += norm_stability_check(x, other) != ok
    return RingSample(params.n_cells, params.r, in_s, ok, rho, int(flips))


@dataclass(frozen=True)
class _RingTask:
    sampler: RingSampler

    def __call__(self, seq: np.random.SeedSequence) -> RingSample:
        rng = np.random.default_rng(seq)
        params, x = draw_ring_instance(rng, self.sampler)
        return ring_stability_point(params, x, rng, self.sampler.coupling_redraws,
                                    self.sampler.coupling_range)


def ring_stability_sample(
    n_samples: int,
    seed: int = 0,
    sampler: RingSampler | None = None,
    workers: int = 1,
) -> RingSampleReport:
    """Draw ``n_samples`` ring instances; sample k uses child k of ``SeedSequence(seed)``."""
    sampler = sampler or RingSampler()
    children = np.random.SeedSequence(seed).spawn(int(n_samples))
    samples = _run_rows(_RingTask(sampler), children, workers)
    return RingSampleReport(list(samples), seed, sampler)


__all__ = [
    "AxisSpec",
    "Grid",
    "RingSampler",
    "RingSampleReport",
    "complexity_cell",
    "complexity_map",
    "eigen_surface_map",
    "ring_stability_sample",
    "stability_region_map",
]
