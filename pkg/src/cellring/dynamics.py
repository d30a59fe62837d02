"""Coupled logistic maps on two-cell and N-cell rings.

Every cell carries a normalized concentration in (0, 1).  One step of the
ring map is

    x_i' = w_i * r * x_i * (1 - x_i) + (1 - w_i) * x_{i+1} ** p_i      (i + 1 taken mod N)

where ``w_i`` is the weight of the intra-cellular logistic term.  Two
placements of the coupling constant are in use and both are kept:

* ``Convention.TWO_CELL``: ``w_i = 1 - c_i`` (logistic term weighted by 1 - c)
* ``Convention.RING``:     ``w_i = c_i``     (logistic term weighted by c)

The same map is described by ``c_ring = 1 - c_two_cell``;
:meth:`ModelParams.with_convention` performs that re-labelling.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .errors import BoundaryEscape, DomainError, NotConverged, RangeEscape, SingularJacobian

AFFINITY_SUM_TOL = 1e-12


class Convention(str, enum.Enum):
    TWO_CELL = "two-cell"
    RING = "ring"


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the coupled map.

    ``coupling`` and ``affinities`` are per-cell tuples; use :meth:`two_cell`
    or :meth:`ring` to build them from scalars.
    """

    r: float
    coupling: tuple[float, ...]
    affinities: tuple[float, ...]
    convention: Convention = Convention.RING

    def __post_init__(self):
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "coupling", tuple(float(c) for c in self.coupling))
        object.__setattr__(self, "affinities", tuple(float(p) for p in self.affinities))
        object.__setattr__(self, "convention", Convention(self.convention))

        if not (0.0 < self.r <= 4.0):
            raise DomainError(f"r={self.r!r} violates 0 < r <= 4")
        n = len(self.affinities)
        if n < 2:
            raise DomainError(f"ring needs N >= 2 cells, got {n}")
        if len(self.coupling) != n:
            raise DomainError(
                f"coupling has {len(self.coupling)} entries but affinities has {n}"
            )
        for i, c in enumerate(self.coupling):
            # closed interval: c = 0 and c = 1 are the decoupled / fully coupled limits
            if not (0.0 <= c <= 1.0):
                raise DomainError(f"coupling[{i}]={c!r} violates 0 <= c <= 1")
        for i, p in enumerate(self.affinities):
            if not (0.0 < p < 1.0):
                raise DomainError(f"affinity[{i}]={p!r} violates 0 < p < 1")
        total = math.fsum(self.affinities)
        if abs(total - 1.0) > AFFINITY_SUM_TOL:
            raise DomainError(f"affinities sum to {total!r}; they must sum to 1")

    @classmethod
    def two_cell(cls, r: float, c: float, p: float) -> "ModelParams":
        """Two-cell model: logistic term weighted by ``1 - c``, affinities ``(p, 1 - p)``."""
        return cls(r, (c, c), (p, 1.0 - p), Convention.TWO_CELL)

    @classmethod
    def ring(
        cls,
        r: float,
        coupling: float | Sequence[float],
        affinities: Sequence[float] | None = None,
        n_cells: int | None = None,
        convention: Convention | str = Convention.RING,
    ) -> "ModelParams":
        """Ring model; scalar ``coupling`` is broadcast, missing affinities default to ``1/N``."""
        if affinities is None:
            if n_cells is None:
                raise DomainError("give either affinities or n_cells")
            affinities = [1.0 / n_cells] * n_cells
        affinities = tuple(affinities)
        if np.ndim(coupling) == 0:
            coupling = (float(coupling),) * len(affinities)
        return cls(r, tuple(coupling), affinities, Convention(convention))

    @property
    def n_cells(self) -> int:
        return len(self.affinities)

    @property
    def uniform_coupling(self) -> bool:
        return len(set(self.coupling)) == 1

    def logistic_weights(self) -> np.ndarray:
        c = np.asarray(self.coupling)
        return c.copy() if self.convention is Convention.RING else 1.0 - c

    def inflow_weights(self) -> np.ndarray:
        c = np.asarray(self.coupling)
        return 1.0 - c if self.convention is Convention.RING else c.copy()

    def with_convention(self, convention: Convention | str) -> "ModelParams":
        """Same map, coupling re-labelled for the other convention (``c -> 1 - c``)."""
        convention = Convention(convention)
        if convention is self.convention:
            return self
        return ModelParams(
            self.r, tuple(1.0 - c for c in self.coupling), self.affinities, convention
        )

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "coupling": list(self.coupling),
            "affinities": list(self.affinities),
            "convention": self.convention.value,
        }


@dataclass(frozen=True)
class Trajectory:
    """States ``F^(n_transient+1)(x0) ... F^(n_total)(x0)``, one row per step."""

    states: np.ndarray
    n_transient: int
    params: ModelParams
    x0: tuple[float, ...] = field(default=())

    def __len__(self) -> int:
        return self.states.shape[0]

    def series(self, cell: int = 0) -> np.ndarray:
        return self.states[:, cell]


def _check_unit_interval(value: float, name: str, closed: bool = True) -> None:
    ok = 0.0 <= value <= 1.0 if closed else 0.0 < value < 1.0
    if not ok or math.isnan(value):
        bounds = "[0, 1]" if closed else "(0, 1)"
        raise DomainError(f"{name}={value!r} outside {bounds}")


def _as_state(state, params: ModelParams, name: str = "state") -> np.ndarray:
    x = np.array(state, dtype=np.float64).reshape(-1)
    if x.shape[0] != params.n_cells:
        raise DomainError(f"{name} has {x.shape[0]} components, model has {params.n_cells} cells")
    bad = ~((x > 0.0) & (x < 1.0))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise DomainError(f"{name}[{i}]={x[i]!r} outside (0, 1)")
    return x


def logistic(r: float, x: float) -> float:
    """Logistic map ``r x (1 - x)``."""
    if not (0.0 < r <= 4.0):
        raise DomainError(f"r={r!r} violates 0 < r <= 4")
    _check_unit_interval(x, "x")
    return r * x * (1.0 - x)


def two_cell_step(state, params: ModelParams) -> tuple[float, float]:
    """One step of the two-cell map with the logistic term weighted by ``1 - c``."""
    if params.n_cells != 2 or params.convention is not Convention.TWO_CELL:
        raise DomainError("two_cell_step needs two-cell convention parameters with N=2")
    if not params.uniform_coupling:
        raise DomainError("two-cell model takes a single coupling value")
    x, y = (float(v) for v in state)
    _check_unit_interval(x, "x", closed=False)
    _check_unit_interval(y, "y", closed=False)
    r, c, p = params.r, params.coupling[0], params.affinities[0]
    q = params.affinities[1]
    x_new = (1.0 - c) * r * x * (1.0 - x) + c * y**p
    y_new = (1.0 - c) * r * y * (1.0 - y) + c * x**q
    for i, v in enumerate((x_new, y_new)):
        if not (0.0 < v < 1.0):
            raise RangeEscape(i, v)
    return x_new, y_new


@njit(cache=True)
def _step_into(x, r, w_log, w_in, expo, out):
    n = x.shape[0]
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        out[i] = w_log[i] * r * x[i] * (1.0 - x[i]) + w_in[i] * x[j] ** expo[i]


@njit(cache=True)
def _iterate(x0, r, w_log, w_in, expo, n_total, n_transient, out):
    # returns (step, component, value) of the first escape, or (-1, -1, 0.0)
    n = x0.shape[0]
    x = x0.copy()
    nxt = np.empty(n)
    for k in range(n_total):
        _step_into(x, r, w_log, w_in, expo, nxt)
        for i in range(n):
            v = nxt[i]
            if not (v > 0.0 and v < 1.0):
                return k + 1, i, v
        x, nxt = nxt, x
        if k >= n_transient:
            out[k - n_transient, :] = x
    return -1, -1, 0.0


def _arrays(params: ModelParams):
    return (
        params.logistic_weights(),
        params.inflow_weights(),
        np.asarray(params.affinities, dtype=np.float64),
    )


def _raw_step(x: np.ndarray, params: ModelParams) -> np.ndarray:
    w_log, w_in, expo = _arrays(params)
    out = np.empty_like(x)
    _step_into(x, params.r, w_log, w_in, expo, out)
    return out


def ring_step(state, params: ModelParams) -> np.ndarray:
    """One application of the ring map ``F`` under ``params.convention``."""
    x = _as_state(state, params)
    out = _raw_step(x, params)
    bad = ~((out > 0.0) & (out < 1.0))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise RangeEscape(i, out[i])
    return out


def map_jacobian(state, params: ModelParams) -> np.ndarray:
    """Analytic derivative of :func:`ring_step` at ``state`` (no domain checks)."""
    x = np.asarray(state, dtype=np.float64)
    w_log, w_in, expo = _arrays(params)
    n = x.shape[0]
    nxt = np.roll(x, -1)
    jac = np.zeros((n, n))
    idx = np.arange(n)
    jac[idx, idx] = w_log * params.r * (1.0 - 2.0 * x)
    jac[idx, (idx + 1) % n] += w_in * expo * nxt ** (expo - 1.0)
    return jac


def simulate(params: ModelParams, x0, n_total: int, n_transient: int = 0) -> Trajectory:
    """Iterate the map ``n_total`` times and keep the last ``n_total - n_transient`` states.

    Raises :class:`RangeEscape` carrying the 1-based step index when an
    iterate leaves (0, 1).
    """
    n_total = int(n_total)
    n_transient = int(n_transient)
    if n_transient < 0 or n_total <= n_transient:
        raise DomainError(
            f"need n_total > n_transient >= 0, got n_total={n_total}, n_transient={n_transient}"
        )
    x = _as_state(x0, params, "x0")
    w_log, w_in, expo = _arrays(params)
    out = np.empty((n_total - n_transient, params.n_cells))
    step, comp, value = _iterate(x, params.r, w_log, w_in, expo, n_total, n_transient, out)
    if step >= 0:
        raise RangeEscape(comp, value, step=int(step))
    out.setflags(write=False)
    return Trajectory(out, n_transient, params, tuple(float(v) for v in x))


BOUNDARY_EPS = 1e-8


def find_fixed_point(
    params: ModelParams,
    guess,
    tol: float = 1e-12,
    max_iter: int = 200,
    damping: float = 0.5,
) -> np.ndarray:
    """Solve ``F(x) = x`` by Newton iteration with a damped fixed-point fallback.

    A Newton step is rejected when it leaves the open unit cube or does not
    reduce the residual; the fallback step is ``x + damping * (F(x) - x)``.

    Raises
    ------
    NotConverged
        residual still >= ``tol`` after ``max_iter`` iterations.
    BoundaryEscape
        the iteration converged to within ``BOUNDARY_EPS`` of the cube boundary
        (there is no interior equilibrium near ``guess``).
    SingularJacobian
        ``DF(x) - I`` is exactly singular.
    """
    if tol <= 0:
        raise DomainError(f"tol={tol!r} must be positive")
    x = _as_state(guess, params, "guess")
    eye = np.eye(params.n_cells)

    def residual(v):
        return _raw_step(v, params) - v

    def inside(v):
        return bool(np.all(np.isfinite(v)) and np.all(v > 0.0) and np.all(v < 1.0))

    g = residual(x)
    for _ in range(max_iter):
        gnorm = float(np.max(np.abs(g)))
        if gnorm < tol:
            if np.min(np.minimum(x, 1.0 - x)) < BOUNDARY_EPS:
                raise BoundaryEscape(
                    f"fixed-point iteration reached the boundary of the unit cube at {x.tolist()}"
                )
            return x
        try:
            delta = np.linalg.solve(map_jacobian(x, params) - eye, -g)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(f"DF - I is singular at {x.tolist()}") from exc
        cand = x + delta
        if inside(cand):
            g_cand = residual(cand)
            if float(np.max(np.abs(g_cand))) < gnorm:
                x, g = cand, g_cand
                continue
        cand = x + damping * g
        if not inside(cand):
            raise BoundaryEscape(f"damped iterate left the unit cube: {cand.tolist()}")
        x, g = cand, residual(cand)
    raise NotConverged(
        f"no fixed point within tol={tol} after {max_iter} iterations (last residual "
        f"{float(np.max(np.abs(g))):.3e})"
    )
