"""Linearization stability of equilibria of the two-cell and ring maps.

For the two-cell map (logistic term weighted by ``1 - c``) the Jacobian at an
interior equilibrium (x, y) is

    [[(1-c) r (1-2x),   c p y^(p-1)      ],
     [c (1-p) x^(-p),   (1-c) r (1-2y)   ]]

and its eigenvalues have the closed form

    lambda = (1-c) r (1 - alpha) +- sqrt((1-c)^2 r^2 (x-y)^2 + c^2 / beta)

with alpha = x + y and beta = x^p y^(1-p) / (p (1-p)).  The radicand is
positive away from x = y, so both eigenvalues are real there.

For the ring the Jacobian is ``D + E Z``: a diagonal plus one cyclic
super-diagonal band.  Its eigenvalues are the roots of
``prod(lambda - d_i) = prod(e_i)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import linalg
from .dynamics import ModelParams, _arrays, _as_state, _raw_step, _step_into, map_jacobian
from .errors import DomainError, SingularEntry

CERTIFICATE_TOL = 1e-10


class Classification(str, enum.Enum):
    STABLE = "AsymptoticallyStable"
    UNSTABLE = "Unstable"
    INDETERMINATE = "Indeterminate"

    @property
    def code(self) -> int:
        return _CODES[self]


_CODES = {Classification.STABLE: 0, Classification.UNSTABLE: 1, Classification.INDETERMINATE: 2}


@dataclass(frozen=True)
class Jacobian2:
    a11: float
    a12: float
    a21: float
    a22: float
    equilibrium: tuple[float, float]
    params: ModelParams

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    @property
    def trace(self) -> float:
        return self.a11 + self.a22

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21


@dataclass(frozen=True)
class EquilibriumInvariants:
    """alpha = x + y, beta = x^p y^(1-p) / (p(1-p)), gamma = (1-2x)(1-2y)."""

    alpha: float
    beta: float
    gamma: float


def _interior(eq, params: ModelParams) -> np.ndarray:
    x = np.array(eq, dtype=np.float64).reshape(-1)
    if x.shape[0] != params.n_cells:
        raise DomainError(f"equilibrium has {x.shape[0]} components, model has {params.n_cells} cells")
    bad = ~((x > 0.0) & (x < 1.0))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise SingularEntry(f"equilibrium component {i} = {x[i]!r} is not inside (0, 1)")
    return x


def jacobian_two_cell(eq, params: ModelParams) -> Jacobian2:
    """2x2 Jacobian at an interior point, honouring ``params.convention``."""
    if params.n_cells != 2:
        raise DomainError("jacobian_two_cell needs a two-cell model")
    x, y = _interior(eq, params)
    w_log, w_in, (p, q) = _arrays(params)
    r = params.r
    a11 = w_log[0] * r * (1.0 - 2.0 * x)
    a22 = w_log[1] * r * (1.0 - 2.0 * y)
    a12 = w_in[0] * p * y ** (p - 1.0)
    a21 = w_in[1] * q * x ** (q - 1.0)
    if not (math.isfinite(a12) and math.isfinite(a21)):
        raise SingularEntry(f"coupling derivative overflows at ({x!r}, {y!r})")
    return Jacobian2(float(a11), float(a12), float(a21), float(a22), (float(x), float(y)), params)


def equilibrium_invariants(eq, p: float) -> EquilibriumInvariants:
    x, y = (float(v) for v in eq)
    if not (0.0 < x < 1.0 and 0.0 < y < 1.0):
        raise SingularEntry(f"({x!r}, {y!r}) is not an interior point")
    if not (0.0 < p < 1.0):
        raise DomainError(f"p={p!r} violates 0 < p < 1")
    return EquilibriumInvariants(
        alpha=x + y,
        beta=x**p * y ** (1.0 - p) / (p * (1.0 - p)),
        gamma=(1.0 - 2.0 * x) * (1.0 - 2.0 * y),
    )


def _order(lams) -> tuple[complex, complex]:
    a, b = complex(lams[0]), complex(lams[1])
    return (a, b) if abs(a) >= abs(b) else (b, a)


def eigenvalues_two_cell(jac: Jacobian2) -> tuple[complex, complex]:
    """Exact eigenvalues of a 2x2 Jacobian, ordered ``|l1| >= |l2|``."""
    half_tr = 0.5 * (jac.a11 + jac.a22)
    half_gap = 0.5 * (jac.a11 - jac.a22)
    disc = half_gap * half_gap + jac.a12 * jac.a21
    if disc < 0.0:
        s = math.sqrt(-disc)
        return _order((complex(half_tr, s), complex(half_tr, -s)))
    s = math.sqrt(disc)
    big = half_tr + math.copysign(s, half_tr)
    small = jac.det / big if big != 0.0 else 0.0
    return _order((big, small))


def eigenvalues_two_cell_closed_form(eq, params: ModelParams) -> tuple[complex, complex]:
    """Closed form in terms of alpha and beta; needs a single coupling value."""
    if params.n_cells != 2 or not params.uniform_coupling:
        raise DomainError("closed form needs a two-cell model with one coupling value")
    two = params.with_convention("two-cell")
    c, p, r = two.coupling[0], two.affinities[0], two.r
    x, y = _interior(eq, params)
    inv = equilibrium_invariants((x, y), p)
    centre = (1.0 - c) * r * (1.0 - inv.alpha)
    rad = ((1.0 - c) * r * (x - y)) ** 2 + c * c / inv.beta
    s = math.sqrt(rad)
    return _order((complex(centre + s), complex(centre - s)))


def classify_equilibrium(eigenvalues) -> Classification:
    """Stable iff every |lambda| < 1, unstable iff every |lambda| > 1."""
    mags = np.abs(np.asarray(eigenvalues, dtype=np.complex128).reshape(-1))
    if mags.size == 0 or not np.all(np.isfinite(mags)):
        raise DomainError("need at least one finite eigenvalue")
    if mags.max() < 1.0:
        return Classification.STABLE
    if mags.min() > 1.0:
        return Classification.UNSTABLE
    return Classification.INDETERMINATE


def jacobian_ring(eq, params: ModelParams) -> np.ndarray:
    """``D + E Z`` with d_i = w_i r (1-2x_i), e_i = (1-w_i) p_i x_{i+1}^(p_i-1)."""
    x = _interior(eq, params)
    jac = map_jacobian(x, params)
    if not np.all(np.isfinite(jac)):
        raise SingularEntry("coupling derivative overflows at this equilibrium")
    return jac


def ring_bands(eq, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal ``d`` and cyclic band ``e`` of the ring Jacobian."""
    jac = jacobian_ring(eq, params)
    n = params.n_cells
    idx = np.arange(n)
    return jac[idx, idx].copy(), jac[idx, (idx + 1) % n].copy()


spectral_radius = linalg.spectral_radius
infinity_norm = linalg.infinity_norm


def norm_row_sums(eq, params: ModelParams) -> np.ndarray:
    return np.sum(np.abs(jacobian_ring(eq, params)), axis=1)


def norm_stability_check(eq, params: ModelParams) -> bool:
    """True iff every absolute row sum of the Jacobian is below 1."""
    return bool(np.all(norm_row_sums(eq, params) < 1.0))


def r_window(r: float) -> tuple[float, float]:
    """Values of x with r |1 - 2x| < 1."""
    if not (1.0 < r <= 4.0):
        raise DomainError(f"r={r!r} violates 1 < r <= 4")
    return (r - 1.0) / (2.0 * r), (r + 1.0) / (2.0 * r)


def affinity_floor(p: float) -> float:
    """Smallest x with p x^(p-1) < 1, i.e. p^(1/(1-p)).  Increasing in p, tends to 1/e."""
    if not (0.0 < p < 1.0):
        raise DomainError(f"p={p!r} violates 0 < p < 1")
    return p ** (1.0 / (1.0 - p))


def region_S_windows(params: ModelParams) -> np.ndarray:
    """Per-component open intervals (lo, hi) defining region S, shape (N, 2).

    The lower bound of component i uses the affinity of its upstream
    neighbour i-1 (cyclically, so component 0 uses p_{N-1}).
    """
    lo_r, hi_r = r_window(params.r)
    p_prev = np.roll(np.asarray(params.affinities), 1)
    floors = p_prev ** (1.0 / (1.0 - p_prev))
    return np.column_stack([np.maximum(lo_r, floors), np.full(params.n_cells, hi_r)])


def region_S_membership(eq, params: ModelParams) -> bool:
    """Componentwise membership test; independent of the coupling values."""
    x = _as_state(eq, params, "equilibrium")
    win = region_S_windows(params)
    return bool(np.all((win[:, 0] < x) & (x < win[:, 1])))


@dataclass(frozen=True)
class RegionSBounds:
    """Hypercube bounds of region S over r in [r_min, r_max].

    ``inner`` lies inside the S window for every such r and every admissible
    affinity vector; ``outer`` contains every such window.  When
    ``affinity_independent`` is true the affinity floor never binds, so the
    window is exactly the r-window.
    """

    inner: tuple[float, float]
    outer: tuple[float, float]
    r_min: float
    r_max: float
    p_cap: float | None
    affinity_sup: float
    critical_r: float
    affinity_independent: bool


def region_S_bounds(r_min: float, p_cap: float | None = None, r_max: float = 4.0) -> RegionSBounds:
    """Inner/outer hypercubes of region S for r in [r_min, r_max], affinities <= p_cap."""
    if not (1.0 < r_min <= 4.0):
        raise DomainError(f"r={r_min!r} violates 1 < r <= 4")
    if not (r_min <= r_max <= 4.0):
        raise DomainError(f"r_max={r_max!r} must lie in [r_min, 4]")
    if p_cap is None:
        sup_floor = math.exp(-1.0)
    else:
        sup_floor = affinity_floor(p_cap)
    lo_max, hi_max = r_window(r_max)
    outer = r_window(r_min)
    critical_r = 1.0 / (1.0 - 2.0 * sup_floor)
    return RegionSBounds(
        inner=(max(lo_max, sup_floor), hi_max),
        outer=outer,
        r_min=float(r_min),
        r_max=float(r_max),
        p_cap=p_cap,
        affinity_sup=sup_floor,
        critical_r=critical_r,
        affinity_independent=r_min >= critical_r,
    )


@dataclass(frozen=True)
class StabilityReport:
    equilibrium: tuple[float, ...]
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    eigen_max: float
    eigen_min: float
    spectral_radius: float
    infinity_norm: float
    classification: Classification
    margin: float
    norm_check: bool
    in_region_S: bool | None

    def to_dict(self) -> dict:
        return {
            "equilibrium": list(self.equilibrium),
            "eigenvalues_re": self.eigenvalues.real.tolist(),
            "eigenvalues_im": self.eigenvalues.imag.tolist(),
            "eigen_max": self.eigen_max,
            "eigen_min": self.eigen_min,
            "spectral_radius": self.spectral_radius,
            "infinity_norm": self.infinity_norm,
            "classification": self.classification.value,
            "margin": self.margin,
            "norm_check": self.norm_check,
            "in_region_S": self.in_region_S,
        }


def analyze_equilibrium(eq, params: ModelParams) -> StabilityReport:
    """Full linearization report; the 2x2 case uses the exact eigenvalue formula."""
    if params.n_cells == 2:
        j2 = jacobian_two_cell(eq, params)
        jac = j2.as_array()
        lams = np.array(eigenvalues_two_cell(j2))
    else:
        jac = jacobian_ring(eq, params)
        lams = linalg.eigvals(jac)
    mags = np.abs(lams)
    rho = float(mags.max())
    x = tuple(float(v) for v in np.asarray(eq, dtype=np.float64).reshape(-1))
    return StabilityReport(
        equilibrium=x,
        jacobian=jac,
        eigenvalues=lams,
        eigen_max=rho,
        eigen_min=float(mags.min()),
        spectral_radius=rho,
        infinity_norm=linalg.infinity_norm(jac),
        classification=classify_equilibrium(lams),
        margin=rho - 1.0,
        norm_check=bool(np.all(np.sum(np.abs(jac), axis=1) < 1.0)),
        in_region_S=region_S_membership(x, params) if params.r > 1.0 else None,
    )


class ProbeOutcome(str, enum.Enum):
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    INCONCLUSIVE = "Inconclusive"


@njit(cache=True)
def _probe_orbit(x, xt, r, w_log, w_in, expo, horizon, outer):
    # returns (left_ball, final sup-distance)
    n = x.shape[0]
    nxt = np.empty(n)
    for _ in range(horizon):
        _step_into(x, r, w_log, w_in, expo, nxt)
        dist = 0.0
        for i in range(n):
            v = nxt[i]
            if not (v > 0.0 and v < 1.0):
                return True, np.inf
            d = abs(v - xt[i])
            if d > dist:
                dist = d
        if dist > outer:
            return True, dist
        x, nxt = nxt, x
    dist = 0.0
    for i in range(n):
        d = abs(x[i] - xt[i])
        if d > dist:
            dist = d
    return False, dist


def empirical_stability_probe(
    params: ModelParams,
    eq,
    radius: float = 1e-3,
    n_probes: int = 20,
    horizon: int = 2000,
    seed: int = 0,
) -> ProbeOutcome:
    """Iterate the map from random starts in the sup-norm ball of ``radius`` around ``eq``.

    Diverged if any orbit leaves the ball of ``10 * radius`` (or the unit
    cube); Converged if every orbit ends within ``radius / 10``.
    """
    xt = _as_state(eq, params, "equilibrium")
    resid = float(np.max(np.abs(_raw_step(xt, params) - xt)))
    if not resid < CERTIFICATE_TOL:
        raise DomainError(f"not a certified fixed point: |F(x) - x| = {resid:.3e}")
    if not (radius > 0.0):
        raise DomainError("radius must be positive")
    if np.any(xt - radius <= 0.0) or np.any(xt + radius >= 1.0):
        raise DomainError("probe ball leaves the unit cube; use a smaller radius")
    w_log, w_in, expo = _arrays(params)
    rng = np.random.default_rng(seed)
    all_close = True
    for _ in range(n_probes):
        x0 = xt + rng.uniform(-radius, radius, size=xt.shape[0])
        left, dist = _probe_orbit(x0, xt, params.r, w_log, w_in, expo, int(horizon), 10.0 * radius)
        if left:
            return ProbeOutcome.DIVERGED
        if dist > radius / 10.0:
            all_close = False
    return ProbeOutcome.CONVERGED if all_close else ProbeOutcome.INCONCLUSIVE
