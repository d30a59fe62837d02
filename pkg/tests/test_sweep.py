import math

import numpy as np
import pytest

from cellring.complexity import max_complexity
from cellring.dynamics import ModelParams, simulate
from cellring.errors import DomainError
from cellring.stability import (
    Classification,
    classify_equilibrium,
    eigenvalues_two_cell,
    jacobian_two_cell,
)
from cellring.sweep import (
    AxisSpec,
    Grid,
    RingSampler,
    complexity_cell,
    complexity_map,
    eigen_surface_map,
    ring_stability_sample,
    stability_region_map,
)


class TestAxisSpec:
    @pytest.mark.parametrize("start,stop,step,n", [
        (3.6, 4.0, 0.02, 21),
        (3.6, 4.0, 0.005, 81),
        (0.005, 0.995, 0.005, 199),
        (0.02, 0.98, 0.02, 49),
        (0.0, 1.0, 0.3, 4),
        (0.5, 0.5, 0.1, 1),
    ])
    def test_counts(self, start, stop, step, n):
        ax = AxisSpec("a", start, stop, step)
        assert ax.n_points == n
        assert len(ax.values()) == n
        assert ax.values()[0] == start

    def test_endpoint_exact(self):
        assert AxisSpec("r", 3.6, 4.0, 0.02).values()[-1] == 4.0

    @pytest.mark.parametrize("args", [(0.0, 1.0, 0.0), (0.0, 1.0, -0.1), (1.0, 0.0, 0.1), (0.0, math.inf, 0.1)])
    def test_invalid(self, args):
        with pytest.raises(DomainError):
            AxisSpec("a", *args)

    def test_grid_shape_checked(self):
        ax = AxisSpec("a", 0.0, 1.0, 0.5)
        with pytest.raises(DomainError):
            Grid(ax, ax, np.zeros((2, 3)))


class TestComplexityMap:
    def test_single_cell_is_composition(self):
        ax_r = AxisSpec("r", 3.9, 3.9, 0.02)
        ax_p = AxisSpec("p", 0.3, 0.3, 0.02)
        g = complexity_map(ax_r, ax_p, 0.02, n_total=1500, n_transient=500)
        traj = simulate(ModelParams.two_cell(3.9, 0.02, 0.3), (0.3, 0.5), 1500, 500)
        assert g.values.shape == (1, 1)
        assert g.values[0, 0] == max_complexity(traj.series(0))

    def test_every_cell_is_composition(self):
        ax_r = AxisSpec("r", 3.7, 3.9, 0.1)
        ax_p = AxisSpec("p", 0.2, 0.6, 0.2)
        g = complexity_map(ax_r, ax_p, 0.05, n_total=800, n_transient=200)
        assert g.values.shape == (3, 3)
        for i, r in enumerate(ax_r.values()):
            for j, p in enumerate(ax_p.values()):
                assert g.values[i, j] == complexity_cell(r, p, 0.05, n_total=800, n_transient=200)

    def test_escape_is_nan(self):
        # with c=0, x starting at (1 - sqrt(0.5))/2 reaches exactly 1 on the second step
        x0 = ((1 - math.sqrt(0.5)) / 2, 0.3)
        assert math.isnan(complexity_cell(4.0, 0.5, 0.0, x0, 200, 10))
        g = complexity_map(AxisSpec("r", 4.0, 4.0, 0.1), AxisSpec("p", 0.5, 0.5, 0.1), 0.0, x0, 200, 10)
        assert g.escapes == 1 and g.metadata["escapes"] == 1
        assert math.isnan(g.values[0, 0])

    def test_invalid_params_rejected_early(self):
        with pytest.raises(DomainError):
            complexity_map(AxisSpec("r", 3.9, 4.2, 0.1), AxisSpec("p", 0.2, 0.4, 0.1), 0.02)

    def test_metadata(self):
        g = complexity_map(AxisSpec("r", 3.8, 3.8, 0.1), AxisSpec("p", 0.4, 0.4, 0.1), 0.02,
                           n_total=600, n_transient=100)
        assert g.metadata["c"] == 0.02 and g.metadata["n_total"] == 600
        assert g.x_axis.name == "p" and g.y_axis.name == "r"

    def test_worker_count_invariant(self):
        ax_r = AxisSpec("r", 3.8, 4.0, 0.1)
        ax_p = AxisSpec("p", 0.3, 0.7, 0.2)
        a = complexity_map(ax_r, ax_p, 0.02, n_total=800, n_transient=200, workers=1)
        b = complexity_map(ax_r, ax_p, 0.02, n_total=800, n_transient=200, workers=3)
        assert a.values.tobytes() == b.values.tobytes()


class TestStabilityMap:
    def test_every_cell_is_composition(self):
        m = ModelParams.two_cell(3.5, 0.3, 0.3)
        ax = AxisSpec("x", 0.1, 0.9, 0.2)
        g = stability_region_map(ax, ax, m)
        for i, y in enumerate(ax.values()):
            for j, x in enumerate(ax.values()):
                lams = eigenvalues_two_cell(jacobian_two_cell((x, y), m))
                assert g.values[i, j] == classify_equilibrium(lams).code

    def test_center_stable_for_many_settings(self):
        ax = AxisSpec("x", 0.5, 0.5, 0.1)
        for r in (0.5, 1.0, 2.0, 3.0, 4.0):
            for c in (0.0, 0.02, 0.2, 0.6):
                for p in (0.1, 0.5, 0.9):
                    g = stability_region_map(ax, ax, ModelParams.two_cell(r, c, p))
                    assert g.values[0, 0] == Classification.STABLE.code

    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_r_one_coarse_grid_stable(self, p):
        ax = AxisSpec("x", 0.05, 0.95, 0.05)
        g = stability_region_map(ax, ax, ModelParams.two_cell(1.0, 0.02, p))
        assert np.all(g.values == Classification.STABLE.code)

    def test_r_one_fine_grid_corner(self):
        # informational: near the origin the diagonal (1-c)(1-2x) is close to one and the
        # coupling entries c p y^(p-1) grow without bound, so the finest grid picks up a few
        # non-stable cells along the low edges there and nowhere else
        ax = AxisSpec("x", 0.005, 0.995, 0.005)
        g = stability_region_map(ax, ax, ModelParams.two_cell(1.0, 0.02, 0.5))
        bad = np.argwhere(g.values != Classification.STABLE.code)
        vals = ax.values()
        assert len(bad) > 0
        for i, j in bad:
            x, y = vals[j], vals[i]
            assert min(x, y) < 0.03 and max(x, y) < 0.1
            j2 = jacobian_two_cell((x, y), ModelParams.two_cell(1.0, 0.02, 0.5))
            assert max(j2.a11, j2.a22) > 0.9 and abs(eigenvalues_two_cell(j2)[0]) >= 1

    def test_r4_stable_square_around_center(self):
        ax = AxisSpec("x", 0.02, 0.98, 0.02)
        g = stability_region_map(ax, ax, ModelParams.two_cell(4.0, 0.02, 0.5))
        vals = ax.values()
        stable = g.values == Classification.STABLE.code
        ii, jj = np.nonzero(stable)
        assert len(ii) > 0
        assert abs(vals[ii].mean() - 0.5) < 1e-9 and abs(vals[jj].mean() - 0.5) < 1e-9
        assert vals[jj].min() > 0.3 and vals[jj].max() < 0.7

    def test_boundary_axis_flagged(self):
        ax = AxisSpec("x", 0.0, 0.5, 0.5)
        g = stability_region_map(ax, ax, ModelParams.two_cell(3.0, 0.2, 0.5))
        assert [0, 0] in g.metadata["singular_cells"]
        assert g.values[0, 0] == Classification.INDETERMINATE.code

    def test_needs_two_cells(self):
        ax = AxisSpec("x", 0.1, 0.9, 0.4)
        with pytest.raises(DomainError):
            stability_region_map(ax, ax, ModelParams.ring(3.0, 0.5, n_cells=3))


class TestEigenSurface:
    def test_single_cell_is_composition(self):
        m = ModelParams.two_cell(4.0, 0.02, 0.5)
        ax = AxisSpec("x", 0.3, 0.3, 0.1)
        hi, lo = eigen_surface_map(ax, AxisSpec("y", 0.6, 0.6, 0.1), m)
        l1, l2 = eigenvalues_two_cell(jacobian_two_cell((0.3, 0.6), m))
        assert hi.values[0, 0] == abs(l1) and lo.values[0, 0] == abs(l2)

    @pytest.mark.parametrize("c", [0.02, 0.6])
    def test_symmetric_at_half(self, c):
        ax = AxisSpec("x", 0.02, 0.98, 0.04)
        hi, lo = eigen_surface_map(ax, ax, ModelParams.two_cell(4.0, c, 0.5))
        np.testing.assert_allclose(hi.values, hi.values.T, rtol=1e-13)
        np.testing.assert_allclose(lo.values, lo.values.T, rtol=1e-13)

    def test_minimum_near_center_and_corners_unstable(self):
        ax = AxisSpec("x", 0.02, 0.98, 0.02)
        hi, lo = eigen_surface_map(ax, ax, ModelParams.two_cell(4.0, 0.02, 0.5))
        i, j = np.unravel_index(np.nanargmin(hi.values), hi.values.shape)
        v = ax.values()
        assert max(abs(v[i] - 0.5), abs(v[j] - 0.5)) <= 0.05
        for a, b in ((0, 0), (0, -1), (-1, 0), (-1, -1)):
            assert lo.values[a, b] > 1

    def test_singular_is_nan(self):
        ax = AxisSpec("x", 0.0, 0.5, 0.5)
        hi, lo = eigen_surface_map(ax, ax, ModelParams.two_cell(4.0, 0.02, 0.5))
        assert math.isnan(hi.values[0, 0]) and math.isnan(lo.values[0, 0])
        assert np.isfinite(hi.values[1, 1])


class TestRingSampling:
    def test_center_placement(self):
        s = RingSampler(r_range=(3.9, 3.9 + 1e-12), placement="center")
        rep = ring_stability_sample(100, seed=1, sampler=s)
        assert rep.in_S == 100 and rep.rho_lt_1 == 100
        assert rep.violations == []

    def test_outside_window_not_in_S(self):
        s = RingSampler(n_cells=(3,), r_range=(3.99, 4.0), placement="cube", cube=(0.01, 0.3),
                        affinities=(0.2, 0.3, 0.5))
        rep = ring_stability_sample(50, seed=2, sampler=s)
        assert rep.in_S == 0
        assert rep.violations == []

    def test_region_S_chain(self):
        rep = ring_stability_sample(200, seed=3)
        assert rep.in_S == 200
        assert rep.violations == [] and rep.coupling_flips == 0

    def test_two_cell_reduction(self):
        from cellring.stability import jacobian_ring
        from cellring.sweep import draw_ring_instance

        s = RingSampler(n_cells=(2,), placement="cube", cube=(0.05, 0.95))
        rng = np.random.default_rng(4)
        for _ in range(50):
            m, x = draw_ring_instance(rng, s)
            two = m.with_convention("two-cell")
            if two.uniform_coupling:
                j2 = jacobian_two_cell(tuple(x), two).as_array()
                np.testing.assert_allclose(j2, jacobian_ring(x, m), rtol=1e-14)
        # uniform coupling case explicitly
        m = ModelParams.ring(3.5, 0.7, (0.4, 0.6))
        x = (0.3, 0.8)
        two = m.with_convention("two-cell")
        assert two.coupling[0] == pytest.approx(0.3)
        lam_ring = np.sort(np.abs(np.linalg.eigvals(jacobian_ring(x, m))))
        lam_two = np.sort(np.abs(eigenvalues_two_cell(jacobian_two_cell(x, two))))
        np.testing.assert_allclose(lam_ring, lam_two, rtol=1e-12)

    def test_seed_determinism_and_workers(self):
        a = ring_stability_sample(40, seed=9, workers=1)
        b = ring_stability_sample(40, seed=9, workers=3)
        assert a.samples == b.samples
        c = ring_stability_sample(40, seed=10)
        assert a.samples != c.samples

    def test_summary(self):
        rep = ring_stability_sample(10, seed=0)
        s = rep.summary()
        assert s["n_samples"] == 10 and s["seed"] == 0
        assert s["sampler"]["placement"] == "region_S"
