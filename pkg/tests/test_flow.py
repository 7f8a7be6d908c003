"""Tests for flow integration, group operations, curves, and refinement."""

import math

import numpy as np
import pytest

from hamflow.basis import TorusPoint, torus_distance
from hamflow.errors import NotAutonomous, RefinementOverflow
from hamflow.field import make_law, sample_hamiltonian
from hamflow.flow import (BumpFunction, CallableHamiltonian, FlowSettings, LagrangianCurve,
                          advect_curve, circle_curve, composition_hamiltonian,
                          concatenate_autonomous, flow_jacobian_determinant, flow_points,
                          horizontal_circle, integrate_point, inverse_generating_hamiltonian,
                          inverse_point, sloped_circle, time_reversed_hamiltonian,
                          zero_hamiltonian)
from hamflow.rng import derive
from hamflow.temporal import CONSTANT, PERIODIC


def shear_y():
    """H = sin(2 pi y) / 2 pi with flow (x, y) -> (x - t cos(2 pi y), y)."""
    return CallableHamiltonian(lambda t, p: np.sin(2 * np.pi * p[:, 1]) / (2 * np.pi),
                               autonomous=True)


def shear_x():
    """H = sin(2 pi x) / 2 pi with flow (x, y) -> (x, y + t cos(2 pi x))."""
    return CallableHamiltonian(lambda t, p: np.sin(2 * np.pi * p[:, 0]) / (2 * np.pi),
                               autonomous=True)


def small_draw(seed, kernel=PERIODIC, r=0.15, smax=3, tm=3):
    law = make_law(r, spatial_max=smax, temporal_max=tm, kernel=kernel, seed=seed)
    return sample_hamiltonian(law, derive(seed))


class TestPointIntegration:
    def test_zero_field_is_identity(self):
        p = TorusPoint(0.3, 0.4)
        res = integrate_point(zero_hamiltonian(), p)
        assert res.point.x == pytest.approx(0.3) and res.point.y == pytest.approx(0.4)

    def test_shear_closed_form(self):
        res = integrate_point(shear_y(), TorusPoint(0.3, 1 / 6))
        assert res.point.x == pytest.approx(0.8, abs=1e-10)
        assert res.point.y == pytest.approx(1 / 6, abs=1e-12)

    def test_forward_backward_round_trip(self):
        h = small_draw(41)
        pts = np.random.default_rng(0).uniform(0, 1, (10, 2))
        settings = FlowSettings(steps=200)
        fwd = flow_points(h, pts, 0.0, 1.0, settings)
        back = flow_points(h, fwd, 1.0, 0.0, settings)
        assert np.abs(back - pts).max() < 1e-8

    def test_inverse_point_shear(self):
        res = inverse_point(shear_y(), TorusPoint(0.8, 1 / 6))
        assert res.point.x == pytest.approx(0.3, abs=1e-10)

    def test_inverse_round_trip(self):
        h = small_draw(43)
        p = TorusPoint(0.25, 0.65)
        back = inverse_point(h, p)
        again = integrate_point(h, back.point)
        assert again.point.distance(p) < 1e-8

    def test_convergence_is_fourth_order(self):
        h = small_draw(47)
        pts = np.array([[0.21, 0.34], [0.64, 0.81], [0.42, 0.1]])
        ref = flow_points(h, pts, 0.0, 1.0, FlowSettings(steps=4000))
        err = {}
        for steps in (100, 200):
            out = flow_points(h, pts, 0.0, 1.0, FlowSettings(steps=steps))
            err[steps] = np.abs(out - ref).max()
        assert err[100] / err[200] >= 8.0

    def test_lift_returned_unreduced(self):
        strong_shear = CallableHamiltonian(
            lambda t, p: 3.0 * np.sin(2 * np.pi * p[:, 1]) / (2 * np.pi), autonomous=True)
        res = integrate_point(strong_shear, TorusPoint(0.3, 0.0))
        assert res.lift[0] == pytest.approx(0.3 - 3.0, abs=1e-9)
        assert res.point.x == pytest.approx(0.3, abs=1e-9)


class TestEnergyAndArea:
    def test_energy_conservation_autonomous(self):
        h = small_draw(53, kernel=CONSTANT, r=0.05, smax=4)
        pts = np.random.default_rng(1).uniform(0, 1, (100, 2))
        settings = FlowSettings(steps=1000)
        base = h.value(0.0, pts)
        for t in (0.25, 0.5, 1.0):
            out = flow_points(h, pts, 0.0, t, settings)
            assert np.abs(h.value(0.0, out) - base).max() < 1e-6

    def test_jacobian_zero_field(self):
        assert flow_jacobian_determinant(zero_hamiltonian(), TorusPoint(0.4, 0.3)) == 1.0

    def test_jacobian_shear_exact(self):
        det = flow_jacobian_determinant(shear_y(), TorusPoint(0.3, 0.22),
                                        settings=FlowSettings(steps=400), fd_step=1e-5)
        assert det == pytest.approx(1.0, abs=1e-9)

    def test_jacobian_random_draw(self):
        h = small_draw(59, r=0.1, smax=5)
        det = flow_jacobian_determinant(h, TorusPoint(0.37, 0.72),
                                        settings=FlowSettings(steps=1000), fd_step=1e-5)
        assert det == pytest.approx(1.0, abs=1e-5)


class TestCompositionHamiltonian:
    settings = FlowSettings(steps=100)

    def test_left_identity(self):
        g = small_draw(61)
        combo = composition_hamiltonian(zero_hamiltonian(), g, self.settings)
        rng = np.random.default_rng(2)
        pts = rng.uniform(0, 1, (8, 2))
        for t in (0.0, 0.3, 1.0):
            assert np.abs(combo.value(t, pts) - g.value(t, pts)).max() < 1e-9

    def test_right_identity(self):
        f = small_draw(67)
        combo = composition_hamiltonian(f, zero_hamiltonian(), self.settings)
        pts = np.random.default_rng(3).uniform(0, 1, (8, 2))
        for t in (0.1, 0.7):
            assert np.abs(combo.value(t, pts) - f.value(t, pts)).max() < 1e-9

    def test_perpendicular_shears_closed_form(self):
        combo = composition_hamiltonian(shear_y(), shear_x(), self.settings)
        res = integrate_point(combo, TorusPoint(0.25, 1 / 6), settings=self.settings)
        # g fixes (0.25, 1/6); f then translates x by -cos(pi/3) = -0.5
        assert res.point.x == pytest.approx(0.75, abs=1e-4)
        assert res.point.y == pytest.approx(1 / 6, abs=1e-4)

    def test_group_law_random_draws(self):
        f, g = small_draw(71), small_draw(73)
        combo = composition_hamiltonian(f, g, self.settings)
        pts = np.random.default_rng(4).uniform(0, 1, (20, 2))
        lhs = flow_points(combo, pts, 0.0, 1.0, self.settings)
        rhs = flow_points(f, flow_points(g, pts, 0.0, 1.0, self.settings),
                          0.0, 1.0, self.settings)
        dist = np.linalg.norm((lhs - rhs + 0.5) % 1.0 - 0.5, axis=1)
        assert dist.max() < 1e-4


class TestInverseGeneratingHamiltonian:
    settings = FlowSettings(steps=100)

    def test_zero_field(self):
        bar = inverse_generating_hamiltonian(zero_hamiltonian(), self.settings)
        pts = np.random.default_rng(5).uniform(0, 1, (6, 2))
        assert np.abs(bar.value(0.4, pts)).max() == 0.0

    def test_autonomous_energy_identity(self):
        h = small_draw(79, kernel=CONSTANT, r=0.15, smax=3)
        bar = inverse_generating_hamiltonian(h, self.settings)
        pts = np.random.default_rng(6).uniform(0, 1, (10, 2))
        for t in (0.25, 0.5, 1.0):
            assert np.abs(bar.value(t, pts) + h.value(0.0, pts)).max() < 1e-6

    def test_flow_inverts(self):
        h = small_draw(83)
        bar = inverse_generating_hamiltonian(h, self.settings)
        pts = np.random.default_rng(7).uniform(0, 1, (20, 2))
        lhs = flow_points(bar, pts, 0.0, 1.0, self.settings)
        rhs = flow_points(h, pts, 1.0, 0.0, self.settings)
        dist = np.linalg.norm((lhs - rhs + 0.5) % 1.0 - 0.5, axis=1)
        assert dist.max() < 1e-4


class TestTimeReversedHamiltonian:
    def test_zero_field(self):
        hat = time_reversed_hamiltonian(zero_hamiltonian())
        assert np.abs(hat.value(0.3, np.array([[0.1, 0.2]]))).max() == 0.0

    def test_involution_pointwise(self):
        h = small_draw(89)
        double = time_reversed_hamiltonian(time_reversed_hamiltonian(h))
        pts = np.random.default_rng(8).uniform(0, 1, (10, 2))
        for t in (0.0, 0.37, 1.0):
            assert np.abs(double.value(t, pts) - h.value(t, pts)).max() < 1e-15

    def test_flow_inverts_time_one_map(self):
        h = small_draw(97)
        hat = time_reversed_hamiltonian(h)
        settings = FlowSettings(steps=200)
        pts = np.random.default_rng(9).uniform(0, 1, (20, 2))
        lhs = flow_points(hat, pts, 0.0, 1.0, settings)
        rhs = flow_points(h, pts, 1.0, 0.0, settings)
        dist = np.linalg.norm((lhs - rhs + 0.5) % 1.0 - 0.5, axis=1)
        assert dist.max() < 1e-6

    def test_keeps_spectral_fast_path(self):
        h = small_draw(101)
        hat = time_reversed_hamiltonian(h)
        assert hasattr(hat, "coefficient_grids")


class TestBumpFunction:
    def test_support(self):
        bump = BumpFunction(delta=0.05)
        assert bump(0.05) == 0.0 and bump(0.95) == 0.0 and bump(0.0) == 0.0
        assert bump(0.5) > 0.0

    def test_symmetry_about_half(self):
        bump = BumpFunction()
        for s in np.linspace(0, 0.49, 23):
            assert bump(0.5 + s) == pytest.approx(bump(0.5 - s), abs=1e-12)

    def test_unit_mass_independent_quadrature(self):
        bump = BumpFunction()
        ts = np.linspace(0.0, 1.0, 100_001)
        assert np.trapezoid(bump(ts), ts) == pytest.approx(1.0, abs=1e-10)


class TestConcatenation:
    settings = FlowSettings(steps=200)

    def test_rejects_time_dependent(self):
        with pytest.raises(NotAutonomous):
            concatenate_autonomous([small_draw(103)], BumpFunction())

    def test_single_part_reparametrizes(self):
        h = small_draw(107, kernel=CONSTANT)
        concat = concatenate_autonomous([h], BumpFunction())
        pts = np.random.default_rng(10).uniform(0, 1, (10, 2))
        lhs = flow_points(concat, pts, 0.0, 1.0, self.settings)
        rhs = flow_points(h, pts, 0.0, 1.0, self.settings)
        dist = np.linalg.norm((lhs - rhs + 0.5) % 1.0 - 0.5, axis=1)
        assert dist.max() < 1e-6

    def test_two_shears_sequential(self):
        concat = concatenate_autonomous([shear_x(), shear_y()], BumpFunction())
        pts = np.random.default_rng(11).uniform(0, 1, (20, 2))
        lhs = flow_points(concat, pts, 0.0, 1.0, self.settings)
        rhs = flow_points(shear_y(), flow_points(shear_x(), pts, 0.0, 1.0, self.settings),
                          0.0, 1.0, self.settings)
        dist = np.linalg.norm((lhs - rhs + 0.5) % 1.0 - 0.5, axis=1)
        assert dist.max() < 1e-5

    def test_all_zero_parts_identity(self):
        concat = concatenate_autonomous([zero_hamiltonian(), zero_hamiltonian()],
                                        BumpFunction())
        pts = np.random.default_rng(12).uniform(0, 1, (5, 2))
        out = flow_points(concat, pts, 0.0, 1.0, self.settings)
        assert np.abs(out - pts).max() < 1e-12

    def test_spectral_parts_use_fast_path(self):
        parts = [small_draw(109 + i, kernel=CONSTANT, smax=2) for i in range(3)]
        concat = concatenate_autonomous(parts, BumpFunction())
        assert hasattr(concat, "coefficient_grids")
        assert concat.stiffness == 3
        pts = np.random.default_rng(13).uniform(0, 1, (20, 2))
        lhs = flow_points(concat, pts, 0.0, 1.0, self.settings)
        rhs = pts
        for part in parts:
            rhs = flow_points(part, rhs, 0.0, 1.0, self.settings)
        dist = np.linalg.norm((lhs - rhs + 0.5) % 1.0 - 0.5, axis=1)
        assert dist.max() < 1e-5


class TestCurves:
    def test_closure_invariant_enforced(self):
        verts = np.array([[0.0, 0.5], [0.5, 0.5], [0.9, 0.5]])
        with pytest.raises(ValueError):
            LagrangianCurve(verts, closed=True, winding=(1, 0))

    def test_aliasing_guard(self):
        verts = np.array([[0.0, 0.0], [0.8, 0.0], [1.0, 0.0]])
        with pytest.raises(ValueError):
            LagrangianCurve(verts, closed=True, winding=(1, 0))

    def test_factories(self):
        k = horizontal_circle(0.5, 64)
        assert k.winding == (1, 0) and len(k) == 65
        s = sloped_circle(1, 3)
        assert s.winding == (1, 3)
        c = circle_curve((0.5, 0.5), 0.1, 64)
        assert c.winding == (0, 0)

    def test_advect_zero_field_identity(self):
        # source spacing already below the refinement threshold: unchanged
        k = horizontal_circle(0.5, 128)
        out = advect_curve(zero_hamiltonian(), k)
        assert np.allclose(out.vertices, k.vertices)
        assert out.winding == (1, 0)

    def test_advect_shear_translates(self):
        # K sits at y = 0.5 where cos(2 pi y) = -1: uniform translation x -> x + t
        k = horizontal_circle(0.5, 128)
        out = advect_curve(shear_y(), k)
        assert out.winding == (1, 0)
        assert np.allclose(out.vertices[:, 0], k.vertices[:, 0] + 1.0, atol=1e-9)
        assert np.allclose(out.vertices[:, 1], 0.5, atol=1e-12)

    def test_advected_gaps_below_threshold(self):
        h = small_draw(127, r=0.08, smax=4)
        settings = FlowSettings(steps=200, refinement_threshold=0.01)
        out = advect_curve(h, horizontal_circle(0.5, 128), 1.0, settings)
        gaps = np.linalg.norm(np.diff(out.vertices, axis=0), axis=1)
        assert gaps.max() <= settings.refinement_threshold + 1e-12

    def test_area_preserved_for_small_circle(self):
        h = small_draw(131, r=0.2, smax=3)
        settings = FlowSettings(steps=400, refinement_threshold=0.005)
        src = circle_curve((0.4, 0.6), 0.08, 256)
        out = advect_curve(h, src, 1.0, settings)

        def shoelace(v):
            x, y = v[:, 0], v[:, 1]
            return 0.5 * np.sum(x[:-1] * y[1:] - x[1:] * y[:-1])

        assert shoelace(out.vertices) == pytest.approx(shoelace(src.vertices), rel=1e-4)

    def test_refinement_overflow_raised(self):
        h = small_draw(137, r=0.05, smax=4)
        settings = FlowSettings(steps=200, refinement_threshold=1e-4,
                                max_refinement_depth=0)
        with pytest.raises(RefinementOverflow):
            advect_curve(h, horizontal_circle(0.5, 4), 1.0, settings)
