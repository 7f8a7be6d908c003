"""Tests for random Hamiltonian assembly and evaluation."""

import math

import numpy as np
import pytest
from scipy import stats

from hamflow.basis import TorusPoint, Truncation
from hamflow.errors import Unsupported
from hamflow.field import (HamiltonianLaw, RandomHamiltonian, gaussian_dimension,
                           make_law, sample_hamiltonian, spectral_weight)
from hamflow.rng import derive
from hamflow.temporal import (CONSTANT, ConstantSample, KernelKind, PERIODIC, SQEXP,
                              evaluate_temporal, kernel_value)


class TestSpectralWeight:
    def test_zero_eigenvalue(self):
        assert spectral_weight(0.0, 3.7) == pytest.approx(1.0)

    def test_reference_value(self):
        assert spectral_weight(4 * math.pi**2, 0.1) == pytest.approx(math.exp(-0.2 * math.pi**2))
        assert spectral_weight(4 * math.pi**2, 0.1) == pytest.approx(0.138911, abs=1e-6)

    def test_decay_in_regularity(self):
        rs = [0.1, 0.5, 1.0, 5.0, 50.0]
        w = [spectral_weight(8 * math.pi**2, r) for r in rs]
        assert all(a > b for a, b in zip(w, w[1:]))
        assert w[-1] < 1e-100

    def test_rejects_nonpositive_regularity(self):
        with pytest.raises(ValueError):
            spectral_weight(1.0, 0.0)


class TestGaussianDimension:
    def test_paper_configuration(self):
        law = make_law(0.1, spatial_max=25, temporal_max=10, kernel=PERIODIC)
        assert gaussian_dimension(law) == 52_500

    def test_small_autonomous(self):
        law = make_law(0.1, spatial_max=1, kernel=CONSTANT)
        assert gaussian_dimension(law) == 4

    def test_enumerated_case(self):
        law = make_law(0.1, spatial_max=2, temporal_max=3, kernel=PERIODIC)
        assert gaussian_dimension(law) == 16 * 7 == 112

    def test_grid_kernel_unsupported(self):
        law = make_law(0.1, spatial_max=2, kernel=SQEXP)
        with pytest.raises(Unsupported):
            gaussian_dimension(law)


class TestSampling:
    def test_determinism_under_equal_seeds(self):
        law = make_law(0.2, spatial_max=3, temporal_max=4, seed=77)
        h1 = sample_hamiltonian(law, derive(77))
        h2 = sample_hamiltonian(law, derive(77))
        rng = np.random.default_rng(0)
        for _ in range(100):
            t = rng.uniform()
            p = TorusPoint(rng.uniform(), rng.uniform())
            assert h1.value(t, p) == pytest.approx(h2.value(t, p), abs=1e-15)

    def test_autonomous_draws_time_independent(self):
        law = make_law(0.15, spatial_max=3, kernel=CONSTANT)
        h = sample_hamiltonian(law, derive(3))
        assert h.autonomous
        p = TorusPoint(0.21, 0.68)
        assert h.value(0.1, p) == pytest.approx(h.value(0.9, p), abs=1e-14)

    def test_weights_decreasing_in_bounds(self):
        law = make_law(0.05, spatial_max=6)
        h = sample_hamiltonian(law, derive(1))
        assert np.all(h.weights > 0) and np.all(h.weights < 1)
        assert np.all(np.diff(h.weights) <= 1e-15)

    def test_engine_matches_naive_mode_sum(self):
        law = make_law(0.08, spatial_max=4, temporal_max=5, seed=5)
        h = sample_hamiltonian(law, derive(5))
        rng = np.random.default_rng(2)
        for _ in range(10):
            t = rng.uniform()
            p = TorusPoint(rng.uniform(), rng.uniform())
            naive = sum(h.weights[i] * evaluate_temporal(h.temporal[i], t)
                        * h.basis.modes[i].evaluate(p)
                        for i in range(len(h.basis)))
            assert h.value(t, p) == pytest.approx(naive, abs=1e-12)

    def test_variance_matches_analytic(self):
        law = make_law(0.06, spatial_max=3, temporal_max=5, seed=9)
        n = 2000
        p = TorusPoint(0.3, 0.7)
        t = 0.5
        vals = np.array([sample_hamiltonian(law, derive(9, i)).value(t, p) for i in range(n)])
        draw = sample_hamiltonian(law, derive(9, 0))
        target = draw.analytic_variance(t, p)
        se = target * math.sqrt(2.0 / (n - 1))
        assert abs(vals.var(ddof=1) - target) < 3 * se


class TestEvaluation:
    def test_zero_coefficients_give_zero_field(self):
        law = make_law(0.1, spatial_max=2, kernel=CONSTANT)
        base = sample_hamiltonian(law, derive(0))
        zero = RandomHamiltonian(law, tuple(
            ConstantSample(kind=s.kind, value=0.0) for s in base.temporal))
        pts = np.random.default_rng(1).uniform(0, 1, (20, 2))
        assert np.all(zero.value(0.3, pts) == 0)
        assert np.all(zero.vector_field(0.3, pts) == 0)

    def test_single_active_mode(self):
        # one cos*cos (1,1) mode with constant coefficient chosen so w*Z = 0.5
        law = make_law(0.1, spatial_max=1, kernel=CONSTANT, seed=4)
        base = sample_hamiltonian(law, derive(4))
        samples = []
        for i, s in enumerate(base.temporal):
            mode = base.basis.modes[i]
            value = 0.5 / base.weights[i] if mode.trig == "cc" else 0.0
            samples.append(ConstantSample(kind=s.kind, value=value))
        h = RandomHamiltonian(law, tuple(samples))
        assert h.value(0.0, TorusPoint(0, 0)) == pytest.approx(1.0)
        x, y = 0.13, 0.81
        expected = 0.5 * 2 * math.cos(2 * math.pi * x) * math.cos(2 * math.pi * y)
        assert h.value(0.7, TorusPoint(x, y)) == pytest.approx(expected)

    def test_gradient_matches_finite_differences(self):
        law = make_law(0.05, spatial_max=5, temporal_max=4, seed=12)
        h = sample_hamiltonian(law, derive(12))
        rng = np.random.default_rng(3)
        step = 1e-6
        for _ in range(50):
            t = rng.uniform()
            x, y = rng.uniform(0, 1, 2)
            g = h.gradient(t, TorusPoint(x, y))
            fx = (h.value(t, TorusPoint(x + step, y)) - h.value(t, TorusPoint(x - step, y))) / (2 * step)
            fy = (h.value(t, TorusPoint(x, y + step)) - h.value(t, TorusPoint(x, y - step))) / (2 * step)
            scale = max(1.0, np.abs(g).max())
            assert abs(g[0] - fx) / scale < 1e-5
            assert abs(g[1] - fy) / scale < 1e-5

    def test_vector_field_is_rotated_gradient(self):
        law = make_law(0.07, spatial_max=4, seed=6)
        h = sample_hamiltonian(law, derive(6))
        pts = np.random.default_rng(4).uniform(0, 1, (30, 2))
        g = h.gradient(0.4, pts)
        v = h.vector_field(0.4, pts)
        assert np.allclose(v[:, 0], -g[:, 1])
        assert np.allclose(v[:, 1], g[:, 0])

    def test_vector_field_divergence_free(self):
        law = make_law(0.05, spatial_max=4, temporal_max=3, seed=8)
        h = sample_hamiltonian(law, derive(8))
        rng = np.random.default_rng(5)
        step = 1e-5
        for _ in range(50):
            t = rng.uniform()
            x, y = rng.uniform(0, 1, 2)
            vxp = h.vector_field(t, TorusPoint(x + step, y))[0]
            vxm = h.vector_field(t, TorusPoint(x - step, y))[0]
            vyp = h.vector_field(t, TorusPoint(x, y + step))[1]
            vym = h.vector_field(t, TorusPoint(x, y - step))[1]
            div = (vxp - vxm) / (2 * step) + (vyp - vym) / (2 * step)
            assert abs(div) < 1e-5 * max(1.0, abs(vxp), abs(vyp))


class TestNormalization:
    def test_spatial_mean_vanishes(self):
        law = make_law(0.04, spatial_max=8, temporal_max=6, seed=21)
        h = sample_hamiltonian(law, derive(21))
        rng = np.random.default_rng(6)
        for _ in range(5):
            assert abs(h.spatial_mean(rng.uniform())) < 1e-9

    def test_pointwise_gaussianity(self):
        law = make_law(0.06, spatial_max=4, temporal_max=5, seed=31)
        n = 5000
        p = TorusPoint(0.37, 0.61)
        vals = np.array([sample_hamiltonian(law, derive(31, i)).value(0.25, p)
                         for i in range(n)])
        sd = math.sqrt(sample_hamiltonian(law, derive(31, 0)).analytic_variance(0.25, p))
        assert stats.kstest(vals / sd, "norm").pvalue > 0.01


class TestOscillation:
    def test_zero_field(self):
        law = make_law(0.1, spatial_max=2, kernel=CONSTANT)
        base = sample_hamiltonian(law, derive(0))
        zero = RandomHamiltonian(law, tuple(
            ConstantSample(kind=s.kind, value=0.0) for s in base.temporal))
        assert zero.oscillation(32, 11) == 0.0

    def test_single_mode_closed_form(self):
        # cos*cos mode with w*Z = a has range [-2a, 2a]: oscillation 4a
        law = make_law(0.1, spatial_max=1, kernel=CONSTANT, seed=4)
        base = sample_hamiltonian(law, derive(4))
        a = 0.3
        samples = [ConstantSample(kind=s.kind, value=(a / base.weights[i]
                                                      if base.basis.modes[i].trig == "cc" else 0.0))
                   for i, s in enumerate(base.temporal)]
        h = RandomHamiltonian(law, tuple(samples))
        assert h.oscillation(64, 21) == pytest.approx(4 * a, rel=0.01)

    def test_invariant_under_time_constant_offset(self):
        law = make_law(0.08, spatial_max=3, temporal_max=4, seed=14)
        h = sample_hamiltonian(law, derive(14))
        base = h.oscillation(48, 31)

        class Offset:
            def __init__(self, inner):
                self._inner = inner

            def coefficient_grids(self, times):
                return self._inner.coefficient_grids(times)

        # an additive function of t alone shifts max and min equally; emulate
        # by comparing against the same draw evaluated with a shifted engine
        spread = []
        xs = np.arange(48) / 48
        times = np.linspace(0, 1, 31)
        grids = h.coefficient_grids(times)
        for i, t in enumerate(times):
            vals = h._engine.value_grid(grids[i], xs, xs) + 3.7 * math.sin(t)
            spread.append(vals.max() - vals.min())
        shifted = np.trapezoid(spread, times)
        assert shifted == pytest.approx(base, abs=1e-12)

    def test_weight_monotonicity_in_regularity(self):
        means = []
        for r in (0.04, 0.08, 0.14, 0.5, 1.0):
            law = make_law(r, spatial_max=3, temporal_max=3, seed=55)
            osc = [sample_hamiltonian(law, derive(55, i)).oscillation(32, 11)
                   for i in range(200)]
            means.append(np.mean(osc))
        assert all(a > b for a, b in zip(means, means[1:]))


class TestLawValidation:
    def test_kernel_tied_to_regularity_by_default(self):
        law = make_law(0.17, spatial_max=2)
        assert law.kernel.regularity == pytest.approx(0.17)
        decoupled = make_law(0.17, spatial_max=2, temporal_regularity=0.05)
        assert decoupled.kernel.regularity == pytest.approx(0.05)

    def test_mode_scales_length_checked(self):
        with pytest.raises(ValueError):
            make_law(0.1, spatial_max=2, mode_scales=(1.0, 2.0))

    def test_analytic_variance_uses_scales(self):
        n_modes = 4
        law = make_law(0.2, spatial_max=1, kernel=CONSTANT,
                       mode_scales=(2.0,) * n_modes)
        h = sample_hamiltonian(law, derive(0))
        base = make_law(0.2, spatial_max=1, kernel=CONSTANT)
        h0 = sample_hamiltonian(base, derive(0))
        p = TorusPoint(0.3, 0.4)
        assert h.analytic_variance(0.5, p) == pytest.approx(4 * h0.analytic_variance(0.5, p))
