"""Random Hamiltonian fields H(t, x) = sum_n w_n Z_n(t) e_n(x).

A :class:`HamiltonianLaw` fixes the probability law (regularity, basis
truncation, coefficient kernel, master seed); :func:`sample_hamiltonian`
draws one :class:`RandomHamiltonian` from it.  Draws are immutable and all
evaluation methods are reentrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import temporal
from .basis import SpectralBasis, TorusPoint, Truncation, build_basis
from .engine import SpectralEngine
from .errors import Unsupported
from .rng import derive
from .temporal import ConstantSample, GridSample, KernelKind, PeriodicSample


def spectral_weight(eigenvalue: float, regularity: float):
    """Spectral decay weight exp(-eigenvalue * regularity / 2)."""
    if regularity <= 0:
        raise ValueError("regularity must be positive")
    return np.exp(-0.5 * np.asarray(eigenvalue) * regularity)


@lru_cache(maxsize=16)
def _basis_for(truncation: Truncation) -> SpectralBasis:
    return build_basis(truncation)


@lru_cache(maxsize=16)
def _engine_for(truncation: Truncation) -> SpectralEngine:
    return SpectralEngine(_basis_for(truncation))


@dataclass(frozen=True)
class HamiltonianLaw:
    """Everything that fixes the law of a random Hamiltonian draw.

    The complex structure is the standard one on the flat torus (metric =
    Euclidean, area form dx^dy); only the data listed here vary.
    ``mode_scales`` optionally rescales each coefficient process (index =
    position in the eigenvalue-sorted basis), which expresses weakly
    frequency-unbiased laws.
    """

    regularity: float
    truncation: Truncation
    kernel: KernelKind
    seed: int = 0
    mode_scales: tuple | None = None

    def __post_init__(self):
        if self.regularity <= 0:
            raise ValueError("regularity must be positive")
        if self.mode_scales is not None:
            scales = tuple(float(s) for s in self.mode_scales)
            if any(s <= 0 for s in scales):
                raise ValueError("mode_scales must be positive")
            if len(scales) != len(self.basis()):
                raise ValueError("mode_scales length must equal the mode count")
            object.__setattr__(self, "mode_scales", scales)

    def basis(self) -> SpectralBasis:
        return _basis_for(self.truncation)

    def engine(self) -> SpectralEngine:
        return _engine_for(self.truncation)

    def weights(self) -> np.ndarray:
        return spectral_weight(self.basis().eigenvalues, self.regularity)

    def scales(self) -> np.ndarray:
        if self.mode_scales is None:
            return np.full(len(self.basis()), self.kernel.per_mode_scale)
        return np.asarray(self.mode_scales)


def make_law(regularity: float, spatial_max: int = 25, temporal_max: int = 10,
             kernel: str = temporal.PERIODIC, seed: int = 0,
             include_axis_modes: bool = False, grid_nodes: int = 64,
             kernel_mean: float = 0.0, mode_scales=None,
             temporal_regularity: float | None = None,
             amplitude: float = 1.0) -> HamiltonianLaw:
    """Convenience constructor wiring the kernel to the law's regularity.

    ``temporal_regularity`` decouples the coefficient-process decay from the
    spectral weight decay when a different time scale is wanted (defaults to
    ``regularity``).  ``amplitude`` scales every coefficient process.
    """
    trunc = Truncation(spatial_max=spatial_max, include_axis_modes=include_axis_modes,
                       temporal_max=temporal_max)
    kind = KernelKind(tag=kernel,
                      regularity=temporal_regularity if temporal_regularity is not None else regularity,
                      temporal_max=temporal_max, grid_nodes=grid_nodes,
                      mean=kernel_mean, per_mode_scale=amplitude)
    return HamiltonianLaw(regularity=regularity, truncation=trunc, kernel=kind,
                          seed=seed, mode_scales=mode_scales)


def gaussian_dimension(law: HamiltonianLaw) -> int:
    """Number of independent standard normals one draw consumes."""
    n_modes = len(law.basis())
    if law.kernel.tag == temporal.PERIODIC:
        return n_modes * (1 + 2 * law.kernel.temporal_max)
    if law.kernel.tag == temporal.CONSTANT:
        return n_modes
    raise Unsupported("gaussian dimension of grid-sampled kernels depends on the grid")


def _as_points(p):
    """Normalize a TorusPoint / pair / (P, 2) array to ((P, 2), scalar_flag)."""
    if isinstance(p, TorusPoint):
        return p.as_array()[None, :], True
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


class RandomHamiltonian:
    """One draw of the random field; immutable after construction."""

    def __init__(self, law: HamiltonianLaw, temporal_samples: tuple):
        self.law = law
        self.basis = law.basis()
        self.temporal = tuple(temporal_samples)
        if len(self.temporal) != len(self.basis):
            raise ValueError("one temporal sample per mode required")
        self.weights = law.weights()
        self._engine = law.engine()
        self.stiffness = 1

    @property
    def autonomous(self) -> bool:
        return all(isinstance(s, ConstantSample) for s in self.temporal)

    # -- coefficient paths ----------------------------------------------------

    def mode_coefficients(self, times) -> np.ndarray:
        """c_n(t) = w_n Z_n(t); shape (N,) for scalar t, (T, N) for a vector."""
        times = np.asarray(times, dtype=float)
        scalar = times.ndim == 0
        t = np.atleast_1d(times)
        kind = self.law.kernel
        scales = self.law.scales()
        if kind.tag == temporal.PERIODIC:
            x0 = np.array([s.x0 for s in self.temporal])
            ca = np.array([s.cos_coeffs for s in self.temporal])
            cb = np.array([s.sin_coeffs for s in self.temporal])
            decay = kind.fourier_decay()
            k = np.arange(1, kind.temporal_max + 1)
            ang = 2.0 * math.pi * np.multiply.outer(t, k)
            series = np.cos(ang) @ (decay * ca).T + np.sin(ang) @ (decay * cb).T
            z = scales * (x0 + math.sqrt(2.0) * series) + kind.mean
        elif kind.tag == temporal.CONSTANT:
            vals = np.array([s.value for s in self.temporal])
            z = np.broadcast_to(vals, (len(t), len(vals)))
        else:
            grid_t = self.temporal[0].times
            vals = np.array([s.values for s in self.temporal])
            pos = np.clip(t, grid_t[0], grid_t[-1]) * (len(grid_t) - 1)
            i0 = np.minimum(pos.astype(int), len(grid_t) - 2)
            frac = pos - i0
            z = (vals[:, i0] * (1.0 - frac) + vals[:, i0 + 1] * frac).T
        out = self.weights * z
        return out[0] if scalar else out

    def constant_mode_coefficients(self) -> np.ndarray:
        """w_n Z_n for autonomous draws."""
        if not self.autonomous:
            raise Unsupported("draw is not autonomous")
        return self.weights * np.array([s.value for s in self.temporal])

    def coefficient_grids(self, times) -> np.ndarray:
        """Packed evaluation grids at the given times (see SpectralEngine)."""
        return self._engine.grids(self.mode_coefficients(times))

    # -- pointwise evaluation --------------------------------------------------

    def value(self, t: float, p):
        pts, scalar = _as_points(p)
        v = self._engine.value(self.coefficient_grids(float(t)), pts)
        return float(v[0]) if scalar else v

    def gradient(self, t: float, p):
        pts, scalar = _as_points(p)
        g = self._engine.gradient(self.coefficient_grids(float(t)), pts)
        return g[0] if scalar else g

    def vector_field(self, t: float, p):
        pts, scalar = _as_points(p)
        v = self._engine.vector_field(self.coefficient_grids(float(t)), pts)
        return v[0] if scalar else v

    def value_grid(self, t: float, xs, ys) -> np.ndarray:
        return self._engine.value_grid(self.coefficient_grids(float(t)), xs, ys)

    # -- diagnostics -----------------------------------------------------------

    def oscillation(self, spatial_grid: int = 128, time_grid: int = 101) -> float:
        """Trapezoid-in-time integral of (lattice max - lattice min) of H_t."""
        if spatial_grid < 2 or time_grid < 2:
            raise ValueError("grids must be >= 2")
        xs = np.arange(spatial_grid) / spatial_grid
        times = np.linspace(0.0, 1.0, time_grid)
        grids = self.coefficient_grids(times)
        spread = np.empty(time_grid)
        for i in range(time_grid):
            h = self._engine.value_grid(grids[i], xs, xs)
            spread[i] = h.max() - h.min()
        return float(np.trapezoid(spread, times))

    def spatial_mean(self, t: float, grid: int | None = None) -> float:
        """Lattice quadrature of H(t, .); exact for the truncated series."""
        if grid is None:
            grid = 4 * self.basis.truncation.spatial_max + 1
        xs = np.arange(grid) / grid
        return float(self.value_grid(t, xs, xs).mean())

    def analytic_variance(self, t: float, p) -> float:
        """Var[H(t, p)] over draws: sum_n w_n^2 kappa_n(t, t) e_n(p)^2."""
        pts, _ = _as_points(p)
        base_kind = replace(self.law.kernel, per_mode_scale=1.0, mean=0.0)
        kappa = temporal.kernel_value(base_kind, float(t), float(t))
        evals = self._engine.mode_values(pts)[0]
        return float(np.sum(self.weights**2 * self.law.scales()**2 * kappa * evals**2))


def sample_hamiltonian(law: HamiltonianLaw, rng: np.random.Generator | None = None) -> RandomHamiltonian:
    """Draw one random Hamiltonian; deterministic given (law, stream state)."""
    if rng is None:
        rng = derive(law.seed)
    basis = law.basis()
    n = len(basis)
    kind = law.kernel
    scales = law.scales()
    per_mode_kinds = [kind if s == kind.per_mode_scale else replace(kind, per_mode_scale=float(s))
                      for s in scales]
    if kind.tag == temporal.PERIODIC:
        tm = kind.temporal_max
        mat = rng.standard_normal((n, 1 + 2 * tm))
        samples = tuple(
            PeriodicSample(kind=per_mode_kinds[i], x0=mat[i, 0],
                           cos_coeffs=mat[i, 1:tm + 1], sin_coeffs=mat[i, tm + 1:])
            for i in range(n))
    elif kind.tag == temporal.CONSTANT:
        vec = rng.standard_normal(n)
        samples = tuple(
            ConstantSample(kind=per_mode_kinds[i], value=scales[i] * vec[i] + kind.mean)
            for i in range(n))
    else:
        unit = replace(kind, per_mode_scale=1.0)
        times, chol = temporal._sqexp_cholesky(unit)
        mat = rng.standard_normal((n, kind.grid_nodes))
        samples = tuple(
            GridSample(kind=per_mode_kinds[i], times=times,
                       values=scales[i] * (chol @ mat[i]) + kind.mean)
            for i in range(n))
    return RandomHamiltonian(law, samples)
