"""Gaussian coefficient processes on [0,1].

Three process families drive the random field's per-mode coefficients:

* ``sqexp``     -- stationary squared-exponential kernel exp(-r (s-t)^2),
                   sampled on a uniform time grid by Cholesky factorization
                   and interpolated linearly between nodes;
* ``periodic``  -- a finite random Fourier series with exponentially decaying
                   coefficients, periodic with period 1 and evaluated in
                   closed form;
* ``constant``  -- a single standard normal, constant in time (the autonomous
                   case).

All processes have unit pointwise variance scale before ``per_mode_scale``
is applied.  ``mean`` shifts the whole path by a constant; it exists so that
deliberately non-centered laws can be constructed in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FactorizationFailure, OutOfRange

SQEXP = "sqexp"
PERIODIC = "periodic"
CONSTANT = "constant"
KERNEL_TAGS = (SQEXP, PERIODIC, CONSTANT)

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class KernelKind:
    """Description of one coefficient process family.

    temporal_max is the Fourier truncation order (periodic kernel only);
    grid_nodes is the uniform sampling grid size (sqexp kernel only).
    """

    tag: str
    regularity: float
    temporal_max: int = 10
    per_mode_scale: float = 1.0
    grid_nodes: int = 64
    mean: float = 0.0

    def __post_init__(self):
        if self.tag not in KERNEL_TAGS:
            raise ValueError(f"unknown kernel tag {self.tag!r}")
        if self.regularity <= 0:
            raise ValueError("regularity must be positive")
        if self.per_mode_scale <= 0:
            raise ValueError("per_mode_scale must be positive")
        if self.temporal_max < 1:
            raise ValueError("temporal_max must be >= 1")
        if self.grid_nodes < 2:
            raise ValueError("grid_nodes must be >= 2")

    def fourier_decay(self) -> np.ndarray:
        """Decay factors exp(-2 r pi^2 k^2) for k = 1..temporal_max."""
        k = np.arange(1, self.temporal_max + 1)
        return np.exp(-2.0 * self.regularity * math.pi**2 * k**2)

    def gaussians_per_sample(self) -> int:
        """Number of independent standard normals one draw consumes."""
        if self.tag == PERIODIC:
            return 1 + 2 * self.temporal_max
        if self.tag == CONSTANT:
            return 1
        return self.grid_nodes


def _check_times(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-12) or np.any(t > 1.0 + 1e-12):
        raise OutOfRange(f"time {t} outside [0, 1]")
    return t


def kernel_value(kind: KernelKind, t1: float, t2: float) -> float:
    """Covariance Cov[Z(t1), Z(t2)] of the process described by ``kind``."""
    _check_times(t1)
    _check_times(t2)
    s2 = kind.per_mode_scale**2
    if kind.tag == SQEXP:
        return s2 * math.exp(-kind.regularity * (t1 - t2) ** 2)
    if kind.tag == PERIODIC:
        decay = kind.fourier_decay()
        k = np.arange(1, kind.temporal_max + 1)
        series = 2.0 * np.sum(decay**2 * np.cos(_TWO_PI * k * (t1 - t2)))
        return s2 * (1.0 + float(series))
    return s2  # constant in time


@dataclass(frozen=True)
class TemporalSample:
    """Base class for one realized coefficient path."""

    kind: KernelKind

    def evaluate(self, t):
        raise NotImplementedError


@dataclass(frozen=True)
class PeriodicSample(TemporalSample):
    """Raw Fourier gaussians; evaluation applies decay, scale, and mean.

    ``cos_coeffs[i]`` / ``sin_coeffs[i]`` belong to frequency i+1.
    """

    x0: float
    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray

    def evaluate(self, t):
        t = _check_times(t)
        decay = self.kind.fourier_decay()
        k = np.arange(1, self.kind.temporal_max + 1)
        ang = _TWO_PI * np.multiply.outer(t, k)
        series = np.cos(ang) @ (decay * self.cos_coeffs) + np.sin(ang) @ (decay * self.sin_coeffs)
        return self.kind.per_mode_scale * (self.x0 + math.sqrt(2.0) * series) + self.kind.mean


@dataclass(frozen=True)
class ConstantSample(TemporalSample):
    """Constant path; ``value`` already includes scale and mean."""

    value: float

    def evaluate(self, t):
        t = _check_times(t)
        return self.value if t.ndim == 0 else np.full(t.shape, self.value)


@dataclass(frozen=True)
class GridSample(TemporalSample):
    """Path values on a uniform time grid, linearly interpolated between nodes."""

    times: np.ndarray
    values: np.ndarray

    def evaluate(self, t):
        t = _check_times(t)
        if np.any(t < self.times[0] - 1e-12) or np.any(t > self.times[-1] + 1e-12):
            raise OutOfRange("time outside the sampled grid range")
        return np.interp(t, self.times, self.values)


def _sqexp_cholesky(kind: KernelKind) -> tuple[np.ndarray, np.ndarray]:
    times = np.linspace(0.0, 1.0, kind.grid_nodes)
    diff = times[:, None] - times[None, :]
    cov = kind.per_mode_scale**2 * np.exp(-kind.regularity * diff**2)
    cov[np.diag_indices_from(cov)] += 1e-10
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailure("jittered squared-exponential covariance "
                                   "is not positive definite") from exc
    return times, chol


def sample(kind: KernelKind, rng: np.random.Generator) -> TemporalSample:
    """Draw one coefficient path."""
    if kind.tag == PERIODIC:
        vec = rng.standard_normal(1 + 2 * kind.temporal_max)
        return PeriodicSample(kind=kind, x0=vec[0],
                              cos_coeffs=vec[1:kind.temporal_max + 1],
                              sin_coeffs=vec[kind.temporal_max + 1:])
    if kind.tag == CONSTANT:
        c = rng.standard_normal()
        return ConstantSample(kind=kind, value=kind.per_mode_scale * c + kind.mean)
    times, chol = _sqexp_cholesky(kind)
    values = chol @ rng.standard_normal(kind.grid_nodes) + kind.mean
    return GridSample(kind=kind, times=times, values=values)


def evaluate_temporal(s: TemporalSample, t):
    """Value of the realized path at time(s) t in [0, 1]."""
    return s.evaluate(t)
