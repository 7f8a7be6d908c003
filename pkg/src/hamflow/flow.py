"""Hamiltonian flow integration and the group operations on generators.

The time-t flow map of a Hamiltonian H is integrated with a fixed-step
classical 4th-order scheme (adaptive stepping is deliberately avoided so
Monte Carlo tables are reproducible).  Draws with spectral structure use
exact analytic vector fields; generic evaluator-defined Hamiltonians fall
back to central finite differences of their values.

Group operations return new Hamiltonian evaluators:

* ``composition_hamiltonian(f, g)``  -- flow equals (flow of f) o (flow of g);
* ``inverse_generating_hamiltonian(f)`` -- flow at every t inverts f's flow;
* ``time_reversed_hamiltonian(f)``   -- pure reindexing; its time-1 flow
  inverts f's time-1 flow;
* ``concatenate_autonomous(parts, bump)`` -- one time-dependent Hamiltonian
  running each autonomous part in order within [0, 1].

Composed evaluators need inner flows of their operands.  Those are resolved
on the integrator's step lattice: inner trajectories are memoized per query
batch and linearly interpolated between lattice nodes, so off-lattice query
times never trigger partial-step integrations.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .basis import TorusPoint
from .errors import NonFinite, NotAutonomous, RefinementOverflow
from .field import RandomHamiltonian

_FD_STEP = 1e-6


@dataclass(frozen=True)
class FlowSettings:
    """Fixed-step integration and curve refinement parameters.

    ``steps`` is per unit time; stiff concatenated Hamiltonians scale it by
    their part count internally.
    """

    steps: int = 200
    refinement_threshold: float = 0.01
    max_refinement_depth: int = 12

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 0.0 < self.refinement_threshold <= 0.5:
            raise ValueError("refinement_threshold must lie in (0, 0.5]")
        if self.max_refinement_depth < 0:
            raise ValueError("max_refinement_depth must be >= 0")


DEFAULT_SETTINGS = FlowSettings()


class FlowResult(tuple):
    """(point, lift): the mod-1 reduced image and its planar lift."""

    __slots__ = ()

    def __new__(cls, point: TorusPoint, lift: np.ndarray):
        return super().__new__(cls, (point, lift))

    @property
    def point(self) -> TorusPoint:
        return self[0]

    @property
    def lift(self) -> np.ndarray:
        return self[1]


# ---------------------------------------------------------------------------
# Integrator core
# ---------------------------------------------------------------------------

def _n_steps(settings: FlowSettings, stiffness: int, span: float) -> int:
    if span == 0.0:
        return 0
    return max(1, math.ceil(settings.steps * stiffness * span - 1e-9))


def _rk4_grids(engine, grids, pts, t0, h, n_steps, captures=None):
    p = np.array(pts, dtype=float)
    if captures is not None:
        captures.append(p.copy())
    for i in range(n_steps):
        k1 = engine.vector_field(grids[2 * i], p)
        k2 = engine.vector_field(grids[2 * i + 1], p + (0.5 * h) * k1)
        k3 = engine.vector_field(grids[2 * i + 1], p + (0.5 * h) * k2)
        k4 = engine.vector_field(grids[2 * i + 2], p + h * k3)
        p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if captures is not None:
            captures.append(p.copy())
    return p


def _rk4_generic(fieldlike, pts, t0, h, n_steps, captures=None):
    p = np.array(pts, dtype=float)
    if captures is not None:
        captures.append(p.copy())
    for i in range(n_steps):
        t = t0 + i * h
        k1 = fieldlike.vector_field(t, p)
        k2 = fieldlike.vector_field(t + 0.5 * h, p + (0.5 * h) * k1)
        k3 = fieldlike.vector_field(t + 0.5 * h, p + (0.5 * h) * k2)
        k4 = fieldlike.vector_field(t + h, p + h * k3)
        p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if captures is not None:
            captures.append(p.copy())
    return p


def _integrate(fieldlike, pts, t0, t1, settings, captures=None):
    stiffness = getattr(fieldlike, "stiffness", 1)
    n = _n_steps(settings, stiffness, abs(t1 - t0))
    if n == 0:
        out = np.array(pts, dtype=float)
        if captures is not None:
            captures.append(out.copy())
        return out
    h = (t1 - t0) / n
    if hasattr(fieldlike, "coefficient_grids"):
        stage_times = t0 + 0.5 * h * np.arange(2 * n + 1)
        grids = fieldlike.coefficient_grids(np.clip(stage_times, 0.0, 1.0))
        out = _rk4_grids(fieldlike._engine, grids, pts, t0, h, n, captures)
    else:
        out = _rk4_generic(fieldlike, pts, t0, h, n, captures)
    if not np.all(np.isfinite(out)):
        raise NonFinite("flow state left the finite range")
    return out


def flow_points(fieldlike, pts, t0: float = 0.0, t1: float = 1.0,
                settings: FlowSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Integrate a batch of planar lifts (P, 2) from t0 to t1 (t1 < t0 allowed)."""
    return _integrate(fieldlike, np.asarray(pts, dtype=float), t0, t1, settings)


def integrate_point(fieldlike, p: TorusPoint, t0: float = 0.0, t1: float = 1.0,
                    settings: FlowSettings = DEFAULT_SETTINGS) -> FlowResult:
    """Time-t1 image of p under the flow started at t0."""
    lift = flow_points(fieldlike, p.as_array()[None, :], t0, t1, settings)[0]
    return FlowResult(TorusPoint(lift[0], lift[1]), lift)


def inverse_point(fieldlike, p: TorusPoint,
                  settings: FlowSettings = DEFAULT_SETTINGS) -> FlowResult:
    """Image of p under the inverse of the time-1 flow (backward integration)."""
    return integrate_point(fieldlike, p, t0=1.0, t1=0.0, settings=settings)


def flow_points_through(fieldlike, pts, times,
                        settings: FlowSettings = DEFAULT_SETTINGS) -> list[np.ndarray]:
    """States at each requested time (ascending, starting from t=0)."""
    times = [float(t) for t in times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("times must be ascending")
    out = []
    state = np.asarray(pts, dtype=float)
    current = 0.0
    for t in times:
        state = _integrate(fieldlike, state, current, t, settings)
        current = t
        out.append(state.copy())
    return out


# ---------------------------------------------------------------------------
# Evaluator-defined Hamiltonians
# ---------------------------------------------------------------------------

class HamiltonianEvaluator:
    """Base for Hamiltonians defined by a value function on [0,1] x T^2.

    Gradients default to central finite differences of ``value``; subclasses
    with analytic structure override.
    """

    stiffness = 1
    autonomous = False

    def value(self, t: float, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, t: float, pts: np.ndarray) -> np.ndarray:
        h = _FD_STEP
        p = np.asarray(pts, dtype=float)
        n = len(p)
        ex = np.array([h, 0.0])
        ey = np.array([0.0, h])
        stacked = np.concatenate([p + ex, p - ex, p + ey, p - ey])
        v = self.value(t, stacked)
        return np.stack([(v[:n] - v[n:2 * n]) / (2 * h),
                         (v[2 * n:3 * n] - v[3 * n:]) / (2 * h)], axis=-1)

    def vector_field(self, t: float, pts: np.ndarray) -> np.ndarray:
        g = self.gradient(t, pts)
        return np.stack([-g[:, 1], g[:, 0]], axis=-1)


class CallableHamiltonian(HamiltonianEvaluator):
    """Wrap a plain function (t, pts) -> values as a Hamiltonian."""

    def __init__(self, fn, vector_field_fn=None, autonomous: bool = False):
        self._fn = fn
        self._vf = vector_field_fn
        self.autonomous = autonomous

    def value(self, t, pts):
        return np.asarray(self._fn(t, np.asarray(pts, dtype=float)), dtype=float)

    def vector_field(self, t, pts):
        if self._vf is None:
            return super().vector_field(t, pts)
        return np.asarray(self._vf(t, np.asarray(pts, dtype=float)), dtype=float)


def zero_hamiltonian() -> CallableHamiltonian:
    return CallableHamiltonian(lambda t, pts: np.zeros(len(pts)),
                               vector_field_fn=lambda t, pts: np.zeros_like(pts),
                               autonomous=True)


class _LatticeFlows:
    """Node-snapped operand flows with per-batch trajectory memoization.

    Node j sits at time j*h with h = 1/(steps*stiffness).  Forward queries
    keep one incrementally extended trajectory per recently seen point batch;
    off-lattice times interpolate linearly between the two bracketing nodes.
    """

    def __init__(self, fieldlike, settings: FlowSettings, max_entries: int = 16):
        self._f = fieldlike
        self._settings = settings
        self._per_unit = settings.steps * getattr(fieldlike, "stiffness", 1)
        self._h = 1.0 / self._per_unit
        self._forward: OrderedDict = OrderedDict()
        self._backward: OrderedDict = OrderedDict()
        self._max_entries = max_entries

    def _bracket(self, t: float):
        pos = t * self._per_unit
        j0 = int(math.floor(pos + 1e-9))
        frac = pos - j0
        if frac < 1e-9:
            return j0, j0, 0.0
        return j0, j0 + 1, frac

    def forward(self, t: float, pts: np.ndarray) -> np.ndarray:
        """Positions of pts flowed from time 0 to time t."""
        j0, j1, frac = self._bracket(t)
        traj = self._forward_traj(pts, j1)
        if j0 == j1:
            return traj[j0]
        return (1.0 - frac) * traj[j0] + frac * traj[j1]

    def _forward_traj(self, pts, j_needed):
        key = pts.tobytes()
        entry = self._forward.get(key)
        if entry is None:
            entry = [np.array(pts, dtype=float)]
            self._store(self._forward, key, entry)
        have = len(entry) - 1
        if j_needed > have:
            captures = []
            _integrate(self._f, entry[-1], have * self._h, j_needed * self._h,
                       self._settings, captures=captures)
            entry.extend(captures[1:])
        return entry

    def inverse(self, t: float, pts: np.ndarray) -> np.ndarray:
        """Preimages of pts under the time-t flow (backward integration to 0)."""
        j0, j1, frac = self._bracket(t)
        y0 = self._inverse_at_node(j0, pts)
        if j0 == j1:
            return y0
        y1 = self._inverse_at_node(j1, pts)
        return (1.0 - frac) * y0 + frac * y1

    def _inverse_at_node(self, j, pts):
        if j == 0:
            return np.array(pts, dtype=float)
        key = (j, pts.tobytes())
        cached = self._backward.get(key)
        if cached is not None:
            return cached
        out = _integrate(self._f, pts, j * self._h, 0.0, self._settings)
        self._store(self._backward, key, out)
        return out

    def _store(self, cache, key, value):
        cache[key] = value
        while len(cache) > self._max_entries:
            cache.popitem(last=False)


class CompositionHamiltonian(HamiltonianEvaluator):
    """Hamiltonian whose flow is (flow of f) composed after (flow of g).

    value(t, x) = f(t, x) + g(t, y) with y the preimage of x under f's
    time-t flow, realized by backward integration on the step lattice.
    """

    def __init__(self, f, g, settings: FlowSettings = DEFAULT_SETTINGS):
        self._f = f
        self._g = g
        self._flows = _LatticeFlows(f, settings)

    def value(self, t, pts):
        pts = np.asarray(pts, dtype=float)
        y = self._flows.inverse(t, pts)
        return _value_of(self._f, t, pts) + _value_of(self._g, t, y)


class InverseGeneratingHamiltonian(HamiltonianEvaluator):
    """Hamiltonian whose time-t flow inverts f's time-t flow for every t.

    value(t, x) = -f(t, z) with z the image of x under f's time-t flow.
    """

    def __init__(self, f, settings: FlowSettings = DEFAULT_SETTINGS):
        self._f = f
        self._flows = _LatticeFlows(f, settings)

    def value(self, t, pts):
        pts = np.asarray(pts, dtype=float)
        z = self._flows.forward(t, pts)
        return -_value_of(self._f, t, z)


class TimeReversedHamiltonian(HamiltonianEvaluator):
    """value(t, x) = -f(1-t, x); its time-1 flow inverts f's time-1 flow."""

    def __init__(self, f):
        self._f = f
        self.stiffness = getattr(f, "stiffness", 1)
        if hasattr(f, "coefficient_grids"):
            self._engine = f._engine
            self.coefficient_grids = self._reversed_grids

    def _reversed_grids(self, times):
        return -self._f.coefficient_grids(1.0 - np.asarray(times, dtype=float))

    def value(self, t, pts):
        return -_value_of(self._f, 1.0 - t, pts)

    def gradient(self, t, pts):
        if hasattr(self._f, "coefficient_grids"):
            return self._engine.gradient(self._reversed_grids(float(t)), np.asarray(pts, dtype=float))
        return super().gradient(t, pts)

    def vector_field(self, t, pts):
        if hasattr(self._f, "coefficient_grids"):
            return self._engine.vector_field(self._reversed_grids(float(t)), np.asarray(pts, dtype=float))
        return super().vector_field(t, pts)


def _value_of(fieldlike, t, pts):
    return np.asarray(fieldlike.value(t, pts), dtype=float)


def composition_hamiltonian(f, g, settings: FlowSettings = DEFAULT_SETTINGS) -> CompositionHamiltonian:
    return CompositionHamiltonian(f, g, settings)


def inverse_generating_hamiltonian(f, settings: FlowSettings = DEFAULT_SETTINGS) -> InverseGeneratingHamiltonian:
    return InverseGeneratingHamiltonian(f, settings)


def time_reversed_hamiltonian(f) -> TimeReversedHamiltonian:
    return TimeReversedHamiltonian(f)


# ---------------------------------------------------------------------------
# Bump function and autonomous concatenation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BumpFunction:
    """Smooth bump supported in (delta, 1-delta), symmetric about 1/2, unit mass."""

    delta: float = 0.05
    quadrature_nodes: int = 10001
    normalization: float = dataclass_field(init=False)

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 0.5)")
        ts = np.linspace(0.0, 1.0, self.quadrature_nodes)
        raw = self._raw(ts)
        object.__setattr__(self, "normalization", 1.0 / float(np.trapezoid(raw, ts)))

    def _raw(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        inside = (t > self.delta) & (t < 1.0 - self.delta)
        u = (t[inside] - self.delta) * (1.0 - self.delta - t[inside])
        out[inside] = np.exp(-1.0 / u)
        return out

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        value = self.normalization * self._raw(t)
        return float(value) if value.ndim == 0 else value


class ConcatenatedHamiltonian(HamiltonianEvaluator):
    """Runs k autonomous Hamiltonians in order within unit time.

    H(t, x) = k * bump(k*t - i + 1) * H_i(x) on the i-th subinterval.  The
    factor k makes the field k times stiffer, which ``stiffness`` advertises
    to the integrator.
    """

    def __init__(self, parts, bump: BumpFunction):
        self._parts = list(parts)
        self._bump = bump
        self.stiffness = max(1, len(self._parts))

    def value(self, t, pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(len(pts))
        k = len(self._parts)
        for i, part in enumerate(self._parts, start=1):
            w = k * self._bump(k * t - i + 1.0)
            if w != 0.0:
                out += w * _value_of(part, 0.0, pts)
        return out

    def gradient(self, t, pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros_like(pts)
        k = len(self._parts)
        for i, part in enumerate(self._parts, start=1):
            w = k * self._bump(k * t - i + 1.0)
            if w != 0.0:
                out += w * part.gradient(0.0, pts)
        return out

    def vector_field(self, t, pts):
        g = self.gradient(t, pts)
        return np.stack([-g[:, 1], g[:, 0]], axis=-1)


class SpectralConcatenation:
    """Concatenation of autonomous spectral draws, with exact vector fields.

    Shares the coefficient-grid fast path: the combined coefficient path is
    c_n(t) = sum_i k * bump(k*t - i + 1) * c_n^(i).
    """

    autonomous = False

    def __init__(self, parts, bump: BumpFunction):
        self._engine = parts[0]._engine
        self._bump = bump
        self._const = np.stack([p.constant_mode_coefficients() for p in parts])
        self.stiffness = len(parts)

    def mode_coefficients(self, times):
        times = np.asarray(times, dtype=float)
        scalar = times.ndim == 0
        t = np.atleast_1d(times)
        k = self._const.shape[0]
        i = np.arange(1, k + 1)
        weights = k * self._bump(k * t[:, None] - i[None, :] + 1.0)
        out = weights @ self._const
        return out[0] if scalar else out

    def coefficient_grids(self, times):
        return self._engine.grids(self.mode_coefficients(times))

    def value(self, t, pts):
        return self._engine.value(self.coefficient_grids(float(t)), np.asarray(pts, dtype=float))

    def gradient(self, t, pts):
        return self._engine.gradient(self.coefficient_grids(float(t)), np.asarray(pts, dtype=float))

    def vector_field(self, t, pts):
        return self._engine.vector_field(self.coefficient_grids(float(t)), np.asarray(pts, dtype=float))


def concatenate_autonomous(parts, bump: BumpFunction):
    """Single Hamiltonian whose time-1 flow composes the parts in order."""
    parts = list(parts)
    if not parts:
        raise ValueError("need at least one Hamiltonian")
    for part in parts:
        if not getattr(part, "autonomous", False):
            raise NotAutonomous("all concatenated Hamiltonians must be autonomous")
    if all(isinstance(p, RandomHamiltonian) for p in parts):
        basis = parts[0].basis
        if all(p.basis is basis for p in parts):
            return SpectralConcatenation(parts, bump)
    return ConcatenatedHamiltonian(parts, bump)


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LagrangianCurve:
    """Closed (or open) polyline stored as planar lifts.

    For closed curves the final vertex equals the first plus the integer
    winding vector, and adjacent lifts stay within 0.5 per coordinate so the
    polyline never aliases across the fundamental domain.
    """

    vertices: np.ndarray
    closed: bool = True
    winding: tuple = (0, 0)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 2:
            raise ValueError("vertices must be an (V, 2) array with V >= 2")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "winding", (int(self.winding[0]), int(self.winding[1])))
        if self.closed:
            # compare via the construction expression: first + winding is the
            # closing vertex bit-for-bit, whereas differencing loses an ulp
            if not np.array_equal(verts[-1], verts[0] + np.array(self.winding, dtype=float)):
                raise ValueError("closed curve must end at first vertex + winding")
        step = np.abs(np.diff(verts, axis=0))
        if step.size and step.max() > 0.5 + 1e-9:
            raise ValueError("adjacent lift vertices must stay within 0.5 per coordinate")

    def __len__(self):
        return len(self.vertices)


def horizontal_circle(y: float = 0.5, n_vertices: int = 128) -> LagrangianCurve:
    """The closed horizontal loop {(a, y)}, winding (1, 0)."""
    alpha = np.linspace(0.0, 1.0, n_vertices + 1)
    verts = np.stack([alpha, np.full_like(alpha, y)], axis=-1)
    return LagrangianCurve(verts, closed=True, winding=(1, 0))


def vertical_circle(x: float = 0.5, n_vertices: int = 128) -> LagrangianCurve:
    alpha = np.linspace(0.0, 1.0, n_vertices + 1)
    verts = np.stack([np.full_like(alpha, x), alpha], axis=-1)
    return LagrangianCurve(verts, closed=True, winding=(0, 1))


def sloped_circle(p: int, q: int, n_vertices: int | None = None) -> LagrangianCurve:
    """The closed loop {(p a, q a) mod 1}, winding (p, q)."""
    if p == 0 and q == 0:
        raise ValueError("slope integers must not both be zero")
    if n_vertices is None:
        n_vertices = 64 * max(abs(p), abs(q), 1)
    alpha = np.linspace(0.0, 1.0, n_vertices + 1)
    verts = np.stack([p * alpha, q * alpha], axis=-1)
    return LagrangianCurve(verts, closed=True, winding=(p, q))


def circle_curve(center, radius: float, n_vertices: int = 128) -> LagrangianCurve:
    """Round circle of given center and radius, winding (0, 0)."""
    if not 0.0 < radius < 0.5:
        raise ValueError("radius must lie in (0, 0.5)")
    theta = np.linspace(0.0, 2.0 * math.pi, n_vertices + 1)
    verts = np.stack([center[0] + radius * np.cos(theta),
                      center[1] + radius * np.sin(theta)], axis=-1)
    verts[-1] = verts[0]
    return LagrangianCurve(verts, closed=True, winding=(0, 0))


def advect_curve(fieldlike, curve: LagrangianCurve, t: float = 1.0,
                 settings: FlowSettings = DEFAULT_SETTINGS) -> LagrangianCurve:
    """Image of a curve under the time-t flow, refined until adjacent image
    vertices are within the refinement threshold.

    Midpoints are inserted on the *source* curve and advected, so refined
    vertices are exact flow images, never interpolations.
    """
    eta = settings.refinement_threshold
    winding = np.array(curve.winding, dtype=float)
    if curve.closed:
        src = curve.vertices[:-1].copy()
    else:
        src = curve.vertices.copy()
    img = _integrate(fieldlike, src, 0.0, t, settings)

    for _ in range(settings.max_refinement_depth + 1):
        if curve.closed:
            img_full = np.vstack([img, img[0] + winding])
            src_full = np.vstack([src, src[0] + winding])
        else:
            img_full, src_full = img, src
        gaps = np.linalg.norm(np.diff(img_full, axis=0), axis=1)
        bad = np.flatnonzero(gaps > eta)
        if bad.size == 0:
            verts = img_full if curve.closed else img
            return LagrangianCurve(verts, closed=curve.closed, winding=curve.winding)
        mids = 0.5 * (src_full[bad] + src_full[bad + 1])
        new_img = _integrate(fieldlike, mids, 0.0, t, settings)
        src = np.insert(src, bad + 1, mids, axis=0)
        img = np.insert(img, bad + 1, new_img, axis=0)
    raise RefinementOverflow(
        f"curve refinement exceeded depth {settings.max_refinement_depth}")


def flow_jacobian_determinant(fieldlike, p: TorusPoint, t: float = 1.0,
                              settings: FlowSettings = DEFAULT_SETTINGS,
                              fd_step: float = 1e-5) -> float:
    """Central-difference determinant of the time-t flow differential at p."""
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    x, y = p.x, p.y
    probes = np.array([[x + fd_step, y], [x - fd_step, y],
                       [x, y + fd_step], [x, y - fd_step]])
    # difference displacements, not positions: exact for the identity flow
    disp = _integrate(fieldlike, probes, 0.0, t, settings) - probes
    col_x = (disp[0] - disp[1]) / (2.0 * fd_step) + np.array([1.0, 0.0])
    col_y = (disp[2] - disp[3]) / (2.0 * fd_step) + np.array([0.0, 1.0])
    return float(col_x[0] * col_y[1] - col_x[1] * col_y[0])
