"""Vectorized evaluation of truncated eigenfunction sums.

A field H(t, x, y) = sum_n c_n(t) e_n(x, y) over a tensor-product trig basis
is evaluated through per-axis cosine/sine tables and small matrix products.
Coefficients are packed into "grids": for each x-factor (cos/sin) a matrix of
shape (kmax+1, 2*(kmax+1)) whose left block multiplies cos(2 pi j y) and
right block sin(2 pi j y).  Row/column 0 carries axis modes when present.

Evaluating P points then costs a handful of (P, K) @ (K, 2K) products per
quantity, which keeps the O(modes x points) inner loop in BLAS.
"""

from __future__ import annotations

import math

import numpy as np

from .basis import SpectralBasis

_TWO_PI = 2.0 * math.pi


class SpectralEngine:
    """Evaluation kernels bound to one basis."""

    def __init__(self, basis: SpectralBasis):
        self.basis = basis
        self.kmax = int(basis.truncation.spatial_max)
        k1 = self.kmax + 1
        self._k1 = k1
        # Placement of mode n: block basis.tx[n], row kx, column ty*(kmax+1)+ky.
        self._cols = basis.ty * k1 + basis.ky
        self._kvec = _TWO_PI * np.arange(k1)

    # -- coefficient packing -------------------------------------------------

    def grids(self, coeffs: np.ndarray) -> np.ndarray:
        """Pack per-mode coefficients (..., N) into grids (..., 2, K1, 2*K1).

        Amplitudes are applied here, so ``coeffs`` are the raw c_n(t).
        """
        coeffs = np.asarray(coeffs, dtype=float)
        b = self.basis
        out = np.zeros(coeffs.shape[:-1] + (2, self._k1, 2 * self._k1))
        out[..., b.tx, b.kx, self._cols] = coeffs * b.amplitudes
        return out

    # -- per-axis tables -----------------------------------------------------

    def _tables(self, coords: np.ndarray):
        """cos/sin of 2 pi k c for k = 0..kmax, via complex power recurrence."""
        z = np.exp(1j * _TWO_PI * (coords % 1.0))
        zk = np.empty(coords.shape + (self._k1,), dtype=complex)
        zk[..., 0] = 1.0
        for k in range(1, self._k1):
            np.multiply(zk[..., k - 1], z, out=zk[..., k])
        return np.ascontiguousarray(zk.real), np.ascontiguousarray(zk.imag)

    # -- evaluation ----------------------------------------------------------

    def value(self, grid: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """H at points (P, 2) for one packed grid (2, K1, 2*K1)."""
        cx, sx = self._tables(pts[:, 0])
        cy, sy = self._tables(pts[:, 1])
        w = cx @ grid[0] + sx @ grid[1]
        k1 = self._k1
        return np.einsum("pk,pk->p", w[:, :k1], cy) + np.einsum("pk,pk->p", w[:, k1:], sy)

    def gradient(self, grid: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """(dH/dx, dH/dy) at points (P, 2)."""
        dx, dy = self._deriv_pair(grid, pts)
        return np.stack([dx, dy], axis=-1)

    def vector_field(self, grid: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Hamiltonian vector field (-dH/dy, dH/dx) for the area form dx^dy."""
        dx, dy = self._deriv_pair(grid, pts)
        return np.stack([-dy, dx], axis=-1)

    def _deriv_pair(self, grid, pts):
        cx, sx = self._tables(pts[:, 0])
        cy, sy = self._tables(pts[:, 1])
        kv = self._kvec
        w = cx @ grid[0] + sx @ grid[1]
        wx = (cx * kv) @ grid[1] - (sx * kv) @ grid[0]
        k1 = self._k1
        ddx = np.einsum("pk,pk->p", wx[:, :k1], cy) + np.einsum("pk,pk->p", wx[:, k1:], sy)
        ddy = (np.einsum("pk,pk->p", w[:, k1:], cy * kv)
               - np.einsum("pk,pk->p", w[:, :k1], sy * kv))
        return ddx, ddy

    def value_grid(self, grid: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """H on the tensor lattice xs x ys, shape (len(xs), len(ys))."""
        cx, sx = self._tables(np.asarray(xs, dtype=float))
        cy, sy = self._tables(np.asarray(ys, dtype=float))
        w = cx @ grid[0] + sx @ grid[1]
        k1 = self._k1
        return w[:, :k1] @ cy.T + w[:, k1:] @ sy.T

    def mode_values(self, pts: np.ndarray) -> np.ndarray:
        """e_n at each point: shape (P, N).  Used by diagnostics, not flows."""
        b = self.basis
        ax = _TWO_PI * np.multiply.outer(pts[:, 0], b.kx.astype(float))
        ay = _TWO_PI * np.multiply.outer(pts[:, 1], b.ky.astype(float))
        fx = np.where(b.tx == 0, np.cos(ax), np.sin(ax))
        fy = np.where(b.ty == 0, np.cos(ay), np.sin(ay))
        return b.amplitudes * fx * fy
