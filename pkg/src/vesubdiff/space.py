"""Piecewise-(bi)linear Galerkin operators on the unit interval / square.

Homogeneous Dirichlet conditions; only interior nodes carry unknowns.  In 2D
nodal vectors are stored row-major over (i_x, i_y), so a vector ``v`` reshapes
to ``V[i_x - 1, i_y - 1]`` and Kronecker products act as
``kron(A, B) v == (A V B^T).ravel()``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.fft import dstn
from scipy.linalg import solveh_banded

from .errors import ConfigError, NumericalError

SOLVE_RTOL = 1e-12


@dataclass(frozen=True)
class SpatialGrid:
    d: int
    J: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ConfigError(f"dimension must be 1 or 2, got {self.d}", "d")
        if int(self.J) != self.J or self.J < 2:
            raise ConfigError(f"need at least two intervals per direction, got {self.J}", "J")

    @property
    def h(self) -> float:
        return 1.0 / self.J

    @property
    def n1(self) -> int:
        """Interior nodes per direction."""
        return self.J - 1

    @property
    def m(self) -> int:
        return self.n1**self.d

    @property
    def axis(self) -> np.ndarray:
        return np.arange(1, self.J) / self.J

    @property
    def nodes(self) -> np.ndarray:
        """Interior node coordinates: shape (m,) in 1D, (m, 2) in 2D."""
        x = self.axis
        if self.d == 1:
            return x
        X, Y = np.meshgrid(x, x, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    def coords(self):
        """Coordinate arrays suitable for calling data functions: (x,) or (x, y)."""
        pts = self.nodes
        if self.d == 1:
            return (pts,)
        return (pts[:, 0], pts[:, 1])


@dataclass(frozen=True)
class SpatialOperators:
    """Mass and stiffness operators of the interior Galerkin space.

    Only the 1D tridiagonal factors are stored; 2D operators are applied and
    inverted through their Kronecker structure.
    """

    grid: SpatialGrid
    mass1: sp.csr_matrix = field(repr=False)
    stiff1: sp.csr_matrix = field(repr=False)

    # 1D tridiagonal coefficients: mass (h/6)(1,4,1), stiffness (1/h)(-1,2,-1)
    @property
    def _mass_diag(self):
        return 4.0 * self.grid.h / 6.0, self.grid.h / 6.0

    @property
    def _stiff_diag(self):
        return 2.0 / self.grid.h, -1.0 / self.grid.h

    @cached_property
    def _sine_symbols(self):
        # eigenvalues of the 1D factors on the orthonormal DST-I basis
        g = self.grid
        theta = np.arange(1, g.J) * np.pi / g.J
        mu = g.h / 6.0 * (4.0 + 2.0 * np.cos(theta))
        sigma = (2.0 - 2.0 * np.cos(theta)) / g.h
        return mu, sigma

    def _kron_apply(self, A, B, v):
        n = self.grid.n1
        V = v.reshape(n, n)
        return (A @ (B @ V.T).T).ravel()

    def mass(self, v: np.ndarray) -> np.ndarray:
        if self.grid.d == 1:
            return self.mass1 @ v
        return self._kron_apply(self.mass1, self.mass1, v)

    def stiffness(self, v: np.ndarray) -> np.ndarray:
        if self.grid.d == 1:
            return self.stiff1 @ v
        return (self._kron_apply(self.stiff1, self.mass1, v)
                + self._kron_apply(self.mass1, self.stiff1, v))

    def combined(self, c1: float, c2: float, v: np.ndarray) -> np.ndarray:
        """(c1 M + c2 S) v."""
        return c1 * self.mass(v) + c2 * self.stiffness(v)

    def matrix(self, c1: float = 1.0, c2: float = 0.0) -> sp.csr_matrix:
        """Assembled sparse c1 M + c2 S (for diagnostics and oracles)."""
        M1, S1 = self.mass1, self.stiff1
        if self.grid.d == 1:
            return (c1 * M1 + c2 * S1).tocsr()
        M = sp.kron(M1, M1)
        S = sp.kron(S1, M1) + sp.kron(M1, S1)
        return (c1 * M + c2 * S).tocsr()

    def _raw_solve(self, c1, c2, rhs):
        if self.grid.d == 1:
            md, mo = self._mass_diag
            sd, so = self._stiff_diag
            n = self.grid.n1
            ab = np.empty((2, n))
            ab[0, :] = c1 * mo + c2 * so
            ab[1, :] = c1 * md + c2 * sd
            return solveh_banded(ab, rhs, lower=False, check_finite=False)
        mu, sigma = self._sine_symbols
        n = self.grid.n1
        R = rhs.reshape(n, n)
        symbol = (c1 * np.outer(mu, mu)
                  + c2 * (np.outer(sigma, mu) + np.outer(mu, sigma)))
        Y = dstn(R, type=1, norm="ortho") / symbol
        return dstn(Y, type=1, norm="ortho").ravel()

    def solve(self, c1: float, c2: float, rhs: np.ndarray,
              rtol: float = SOLVE_RTOL, refinements: int = 2) -> np.ndarray:
        """Solve (c1 M + c2 S) v = rhs; see :func:`solve_system`."""
        if not c1 > 0 or c2 < 0:
            raise NumericalError(f"step system not positive definite (c1={c1}, c2={c2})")
        rhs = np.asarray(rhs, dtype=float)
        rnorm = np.linalg.norm(rhs)
        if rnorm == 0.0:
            return np.zeros_like(rhs)
        v = self._raw_solve(c1, c2, rhs)
        res = np.inf
        for _ in range(refinements + 1):
            resid = rhs - self.combined(c1, c2, v)
            res = np.linalg.norm(resid) / rnorm
            if res <= rtol:
                return v
            v = v + self._raw_solve(c1, c2, resid)
        resid = rhs - self.combined(c1, c2, v)
        res = np.linalg.norm(resid) / rnorm
        if res > rtol:
            raise NumericalError(f"linear solve residual {res:.3e} exceeds {rtol:.1e}")
        return v


def _tridiag(n, diag, off):
    return sp.diags([np.full(n - 1, off), np.full(n, diag), np.full(n - 1, off)],
                    [-1, 0, 1], format="csr")


def build_operators(grid: SpatialGrid) -> SpatialOperators:
    """Assemble the Galerkin mass and stiffness operators for ``grid``."""
    n, h = grid.n1, grid.h
    mass1 = _tridiag(n, 4.0 * h / 6.0, h / 6.0)
    stiff1 = _tridiag(n, 2.0 / h, -1.0 / h)
    return SpatialOperators(grid=grid, mass1=mass1, stiff1=stiff1)


def solve_system(ops: SpatialOperators, c1: float, c2: float, rhs: np.ndarray) -> np.ndarray:
    """Return v with (c1 M + c2 S) v = rhs to relative residual 1e-12.

    Raises NumericalError if the residual target is not met after iterative
    refinement.
    """
    return ops.solve(c1, c2, rhs)


def interpolate_nodal(grid: SpatialGrid, fn) -> np.ndarray:
    """Values of ``fn`` at the interior nodes (boundary values are zero)."""
    vals = np.asarray(fn(*grid.coords()), dtype=float)
    return np.broadcast_to(vals, (grid.m,)).copy()
