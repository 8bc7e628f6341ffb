"""Time marching for the L1 / interpolation-quadrature Galerkin scheme.

Both marchers solve, at every level n,

    (c_mass M + c_stiff S) U^n = M (source + L1 history - w1 H) + w2 S H

where H collects the already-known part of the memory quadrature
``omega_{n,1} U^1 + sum_{j>=2} omega_{n,j} (U^{j-1} + U^j)/2``.  The reformulated
variable-exponent problem is the case w1 = 1, w2 = 0 with the g_tilde-based
weights; the generalized memory problem supplies its own kernel weights and
operator weights (w1, w2).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericalError
from .kernel import ExponentModel, gamma_fn
from .mesh import (GradedMesh, antiderivative_weight_row, conv_weight_row,
                   g_tilde_history, l1_weight_row, quadrature_weight_row)
from .space import SpatialGrid, SpatialOperators, build_operators, interpolate_nodal


@dataclass
class ProblemSpec:
    grid: SpatialGrid
    mesh: GradedMesh
    model: ExponentModel
    u0: Callable
    f: Callable  # f(*coords, t)

    def __post_init__(self):
        a0 = self.model.alpha0
        if not 0.0 < a0 < 1.0:
            raise ValueError(f"alpha0 must lie in (0, 1), got {a0}")


@dataclass
class GeneralMemorySpec:
    """Constant-order problem with memory term -(K * A u), A = w1 I + w2 Laplacian."""

    grid: SpatialGrid
    mesh: GradedMesh
    alpha0: float
    kernel: Callable
    mu: float
    w1: float
    w2: float
    u0: Callable
    f: Callable
    kernel_antiderivative: Callable | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha0 < 1.0:
            raise ValueError(f"alpha0 must lie in (0, 1), got {self.alpha0}")
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")
        if abs(self.w1) > 1 or abs(self.w2) > 1:
            raise ValueError("operator weights must satisfy |w1|, |w2| <= 1")
        t = self.mesh.T * np.logspace(-8, 0, 33)
        scaled = np.abs(np.asarray(self.kernel(t), dtype=float)) * t**self.mu
        if not np.all(np.isfinite(scaled)) or scaled.max() > 1e8:
            raise ValueError("kernel is not bounded by C t^-mu on the sampled range")


def power_law_kernel(mu: float):
    """K(t) = t^-mu / Gamma(1 - mu) and its antiderivative t^(1-mu) / Gamma(2 - mu)."""
    g1 = gamma_fn(1.0 - mu)
    g2 = gamma_fn(2.0 - mu)

    def kernel(t):
        return np.asarray(t, dtype=float) ** (-mu) / g1

    def antiderivative(t):
        return np.asarray(t, dtype=float) ** (1.0 - mu) / g2

    return kernel, antiderivative


@dataclass
class SolutionHistory:
    values: np.ndarray = field(repr=False)  # shape (N + 1, m)
    mesh: GradedMesh
    grid: SpatialGrid

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    def __len__(self):
        return self.values.shape[0]


def step_matrix_coeffs(mesh: GradedMesh, alpha0: float, omega_row: np.ndarray, n: int,
                       l1_row: np.ndarray | None = None) -> tuple[float, float]:
    """Mass and stiffness coefficients of the implicit step system at level n.

    The memory self-term contributes omega_{1,1} at n = 1 and omega_{n,n}/2
    (the U^n half of the midpoint value) for n >= 2.
    """
    a = l1_row if l1_row is not None else l1_weight_row(mesh, alpha0, n)
    theta = 1.0 if n == 1 else 0.5
    return float(a[0] + theta * omega_row[n - 1]), 1.0


def l1_history_coeffs(a: np.ndarray, n: int) -> np.ndarray:
    """Coefficients c_k, k = 0..n-1, with D U^n = a_0 U^n - sum_k c_k U^k."""
    c = np.empty(n)
    c[0] = a[n - 1]
    if n > 1:
        k = np.arange(1, n)
        c[1:] = a[n - k - 1] - a[n - k]
    return c


def memory_history_coeffs(omega: np.ndarray, n: int) -> np.ndarray:
    """Coefficients of U^0..U^{n-1} in the memory quadrature (explicit part only)."""
    c = np.zeros(n)
    if n == 1:
        return c
    c[1] = omega[0]
    # (U^{j-1} + U^j)/2 for j = 2..n distributes omega_{n,j}/2 onto k = j-1 and k = j
    c[1:n] += 0.5 * omega[1:n]
    if n > 2:
        c[2:n] += 0.5 * omega[1:n - 1]
    return c


def _weighted_sum(coeffs, U, compensated):
    if not compensated:
        return coeffs @ U
    # Neumaier summation, oldest to newest
    s = np.zeros(U.shape[1])
    comp = np.zeros(U.shape[1])
    for c, u in zip(coeffs, U):
        term = c * u
        tot = s + term
        big = np.abs(s) >= np.abs(term)
        comp += np.where(big, (s - tot) + term, (term - tot) + s)
        s = tot
    return s + comp


def _march_core(grid, mesh, alpha0, u0, step_data, w1, w2, ops=None, compensated=False):
    """``step_data(n)`` returns (memory weight row, nodal source) for level n."""
    ops = ops or build_operators(grid)
    N = mesh.N
    U = np.empty((N + 1, grid.m))
    U[0] = interpolate_nodal(grid, u0)
    for n in range(1, N + 1):
        a = l1_weight_row(mesh, alpha0, n)
        omega, src = step_data(n)
        theta = 1.0 if n == 1 else 0.5
        c_mass = a[0] + theta * omega[n - 1] * w1
        c_stiff = 1.0 - theta * omega[n - 1] * w2
        if not (c_mass > 0 and c_stiff > 0):
            raise NumericalError(f"step {n}: implicit system not positive definite "
                                 f"(c_mass={c_mass:.3e}, c_stiff={c_stiff:.3e})")
        rhs_nodal = src + _weighted_sum(l1_history_coeffs(a, n), U[:n], compensated)
        H = None
        if n > 1 and (w1 or w2):
            H = _weighted_sum(memory_history_coeffs(omega, n), U[:n], compensated)
            rhs_nodal = rhs_nodal - w1 * H
        rhs = ops.mass(rhs_nodal)
        if H is not None and w2:
            rhs = rhs + w2 * ops.stiffness(H)
        U[n] = ops.solve(c_mass, c_stiff, rhs)
        if not np.all(np.isfinite(U[n])):
            raise NumericalError(f"non-finite solution at step {n}")
    return SolutionHistory(values=U, mesh=mesh, grid=grid)


def _nodal_source(grid, f, t):
    return np.broadcast_to(np.asarray(f(*grid.coords(), t), dtype=float), (grid.m,))


def march(spec: ProblemSpec, compensated: bool = False,
          ops: SpatialOperators | None = None) -> SolutionHistory:
    """Fully discrete scheme for the reformulated variable-exponent problem."""
    grid, mesh, model = spec.grid, spec.mesh, spec.model
    u0_nodal = interpolate_nodal(grid, spec.u0)

    def step_data(n):
        g = g_tilde_history(mesh, model, n)
        omega = conv_weight_row(mesh, model, n, g_values=g)
        # F^n = f^n + g_tilde(t_n) u0
        return omega, _nodal_source(grid, spec.f, mesh.levels[n]) + g[0] * u0_nodal

    return _march_core(grid, mesh, model.alpha0, spec.u0, step_data, 1.0, 0.0,
                       ops=ops, compensated=compensated)


def general_weight_row(spec: GeneralMemorySpec, n: int) -> np.ndarray:
    if spec.kernel_antiderivative is not None:
        return antiderivative_weight_row(spec.mesh, spec.kernel_antiderivative, n)
    return quadrature_weight_row(spec.mesh, spec.kernel, n)


def march_general(spec: GeneralMemorySpec, compensated: bool = False,
                  ops: SpatialOperators | None = None) -> SolutionHistory:
    """Scheme for the constant-order problem with memory term -(K * A u)."""
    grid, mesh = spec.grid, spec.mesh

    def step_data(n):
        return general_weight_row(spec, n), _nodal_source(grid, spec.f, mesh.levels[n])

    return _march_core(grid, mesh, spec.alpha0, spec.u0, step_data, spec.w1, spec.w2,
                       ops=ops, compensated=compensated)


def scheme_residuals(history: SolutionHistory, alpha0: float, memory_row: Callable,
                     source: Callable, w1: float = 1.0, w2: float = 0.0,
                     ops: SpatialOperators | None = None) -> np.ndarray:
    """Mass-norm residual of the discrete equation at every level n = 1..N.

    Re-evaluates the L1 sum and the memory quadrature term by term, independent
    of the coefficient bookkeeping used while marching.
    """
    mesh, grid = history.mesh, history.grid
    ops = ops or build_operators(grid)
    U = history.values
    out = np.empty(mesh.N)
    for n in range(1, mesh.N + 1):
        a = l1_weight_row(mesh, alpha0, n)
        omega = memory_row(n)
        D = sum(a[n - k] * (U[k] - U[k - 1]) for k in range(1, n + 1))
        I = omega[0] * U[1]
        for j in range(2, n + 1):
            I = I + omega[j - 1] * 0.5 * (U[j - 1] + U[j])
        # weak form: M D + S U + (w1 M - w2 S) I - M F
        r = ops.mass(D + w1 * I - source(n)) + ops.stiffness(U[n] - w2 * I)
        rho = ops.solve(1.0, 0.0, r)
        out[n - 1] = np.sqrt(max(rho @ ops.mass(rho), 0.0))
    return out


def problem_residuals(spec: ProblemSpec, history: SolutionHistory) -> np.ndarray:
    grid, mesh, model = spec.grid, spec.mesh, spec.model
    u0_nodal = interpolate_nodal(grid, spec.u0)

    def source(n):
        g = g_tilde_history(mesh, model, n)
        return _nodal_source(grid, spec.f, mesh.levels[n]) + g[0] * u0_nodal

    return scheme_residuals(history, model.alpha0,
                            lambda n: conv_weight_row(mesh, model, n), source)


def general_residuals(spec: GeneralMemorySpec, history: SolutionHistory) -> np.ndarray:
    return scheme_residuals(history, spec.alpha0, lambda n: general_weight_row(spec, n),
                            lambda n: _nodal_source(spec.grid, spec.f, spec.mesh.levels[n]),
                            w1=spec.w1, w2=spec.w2)


def solution_norm(history: SolutionHistory, ops: SpatialOperators | None = None) -> np.ndarray:
    """Galerkin L2 norm sqrt(U^T M U) at every level."""
    ops = ops or build_operators(history.grid)
    return np.array([np.sqrt(u @ ops.mass(u)) for u in history.values])


__all__ = [
    "ProblemSpec", "GeneralMemorySpec", "SolutionHistory", "power_law_kernel",
    "step_matrix_coeffs", "march", "march_general", "problem_residuals",
    "general_residuals", "scheme_residuals", "solution_norm",
]
