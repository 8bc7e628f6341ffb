"""Independent constant-order L1 solver used as a cross-check.

Deliberately shares no code path with :mod:`vesubdiff.solver`: L1 weights
come from direct power differences in 40-digit mpmath arithmetic, the
Galerkin matrices are assembled densely element by element, and each step
is a dense LU solve.  There is no memory term, so it reproduces the main
solver only for a constant exponent.
"""
from __future__ import annotations

import mpmath
import numpy as np
import scipy.linalg as la


def _dense_1d(J):
    h = 1.0 / J
    n = J - 1
    M = np.zeros((n, n))
    S = np.zeros((n, n))
    # element e spans nodes e and e+1 (node 0 and J are boundary)
    for e in range(J):
        loc = [e - 1, e]  # interior indices of the element's two nodes
        Me = h / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
        Se = 1.0 / h * np.array([[1.0, -1.0], [-1.0, 1.0]])
        for a in range(2):
            for b in range(2):
                i, j = loc[a], loc[b]
                if 0 <= i < n and 0 <= j < n:
                    M[i, j] += Me[a, b]
                    S[i, j] += Se[a, b]
    return M, S


def dense_operators(d, J):
    M1, S1 = _dense_1d(J)
    if d == 1:
        return M1, S1
    return np.kron(M1, M1), np.kron(S1, M1) + np.kron(M1, S1)


def mp_l1_weights(levels, alpha0, dps=40):
    """Full lower-triangular table A[n][k] = a^{(n)}_{n-k}, k = 1..n, as floats."""
    N = len(levels) - 1
    with mpmath.workdps(dps):
        t = [mpmath.mpf(float(x)) for x in levels]
        p = 1 - mpmath.mpf(alpha0)
        g = mpmath.gamma(2 - mpmath.mpf(alpha0))
        A = np.zeros((N + 1, N + 1))
        for n in range(1, N + 1):
            for k in range(1, n + 1):
                x = t[n] - t[k - 1]
                y = t[n] - t[k]
                A[n, k] = float((x**p - y**p) / (g * (t[k] - t[k - 1])))
    return A


def constant_order_l1(d, J, levels, alpha0, u0_nodal, f):
    """March D_N U^n + A_h U^n = f^n with dense linear algebra.

    ``f(t)`` returns the nodal source vector at time t.
    """
    M, S = dense_operators(d, J)
    A = mp_l1_weights(levels, alpha0)
    N = len(levels) - 1
    U = [np.array(u0_nodal, dtype=float)]
    for n in range(1, N + 1):
        # sum_k a^{(n)}_{n-k} (U^k - U^{k-1}) with the U^n part moved left
        known = np.zeros_like(U[0])
        for k in range(1, n + 1):
            prev = U[k - 1]
            known = known + A[n, k] * prev
            if k < n:
                known = known - A[n, k] * U[k]
        rhs = M @ (f(levels[n]) + known)
        lu = la.lu_factor(A[n, n] * M + S)
        U.append(la.lu_solve(lu, rhs))
    return np.array(U)
