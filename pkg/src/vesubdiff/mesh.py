"""Graded temporal meshes and the discrete weight tables built on them.

Row conventions: for step ``n`` every row is a 1-d array indexed by the
subscript, i.e. ``l1_weight_row(...)[j] = a^{(n)}_j`` for ``j = 0..n-1`` (so
the entry multiplying ``U^k - U^{k-1}`` is at ``j = n - k``), while
``conv_weight_row(...)[j - 1] = omega_{n,j}`` for ``j = 1..n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .kernel import ExponentModel, beta_kernel, eval_g_tilde, gamma_fn


@dataclass(frozen=True)
class GradedMesh:
    N: int
    T: float
    r: float
    levels: np.ndarray = field(repr=False)
    steps: np.ndarray = field(repr=False)

    def tau(self, k: int) -> float:
        """Step size tau_k, 1 <= k <= N."""
        return float(self.steps[k - 1])


def build_graded_mesh(N: int, T: float = 1.0, r: float = 1.0) -> GradedMesh:
    """Time levels t_n = T (n/N)^r, n = 0..N."""
    if int(N) != N or N < 1:
        raise ConfigError(f"level count must be a positive integer, got {N}", "N")
    if not T > 0:
        raise ConfigError(f"final time must be positive, got {T}", "T")
    if not r >= 1:
        raise ConfigError(f"grading index must be >= 1, got {r}", "r")
    N = int(N)
    levels = T * (np.arange(N + 1) / N) ** r
    levels[0] = 0.0
    levels[-1] = T
    steps = np.diff(levels)
    levels.setflags(write=False)
    steps.setflags(write=False)
    return GradedMesh(N=N, T=float(T), r=float(r), levels=levels, steps=steps)


def _power_differences(y, gap, p):
    """(y + gap)^p - y^p for y >= 0, gap > 0.

    Takes the gap explicitly: near t_n the lags t_n - t_{k-1} and t_n - t_k can
    round to the same double on strongly graded meshes.
    """
    y = np.asarray(y, dtype=float)
    gap = np.asarray(gap, dtype=float)
    out = (y + gap) ** p - y**p
    close = gap < y
    if np.any(close):
        yc = y[close]
        out[close] = yc**p * np.expm1(p * np.log1p(gap[close] / yc))
    return out


def l1_weight_row(mesh: GradedMesh, alpha0: float, n: int) -> np.ndarray:
    """L1 weights a^{(n)}_j, j = 0..n-1, on a nonuniform mesh.

    a^{(n)}_{n-k} = [beta_{2-a0}(t_n - t_{k-1}) - beta_{2-a0}(t_n - t_k)] / tau_k
    """
    if not 1 <= n <= mesh.N:
        raise IndexError(f"step index {n} outside 1..{mesh.N}")
    t = mesh.levels
    k = np.arange(1, n + 1)
    tau = mesh.steps[k - 1]
    y = t[n] - t[k]
    by_k = _power_differences(y, tau, 1.0 - alpha0) / (gamma_fn(2.0 - alpha0) * tau)
    # reorder from k = 1..n to subscript j = n - k = 0..n-1
    return by_k[::-1].copy()


def l1_weight_table(mesh: GradedMesh, alpha0: float) -> list[np.ndarray]:
    """All L1 rows; entry ``n`` is row n (entry 0 is an empty placeholder)."""
    return [np.empty(0)] + [l1_weight_row(mesh, alpha0, n) for n in range(1, mesh.N + 1)]


def g_tilde_history(mesh: GradedMesh, model: ExponentModel, n: int) -> np.ndarray:
    """g_tilde(t_n - t_j) for j = 0..n, with the convention g_tilde(0) = 0."""
    t = mesh.levels
    args = t[n] - t[: n + 1]
    vals = np.zeros(n + 1)
    vals[:n] = eval_g_tilde(model, args[:n])
    return vals


def conv_weight_row(mesh: GradedMesh, model: ExponentModel, n: int,
                    g_values: np.ndarray | None = None) -> np.ndarray:
    """Memory-term weights omega_{n,j} = g(t_n - t_{j-1}) - g(t_n - t_j), j = 1..n."""
    if not 1 <= n <= mesh.N:
        raise IndexError(f"step index {n} outside 1..{mesh.N}")
    if g_values is None:
        g_values = g_tilde_history(mesh, model, n)
    return g_values[:-1] - g_values[1:]


def antiderivative_weight_row(mesh: GradedMesh, antiderivative, n: int) -> np.ndarray:
    """Weights int_{t_{j-1}}^{t_j} K(t_n - s) ds from an antiderivative G of K (G(0) = 0)."""
    t = mesh.levels
    args = t[n] - t[: n + 1]
    vals = np.zeros(n + 1)
    vals[:n] = antiderivative(args[:n])
    return vals[:-1] - vals[1:]


def quadrature_weight_row(mesh: GradedMesh, kernel, n: int) -> np.ndarray:
    """Weights int_{t_{j-1}}^{t_j} K(t_n - s) ds by adaptive quadrature.

    Integrates in the lag variable u = t_n - s so that a singularity of K at
    zero sits on an endpoint that QUADPACK never evaluates.
    """
    from scipy.integrate import quad

    t = mesh.levels
    row = np.empty(n)
    for j in range(1, n + 1):
        lo, hi = t[n] - t[j], t[n] - t[j - 1]
        row[j - 1] = quad(kernel, lo, hi, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
    return row


@dataclass(frozen=True)
class ComplementaryKernelTable:
    """rows[n][j] = P^{(n)}_j for j = 0..n-1 (rows[0] is empty)."""

    alpha0: float
    rows: list = field(repr=False)

    def entry(self, n: int, k: int) -> float:
        """P^{(n)}_{n-k}."""
        return float(self.rows[n][n - k])


def complementary_kernels(mesh: GradedMesh, alpha0: float,
                          l1_rows: list[np.ndarray] | None = None) -> ComplementaryKernelTable:
    """Discrete resolvent kernels of the L1 weights.

    P^{(n)}_0 = 1/a^{(n)}_0 and, for k = n-1..1,
    P^{(n)}_{n-k} = (1/a^{(k)}_0) * sum_{j=k+1}^{n} (a^{(j)}_{j-k-1} - a^{(j)}_{j-k}) P^{(n)}_{n-j}
    """
    N = mesh.N
    a = l1_rows if l1_rows is not None else l1_weight_table(mesh, alpha0)
    # diffs[k][j] = a^{(j)}_{j-k-1} - a^{(j)}_{j-k} for j = k+1..N
    rows: list[np.ndarray] = [np.empty(0)]
    diffs = [None] * (N + 1)
    for k in range(1, N):
        js = np.arange(k + 1, N + 1)
        diffs[k] = np.array([a[j][j - k - 1] - a[j][j - k] for j in js])
    for n in range(1, N + 1):
        P = np.empty(n)  # P[n - k] = P^{(n)}_{n-k}
        P[0] = 1.0 / a[n][0]
        for k in range(n - 1, 0, -1):
            # j = k+1..n  <->  P index n - j = n-k-1..0
            d = diffs[k][: n - k]
            P[n - k] = np.dot(d, P[n - k - 1::-1]) / a[k][0]
        rows.append(P)
    return ComplementaryKernelTable(alpha0=alpha0, rows=rows)


@dataclass
class KernelBoundsReport:
    passed: bool
    # worst margins: positive means the inequality holds with that much room
    positivity_min: float
    bound_margin: float
    orthogonality_error: float
    q0_margin: float
    q1_margin: float
    failures: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "positivity_min": self.positivity_min,
            "bound_margin": self.bound_margin,
            "orthogonality_error": self.orthogonality_error,
            "q0_margin": self.q0_margin,
            "q1_margin": self.q1_margin,
            "failures": list(self.failures),
        }


def check_lemma_bounds(table: ComplementaryKernelTable, mesh: GradedMesh, alpha0: float,
                       l1_rows: list[np.ndarray] | None = None,
                       slack: float = 1e-12, orth_tol: float = 1e-10) -> KernelBoundsReport:
    """Verify positivity/upper bound, discrete orthogonality and the q = 0, 1 sums."""
    a = l1_rows if l1_rows is not None else l1_weight_table(mesh, alpha0)
    t = mesh.levels
    g2 = gamma_fn(2.0 - alpha0)
    pos_min = np.inf
    bound_margin = np.inf
    orth_err = 0.0
    q0 = np.inf
    q1 = np.inf
    failures = []
    for n in range(1, mesh.N + 1):
        P = table.rows[n]
        k = np.arange(1, n + 1)
        Pk = P[n - k]  # P^{(n)}_{n-k} ordered by k
        pos_min = min(pos_min, Pk.min())
        bound = g2 * mesh.steps[k - 1] ** alpha0
        bound_margin = min(bound_margin, np.min((bound - Pk) / bound))
        for kk in range(1, n + 1):
            s = sum(P[n - j] * a[j][j - kk] for j in range(kk, n + 1))
            orth_err = max(orth_err, abs(s - 1.0))
        lhs0 = np.dot(Pk, beta_kernel(1.0 - alpha0, t[k]))
        lhs1 = np.sum(Pk)
        q0 = min(q0, 1.0 - lhs0)
        q1 = min(q1, beta_kernel(1.0 + alpha0, t[n]) - lhs1)
    if not pos_min > 0:
        failures.append("positivity")
    if bound_margin < -slack:
        failures.append("upper bound")
    if orth_err > orth_tol:
        failures.append("orthogonality")
    if q0 < -slack:
        failures.append("q=0 sum")
    if q1 < -slack:
        failures.append("q=1 sum")
    return KernelBoundsReport(
        passed=not failures,
        positivity_min=float(pos_min),
        bound_margin=float(bound_margin),
        orthogonality_error=float(orth_err),
        q0_margin=float(q0),
        q1_margin=float(q1),
        failures=failures,
    )
