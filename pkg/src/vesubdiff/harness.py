"""Two-mesh convergence experiments, rate tables and the invariant suite.

Rate-table rows are labelled by the finer resolution of each compared pair:
the row for resolution R holds the two-mesh error between the runs at R/2
and R.  A ladder of L rows starting at R0 therefore needs runs at
R0/2, R0, 2 R0, ..., 2^{L-1} R0, and consecutive rows share one run.
"""
from __future__ import annotations

import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .kernel import (beta_kernel, constant_exponent, digamma_fn, eval_g_tilde,
                     example1_exponent, example2_exponent, gamma_fn)
from .mesh import (GradedMesh, build_graded_mesh, check_lemma_bounds,
                   complementary_kernels, conv_weight_row, l1_weight_table)
from .space import SpatialGrid, interpolate_nodal
from .solver import (GeneralMemorySpec, ProblemSpec, general_residuals, march,
                     march_general, power_law_kernel, problem_residuals)

# first row of each printed temporal ladder, keyed by (example, alpha0)
TEMPORAL_LADDER_START = {
    (1, 0.3): 32, (1, 0.5): 64, (1, 0.75): 128,
    (2, 0.4): 64, (2, 0.6): 128, (2, 0.8): 256,
}
DEFAULT_TEMPORAL_START = 64
DEFAULT_SPATIAL_START = 32
DEFAULT_FIXED_J = 32
DEFAULT_FIXED_N = 128
DEFAULT_LEVELS = 4
EXAMPLE_DIMENSION = {1: 1, 2: 2, 3: 1}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: an example problem plus a resolution ladder.

    ``example`` 1 and 2 are the variable-exponent test problems; ``example`` 3
    is the constant-order problem with power-law memory kernel
    t^-mu/Gamma(1-mu) and operator w1 I + w2 Laplacian.
    For ``axis="time"`` ``N`` is the first row of the ladder and ``J`` is
    fixed; for ``axis="space"`` ``J`` is the first row and ``N`` fixed.
    """

    example: int
    alpha0: float
    alphaT: Optional[float] = None
    axis: str = "time"
    levels: int = DEFAULT_LEVELS
    r: Optional[float] = None
    N: Optional[int] = None
    J: Optional[int] = None
    T: float = 1.0
    d: Optional[int] = None
    mu: float = 0.5
    w1: float = 1.0
    w2: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.example not in EXAMPLE_DIMENSION:
            raise ConfigError(f"unknown example id {self.example}", "example")
        if not 0.0 < self.alpha0 < 1.0:
            raise ConfigError(f"must lie in (0, 1), got {self.alpha0}", "alpha0")
        if self.example == 2:
            if self.alphaT is None:
                raise ConfigError("required for example 2", "alphaT")
            if not 0.0 < self.alphaT < 1.0:
                raise ConfigError(f"must lie in (0, 1), got {self.alphaT}", "alphaT")
        if self.axis not in ("time", "space"):
            raise ConfigError(f"must be 'time' or 'space', got {self.axis!r}", "axis")
        if self.levels < 2:
            raise ConfigError(f"need at least 2 levels for rates, got {self.levels}", "levels")
        if self.r is not None and self.r < 1:
            raise ConfigError(f"grading index must be >= 1, got {self.r}", "r")
        if not self.T > 0:
            raise ConfigError(f"must be positive, got {self.T}", "T")
        if self.d is not None and self.d not in (1, 2):
            raise ConfigError(f"must be 1 or 2, got {self.d}", "d")
        for key in ("N", "J"):
            v = getattr(self, key)
            if v is not None and (v < 2 or v % 2):
                raise ConfigError(f"must be an even integer >= 2, got {v}", key)
        if self.example == 3:
            if not 0.0 < self.mu < 1.0:
                raise ConfigError(f"must lie in (0, 1), got {self.mu}", "mu")
            if abs(self.w1) > 1 or abs(self.w2) > 1:
                raise ConfigError("operator weights need |w| <= 1", "w1" if abs(self.w1) > 1 else "w2")
        # the exponent must stay inside (0, 1) over [0, T]
        self.exponent_model().validate()

    @property
    def grading(self) -> float:
        return self.r if self.r is not None else (2.0 - self.alpha0) / self.alpha0

    @property
    def dim(self) -> int:
        return self.d if self.d is not None else EXAMPLE_DIMENSION[self.example]

    @property
    def ladder_start(self) -> int:
        if self.axis == "time":
            if self.N is not None:
                return self.N
            return TEMPORAL_LADDER_START.get((self.example, round(self.alpha0, 6)),
                                             DEFAULT_TEMPORAL_START)
        return self.J if self.J is not None else DEFAULT_SPATIAL_START

    @property
    def fixed_resolution(self) -> int:
        if self.axis == "time":
            return self.J if self.J is not None else DEFAULT_FIXED_J
        return self.N if self.N is not None else DEFAULT_FIXED_N

    def ladder(self) -> list[int]:
        """Row labels of the rate table."""
        return [self.ladder_start * 2**i for i in range(self.levels)]

    def run_resolutions(self) -> list[int]:
        """Resolutions actually solved: the half of the first row, then the ladder."""
        return [self.ladder_start // 2] + self.ladder()

    def exponent_model(self):
        if self.example == 1:
            return example1_exponent(self.alpha0, self.T)
        if self.example == 2:
            return example2_exponent(self.alpha0, self.alphaT, self.T)
        return constant_exponent(self.alpha0, self.T)

    def file_stem(self) -> str:
        stem = f"example{self.example}_{self.axis}_{self.alpha0:g}"
        if self.alphaT is not None:
            stem += f"_{self.alphaT:g}"
        return stem


def _initial(d):
    if d == 1:
        return lambda x: np.sin(np.pi * x)
    return lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)


def _unit_source(*args):
    return np.ones_like(args[0])


def build_problem(config: ExperimentConfig, N: int, J: int):
    """ProblemSpec (examples 1, 2) or GeneralMemorySpec (example 3) at resolution (N, J)."""
    grid = SpatialGrid(config.dim, J)
    mesh = build_graded_mesh(N, config.T, config.grading)
    if config.example == 3:
        kernel, anti = power_law_kernel(config.mu)
        return GeneralMemorySpec(grid=grid, mesh=mesh, alpha0=config.alpha0, kernel=kernel,
                                 mu=config.mu, w1=config.w1, w2=config.w2,
                                 u0=_initial(config.dim), f=_unit_source,
                                 kernel_antiderivative=anti)
    return ProblemSpec(grid=grid, mesh=mesh, model=config.exponent_model(),
                       u0=_initial(config.dim), f=_unit_source)


def solve_problem(spec):
    if isinstance(spec, GeneralMemorySpec):
        return march_general(spec)
    return march(spec)


@dataclass
class FinalState:
    """Final-time slice of a run (what the two-mesh errors need)."""

    grid: SpatialGrid
    mesh: GradedMesh
    final: np.ndarray


def run_final(config: ExperimentConfig, N: int, J: int) -> FinalState:
    hist = solve_problem(build_problem(config, N, J))
    return FinalState(grid=hist.grid, mesh=hist.mesh, final=hist.final.copy())


def two_mesh_temporal_error(coarse, fine) -> float:
    """Discrete L2 distance at t = T between runs with N and 2N steps on one grid."""
    if coarse.grid != fine.grid:
        raise ConfigError("temporal two-mesh error needs identical spatial grids", "J")
    if fine.mesh.N != 2 * coarse.mesh.N:
        raise ConfigError("fine run must use twice as many steps", "N")
    if coarse.mesh.r != fine.mesh.r or coarse.mesh.T != fine.mesh.T:
        raise ConfigError("runs must share grading index and final time", "r")
    g = coarse.grid
    diff = coarse.final - fine.final
    return float(np.sqrt(g.h**g.d * np.sum(diff**2)))


def two_mesh_spatial_error(coarse, fine) -> float:
    """Discrete L2 distance at t = T on the coarse nodes (fine nodes 2i)."""
    gc, gf = coarse.grid, fine.grid
    if gc.d != gf.d or gf.J != 2 * gc.J:
        raise ConfigError("fine grid must have twice as many intervals", "J")
    if coarse.mesh.N != fine.mesh.N:
        raise ConfigError("spatial two-mesh error needs identical time meshes", "N")
    n_f = gf.n1
    F = fine.final.reshape((n_f,) * gc.d)
    # interior fine index 2i (1-based) is array position 2i - 1
    sub = F[(slice(1, None, 2),) * gc.d].ravel()
    diff = coarse.final - sub
    return float(np.sqrt(gc.h**gc.d * np.sum(diff**2)))


def rate(err_coarse: float, err_fine: float) -> float:
    return math.log2(err_coarse / err_fine)


@dataclass
class RateRow:
    resolution: int
    error: float
    rate: Optional[float] = None


@dataclass
class RateTable:
    axis: str
    rows: list = field(default_factory=list)
    title: str = ""

    @classmethod
    def from_errors(cls, axis, resolutions, errors, title=""):
        rows = []
        for i, (res, err) in enumerate(zip(resolutions, errors)):
            if not err > 0:
                raise ValueError(f"non-positive two-mesh error {err} at resolution {res}")
            r = None if i == 0 else rate(errors[i - 1], err)
            rows.append(RateRow(res, float(err), r))
        return cls(axis=axis, rows=rows, title=title)

    @property
    def rates(self) -> list:
        return [row.rate for row in self.rows]

    @property
    def errors(self) -> list:
        return [row.error for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("resolution,error,rate\n")
        for row in self.rows:
            r = "" if row.rate is None else f"{row.rate:.17g}"
            buf.write(f"{row.resolution},{row.error:.17g},{r}\n")
        return buf.getvalue()

    def to_markdown(self) -> str:
        head = "N" if self.axis == "time" else "J"
        lines = []
        if self.title:
            lines += [f"**{self.title}**", ""]
        lines += [f"| {head} | error | rate |", "|---:|---:|---:|"]
        for row in self.rows:
            r = "*" if row.rate is None else f"{row.rate:.2f}"
            lines.append(f"| {row.resolution} | {_paper_float(row.error)} | {r} |")
        return "\n".join(lines) + "\n"


_SUPERSCRIPT = str.maketrans("-0123456789", "⁻⁰¹²³⁴⁵⁶⁷⁸⁹")


def _paper_float(x: float) -> str:
    mant, exp = f"{x:.4e}".split("e")
    return f"{mant} × 10{str(int(exp)).translate(_SUPERSCRIPT)}"


def run_sweep(config: ExperimentConfig, jobs: int = 1) -> RateTable:
    """Run the resolution ladder of ``config`` and tabulate two-mesh errors."""
    res = config.run_resolutions()
    fixed = config.fixed_resolution
    if config.axis == "time":
        args = [(config, n, fixed) for n in res]
    else:
        args = [(config, fixed, j) for j in res]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            states = list(pool.map(run_final, *zip(*args)))
    else:
        states = [run_final(*a) for a in args]
    err_fn = two_mesh_temporal_error if config.axis == "time" else two_mesh_spatial_error
    errors = [err_fn(c, f) for c, f in zip(states[:-1], states[1:])]
    title = config.name or config.file_stem()
    return RateTable.from_errors(config.axis, config.ladder(), errors, title=title)


# ---------------------------------------------------------------------------
# invariant suite

def _check(name, passed, value, tol, **extra):
    out = {"name": name, "passed": bool(passed), "value": float(value), "tolerance": tol}
    out.update(extra)
    return out


def _special_function_checks(rng):
    x = rng.uniform(0.1, 1.0, 100)
    g_err = np.max(np.abs(gamma_fn(x + 1) - x * gamma_fn(x)) / np.abs(x * gamma_fn(x)))
    p_err = np.max(np.abs(digamma_fn(x + 1) - digamma_fn(x) - 1.0 / x))
    ref = abs(gamma_fn(0.5) - math.sqrt(math.pi)) / math.sqrt(math.pi)
    return [
        _check("gamma_recurrence", g_err <= 1e-12, g_err, 1e-12),
        _check("digamma_recurrence", p_err <= 1e-12, p_err, 1e-12),
        _check("gamma_half", ref <= 1e-13, ref, 1e-13),
    ]


def g_tilde_closed_form(example: int, alpha0: float, alphaT: float | None, t: float,
                        dps: int = 40) -> float:
    """g_tilde(t) = beta_{1-alpha(t)}(t) - beta_{1-alpha0}(t) in extended precision.

    The z-integrand defining g_tilde is the z-derivative of
    t^{-alpha(z)}/Gamma(1-alpha(z)), which gives this closed form; it is used
    only to cross-check the quadrature.
    """
    import mpmath

    with mpmath.workdps(dps):
        tm = mpmath.mpf(float(t))
        a0 = mpmath.mpf(alpha0)
        if example == 1:
            a = a0 + mpmath.sin(tm) / 5
        elif example == 2:
            a = a0 - mpmath.mpf(alpha0 - alphaT) * tm**2
        else:
            a = a0
        val = tm ** (-a) / mpmath.gamma(1 - a) - tm ** (-a0) / mpmath.gamma(1 - a0)
        return float(val)


EXAMPLE_EXPONENTS = (
    (1, 0.2, None), (1, 0.3, None), (1, 0.4, None), (1, 0.5, None), (1, 0.6, None),
    (1, 0.75, None), (2, 0.4, 0.8), (2, 0.6, 0.4), (2, 0.8, 0.1), (2, 0.3, 0.7),
    (2, 0.5, 0.3), (2, 0.7, 0.1),
)


def _model_for(example, a0, aT):
    return example1_exponent(a0) if example == 1 else example2_exponent(a0, aT)


def _kernel_checks():
    out = []
    t = np.logspace(-8, 0, 17)
    zero = np.max(np.abs(eval_g_tilde(constant_exponent(0.5), t)))
    out.append(_check("g_tilde_constant_exponent_zero", zero == 0.0, zero, 0.0))
    small = eval_g_tilde(example1_exponent(0.5), np.array([1e-8, 1e-2]))
    ok = abs(small[0]) < 1e-3 and abs(small[0]) < abs(small[1])
    out.append(_check("g_tilde_small_time[example1(0.5)]", ok, abs(small[0]), 1e-3))
    for example, a0, aT in EXAMPLE_EXPONENTS:
        model = _model_for(example, a0, aT)
        # |g_tilde| decreases towards zero as t -> 0
        mags = np.abs(eval_g_tilde(model, np.array([1e-6, 1e-8, 1e-10, 1e-12])))
        out.append(_check(f"g_tilde_vanishing[{model.name}]", bool(np.all(np.diff(mags) < 0)),
                          mags[-1], None))
        diff = max(abs(eval_g_tilde(model, tk) - g_tilde_closed_form(example, a0, aT, tk))
                   for tk in t)
        out.append(_check(f"g_tilde_closed_form[{model.name}]", diff <= 1e-10, diff, 1e-10))
    return out


def _complementary_kernel_checks(Ns=(4, 16, 64), alphas=(0.3, 0.5, 0.75)):
    out = []
    worst = {"positivity_min": np.inf, "bound_margin": np.inf, "orthogonality_error": 0.0,
             "q0_margin": np.inf, "q1_margin": np.inf}
    failures = []
    mono_ok = True
    for N in Ns:
        for a0 in alphas:
            for r in (1.0, 2.0, (2.0 - a0) / a0):
                mesh = build_graded_mesh(N, 1.0, r)
                rows = l1_weight_table(mesh, a0)
                for row in rows[1:]:
                    if not (np.all(row > 0) and np.all(np.diff(row) <= 0)):
                        mono_ok = False
                rep = check_lemma_bounds(complementary_kernels(mesh, a0, rows), mesh, a0, rows)
                for key in worst:
                    v = getattr(rep, key)
                    worst[key] = max(worst[key], v) if key == "orthogonality_error" else min(worst[key], v)
                if not rep.passed:
                    failures.append({"N": N, "alpha0": a0, "r": r, "failed": rep.failures})
    out.append(_check("l1_weights_positive_nonincreasing", mono_ok, 0.0, 0.0))
    out.append(_check("complementary_kernel_positive", worst["positivity_min"] > 0,
                      worst["positivity_min"], 0.0))
    out.append(_check("complementary_kernel_bound", worst["bound_margin"] >= -1e-12,
                      worst["bound_margin"], -1e-12))
    out.append(_check("complementary_kernel_orthogonality", worst["orthogonality_error"] <= 1e-10,
                      worst["orthogonality_error"], 1e-10))
    out.append(_check("complementary_kernel_q0", worst["q0_margin"] >= -1e-12,
                      worst["q0_margin"], -1e-12))
    out.append(_check("complementary_kernel_q1", worst["q1_margin"] >= -1e-12,
                      worst["q1_margin"], -1e-12, failures=failures))
    return out


def _telescoping_checks(N=256):
    out = []
    for model in (example1_exponent(0.5), example2_exponent(0.4, 0.8)):
        mesh = build_graded_mesh(N, 1.0, (2.0 - model.alpha0) / model.alpha0)
        worst = 0.0
        for n in range(1, N + 1):
            g_tn = eval_g_tilde(model, mesh.levels[n])
            s = np.sum(conv_weight_row(mesh, model, n))
            worst = max(worst, abs(s - g_tn) / (1.0 + abs(g_tn)))
        out.append(_check(f"telescoping[{model.name}]", worst <= 1e-10, worst, 1e-10))
    return out


def _oracle_checks():
    from .reference import constant_order_l1

    out = []
    for d, J in ((1, 16), (2, 8)):
        for a0 in (0.3, 0.7):
            cfg = ExperimentConfig(example=1, alpha0=a0, d=d)
            grid = SpatialGrid(d, J)
            mesh = build_graded_mesh(32, 1.0, cfg.grading)
            spec = ProblemSpec(grid, mesh, constant_exponent(a0), _initial(d), _unit_source)
            ours = march(spec).values
            ref = constant_order_l1(d, J, mesh.levels, a0, interpolate_nodal(grid, spec.u0),
                                    lambda t: np.ones(grid.m))
            err = np.max(np.abs(ours - ref))
            out.append(_check(f"constant_exponent_oracle[d={d},alpha0={a0}]",
                              err <= 1e-12, err, 1e-12))
    return out


def _residual_checks():
    out = []
    for cfg in (ExperimentConfig(example=1, alpha0=0.5),
                ExperimentConfig(example=2, alpha0=0.4, alphaT=0.8),
                ExperimentConfig(example=3, alpha0=0.5, w1=1.0, w2=0.5)):
        spec = build_problem(cfg, 32, 8)
        hist = solve_problem(spec)
        if isinstance(spec, GeneralMemorySpec):
            res = general_residuals(spec, hist)
        else:
            res = problem_residuals(spec, hist)
        worst = float(np.max(res))
        out.append(_check(f"scheme_residual[example{cfg.example}]", worst <= 1e-10, worst, 1e-10))
    return out


def run_invariant_suite() -> dict:
    """Run every invariant check; failures are reported, never raised."""
    rng = np.random.default_rng(20240101)
    checks = []
    for group in (lambda: _special_function_checks(rng), _kernel_checks, _complementary_kernel_checks,
                  _telescoping_checks, _oracle_checks, _residual_checks):
        try:
            checks.extend(group())
        except Exception as exc:  # a crashing group is a failed check
            checks.append(_check(getattr(group, "__name__", "group"), False, float("nan"),
                                 None, error=repr(exc)))
    return {"passed": all(c["passed"] for c in checks), "checks": checks}


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, default=float)


def config_dict(config: ExperimentConfig) -> dict:
    return asdict(config)
