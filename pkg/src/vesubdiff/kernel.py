"""Special functions and the perturbation kernel of the reformulated model.

The variable-exponent Caputo kernel ``t^{-alpha(t)}/Gamma(1-alpha(t))`` is split
into the constant-order kernel ``beta_{1-alpha0}`` plus a perturbation ``g(t)``
(written ``g_tilde`` below).  ``g_tilde`` is defined as an integral over an
auxiliary variable ``z in (0, t)`` and is evaluated here by fixed-order
Gauss-Legendre quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)

# B_{2k} / (2k) for the digamma asymptotic series, k = 1..7
_DIGAMMA_ASYMP = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)
_DIGAMMA_SHIFT = 10.0

DEFAULT_GAUSS_ORDER = 32


def _as_positive(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0.0)):
        raise ValueError(f"{name} must be positive, got {x!r}")
    return arr


def _unwrap(value, like):
    return float(value) if np.ndim(like) == 0 else value


def gamma_fn(x):
    """Euler Gamma function for positive arguments (scalar or array)."""
    xa = _as_positive(x)
    # Gamma(x) = Gamma(x + 1) / x keeps the Lanczos sum on x >= 1
    small = xa < 1.0
    y = np.where(small, xa + 1.0, xa) - 1.0
    s = np.full_like(y, _LANCZOS_COEF[0])
    for i in range(1, len(_LANCZOS_COEF)):
        s = s + _LANCZOS_COEF[i] / (y + i)
    t = y + _LANCZOS_G + 0.5
    val = _SQRT_2PI * t ** (y + 0.5) * np.exp(-t) * s
    val = np.where(small, val / xa, val)
    return _unwrap(val, x)


def digamma_fn(x):
    """Digamma psi(x) = Gamma'(x)/Gamma(x) for positive arguments.

    Upward recurrence to x >= 10, then the asymptotic series.
    """
    xa = _as_positive(x)
    acc = np.zeros_like(xa)
    y = xa.copy()
    while np.any(y < _DIGAMMA_SHIFT):
        low = y < _DIGAMMA_SHIFT
        acc = acc - np.where(low, 1.0 / y, 0.0)
        y = np.where(low, y + 1.0, y)
    inv2 = 1.0 / (y * y)
    series = np.zeros_like(y)
    for c in reversed(_DIGAMMA_ASYMP):
        series = (series + c) * inv2
    val = np.log(y) - 0.5 / y - series + acc
    return _unwrap(val, x)


def beta_kernel(nu, t):
    """``t^(nu-1) / Gamma(nu)``."""
    ta = _as_positive(t, "t")
    val = ta ** (nu - 1.0) / gamma_fn(nu)
    return _unwrap(val, t)


@dataclass(frozen=True)
class ExponentModel:
    """Variable fractional exponent alpha(t) on [0, T].

    ``alpha`` and ``alpha_prime`` must accept numpy arrays.  ``alpha_prime``
    has to return exact zeros for a constant exponent so that the
    perturbation kernel vanishes identically.
    """

    alpha: Callable
    alpha_prime: Callable
    T: float = 1.0
    name: str = "custom"

    @property
    def alpha0(self) -> float:
        return float(self.alpha(np.array(0.0)))

    @property
    def alphaT(self) -> float:
        return float(self.alpha(np.array(self.T)))

    @property
    def is_constant(self) -> bool:
        z = np.linspace(0.0, self.T, 65)
        return bool(np.all(np.asarray(self.alpha_prime(z)) == 0.0))

    def validate(self, samples: int = 64, rtol: float = 1e-6) -> None:
        """Check 0 < alpha < 1 on [0, T] and that alpha_prime matches alpha."""
        z = np.linspace(0.0, self.T, samples + 1)
        a = np.asarray(self.alpha(z), dtype=float)
        if np.any(a <= 0.0) or np.any(a >= 1.0):
            raise ValueError(f"exponent leaves (0, 1) on [0, {self.T}]: range "
                             f"[{a.min():.6g}, {a.max():.6g}]")
        # central differences at interior points
        zc = np.linspace(0.0, self.T, samples + 2)[1:-1]
        eps = 1e-6 * max(self.T, 1.0)
        fd = (np.asarray(self.alpha(zc + eps)) - np.asarray(self.alpha(zc - eps))) / (2 * eps)
        exact = np.asarray(self.alpha_prime(zc), dtype=float)
        scale = np.maximum(np.abs(exact), np.max(np.abs(exact)) + 1e-300)
        if np.any(np.abs(fd - exact) > rtol * scale + 1e-9):
            raise ValueError("alpha_prime is inconsistent with alpha")


def constant_exponent(alpha0: float, T: float = 1.0) -> ExponentModel:
    return ExponentModel(
        alpha=lambda t: np.full_like(np.asarray(t, dtype=float), alpha0),
        alpha_prime=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        T=T,
        name=f"constant({alpha0})",
    )


def example1_exponent(alpha0: float, T: float = 1.0) -> ExponentModel:
    """alpha(t) = alpha0 + sin(t)/5."""
    return ExponentModel(
        alpha=lambda t: alpha0 + np.sin(t) / 5.0,
        alpha_prime=lambda t: np.cos(t) / 5.0,
        T=T,
        name=f"example1({alpha0})",
    )


def example2_exponent(alpha0: float, alphaT: float, T: float = 1.0) -> ExponentModel:
    """alpha(t) = alphaT + (alpha0 - alphaT)(1 - t^2/T^2).

    Evaluated as alpha0 - (alpha0 - alphaT) t^2/T^2 so that alpha(0) == alpha0
    exactly.
    """
    d = alpha0 - alphaT
    return ExponentModel(
        alpha=lambda t: alpha0 - d * np.asarray(t) ** 2 / T**2,
        alpha_prime=lambda t: -2.0 * d * np.asarray(t) / T**2,
        T=T,
        name=f"example2({alpha0},{alphaT})",
    )


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(order: int):
    if order not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(order)
        _GL_CACHE[order] = (x, w)
    return _GL_CACHE[order]


def eval_g_tilde(model: ExponentModel, t, order: int = DEFAULT_GAUSS_ORDER,
                 chunk: int = 65536):
    """Perturbation kernel g_tilde(t) for t > 0 (scalar or 1-d array).

    ::

        g(t) = int_0^t t^{-a(z)}/Gamma(1-a(z)) * a'(z) * (psi(1-a(z)) - ln t) dz

    evaluated with an ``order``-point Gauss-Legendre rule on [0, t].
    """
    ta = _as_positive(t, "t")
    flat = np.atleast_1d(ta).ravel()
    out = np.empty_like(flat)
    x, w = _gauss_legendre(order)
    half_nodes = 0.5 * (x + 1.0)
    for start in range(0, flat.size, chunk):
        tc = flat[start:start + chunk]
        z = tc[:, None] * half_nodes[None, :]
        ap = np.asarray(model.alpha_prime(z), dtype=float)
        if not np.any(ap):
            out[start:start + chunk] = 0.0
            continue
        a = np.asarray(model.alpha(z), dtype=float)
        log_t = np.log(tc)[:, None]
        integrand = (np.exp(-a * log_t) / gamma_fn(1.0 - a)
                     * ap * (digamma_fn(1.0 - a) - log_t))
        out[start:start + chunk] = 0.5 * tc * (integrand @ w)
    out = out.reshape(np.shape(ta))
    return _unwrap(out, t)


def assemble_source(model: ExponentModel, f: Callable, u0: Callable, x, t):
    """Reformulated source F = f(x, t) + g_tilde(t) * u0(x)."""
    return f(x, t) + eval_g_tilde(model, t) * u0(x)
