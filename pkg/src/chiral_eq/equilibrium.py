"""Closed-form equilibrium measure of the chiral Gaussian log-gas.

For ``beta > 0`` and ``c >= 0`` the measure lives on
``S = [-b, -a] U [a, b]`` with density

    f(t) = 2 / (pi * beta) * sqrt((t**2 - a**2) * (b**2 - t**2)) / |t|

and edges ``a**2, b**2 = beta/2 * (1 + c' -/+ sqrt(1 + 2 c'))`` where
``c' = 2 c / beta``.  Most integrals against this measure are taken in the
variable ``u = t**2``, where the density becomes

    f(t) dt = 1 / (pi * beta) * sqrt((u - a**2) * (b**2 - u)) / u du

on each half of the support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterDomainError
from .quadrature import DEFAULT_QUAD, QuadratureSpec, integrate_singular, integrate_smooth_many


@dataclass(frozen=True)
class EnsembleParams:
    """Parameters of the ensemble.

    ``mu_n`` is the finite-n exponent on ``|lambda|``; it defaults to
    ``c * n``.  ``c_prime = 2 c / beta`` and ``alpha_n = mu_n / n`` are
    derived on access.
    """

    beta: float
    c: float = 0.0
    n: int = 1
    mu_n: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ParameterDomainError(f"beta must be positive, got {self.beta}")
        if not (math.isfinite(self.c) and self.c >= 0):
            raise ParameterDomainError(f"c must be nonnegative, got {self.c}")
        if int(self.n) != self.n or self.n < 1:
            raise ParameterDomainError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.mu_n is None:
            object.__setattr__(self, "mu_n", self.c * self.n)
        if not (math.isfinite(self.mu_n) and self.mu_n >= 0):
            raise ParameterDomainError(f"mu_n must be nonnegative, got {self.mu_n}")

    @property
    def c_prime(self) -> float:
        return 2.0 * self.c / self.beta

    @property
    def alpha_n(self) -> float:
        return self.mu_n / self.n


@dataclass(frozen=True)
class Support:
    """Edges of the two-cut support; ``a == 0`` means a single interval."""

    a: float
    b: float

    def __post_init__(self):
        if not (0 <= self.a < self.b):
            raise ParameterDomainError(f"support edges must satisfy 0 <= a < b, got {self.a}, {self.b}")


def _edges(beta: float, c: float) -> tuple[float, float]:
    cp = 2.0 * c / beta
    root = math.sqrt(1.0 + 2.0 * cp)
    # a in rationalized form: the difference 1 + c' - root cancels as c -> 0,
    # and forming a**2 first would underflow for tiny c
    s = math.sqrt(1.0 + cp + root)
    half = math.sqrt(0.5 * beta)
    return half * cp / s, half * s


def support_edges(params: EnsembleParams) -> Support:
    """Inner and outer edge of the support."""
    return Support(*_edges(params.beta, params.c))


@dataclass(frozen=True)
class EquilibriumMeasure:
    """The equilibrium measure for ``params``, with cached edge data."""

    params: EnsembleParams
    support: Support
    quad_tol: float = 1e-10
    a2: float = field(init=False, repr=False)
    b2: float = field(init=False, repr=False)

    def __post_init__(self):
        if not self.quad_tol > 0:
            raise ParameterDomainError(f"quad_tol must be positive, got {self.quad_tol}")
        object.__setattr__(self, "a2", self.support.a**2)
        object.__setattr__(self, "b2", self.support.b**2)

    @classmethod
    def from_params(cls, params: EnsembleParams, quad_tol: float = 1e-10) -> "EquilibriumMeasure":
        return cls(params, support_edges(params), quad_tol)

    @property
    def beta(self) -> float:
        return self.params.beta

    @property
    def c(self) -> float:
        return self.params.c

    @property
    def a(self) -> float:
        return self.support.a

    @property
    def b(self) -> float:
        return self.support.b

    @property
    def quad(self) -> QuadratureSpec:
        return QuadratureSpec(self.quad_tol, DEFAULT_QUAD.max_subdivisions)

    def segments(self) -> tuple[tuple[float, float], ...]:
        """Connected components of the support in increasing order."""
        if self.a == 0.0:
            return ((-self.b, self.b),)
        return ((-self.b, -self.a), (self.a, self.b))


def equilibrium_measure(beta: float, c: float = 0.0, quad_tol: float = 1e-10) -> EquilibriumMeasure:
    """Shorthand for ``EquilibriumMeasure.from_params(EnsembleParams(beta, c))``."""
    return EquilibriumMeasure.from_params(EnsembleParams(beta, c), quad_tol)


def _maybe_scalar(x, like):
    return float(x) if np.ndim(like) == 0 else x


def density(measure: EquilibriumMeasure, t):
    """Density at ``t`` (scalar or array); zero off the open support."""
    t_arr = np.asarray(t, dtype=float)
    s = np.abs(t_arr)
    a, b = measure.a, measure.b
    pref = 2.0 / (math.pi * measure.beta)
    with np.errstate(invalid="ignore", divide="ignore"):
        if a == 0.0:
            inside = s < b
            val = pref * np.sqrt((b - s) * (b + s))
        else:
            inside = (s > a) & (s < b)
            val = pref * np.sqrt((s - a) * (s + a) * (b - s) * (b + s)) / s
    out = np.where(inside, val, 0.0)
    return _maybe_scalar(out, t)


def u_weight(measure: EquilibriumMeasure, u):
    """Density of the pushforward of the measure under ``t -> t**2``.

    Integrates to 1 over ``(a**2, b**2)`` and carries square-root edges (an
    inverse square root at ``u = 0`` when ``c = 0``).
    """
    u = np.asarray(u, dtype=float)
    A, B = measure.a2, measure.b2
    return 2.0 / (math.pi * measure.beta) * np.sqrt((u - A) * (B - u)) / u


def even_integral(measure: EquilibriumMeasure, g, quad: QuadratureSpec | None = None, x0: float | None = None) -> float:
    """``integral g(t**2) nu(dt)`` for an even integrand given as ``g(u)``.

    ``x0`` marks a log singularity of ``g`` in the ``u`` variable.
    """
    quad = quad or measure.quad
    kind = "sqrt-edges" if x0 is None else "log-point"
    return integrate_singular(
        lambda u: g(u) * u_weight(measure, u), (measure.a2, measure.b2), kind, quad, x0
    )


def _half_mass_integrand(measure: EquilibriumMeasure):
    A, D = measure.a2, measure.b2 - measure.a2
    pref = 2.0 * D * D / (math.pi * measure.beta)

    def h(theta):
        s2 = np.sin(theta) ** 2
        if A == 0.0:
            # s2 / (D s2) cancels; avoids 0/0 when sin underflows
            return pref * (1.0 - s2) / D
        return pref * s2 * (1.0 - s2) / (A + D * s2)

    return h


def _theta_of(measure: EquilibriumMeasure, s: np.ndarray) -> np.ndarray:
    s = np.clip(s, measure.a, measure.b)
    return np.arctan2(np.sqrt(np.maximum(s * s - measure.a2, 0.0)), np.sqrt(np.maximum(measure.b2 - s * s, 0.0)))


def _half_mass(measure: EquilibriumMeasure, theta: np.ndarray, quad: QuadratureSpec) -> np.ndarray:
    """Mass of ``[a, t]`` where ``t**2 = a**2 + (b**2 - a**2) sin(theta)**2``."""
    return integrate_smooth_many(_half_mass_integrand(measure), np.zeros_like(theta), theta, quad)


def cdf(measure: EquilibriumMeasure, t, quad: QuadratureSpec | None = None):
    """Distribution function ``F(t) = nu((-inf, t])`` by quadrature."""
    quad = quad or measure.quad
    t_arr = np.asarray(t, dtype=float)
    flat = t_arr.ravel()
    s = np.abs(flat)
    out = np.where(flat >= measure.b, 1.0, np.where(flat <= -measure.b, 0.0, 0.5))
    mid = (s > measure.a) & (s < measure.b)
    if np.any(mid):
        m = _half_mass(measure, _theta_of(measure, s[mid]), quad)
        out[mid] = 0.5 + np.sign(flat[mid]) * m
    out = np.clip(out, 0.0, 1.0).reshape(t_arr.shape)
    return _maybe_scalar(out, t)


def moment(measure: EquilibriumMeasure, k: int, quad: QuadratureSpec | None = None) -> float:
    """``k``-th moment; odd moments are exactly zero."""
    if int(k) != k or k < 0:
        raise ParameterDomainError(f"moment order must be a nonnegative integer, got {k}")
    k = int(k)
    if k % 2:
        return 0.0
    half = k // 2
    return even_integral(measure, lambda u: u**half, quad)


def quantile(measure: EquilibriumMeasure, p, quad: QuadratureSpec | None = None):
    """Inverse of :func:`cdf` by bisection.

    ``p = 1/2`` falls in the spectral gap and returns 0.  Vectorized over
    ``p``; every returned ``t`` satisfies ``|cdf(t) - p| <= quad.tol`` up to
    the resolution of double precision.
    """
    quad = quad or measure.quad
    p_arr = np.asarray(p, dtype=float)
    flat = p_arr.ravel()
    if np.any(~((flat > 0) & (flat < 1))):
        raise ParameterDomainError("quantile levels must lie in the open interval (0, 1)")
    target = np.abs(flat - 0.5)
    lo = np.zeros_like(flat)
    hi = np.full_like(flat, 0.5 * math.pi)
    active = target > 0
    theta = np.zeros_like(flat)
    for _ in range(200):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        mid = 0.5 * (lo[idx] + hi[idx])
        m = _half_mass(measure, mid, quad)
        theta[idx] = mid
        err = m - target[idx]
        below = err < 0
        lo[idx[below]] = mid[below]
        hi[idx[~below]] = mid[~below]
        stuck = (hi[idx] - lo[idx]) <= 4e-16 * hi[idx]
        active[idx[(np.abs(err) <= 0.5 * quad.tol) | stuck]] = False
    s = np.sqrt(measure.a2 + (measure.b2 - measure.a2) * np.sin(theta) ** 2)
    out = np.where(target > 0, np.sign(flat - 0.5) * s, 0.0).reshape(p_arr.shape)
    return _maybe_scalar(out, p)
