"""Potential theory of the equilibrium measure.

Complex-analytic side: the branch function ``f(z)``, the Cauchy transform
``G(z) = -f(z) + (2/beta) z - c'/z`` and Stieltjes inversion.  Real side:
the logarithmic potential ``U``, the effective potential
``phi = (beta/2) U + Q_c / 2`` (constant on the support), the Robin constant,
and the energy functional

    E(mu) = beta/2 * iint log(1/|s - t|) mu(ds) mu(dt) + int Q_c(t) mu(dt)

both in closed form and by nested quadrature.  Energies of affine images of
a measure are available for an arbitrary external field and kernel weight.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .equilibrium import (
    EnsembleParams,
    EquilibriumMeasure,
    density,
    even_integral,
    support_edges,
)
from .errors import ParameterDomainError
from .quadrature import QuadratureSpec, integrate_singular

Field = Callable[[np.ndarray], np.ndarray]


def _params(obj) -> EnsembleParams:
    return obj.params if isinstance(obj, EquilibriumMeasure) else obj


def _on_support(x: float, a: float, b: float) -> bool:
    s = abs(x)
    return a <= s <= b


# ---------------------------------------------------------------------------
# complex-analytic functions
# ---------------------------------------------------------------------------


def branch_f(params: EnsembleParams, z: complex) -> complex:
    """``2/(beta z) * sqrt(z-a) sqrt(z-b) sqrt(z+a) sqrt(z+b)``, principal roots.

    Each factor takes its own principal square root; multiplying first and
    taking a single root would lose track of the cuts.  A real ``z`` is read
    as lying on the upper side of the real axis.
    """
    params = _params(params)
    z = complex(z)
    z = complex(z.real, z.imag + 0.0)  # -0.0 -> +0.0
    sup = support_edges(params)
    a, b = sup.a, sup.b
    if z.imag == 0.0 and (z.real == 0.0 or _on_support(z.real, a, b)):
        raise ParameterDomainError(f"f(z) is not defined on the support or at 0 (z={z})")
    prod = cmath.sqrt(z - a) * cmath.sqrt(z - b) * cmath.sqrt(z + a) * cmath.sqrt(z + b)
    return 2.0 / (params.beta * z) * prod


def cauchy_transform(params: EnsembleParams, z: complex) -> complex:
    """Cauchy transform ``G(z) = int nu(dt) / (z - t)`` in closed form.

    ``G`` is odd, so ``G(0) = 0`` when 0 sits in the spectral gap (``c > 0``).
    """
    params = _params(params)
    z = complex(z)
    if z == 0:
        if params.c > 0:
            return 0j
        raise ParameterDomainError("z = 0 lies on the support when c = 0")
    # evaluate in the right half-plane only, so that G(-z) = -G(z) exactly
    if z.real < 0 or (z.real == 0 and z.imag < 0):
        return -_cauchy_right(params, -z)
    return _cauchy_right(params, z)


def _cauchy_right(params: EnsembleParams, z: complex) -> complex:
    beta = params.beta
    f = branch_f(params, z)
    z2 = z * z
    p = 0.5 * beta * z * f
    if abs(z2 + p) < abs(z2):
        return -f + 2.0 / beta * z - params.c_prime / z
    # z**2 - p = (z**4 - p**2) / (z**2 + p) without the cancellation for large z
    sup = support_edges(params)
    a2, b2 = sup.a**2, sup.b**2
    return 2.0 / beta * ((a2 + b2) * z2 - a2 * b2) / (z * (z2 + p)) - params.c_prime / z


def stieltjes_inversion(params: EnsembleParams, x, eps: float):
    """Smoothed density ``-Im G(x + i eps) / pi``.

    Converges to :func:`density` as ``eps -> 0`` inside the support and to 0
    off its closure; the bias at finite ``eps`` is not extrapolated away.
    """
    if not eps > 0:
        raise ParameterDomainError(f"eps must be positive, got {eps}")
    params = _params(params)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.array([-cauchy_transform(params, complex(xi, eps)).imag / math.pi for xi in xs])
    return float(out[0]) if np.ndim(x) == 0 else out


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------


def external_field(params: EnsembleParams, x):
    """``Q_c(x) = x**2 + 2 c log(1/|x|)``."""
    params = _params(params)
    x = np.asarray(x, dtype=float)
    if params.c == 0:
        out = x * x
    else:
        if np.any(x == 0):
            raise ParameterDomainError("the external field is infinite at x = 0 when c > 0")
        out = x * x - 2.0 * params.c * np.log(np.abs(x))
    return float(out) if out.ndim == 0 else out


def log_potential(measure: EquilibriumMeasure, x: float, quad: QuadratureSpec | None = None) -> float:
    """Logarithmic potential ``U(x) = int log(1/|x - t|) nu(dt)``.

    Folding ``t`` and ``-t`` together gives ``-1/2 log|x**2 - u|`` in the
    variable ``u = t**2``; its log point ``u = x**2`` is split off when it
    lies on the support.
    """
    quad = quad or measure.quad
    x = float(x)
    if not math.isfinite(x):
        raise ParameterDomainError(f"x must be finite, got {x}")
    x2 = x * x
    x0 = x2 if measure.a2 <= x2 <= measure.b2 else None
    return even_integral(measure, lambda u: -0.5 * np.log(np.abs(x2 - u)), quad, x0)


def effective_potential(measure: EquilibriumMeasure, x: float, quad: QuadratureSpec | None = None) -> float:
    """``phi(x) = (beta/2) U(x) + Q_c(x) / 2``; equal to the Robin constant on S."""
    if measure.c > 0 and x == 0:
        raise ParameterDomainError("the effective potential diverges at x = 0 when c > 0")
    return 0.5 * measure.beta * log_potential(measure, x, quad) + 0.5 * external_field(measure.params, x)


def robin_constant(measure: EquilibriumMeasure, quad: QuadratureSpec | None = None) -> float:
    """Value of the effective potential on the support.

    Evaluated at the midpoint of the support in ``u = t**2``, the point
    farthest from both edges.
    """
    return effective_potential(measure, math.sqrt(0.5 * (measure.a2 + measure.b2)), quad)


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------


def energy_closed_form(params: EnsembleParams) -> float:
    """Minimal energy ``E*`` of the equilibrium measure in closed form.

    The ``c**2 log c`` term is taken as 0 at ``c = 0``.
    """
    params = _params(params)
    beta, c = params.beta, params.c
    e = 3.0 * beta / 8.0 + beta / 4.0 * math.log(4.0 / beta) + c * (1.5 + math.log(4.0 / beta))
    if c > 0:
        e += 2.0 * c * c / beta * math.log(4.0 * c / beta)
    e -= (2.0 * c * c / beta + c + beta / 8.0) * math.log1p(4.0 * c / beta)
    return e


def _inner(quad: QuadratureSpec) -> QuadratureSpec:
    return QuadratureSpec(quad.tol * 0.1, quad.max_subdivisions)


def kernel_energy(measure: EquilibriumMeasure, quad: QuadratureSpec | None = None) -> float:
    """``iint log(1/|s - t|) nu(ds) nu(dt) = int U d nu`` by nested quadrature."""
    quad = quad or measure.quad
    inner = _inner(quad)

    def potential_at(u):
        return np.array([log_potential(measure, math.sqrt(ui), inner) for ui in np.ravel(u)]).reshape(np.shape(u))

    return even_integral(measure, potential_at, quad)


def field_energy(measure: EquilibriumMeasure, quad: QuadratureSpec | None = None) -> float:
    """``int Q_c d nu``."""
    c = measure.c
    if c == 0:
        return even_integral(measure, lambda u: u, quad)
    return even_integral(measure, lambda u: u - c * np.log(u), quad)


def energy_quadrature(measure: EquilibriumMeasure, quad: QuadratureSpec | None = None) -> float:
    """Energy of the equilibrium measure evaluated by nested quadrature."""
    return 0.5 * measure.beta * kernel_energy(measure, quad) + field_energy(measure, quad)


@dataclass(frozen=True)
class EnergyReport:
    closed_form: float
    quadrature: float
    robin_constant: float
    potential_sup_violation: float
    potential_flatness: float


@dataclass(frozen=True)
class VariationalScan:
    """Effective potential sampled on and off the support."""

    x: np.ndarray
    phi: np.ndarray
    region: tuple[str, ...]
    robin_constant: float

    @property
    def flatness(self) -> float:
        on = np.array([r == "support" for r in self.region])
        return float(np.max(np.abs(self.phi[on] - self.robin_constant)))

    @property
    def min_excess(self) -> float:
        off = np.array([r != "support" for r in self.region])
        if not off.any():
            return math.inf
        return float(np.min(self.phi[off] - self.robin_constant))


def variational_grid(measure: EquilibriumMeasure, grid: int = 200, margin: float = 1e-3) -> tuple[np.ndarray, tuple[str, ...]]:
    """Evaluation points for the variational check.

    ``grid`` points on the support (uniform in the sin**2 angle, both
    components) and ``grid`` points off it, split between the gap and the
    exterior ``[b, 2b]``; a ``margin`` neighbourhood of 0 and of every edge is
    excluded off the support.
    """
    if grid < 1:
        raise ParameterDomainError(f"grid must be positive, got {grid}")
    a, b = measure.a, measure.b
    half = max(1, grid // 2)
    theta = (np.arange(half) + 0.5) / half * (0.5 * math.pi)
    s_on = np.sqrt(measure.a2 + (measure.b2 - measure.a2) * np.sin(theta) ** 2)
    on = np.concatenate([-s_on[::-1], s_on])
    if a > 2 * margin:
        n_gap = max(1, half // 2)
        n_ext = half - n_gap if half > 1 else 1
        gap = np.linspace(margin, a - margin, n_gap)
    else:
        n_ext = half
        gap = np.empty(0)
    ext = np.linspace(b + margin, 2 * b, n_ext)
    pieces = [(-ext[::-1], "exterior"), (-gap[::-1], "gap"), (on, "support"), (gap, "gap"), (ext, "exterior")]
    x = np.concatenate([p for p, _ in pieces])
    region = tuple(r for p, r in pieces for _ in range(p.size))
    return x, region


def variational_scan(measure: EquilibriumMeasure, grid: int = 200, quad: QuadratureSpec | None = None) -> VariationalScan:
    x, region = variational_grid(measure, grid)
    phi = np.array([effective_potential(measure, xi, quad) for xi in x])
    return VariationalScan(x, phi, region, robin_constant(measure, quad))


def energy_report(measure: EquilibriumMeasure, quad: QuadratureSpec | None = None, grid: int = 200) -> EnergyReport:
    scan = variational_scan(measure, grid, quad)
    return EnergyReport(
        closed_form=energy_closed_form(measure.params),
        quadrature=energy_quadrature(measure, quad),
        robin_constant=scan.robin_constant,
        potential_sup_violation=max(0.0, -scan.min_excess),
        potential_flatness=scan.flatness,
    )


# ---------------------------------------------------------------------------
# measures given by a density on finitely many intervals, and affine images
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SegmentMeasure:
    """A probability density on disjoint intervals with square-root edges."""

    segments: tuple[tuple[float, float], ...]
    pdf: Callable[[np.ndarray], np.ndarray]


def as_segment_measure(measure: EquilibriumMeasure | SegmentMeasure) -> SegmentMeasure:
    if isinstance(measure, SegmentMeasure):
        return measure
    return SegmentMeasure(measure.segments(), lambda t: density(measure, t))


def pushforward(measure: EquilibriumMeasure | SegmentMeasure, scale: float, shift: float = 0.0) -> SegmentMeasure:
    """Image of ``measure`` under ``s -> scale * s + shift``."""
    if scale == 0 or not math.isfinite(scale):
        raise ParameterDomainError(f"scale must be finite and nonzero, got {scale}")
    base = as_segment_measure(measure)
    segs = sorted(tuple(sorted((scale * lo + shift, scale * hi + shift))) for lo, hi in base.segments)
    pdf = base.pdf
    return SegmentMeasure(tuple(segs), lambda x: pdf((np.asarray(x) - shift) / scale) / abs(scale))


def segment_log_potential(measure: SegmentMeasure, x: float, quad: QuadratureSpec) -> float:
    """``U(x)`` of a segment measure, integrating in the original variable."""
    total = 0.0
    for lo, hi in measure.segments:
        total += integrate_singular(
            lambda t: -np.log(np.abs(x - t)) * measure.pdf(t), (lo, hi), "log-point", quad, x0=x
        )
    return total


def segment_kernel_energy(measure: SegmentMeasure, quad: QuadratureSpec) -> float:
    inner = _inner(quad)

    def integrand(t):
        pot = np.array([segment_log_potential(measure, ti, inner) for ti in np.ravel(t)]).reshape(np.shape(t))
        return pot * measure.pdf(t)

    return sum(integrate_singular(integrand, seg, "sqrt-edges", quad) for seg in measure.segments)


def segment_field_energy(measure: SegmentMeasure, field: Field, quad: QuadratureSpec) -> float:
    return sum(
        integrate_singular(lambda t: field(t) * measure.pdf(t), seg, "sqrt-edges", quad)
        for seg in measure.segments
    )


def segment_energy(measure: SegmentMeasure, field: Field, kernel_weight: float, quad: QuadratureSpec) -> float:
    """``w iint log(1/|s-t|) + int field`` for a segment measure."""
    return kernel_weight * segment_kernel_energy(measure, quad) + segment_field_energy(measure, field, quad)


def energy_affine_pushforward(
    measure: EquilibriumMeasure | SegmentMeasure,
    scale: float,
    shift: float,
    field: Field,
    kernel_weight: float = 1.0,
    quad: QuadratureSpec | None = None,
    method: str = "direct",
) -> float:
    """Energy of the image of ``measure`` under ``h(s) = scale * s + shift``.

    ``method="direct"`` integrates the image density on its own support.
    ``method="pullback"`` uses the change of variables: the energy of
    ``measure`` itself in the field ``field(h(s))`` minus
    ``kernel_weight * log|scale|``.  ``kernel_weight`` is 1 for the unit
    kernel and ``beta/2`` for the weighted one.
    """
    if scale == 0 or not math.isfinite(scale):
        raise ParameterDomainError(f"scale must be finite and nonzero, got {scale}")
    if quad is None:
        quad = measure.quad if isinstance(measure, EquilibriumMeasure) else QuadratureSpec()
    if method == "direct":
        return segment_energy(pushforward(measure, scale, shift), field, kernel_weight, quad)
    if method != "pullback":
        raise ParameterDomainError(f"unknown method {method!r}")
    if isinstance(measure, EquilibriumMeasure):
        kern = kernel_energy(measure, quad)
    else:
        kern = segment_kernel_energy(measure, quad)
    pulled = segment_field_energy(as_segment_measure(measure), lambda s: field(scale * s + shift), quad)
    return kernel_weight * (kern - math.log(abs(scale))) + pulled
