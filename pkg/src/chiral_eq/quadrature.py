"""Adaptive quadrature for integrands with square-root edges and log points.

Every rule used here is a fixed node set on the unit interval that is refined
by doubling (panel count for Gauss-Legendre, node density for tanh-sinh)
until two successive estimates agree to ``QuadratureSpec.tol``.

Square-root edge behaviour is absorbed by the substitution

    u = lo + (hi - lo) * sin(theta)**2,   theta in [0, pi/2],

whose Jacobian ``2 (hi - lo) sin(theta) cos(theta)`` vanishes at both ends.
A log singularity at an interior point is split off, and each side is mapped
the same way and integrated with a double-exponential rule, which converges
geometrically for ``theta * log(theta)`` endpoint behaviour where composite
Gauss-Legendre only converges algebraically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ParameterDomainError, QuadratureError

Integrand = Callable[[np.ndarray], np.ndarray]

_GL_ORDER = 16
_TS_TMAX = 3.0
_KINDS = ("smooth", "sqrt-edges", "log-point")


@dataclass(frozen=True)
class QuadratureSpec:
    """Requested accuracy and refinement budget of an adaptive integral."""

    tol: float = 1e-10
    max_subdivisions: int = 20

    def __post_init__(self):
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ParameterDomainError(f"tol must be positive, got {self.tol}")
        if int(self.max_subdivisions) != self.max_subdivisions or self.max_subdivisions < 1:
            raise ParameterDomainError(
                f"max_subdivisions must be a positive integer, got {self.max_subdivisions}"
            )


DEFAULT_QUAD = QuadratureSpec()


# ---------------------------------------------------------------------------
# Unit-interval rules.  Each returns (x, xc, w) with x + xc == 1 in exact
# arithmetic; xc is carried separately so that nodes crowding the right end
# keep their relative accuracy.
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _gl_unit(level: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    panels = 2**level
    s, w = np.polynomial.legendre.leggauss(_GL_ORDER)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w
    start = np.arange(panels, dtype=float)[:, None]
    x = ((start + s[None, :]) / panels).ravel()
    w = np.broadcast_to(w / panels, (panels, _GL_ORDER)).ravel().copy()
    # the composite rule is symmetric about 1/2
    xc = x[::-1].copy()
    for arr in (x, xc, w):
        arr.setflags(write=False)
    return x, xc, w


@lru_cache(maxsize=32)
def _ts_unit(level: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    h = 2.0**-level
    k = np.arange(-int(_TS_TMAX / h), int(_TS_TMAX / h) + 1)
    t = k * h
    s = 0.5 * math.pi * np.sinh(t)
    e = np.exp(-2.0 * s)
    x = 1.0 / (1.0 + e)
    xc = e / (1.0 + e)
    w = h * 0.25 * math.pi * np.cosh(t) / np.cosh(s) ** 2
    for arr in (x, xc, w):
        arr.setflags(write=False)
    return x, xc, w


def _adaptive(estimate: Callable[[int], float], quad: QuadratureSpec, first: int, what: str) -> float:
    prev = estimate(first)
    diff = math.inf
    for level in range(first + 1, first + quad.max_subdivisions + 1):
        cur = estimate(level)
        diff = abs(cur - prev)
        if diff <= quad.tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise QuadratureError(f"{what} quadrature did not converge", prev, diff)


def _masked_sum(values: np.ndarray, weights: np.ndarray, inside: np.ndarray) -> float:
    return float(np.sum(np.where(inside, values, 0.0) * weights))


def _sin2_estimate(g: Integrand, lo: float, hi: float, rule) -> float:
    x, xc, w = rule
    width = hi - lo
    sin_t = np.sin(0.5 * math.pi * x)
    cos_t = np.sin(0.5 * math.pi * xc)
    u = np.where(x < 0.5, lo + width * sin_t**2, hi - width * cos_t**2)
    inside = (u > lo) & (u < hi)
    with np.errstate(all="ignore"):
        vals = g(np.where(inside, u, 0.5 * (lo + hi)))
    jac = 2.0 * width * sin_t * cos_t * (0.5 * math.pi)
    return _masked_sum(np.asarray(vals, dtype=float), w * jac, inside)


def _linear_estimate(g: Integrand, lo: float, hi: float, rule) -> float:
    x, xc, w = rule
    width = hi - lo
    u = np.where(x < 0.5, lo + width * x, hi - width * xc)
    inside = (u > lo) & (u < hi)
    with np.errstate(all="ignore"):
        vals = g(np.where(inside, u, 0.5 * (lo + hi)))
    return _masked_sum(np.asarray(vals, dtype=float), w * width, inside)


def integrate_singular(
    g: Integrand,
    edges: tuple[float, float],
    kind: str = "smooth",
    quad: QuadratureSpec = DEFAULT_QUAD,
    x0: float | None = None,
) -> float:
    """Integrate a vectorized ``g`` over ``edges`` to ``quad.tol``.

    ``kind`` selects the treatment of the integrand:

    * ``"smooth"``: composite Gauss-Legendre in the original variable.
    * ``"sqrt-edges"``: square-root behaviour at either end, absorbed by the
      sin**2 substitution.
    * ``"log-point"``: a log singularity at ``x0`` on top of square-root
      edges.  When ``x0`` lies outside the open interval the integrand is
      smooth there and the ``"sqrt-edges"`` path is used.

    The result is deterministic for fixed inputs.  Raises
    :class:`QuadratureError` if the tolerance is not reached within
    ``quad.max_subdivisions`` doublings.
    """
    lo, hi = float(edges[0]), float(edges[1])
    if not lo < hi:
        raise ParameterDomainError(f"integration edges must satisfy lo < hi, got {edges}")
    if kind not in _KINDS:
        raise ParameterDomainError(f"unknown integrand kind {kind!r}; expected one of {_KINDS}")

    if kind == "smooth":
        return _adaptive(lambda k: _linear_estimate(g, lo, hi, _gl_unit(k)), quad, 0, "smooth")

    if kind == "log-point":
        if x0 is None:
            raise ParameterDomainError("log-point integrands need the singular point x0")
        x0 = float(x0)
        if lo < x0 < hi:
            half = QuadratureSpec(quad.tol / 2, quad.max_subdivisions)
            left = _adaptive(lambda k: _sin2_estimate(g, lo, x0, _ts_unit(k)), half, 1, "log-point")
            right = _adaptive(lambda k: _sin2_estimate(g, x0, hi, _ts_unit(k)), half, 1, "log-point")
            return left + right
        if x0 == lo or x0 == hi:
            return _adaptive(lambda k: _sin2_estimate(g, lo, hi, _ts_unit(k)), quad, 1, "log-point")

    return _adaptive(lambda k: _sin2_estimate(g, lo, hi, _gl_unit(k)), quad, 0, "sqrt-edges")


def integrate_smooth_many(
    h: Integrand,
    lo: np.ndarray,
    hi: np.ndarray,
    quad: QuadratureSpec = DEFAULT_QUAD,
    chunk: int = 1 << 16,
) -> np.ndarray:
    """Integrate a smooth vectorized ``h`` over many intervals ``[lo_i, hi_i]``.

    Rows are refined independently; a row stops once two successive panel
    doublings agree to ``quad.tol``.  ``h`` receives a 2-D array of nodes.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    lo, hi = np.broadcast_arrays(lo, hi)
    shape = lo.shape
    lo = lo.ravel()
    hi = hi.ravel()
    out = np.empty(lo.size)
    for start in range(0, lo.size, chunk):
        sl = slice(start, start + chunk)
        out[sl] = _smooth_rows(h, lo[sl], hi[sl], quad)
    return out.reshape(shape)


def _smooth_rows(h: Integrand, lo: np.ndarray, hi: np.ndarray, quad: QuadratureSpec) -> np.ndarray:
    width = hi - lo

    def level_estimate(k: int, rows: np.ndarray) -> np.ndarray:
        x, _, w = _gl_unit(k)
        nodes = lo[rows, None] + width[rows, None] * x[None, :]
        return (h(nodes) * w[None, :]).sum(axis=1) * width[rows]

    rows = np.arange(lo.size)
    result = np.empty(lo.size)
    prev = level_estimate(0, rows)
    for k in range(1, quad.max_subdivisions + 1):
        cur = level_estimate(k, rows)
        diff = np.abs(cur - prev)
        done = diff <= quad.tol * np.maximum(1.0, np.abs(cur))
        result[rows[done]] = cur[done]
        rows, prev = rows[~done], cur[~done]
        if rows.size == 0:
            return result
    worst = int(np.argmax(diff[~done]))
    raise QuadratureError("batched smooth quadrature did not converge", float(prev[worst]), float(diff[~done][worst]))
