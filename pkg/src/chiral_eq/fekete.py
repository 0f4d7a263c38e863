"""Weighted Fekete configurations: minimizers of the discrete energy

    K_n(x) = beta/2 * sum_{i != j} log(1 / |x_i - x_j|) + (n - 1) * sum_i Q(x_i),

with ``Q(t) = t**2 - 2 alpha_n log|t|``.  ``tau_n = min K_n / (n (n - 1))``
converges to the equilibrium energy.

``K_n`` is strictly convex on every cell of points with a fixed order (and a
fixed sign pattern when ``alpha_n > 0``), so a descent method started inside
the right cell only needs to stay feasible to find the global minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equilibrium import EnsembleParams, equilibrium_measure, quantile
from .errors import ConvergenceError, ParameterDomainError

_JITTER = 1e-6


def _check_points(params: EnsembleParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (params.n,):
        raise ParameterDomainError(f"expected {params.n} points, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ParameterDomainError("points must be finite")
    return x


def kn_value(params: EnsembleParams, x) -> float:
    """``K_n(x)``; ``inf`` at coincident points or at 0 when ``alpha_n > 0``."""
    x = _check_points(params, x)
    n = params.n
    alpha = params.alpha_n
    diffs = np.abs(x[:, None] - x[None, :])[np.triu_indices(n, 1)]
    if np.any(diffs == 0) or (alpha > 0 and np.any(x == 0)):
        return math.inf
    field = float(np.sum(x * x))
    if alpha > 0:
        field -= 2.0 * alpha * float(np.sum(np.log(np.abs(x))))
    return -params.beta * float(np.sum(np.log(diffs))) + (n - 1) * field


def kn_gradient(params: EnsembleParams, x) -> np.ndarray:
    """``-beta sum_{j != i} 1/(x_i - x_j) + (n - 1)(2 x_i - 2 alpha_n / x_i)``."""
    x = _check_points(params, x)
    n = params.n
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, np.inf)
    grad = -params.beta * np.sum(1.0 / d, axis=1) + (n - 1) * 2.0 * x
    if params.alpha_n > 0:
        grad -= (n - 1) * 2.0 * params.alpha_n / x
    return grad


@dataclass(frozen=True)
class DiscreteConfiguration:
    """A point configuration with its energy and gradient norm (Euclidean)."""

    points: np.ndarray
    k_n_value: float
    grad_norm: float
    params: EnsembleParams
    iterations: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if np.any(np.diff(pts) <= 0):
            raise ParameterDomainError("points must be strictly increasing")
        if self.params.mu_n > 0 and np.any(pts == 0):
            raise ParameterDomainError("points must avoid 0 when mu_n > 0")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def tau_n(self) -> float:
        n = self.params.n
        return self.k_n_value / (n * (n - 1))


def quantile_seed(params: EnsembleParams) -> np.ndarray:
    """Point ``i`` at the ``(i - 1/2)/n`` quantile, jittered by ``+-1e-6``.

    For even ``n`` the middle pair straddles the gap; for odd ``n`` with
    ``alpha_n > 0`` the middle point would sit at 0 and is moved to the
    positive side of the gap, which the jitter alone cannot do.
    """
    n = params.n
    measure = equilibrium_measure(params.beta, params.c)
    x = np.asarray(quantile(measure, (np.arange(n) + 0.5) / n), dtype=float)
    x = x + _JITTER * (-1.0) ** np.arange(n)
    if params.alpha_n > 0 and n % 2:
        mid = n // 2
        hi = x[mid + 1] if mid + 1 < n else max(measure.b, 1.0)
        x[mid] = 0.5 * hi
    return x


def _feasible(x: np.ndarray, signs: np.ndarray | None) -> bool:
    if not np.all(np.isfinite(x)) or np.any(np.diff(x) <= 0):
        return False
    return signs is None or bool(np.all(np.sign(x) == signs))


def minimize_kn(
    params: EnsembleParams,
    init="quantile-seeded",
    max_iters: int = 20000,
    grad_tol: float = 1e-6,
) -> DiscreteConfiguration:
    """Minimize ``K_n`` by gradient descent with backtracking.

    The trial step is the Barzilai-Borwein step length.  It is halved while
    the move would reorder points, move a point across 0 (only when
    ``alpha_n > 0``), or fail to decrease ``K_n`` (Armijo with a rounding
    allowance).  Stops when the Euclidean gradient norm is at most
    ``grad_tol``; raises :class:`ConvergenceError` with the best
    configuration otherwise.
    """
    n = params.n
    if n < 2:
        raise ParameterDomainError(f"minimize_kn needs n >= 2, got {n}")
    if not grad_tol > 0:
        raise ParameterDomainError(f"grad_tol must be positive, got {grad_tol}")
    if isinstance(init, str):
        if init != "quantile-seeded":
            raise ParameterDomainError(f"unknown init {init!r}")
        x = quantile_seed(params)
    else:
        x = np.sort(_check_points(params, init))
    signs = np.sign(x) if params.alpha_n > 0 else None
    if not _feasible(x, signs) or (signs is not None and np.any(signs == 0)):
        raise ParameterDomainError("initial configuration has infinite K_n")

    k = kn_value(params, x)
    g = kn_gradient(params, x)
    gnorm = float(np.linalg.norm(g))
    step = 1.0 / (n * max(1.0, gnorm))
    it = 0
    while gnorm > grad_tol and it < max_iters:
        it += 1
        t = step
        slack = 1e-13 * max(1.0, abs(k))
        while True:
            y = x - t * g
            if _feasible(y, signs):
                ky = kn_value(params, y)
                if ky <= k - 1e-4 * t * gnorm**2 or (ky <= k + slack and t * gnorm < 1e-12 * (1.0 + np.abs(x).max())):
                    break
            t *= 0.5
            if t < 1e-300:
                raise ConvergenceError("line search failed", _config(params, x, k, gnorm, it))
        gy = kn_gradient(params, y)
        s, dg = y - x, gy - g
        sy = float(s @ dg)
        step = float(s @ s) / sy if sy > 0 else 2.0 * t
        x, k, g = y, ky, gy
        gnorm = float(np.linalg.norm(g))
    best = _config(params, x, k, gnorm, it)
    if gnorm > grad_tol:
        raise ConvergenceError(f"gradient norm {gnorm:.3e} above {grad_tol:.1e} after {it} iterations", best)
    return best


def _config(params, x, k, gnorm, it) -> DiscreteConfiguration:
    return DiscreteConfiguration(x.copy(), k, gnorm, params, it)


def tau_sequence(beta: float, c: float, ns, grad_tol: float = 1e-6) -> list[DiscreteConfiguration]:
    """Minimizers for each ``n`` in ``ns`` with ``mu_n = c n``."""
    return [minimize_kn(EnsembleParams(beta, c, n), grad_tol=grad_tol) for n in ns]
