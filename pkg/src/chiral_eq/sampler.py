"""Metropolis sampling of the finite-n eigenvalue density.

The target on R^n is proportional to

    exp(-n sum x_k**2) * prod |x_k|**(2 mu_n) * prod_{i<j} |x_i - x_j|**beta.

One sweep visits every coordinate once with a Gaussian random-walk proposal
and then proposes a sign flip ``x_i -> -x_i`` for every coordinate.  The
flip is a symmetric involution, so it preserves the target.  Without it a
particle crosses the ``|x|**(2 mu_n)`` barrier at the origin only by a rare
long jump over the gap, and the split of particles between the two halves
of the support stays close to its initial value.

Chains are reproducible: chain ``k`` of a run with seed ``s`` draws from
``numpy.random.Generator(PCG64(SeedSequence(s, spawn_key=(k,))))``, the same
stream as ``SeedSequence(s).spawn(k + 1)[k]``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .equilibrium import EnsembleParams, EquilibriumMeasure, cdf, support_edges
from .errors import ConfigurationError, ParameterDomainError
from .quadrature import QuadratureSpec

# n * sweeps above this is refused: every sweep costs O(n**2) log evaluations
MAX_PARTICLE_SWEEPS = 10**9
# retained coordinates kept in memory
MAX_RETAINED_VALUES = 5 * 10**7
HISTOGRAM_BINS = 80
HISTOGRAM_MARGIN = 0.25
_BLOCK = 256
_ADAPT_EVERY = 50
_TARGET_ACCEPTANCE = 0.325


def log_unnormalized_density(params: EnsembleParams, lam) -> float:
    """Log of the unnormalized joint density; ``-inf`` on its zero set."""
    x = np.asarray(lam, dtype=float)
    if x.ndim != 1 or not np.all(np.isfinite(x)):
        raise ParameterDomainError("lambda must be a finite 1-D vector")
    n = x.size
    mu = params.mu_n
    if mu > 0 and np.any(x == 0):
        return -math.inf
    diffs = np.abs(x[:, None] - x[None, :])[np.triu_indices(n, 1)]
    if np.any(diffs == 0):
        return -math.inf
    out = -n * float(np.sum(x * x))
    if mu > 0:
        out += 2.0 * mu * float(np.sum(np.log(np.abs(x))))
    if diffs.size:
        out += params.beta * float(np.sum(np.log(diffs)))
    return out


@njit(cache=True)
def _sweep_block(x, beta, mu, confinement, sigma, normals, uniforms, flip_uniforms, flips, trace):
    n = x.size
    accepted = 0
    flipped = 0
    for s in range(normals.shape[0]):
        for i in range(n):
            xi = x[i]
            y = xi + sigma * normals[s, i]
            d = -confinement * (y * y - xi * xi)
            if mu > 0.0:
                if y == 0.0:
                    continue
                d += 2.0 * mu * (math.log(abs(y)) - math.log(abs(xi)))
            ok = True
            for j in range(n):
                if j != i:
                    dy = abs(y - x[j])
                    if dy == 0.0:
                        ok = False
                        break
                    d += beta * (math.log(dy) - math.log(abs(xi - x[j])))
            if ok and math.log(uniforms[s, i]) < d:
                x[i] = y
                accepted += 1
        if flips:
            for i in range(n):
                xi = x[i]
                if xi == 0.0:
                    continue
                d = 0.0
                ok = True
                for j in range(n):
                    if j != i:
                        dy = abs(xi + x[j])
                        if dy == 0.0:
                            ok = False
                            break
                        d += beta * (math.log(dy) - math.log(abs(xi - x[j])))
                if ok and math.log(flip_uniforms[s, i]) < d:
                    x[i] = -xi
                    flipped += 1
        trace[s, :] = x
    return accepted, flipped


@dataclass(frozen=True)
class ChainConfig:
    """Run length, thinning, proposal scale and seed of one Metropolis chain.

    ``proposal_sigma`` is the initial scale; it is adapted during burn-in
    toward 25-40% acceptance and frozen afterwards.  ``None`` selects
    ``0.5 / sqrt(n)``.
    """

    params: EnsembleParams
    sweeps: int
    burn_in: int = 0
    thin: int = 1
    proposal_sigma: float | None = None
    seed: int = 0
    flip_moves: bool = True

    def __post_init__(self):
        for name in ("sweeps", "burn_in", "thin", "seed"):
            value = getattr(self, name)
            if int(value) != value:
                raise ConfigurationError(f"{name} must be an integer, got {value}")
        if self.sweeps < 1:
            raise ConfigurationError(f"sweeps must be positive, got {self.sweeps}")
        if not 0 <= self.burn_in < self.sweeps:
            raise ConfigurationError(f"burn_in must satisfy 0 <= burn_in < sweeps, got {self.burn_in}")
        if self.thin < 1:
            raise ConfigurationError(f"thin must be at least 1, got {self.thin}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.proposal_sigma is None:
            object.__setattr__(self, "proposal_sigma", 0.5 / math.sqrt(self.params.n))
        if not self.proposal_sigma > 0:
            raise ConfigurationError(f"proposal_sigma must be positive, got {self.proposal_sigma}")
        if self.params.n * self.sweeps > MAX_PARTICLE_SWEEPS:
            raise ConfigurationError(
                f"n * sweeps = {self.params.n * self.sweeps} exceeds the cap {MAX_PARTICLE_SWEEPS}"
            )
        if self.retained * self.params.n > MAX_RETAINED_VALUES:
            raise ConfigurationError(
                f"{self.retained * self.params.n} retained values exceed the cap {MAX_RETAINED_VALUES}"
            )

    @property
    def retained(self) -> int:
        return len(range(self.burn_in, self.sweeps, self.thin))


def chain_generator(seed: int, chain_index: int) -> np.random.Generator:
    """Random stream of chain ``chain_index`` in a run seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chain_index,))))


@dataclass
class SampleBatch:
    """Retained states of one or more chains plus summary statistics.

    ``configurations[r]`` is the state after sweep ``sweeps[r]`` of chain
    ``chain_ids[r]``.  Histogram counts cover ``HISTOGRAM_BINS`` uniform bins
    on ``[-b - 0.25, b + 0.25]``; values beyond the range are counted in the
    end bins so the counts always sum to the number of retained values.
    """

    params: EnsembleParams
    configurations: np.ndarray
    chain_ids: np.ndarray
    sweeps: np.ndarray
    acceptance_rate: float
    flip_acceptance_rate: float
    proposal_sigma: float
    provenance: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return self.configurations.ravel()

    @property
    def m2_series(self) -> np.ndarray:
        """Per-configuration mean of ``x**2``."""
        return np.mean(self.configurations**2, axis=1)

    @property
    def empirical_m2(self) -> float:
        return float(np.mean(self.configurations**2))

    @property
    def empirical_m1(self) -> float:
        return float(np.mean(self.configurations))

    @property
    def histogram(self) -> tuple[np.ndarray, np.ndarray]:
        b = support_edges(EnsembleParams(self.params.beta, self.params.c)).b
        edges = np.linspace(-b - HISTOGRAM_MARGIN, b + HISTOGRAM_MARGIN, HISTOGRAM_BINS + 1)
        idx = np.clip(np.searchsorted(edges, self.values, side="right") - 1, 0, HISTOGRAM_BINS - 1)
        return edges, np.bincount(idx, minlength=HISTOGRAM_BINS)


def batch_means_se(series: np.ndarray, n_batches: int = 20) -> float:
    """Standard error of the mean of a correlated series by batch means."""
    series = np.asarray(series, dtype=float)
    size = series.size // n_batches
    if size < 1:
        raise ParameterDomainError(f"need at least {n_batches} values, got {series.size}")
    means = series[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(n_batches))


def expected_m2(params: EnsembleParams) -> float:
    """Exact finite-n second moment ``(mu_n + beta (n-1)/4 + 1/2) / n``."""
    return (params.mu_n + params.beta * (params.n - 1) / 4.0 + 0.5) / params.n


def _initial_state(params: EnsembleParams, rng: np.random.Generator) -> np.ndarray:
    # independent draws from the one-body weight |x|**(2 mu) exp(-n x**2)
    n = params.n
    radius = np.sqrt(rng.gamma(params.mu_n + 0.5, 1.0, size=n) / n)
    signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return signs * radius


def _run_single(config: ChainConfig, chain_index: int) -> tuple:
    p = config.params
    n = p.n
    rng = chain_generator(config.seed, chain_index)
    x = _initial_state(p, rng)
    sigma = float(config.proposal_sigma)
    retained = np.empty((config.retained, n))
    kept_sweeps = np.empty(config.retained, dtype=np.int64)
    kept = 0
    moves = accepted = flips = flipped = 0
    sweep = 0
    while sweep < config.sweeps:
        if sweep < config.burn_in:
            block = min(_ADAPT_EVERY, config.burn_in - sweep)
        else:
            block = min(_BLOCK, config.sweeps - sweep)
        normals = rng.standard_normal((block, n))
        uniforms = 1.0 - rng.random((block, n))
        flip_uniforms = 1.0 - rng.random((block, n))
        trace = np.empty((block, n))
        acc, fl = _sweep_block(x, p.beta, p.mu_n, float(n), sigma, normals, uniforms, flip_uniforms, config.flip_moves, trace)
        if sweep < config.burn_in:
            # Robbins-Monro style scale adaptation, burn-in only
            sigma *= math.exp(acc / (block * n) - _TARGET_ACCEPTANCE)
        else:
            moves += block * n
            accepted += acc
            if config.flip_moves:
                flips += block * n
                flipped += fl
        for r in range(block):
            s = sweep + r
            if s >= config.burn_in and (s - config.burn_in) % config.thin == 0:
                retained[kept] = trace[r]
                kept_sweeps[kept] = s
                kept += 1
        sweep += block
    return retained, kept_sweeps, moves, accepted, flips, flipped, sigma


def _threads() -> int:
    env = os.environ.get("CHIRAL_EQ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigurationError(f"CHIRAL_EQ_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_chains(config: ChainConfig, n_chains: int = 1, max_workers: int | None = None) -> SampleBatch:
    """Run ``n_chains`` independent chains and pool their retained states.

    Results are concatenated in chain order, so they do not depend on the
    thread schedule.  ``max_workers`` defaults to ``CHIRAL_EQ_THREADS`` or
    the machine's CPU count.
    """
    if n_chains < 1:
        raise ConfigurationError(f"n_chains must be positive, got {n_chains}")
    workers = min(n_chains, max_workers or _threads())
    if workers == 1:
        results = [_run_single(config, k) for k in range(n_chains)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda k: _run_single(config, k), range(n_chains)))
    moves = sum(r[2] for r in results)
    flips = sum(r[4] for r in results)
    return SampleBatch(
        params=config.params,
        configurations=np.concatenate([r[0] for r in results]),
        chain_ids=np.concatenate([np.full(r[0].shape[0], k, dtype=np.int64) for k, r in enumerate(results)]),
        sweeps=np.concatenate([r[1] for r in results]),
        acceptance_rate=sum(r[3] for r in results) / moves if moves else 0.0,
        flip_acceptance_rate=sum(r[5] for r in results) / flips if flips else 0.0,
        proposal_sigma=results[0][6],
        provenance={
            "seed": int(config.seed),
            "chains": n_chains,
            "stream": "PCG64(SeedSequence(seed, spawn_key=(chain_id,)))",
        },
    )


def run_chain(config: ChainConfig) -> SampleBatch:
    """Run a single seeded chain (chain id 0)."""
    return run_chains(config, 1, 1)


# ---------------------------------------------------------------------------
# comparison with the limiting measure
# ---------------------------------------------------------------------------


def ks_statistic(sorted_values: np.ndarray, theory_cdf: np.ndarray) -> float:
    """``sup |F_emp - F|`` given sorted samples and ``F`` evaluated at them."""
    n = sorted_values.size
    if n == 0:
        raise ParameterDomainError("KS statistic of an empty sample")
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - theory_cdf), np.max(theory_cdf - (i - 1) / n)))


@dataclass(frozen=True)
class Comparison:
    """Empirical sample against the equilibrium measure.

    ``table`` columns: bin_lo, bin_hi, empirical_density, theory_density,
    the latter being the bin average of the limiting density.
    """

    ks: float
    table: np.ndarray
    gap_mass: float
    count: int


def compare_samples(values: np.ndarray, measure: EquilibriumMeasure, quad: QuadratureSpec | None = None, edges: np.ndarray | None = None) -> Comparison:
    values = np.sort(np.asarray(values, dtype=float).ravel())
    if values.size == 0:
        raise ParameterDomainError("cannot compare an empty sample")
    quad = quad or measure.quad
    ks = ks_statistic(values, cdf(measure, values, quad))
    if edges is None:
        edges = np.linspace(-measure.b - HISTOGRAM_MARGIN, measure.b + HISTOGRAM_MARGIN, HISTOGRAM_BINS + 1)
    idx = np.clip(np.searchsorted(edges, values, side="right") - 1, 0, edges.size - 2)
    counts = np.bincount(idx, minlength=edges.size - 1)
    width = np.diff(edges)
    emp = counts / (values.size * width)
    theory = np.diff(cdf(measure, edges, quad)) / width
    table = np.column_stack([edges[:-1], edges[1:], emp, theory])
    lo_gap = measure.a - 0.05
    gap = float(np.mean(np.abs(values) < lo_gap)) if lo_gap > 0 else 0.0
    return Comparison(ks, table, gap, int(values.size))


def empirical_vs_theory(batch: SampleBatch, measure: EquilibriumMeasure, quad: QuadratureSpec | None = None) -> Comparison:
    """KS distance and histogram table of a sample batch against ``measure``."""
    edges, _ = batch.histogram
    return compare_samples(batch.values, measure, quad, edges)
