"""Command-line interface: ``chiral-eq <command> [flags]``.

Every command writes one table (see :mod:`chiral_eq.io`) to ``--output-path``
or standard output.  Exit codes: 0 success, 1 a numeric acceptance check
failed (the table is still written), 2 invalid usage (nothing is written).
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__
from .equilibrium import EnsembleParams, EquilibriumMeasure, cdf, density
from .errors import ConfigurationError, ConvergenceError, ParameterDomainError
from .fekete import minimize_kn
from .io import Table, sample_rows, write_table
from .partition import free_energy_table, tail_monotone
from .potential import (
    cauchy_transform,
    energy_closed_form,
    energy_quadrature,
    stieltjes_inversion,
    variational_scan,
)
from .sampler import (
    ChainConfig,
    batch_means_se,
    compare_samples,
    expected_m2,
    ks_statistic,
    run_chains,
)

SEEDED = ("sample", "compare")
MESH_MARGIN = 0.25
ENERGY_TOL = 1e-4
FLATNESS_TOL = 1e-5
EXCESS_TOL = 1e-6
FREE_ENERGY_TOL = 0.02
FREE_ENERGY_CHECK_N = 400


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {value}")
    return value


def _seed(text: str) -> int:
    value = _nonneg_int(text)
    if value >= 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 bits, got {value}")
    return value


def _finite(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chiral-eq", description="Equilibrium measure of the chiral Gaussian log-gas.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_text, beta=True, n=False, grid=None):
        p = sub.add_parser(name, help=help_text, description=help_text)
        if beta:
            p.add_argument("--beta", type=_finite, required=True, help="Dyson index, > 0")
        p.add_argument("--c", type=_finite, default=0.0, help="origin-repulsion strength, >= 0 (default 0)")
        if n:
            p.add_argument("--n", type=_positive_int, required=True, help="number of particles")
        if grid is not None:
            p.add_argument("--grid", type=_positive_int, default=grid, help=f"evaluation-point count (default {grid})")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--output-path", default=None, help="output file (default: standard output)")
        p.add_argument("--seed", type=_seed, default=None, help="RNG seed (sample and compare only, required there)")
        return p

    command("density", "Density f and distribution function F on a mesh over the support.", grid=201)
    command("energy", "Equilibrium energy: closed form against nested quadrature.")
    command("verify-variational", "Effective potential on and off the support.", grid=200)
    p = command("transform", "Cauchy transform just above the real axis and the recovered density.", grid=201)
    p.add_argument("--eps", type=_finite, default=1e-6, help="distance above the real axis (default 1e-6)")

    for name, help_text in (
        ("sample", "Metropolis samples of the n-particle density, one coordinate per row."),
        ("compare", "Sampled histogram against the limiting density, with KS distance."),
    ):
        p = command(name, help_text, n=True)
        p.add_argument("--sweeps", type=_positive_int, required=True)
        p.add_argument("--burn-in", type=_nonneg_int, default=None, help="default: sweeps // 10")
        p.add_argument("--thin", type=_positive_int, default=1)
        p.add_argument("--chains", type=_positive_int, default=1)
        p.add_argument("--sigma", type=_finite, default=None, help="initial proposal scale (default 0.5/sqrt(n))")
        if name == "compare":
            p.add_argument("--ks-threshold", type=_finite, default=0.05)

    p = command("fekete", "Minimizer of the discrete energy K_n.", n=True)
    p.add_argument("--max-iters", type=_positive_int, default=20000)
    p.add_argument("--grad-tol", type=_finite, default=1e-6)

    p = command("free-energy", "Exact beta = 2 free energy -log(A_n)/n^2 for n = 2..n_max.", beta=False)
    p.add_argument("--n-max", type=_positive_int, required=True)
    return parser


def _params(args, n: int = 1) -> EnsembleParams:
    return EnsembleParams(getattr(args, "beta", 2.0), args.c, n)


def _measure(args) -> EquilibriumMeasure:
    return EquilibriumMeasure.from_params(_params(args))


def _header(args, measure: EquilibriumMeasure | None = None, **extra) -> dict:
    out = {"command": args.command, "beta": getattr(args, "beta", 2.0), "c": args.c}
    if measure is not None:
        out.update(a=measure.a, b=measure.b)
    out.update(extra)
    return out


def _mesh(measure: EquilibriumMeasure, grid: int) -> np.ndarray:
    # symmetric by construction, with t = 0 exactly for odd grids
    half = measure.b + MESH_MARGIN
    if grid == 1:
        return np.zeros(1)
    k = np.arange(grid)
    return half * (2 * k - (grid - 1)) / (grid - 1)


def cmd_density(args) -> tuple[Table, int]:
    m = _measure(args)
    t = _mesh(m, args.grid)
    f = density(m, t)
    F = cdf(m, t)
    rows = list(zip(t.tolist(), f.tolist(), F.tolist()))
    return Table(_header(args, m), ("t", "f", "F"), rows, {"points": len(rows)}), 0


def cmd_energy(args) -> tuple[Table, int]:
    m = _measure(args)
    closed = energy_closed_form(m.params)
    quad = energy_quadrature(m)
    diff = abs(closed - quad)
    rows = [("closed_form", closed), ("quadrature", quad), ("difference", diff)]
    ok = diff <= ENERGY_TOL
    return Table(_header(args, m), ("quantity", "value"), rows, {"E_star": closed, "passed": ok}), 0 if ok else 1


def cmd_verify_variational(args) -> tuple[Table, int]:
    m = _measure(args)
    scan = variational_scan(m, args.grid)
    rows = list(zip(scan.x.tolist(), scan.phi.tolist(), scan.region))
    summary = {"C": scan.robin_constant, "flatness": scan.flatness, "min_excess_off_support": scan.min_excess}
    ok = scan.flatness <= FLATNESS_TOL and scan.min_excess >= -EXCESS_TOL
    summary["passed"] = ok
    return Table(_header(args, m), ("x", "phi", "region"), rows, summary), 0 if ok else 1


def cmd_transform(args) -> tuple[Table, int]:
    if not args.eps > 0:
        raise UsageError(f"--eps must be positive, got {args.eps}")
    m = _measure(args)
    x = _mesh(m, args.grid)
    rows = []
    for xi in x.tolist():
        g = cauchy_transform(m.params, complex(xi, args.eps))
        rows.append((xi, g.real, g.imag, stieltjes_inversion(m.params, xi, args.eps), density(m, xi)))
    err = max(abs(r[3] - r[4]) for r in rows)
    table = Table(_header(args, m, eps=args.eps), ("x", "re_G", "im_G", "inversion", "f"), rows, {"max_abs_error": err})
    return table, 0


def _chain_config(args) -> ChainConfig:
    burn_in = args.sweeps // 10 if args.burn_in is None else args.burn_in
    return ChainConfig(
        _params(args, args.n),
        sweeps=args.sweeps,
        burn_in=burn_in,
        thin=args.thin,
        proposal_sigma=args.sigma,
        seed=args.seed,
    )


def _chain_summary(batch) -> dict:
    summary = {
        "acceptance_rate": batch.acceptance_rate,
        "flip_acceptance_rate": batch.flip_acceptance_rate,
        "proposal_sigma": batch.proposal_sigma,
        "retained": int(batch.configurations.shape[0]),
        "empirical_m2": batch.empirical_m2,
        "expected_m2": expected_m2(batch.params),
    }
    if batch.configurations.shape[0] >= 40:
        summary["m2_standard_error"] = batch_means_se(batch.m2_series)
    return summary


def _sample_header(args, config: ChainConfig) -> dict:
    return _header(
        args,
        n=args.n,
        mu_n=config.params.mu_n,
        sweeps=config.sweeps,
        burn_in=config.burn_in,
        thin=config.thin,
        chains=args.chains,
        seed=args.seed,
    )


def cmd_sample(args) -> tuple[Table, int]:
    config = _chain_config(args)
    batch = run_chains(config, args.chains)
    rows = sample_rows(batch.chain_ids, batch.sweeps, batch.configurations)
    return Table(_sample_header(args, config), ("chain_id", "sweep", "i", "lambda"), rows, _chain_summary(batch)), 0


def cmd_compare(args) -> tuple[Table, int]:
    config = _chain_config(args)
    batch = run_chains(config, args.chains)
    m = _measure(args)
    edges, _ = batch.histogram
    report = compare_samples(batch.values, m, edges=edges)
    summary = _chain_summary(batch)
    ok = report.ks <= args.ks_threshold
    summary.update(ks=report.ks, ks_threshold=args.ks_threshold, gap_mass=report.gap_mass, passed=ok)
    rows = [tuple(r) for r in report.table.tolist()]
    columns = ("bin_lo", "bin_hi", "empirical_density", "theory_density")
    return Table(_sample_header(args, config), columns, rows, summary), 0 if ok else 1


def cmd_fekete(args) -> tuple[Table, int]:
    params = _params(args, args.n)
    if args.n < 2:
        raise UsageError("fekete needs --n >= 2")
    if not args.grad_tol > 0:
        raise UsageError(f"--grad-tol must be positive, got {args.grad_tol}")
    code = 0
    try:
        conf = minimize_kn(params, max_iters=args.max_iters, grad_tol=args.grad_tol)
    except ConvergenceError as exc:
        conf, code = exc.best, 1
    m = _measure(args)
    e_star = energy_closed_form(m.params)
    pts = np.asarray(conf.points)
    summary = {
        "tau_n": conf.tau_n,
        "k_n": conf.k_n_value,
        "grad_norm": conf.grad_norm,
        "iterations": conf.iterations,
        "E_star": e_star,
        "gap": conf.tau_n - e_star,
        "ks": ks_statistic(pts, cdf(m, pts)),
        "converged": code == 0,
    }
    rows = list(enumerate(pts.tolist()))
    return Table(_header(args, m, n=args.n, mu_n=params.mu_n), ("i", "lambda"), rows, summary), code


def cmd_free_energy(args) -> tuple[Table, int]:
    if args.n_max < 2:
        raise UsageError(f"--n-max must be at least 2, got {args.n_max}")
    rows = free_energy_table(args.c, args.n_max)
    e_star = energy_closed_form(EnsembleParams(2.0, args.c))
    monotone = tail_monotone(rows)
    final_gap = rows[-1].gap
    ok = monotone and (args.n_max < FREE_ENERGY_CHECK_N or abs(final_gap) <= FREE_ENERGY_TOL)
    summary = {"E_star": e_star, "final_gap": final_gap, "tail_monotone": monotone, "passed": ok}
    table_rows = [(r.n, r.log_A_n, r.scaled, r.gap) for r in rows]
    return Table(_header(args), ("n", "log_An", "scaled", "gap"), table_rows, summary), 0 if ok else 1


COMMANDS = {
    "density": cmd_density,
    "energy": cmd_energy,
    "verify-variational": cmd_verify_variational,
    "transform": cmd_transform,
    "sample": cmd_sample,
    "compare": cmd_compare,
    "fekete": cmd_fekete,
    "free-energy": cmd_free_energy,
}


def _fail(message: str) -> int:
    print(f"chiral-eq: error: {' '.join(str(message).split())}", file=sys.stderr)
    return 2


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command in SEEDED and args.seed is None:
            raise UsageError(f"{args.command} requires --seed")
        if args.command not in SEEDED and args.seed is not None:
            raise UsageError(f"--seed is only accepted by {' and '.join(SEEDED)}")
        table, code = COMMANDS[args.command](args)
    except (UsageError, ParameterDomainError, ConfigurationError) as exc:
        return _fail(exc)
    if args.output_path is None:
        write_table(table, sys.stdout, args.format)
    else:
        with open(args.output_path, "w", encoding="utf-8", newline="") as fh:
            write_table(table, fh, args.format)
    return code


if __name__ == "__main__":
    sys.exit(main())
