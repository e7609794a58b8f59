"""Command-line entry point: ``asis-panel <subcommand> [flags]``.

Variances are given explicitly (``--sigma-eps-sq``); the standard-deviation
forms ``--sigma-eps`` / ``--sigma-alpha`` are accepted and squared.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .data_io import (CollinearCovariates, DataError, FitConfig, fit, load_long_csv,
                      write_fit_outputs)
from .diagnostics import ChainTooShortError, ConstantChainError, diagnose
from .experiments import (ExperimentGrid, load_grid_config, pattern_parameters, run_grid,
                          write_grid_outputs)
from .model import DomainError, ModelSpec, VarianceMode, generate_synthetic
from .samplers import Scheme, run_chain
from .theory import rate_report

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_variances(p, required=True):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--sigma-eps-sq", type=float, help="observation noise variance sigma_eps^2")
    g.add_argument("--sigma-eps", type=float, help="observation noise sd (squared internally)")
    h = p.add_mutually_exclusive_group()
    h.add_argument("--sigma-alpha-sq", type=float, help="heterogeneity variance sigma_alpha^2")
    h.add_argument("--sigma-alpha", type=float, help="heterogeneity sd (squared internally)")
    p.add_argument("--tau-sq", type=float, default=100.0, help="prior variance of mu_alpha (default 100)")
    p.add_argument("--phi", type=float, default=0.0, help="prior mean of mu_alpha (default 0)")


def _variances(args, default=None):
    se = args.sigma_eps_sq if args.sigma_eps_sq is not None else (
        None if args.sigma_eps is None else args.sigma_eps ** 2)
    sa = args.sigma_alpha_sq if args.sigma_alpha_sq is not None else (
        None if args.sigma_alpha is None else args.sigma_alpha ** 2)
    if default is not None:
        se = default[0] if se is None else se
        sa = default[1] if sa is None else sa
    if se is None:
        raise UsageError("missing --sigma-eps-sq (or --sigma-eps)")
    if sa is None:
        raise UsageError("missing --sigma-alpha-sq (or --sigma-alpha)")
    return se, sa


def _common(p):
    p.add_argument("--format", choices=["json", "csv", "human"], default="human")
    p.add_argument("--out", type=Path, default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="asis-panel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("theory", help="SA/AA convergence coefficients and verdict")
    _add_variances(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--T", type=int, required=True)
    _common(p)

    p = sub.add_parser("simulate", help="run one synthetic configuration")
    _add_variances(p)
    p.add_argument("--pattern", type=int, choices=[1, 2, 3], help="take variances from a pattern")
    p.add_argument("--N", type=int, default=10)
    p.add_argument("--T", type=int, default=10)
    p.add_argument("--mu-true", type=float, default=0.0)
    p.add_argument("--scheme", choices=[s.value for s in Scheme] + ["all"], default="all")
    p.add_argument("--iterations", type=int, default=10_000)
    p.add_argument("--burn-in", type=int, default=1_000)
    p.add_argument("--max-lag", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    _common(p)

    p = sub.add_parser("reproduce-tables", help="run the full simulation grid")
    p.add_argument("--config", type=Path, help="key = value file mirroring grid fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--panel-sizes", help="e.g. 10x10,10x100,500x10,500x100")
    p.add_argument("--patterns", help="e.g. 1,2,3")
    p.add_argument("--tau-sq", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--mu-true", type=float)
    p.add_argument("--asis-order", choices=["sa-aa", "aa-sa", "both"], default=None)
    p.add_argument("--shared-dataset", action="store_true", default=None,
                   help="one dataset per configuration instead of one per replication")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: $ASIS_PANEL_THREADS or all cores)")
    _common(p)

    p = sub.add_parser("fit", help="fit a long-format panel CSV (id,t,y,x1..xK)")
    p.add_argument("csv", type=Path)
    p.add_argument("--scheme", choices=[s.value for s in Scheme] + ["all"], default="all")
    p.add_argument("--iterations", type=int, default=10_000)
    p.add_argument("--burn-in", type=int, default=1_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--known-variances", action="store_true",
                   help="hold the variances fixed at the given values")
    _add_variances(p)
    p.add_argument("--eps-prior", type=float, nargs=2, default=(2.0, 1.0), metavar=("SHAPE", "SCALE"))
    p.add_argument("--alpha-prior", type=float, nargs=2, default=(2.0, 1.0), metavar=("SHAPE", "SCALE"))
    p.add_argument("--beta-prior-variance", type=float, default=100.0)
    p.add_argument("--two-stage", action="store_true", help="fix beta at pooled OLS instead of sampling it")
    p.add_argument("--no-center", action="store_true", help="do not demean covariates")
    p.add_argument("--max-lag", type=int, default=50)
    _common(p)

    p = sub.add_parser("diagnose", help="ACF / MCSE / ESS of a stored draws file")
    p.add_argument("draws", type=Path)
    p.add_argument("--column", default="mu_alpha")
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--max-lag", type=int, default=50)
    _common(p)
    return parser


def _emit(payload: dict, fmt: str, human: str, csv_rows: list[list] | None = None):
    if fmt == "json":
        print(json.dumps(payload, indent=2))
    elif fmt == "csv" and csv_rows:
        w = csv.writer(sys.stdout)
        w.writerows(csv_rows)
    else:
        print(human)


def _write_summary(out: Path | None, payload: dict):
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(json.dumps(payload, indent=2))


def cmd_theory(args) -> int:
    se, sa = _variances(args)
    spec = ModelSpec(se, sa, args.phi, args.tau_sq)
    rep = rate_report(spec, args.N, args.T)
    payload = {"command": "theory", "config": {"sigma_eps_sq": se, "sigma_alpha_sq": sa,
               "tau_alpha_sq": args.tau_sq, "phi_alpha": args.phi, "N": args.N, "T": args.T},
               "rate_report": rep.to_dict()}
    human = "\n".join([
        f"{'':16}{'SA':>10}{'AA':>10}",
        f"{'exact rho':16}{rep.rho_sa_exact:10.4f}{rep.rho_aa_exact:10.4f}",
        f"{'asymptotic rho':16}{rep.rho_sa_asym:10.4f}{rep.rho_aa_asym:10.4f}",
        f"trade-off sum   {rep.tradeoff_sum:.15f}",
        f"verdict         {rep.verdict.value}",
        "",
        json.dumps(rep.to_dict()),
    ])
    rows = [list(rep.to_dict().keys()), list(rep.to_dict().values())]
    _emit(payload, args.format, human, rows)
    _write_summary(args.out, payload)
    return EXIT_OK


def _schemes(choice: str) -> list[Scheme]:
    return list(Scheme) if choice == "all" else [Scheme(choice)]


def cmd_simulate(args) -> int:
    default = None
    if args.pattern is not None:
        pp = pattern_parameters(args.pattern, args.T)
        default = (pp.sigma_eps_sq, pp.sigma_alpha_sq)
    se, sa = _variances(args, default)
    if not 0 <= args.burn_in < args.iterations:
        raise UsageError("--burn-in must be smaller than --iterations")
    spec = ModelSpec(se, sa, args.phi, args.tau_sq)
    ss = np.random.SeedSequence(args.seed)
    data_seed, chain_seed = ss.spawn(2)
    data = generate_synthetic(spec, args.mu_true, args.N, args.T, data_seed)
    out = args.out or Path("asis_output")
    out.mkdir(parents=True, exist_ok=True)

    results, chains = {}, {}
    for scheme in _schemes(args.scheme):
        rng = np.random.default_rng(np.random.SeedSequence(chain_seed.entropy,
                                                           spawn_key=chain_seed.spawn_key + (scheme.code,)))
        mu, _ = run_chain(scheme, data, spec, args.iterations, rng)
        chains[scheme] = mu
        results[scheme.value] = diagnose(mu, args.burn_in, args.max_lag).to_dict()

    with open(out / "draws.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration"] + [f"mu_alpha_{s.value}" for s in chains])
        for r, row in enumerate(np.column_stack(list(chains.values())), 1):
            w.writerow([r] + [repr(float(v)) for v in row])
    with open(out / "acf.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "lag", "acf"])
        for s, d in results.items():
            w.writerows([s, k, f"{v:.6f}"] for k, v in enumerate(d["acf"]))

    payload = {
        "command": "simulate",
        "config": {"sigma_eps_sq": se, "sigma_alpha_sq": sa, "tau_alpha_sq": args.tau_sq,
                   "phi_alpha": args.phi, "N": args.N, "T": args.T, "mu_true": args.mu_true,
                   "iterations": args.iterations, "burn_in": args.burn_in, "seed": args.seed,
                   "pattern": args.pattern},
        "seed_derivation": "SeedSequence(seed).spawn(2) -> (data, chain); chain stream extended by scheme code",
        "rate_report": rate_report(spec, args.N, args.T).to_dict(),
        "diagnostics": results,
    }
    (out / "summary.json").write_text(json.dumps(payload, indent=2))
    human = "\n".join(f"{s:12} mean={d['mean']:.5f} mcse={d['mcse']:.3e} ess={d['ess']:.0f} "
                      f"acf1={d['acf'][1]:.3f}" for s, d in results.items())
    rows = [["scheme", "mean", "mcse", "ess", "acf1"]] + [
        [s, d["mean"], d["mcse"], d["ess"], d["acf"][1]] for s, d in results.items()]
    _emit(payload, args.format, human, rows)
    return EXIT_OK


def _grid_from_args(args) -> ExperimentGrid:
    grid = ExperimentGrid()
    if args.config is not None:
        if not args.config.exists():
            raise FileNotFoundError(f"config file not found: {args.config}")
        grid = load_grid_config(args.config, grid)
    updates = {}
    for flag, key in [("seed", "base_seed"), ("iterations", "iterations"), ("burn_in", "burn_in"),
                      ("replications", "replications"), ("tau_sq", "tau_alpha_sq"),
                      ("phi", "phi_alpha"), ("mu_true", "mu_true"), ("shared_dataset", "shared_dataset")]:
        v = getattr(args, flag)
        if v is not None:
            updates[key] = v
    if args.panel_sizes:
        updates["panel_sizes"] = [tuple(int(v) for v in s.lower().split("x"))
                                  for s in args.panel_sizes.split(",")]
    if args.patterns:
        updates["patterns"] = [int(p) for p in args.patterns.split(",")]
    if args.asis_order:
        asis = {"sa-aa": [Scheme.ASIS_SA_AA], "aa-sa": [Scheme.ASIS_AA_SA],
                "both": [Scheme.ASIS_SA_AA, Scheme.ASIS_AA_SA]}[args.asis_order]
        updates["schemes"] = [Scheme.SA, Scheme.AA] + asis
    try:
        return replace(grid, **updates)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_reproduce(args) -> int:
    grid = _grid_from_args(args)
    out = args.out or Path("asis_output")

    def progress(N, T, p):
        print(f"done N={N} T={T} pattern={p}", file=sys.stderr)

    result = run_grid(grid, threads=args.threads, progress=progress)
    write_grid_outputs(result, out, extra={"command": "reproduce-tables"})
    lines = [f"{'N':>4} {'T':>4} {'pat':>3} {'scheme':>11} {'MCSE x1e5':>11} {'acf1':>7}"]
    for r in result.rows:
        lines.append(f"{r.N:4d} {r.T:4d} {r.pattern:3d} {r.scheme.value:>11} {r.mcse_scaled:11.3f} "
                     f"{r.mean_lag1_acf:7.3f}")
    rows = [["N", "T", "pattern", "scheme", "mean_mcse"]] + [
        [r.N, r.T, r.pattern, r.scheme.value, r.mean_mcse] for r in result.rows]
    _emit({"grid": grid.to_dict(), "rows": rows[1:]}, args.format, "\n".join(lines), rows)
    return EXIT_OK


def cmd_fit(args) -> int:
    if not args.csv.exists():
        raise FileNotFoundError(f"data file not found: {args.csv}")
    data = load_long_csv(args.csv)
    if args.known_variances:
        se, sa = _variances(args)
        spec = ModelSpec(se, sa, args.phi, args.tau_sq)
    else:
        se, sa = _variances(args, default=(1.0, 1.0))
        spec = ModelSpec(se, sa, args.phi, args.tau_sq, VarianceMode.SAMPLED,
                         (tuple(args.eps_prior), tuple(args.alpha_prior)))
    out = args.out or Path("asis_output")
    results = {}
    for scheme in _schemes(args.scheme):
        cfg = FitConfig(spec, scheme=scheme, beta_prior_variance=args.beta_prior_variance,
                        iterations=args.iterations, burn_in=args.burn_in, seed=args.seed,
                        two_stage=args.two_stage, center_covariates=not args.no_center,
                        max_lag=args.max_lag)
        res = fit(data, cfg)
        write_fit_outputs(res, out, name=scheme.value)
        results[scheme.value] = res.summary
    payload = {"command": "fit", "data": str(args.csv), "schemes": results}
    (out / "summary.json").write_text(json.dumps(payload, indent=2))
    human = "\n".join(
        f"{s:12} mu_alpha={r['posterior']['mu_alpha']['mean']:.5f} "
        f"mcse={r['mu_alpha_diagnostics']['mcse']:.3e} acf1={r['mu_alpha_diagnostics']['acf'][1]:.3f}"
        for s, r in results.items())
    rows = [["scheme", "mu_alpha_mean", "mcse", "acf1"]] + [
        [s, r["posterior"]["mu_alpha"]["mean"], r["mu_alpha_diagnostics"]["mcse"],
         r["mu_alpha_diagnostics"]["acf"][1]] for s, r in results.items()]
    _emit(payload, args.format, human, rows)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    if not args.draws.exists():
        raise FileNotFoundError(f"draws file not found: {args.draws}")
    with open(args.draws, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or args.column not in reader.fieldnames:
            raise DataError(f"{args.draws}: column {args.column!r} not found")
        try:
            x = np.array([float(row[args.column]) for row in reader])
        except ValueError as exc:
            raise DataError(f"{args.draws}: {exc}") from None
    rep = diagnose(x, args.burn_in, min(args.max_lag, max(1, len(x) - args.burn_in - 2)))
    payload = {"command": "diagnose", "file": str(args.draws), "column": args.column,
               "burn_in": args.burn_in, "diagnostics": rep.to_dict()}
    human = (f"n={rep.n_draws} mean={rep.mean:.6g} sd={rep.sd:.4g} mcse={rep.mcse:.4g} "
             f"ess={rep.ess:.1f} acf1={rep.acf[1]:.4f}")
    rows = [["lag", "acf"]] + [[k, v] for k, v in enumerate(rep.acf)]
    _emit(payload, args.format, human, rows)
    _write_summary(args.out, payload)
    return EXIT_OK


COMMANDS = {
    "theory": cmd_theory,
    "simulate": cmd_simulate,
    "reproduce-tables": cmd_reproduce,
    "fit": cmd_fit,
    "diagnose": cmd_diagnose,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ChainTooShortError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError, DataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConstantChainError, CollinearCovariates, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
