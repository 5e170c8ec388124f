"""Command line entry point ``pathsde``.

Exit codes: 0 success, 1 usage or input error, 2 a checked invariant failed.
Tables go to stdout as CSV, summaries as JSON.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .brownian import derive_stream
from .coefficients import ModelParams, normalize, unit_integrals
from .exact_solution import moment_integral
from .gaussian_model import VarianceTable, equidistant_functional
from .harness import DEFAULT_SEED, ExperimentConfig, cost_profile, rows_to_csv, run_convergence
from .oracles import (
    conditional_mean_error,
    conditional_median_error,
    constant_curve,
    constant_threshold,
    symmetrization_bound,
)
from .quadrature import QuadratureError
from .schemes import SCHEMES

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _model_args(parser, p_default=2.0):
    parser.add_argument("--tau1", type=float, default=1.0)
    parser.add_argument("--tau2", type=float, default=2.0)
    parser.add_argument("--T", type=float, default=3.0, dest="T_final")
    parser.add_argument("--p", type=float, default=p_default)


def _params(args) -> ModelParams:
    return ModelParams(tau1=args.tau1, tau2=args.tau2, T_final=args.T_final, p=args.p)


def _csv_out(header, rows, stream=None):
    writer = csv.writer(stream or sys.stdout, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def cmd_coeffs(args) -> int:
    cs = normalize(_params(args), args.tol)
    ints = unit_integrals(cs, min(args.tol, 1e-12))
    ok = all(abs(v - 1.0) <= max(args.tol, 1e-8) for v in ints.values())
    print(json.dumps({**ints, "c_f": cs.c_f, "c_g": cs.c_g, "c_h": cs.c_h, "ok": ok}, indent=2))
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_variances(args) -> int:
    cs = normalize(_params(args))
    vt = VarianceTable(cs)
    rows, ok = [], True
    for m in args.n_list:
        s2 = vt.sigma2(m)
        nu2 = equidistant_functional(cs, m).variance
        bound = vt.bound(m)
        ok &= abs(nu2 + s2 - 1.0) <= 1e-8 and s2 <= bound
        rows.append((m, nu2, s2, bound))
    _csv_out(["m", "nu2", "sigma2", "bound"], rows)
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_simulate(args) -> int:
    cs = normalize(_params(args))
    vt = VarianceTable(cs)
    rng = derive_stream(args.seed, (args.n, 0), args.scheme)
    kw = {"level_cap": args.level_cap} if args.scheme == "adaptive" else {}
    out = SCHEMES[args.scheme](cs, vt, args.n, rng, size=args.reps, **kw)
    if args.records:
        recs = zip(out.approx.x7, out.exact.x7, out.cost, out.level)
        _csv_out(["approx7", "exact7", "cost", "level"], recs)
        return EXIT_OK
    err = np.abs(out.errors())
    summary = {
        "scheme": args.scheme,
        "n": args.n,
        "reps": args.reps,
        "l1_error": err.mean(axis=0).tolist(),
        "l2_error": np.sqrt((err**2).mean(axis=0)).tolist(),
        "mean_cost": float(out.cost.mean()),
        "max_level": int(out.level.max()),
        "truncated_count": int(out.truncated_level.sum()),
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _config_from(args) -> ExperimentConfig:
    overrides = {
        "scheme": args.scheme,
        "r": args.r,
        "n_list": args.n_list,
        "replications": args.reps,
        "master_seed": args.seed,
        "worker_count": args.workers,
        "output": args.output,
    }
    if args.config:
        return ExperimentConfig.from_json(args.config, **overrides)
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def cmd_convergence(args) -> int:
    cfg = _config_from(args)
    rows = run_convergence(cfg)
    sys.stdout.write(rows_to_csv(rows))
    return EXIT_OK


def cmd_cost(args) -> int:
    cfg = _config_from(args)
    table = cost_profile(cfg)
    _csv_out(
        ["n", "mean_cost", "ci", "cost_over_n", "max_level", "bound"],
        [(c.n, c.mean_cost, c.ci, c.cost_over_n, c.max_level, c.bound) for c in table],
    )
    ok = all(c.cost_over_n <= 1.1 * c.bound for c in table) if cfg.scheme == "adaptive" else True
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_oracle(args) -> int:
    if args.p not in (1.0, 2.0):
        raise UsageError("oracle needs --p 1 or --p 2")
    cs = normalize(_params(args))
    vt = VarianceTable(cs)
    fn = conditional_mean_error if args.p == 2.0 else conditional_median_error
    _csv_out(["n", "optimal_error"], [(n, fn(cs, vt, n)) for n in args.n_list])
    return EXIT_OK


def cmd_lower_bound(args) -> int:
    if args.p not in (1.0, 2.0):
        raise UsageError("lower-bound needs --p 1 or --p 2")
    cs = normalize(_params(args))
    start = constant_threshold(cs)
    rows, ok = [], True
    for n in args.n_list:
        b = symmetrization_bound(cs, n)
        curve = float(constant_curve(cs, n))
        if n >= start:
            ok &= b >= curve
        rows.append((n, b, curve if n >= start else ""))
    _csv_out(["n", "bound", "constant_curve"], rows)
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_moments(args) -> int:
    rows = []
    for q in args.q_list:
        val, div = moment_integral(args.p, q, args.R)
        rows.append((q, val, "diverging" if div else "finite"))
    _csv_out(["q", "value", "status"], rows)
    return EXIT_OK


def _experiment_args(parser, scheme_default=None):
    parser.add_argument("--config", help="JSON file with ExperimentConfig fields")
    parser.add_argument("--scheme", choices=sorted(SCHEMES), default=scheme_default)
    parser.add_argument("--r", type=float)
    parser.add_argument("--n-list", type=int, nargs="+")
    parser.add_argument("--reps", type=int)
    parser.add_argument("--seed", type=lambda s: int(s, 0))
    parser.add_argument("--workers", type=int)
    parser.add_argument("--output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pathsde", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    coeffs = sub.add_parser("coeffs", help="coefficient normalisation")
    coeffs.add_argument("action", choices=["check"])
    _model_args(coeffs)
    coeffs.add_argument("--tol", type=float, default=1e-12)
    coeffs.set_defaults(func=cmd_coeffs)

    var = sub.add_parser("variances", help="nu^2_m, sigma^2_m and the sigma^2 bound")
    var.add_argument("--n-list", type=int, nargs="+", default=[2**k for k in range(13)])
    _model_args(var)
    var.set_defaults(func=cmd_variances)

    sim = sub.add_parser("simulate", help="run one scheme")
    sim.add_argument("--scheme", choices=sorted(SCHEMES), required=True)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--reps", type=int, default=1000)
    sim.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    sim.add_argument("--level-cap", type=int, default=1 << 20)
    sim.add_argument("--records", action="store_true", help="print per-replication CSV")
    _model_args(sim)
    sim.set_defaults(func=cmd_simulate)

    conv = sub.add_parser("convergence", help="error table over n")
    _experiment_args(conv)
    conv.set_defaults(func=cmd_convergence)

    cost = sub.add_parser("cost", help="mean cost of the adaptive scheme")
    _experiment_args(cost, scheme_default="adaptive")
    cost.set_defaults(func=cmd_cost)

    ora = sub.add_parser("oracle", help="error of the best non-adaptive estimator")
    ora.add_argument("--n-list", type=int, nargs="+", required=True)
    _model_args(ora)
    ora.set_defaults(func=cmd_oracle)

    lb = sub.add_parser("lower-bound", help="symmetrisation lower bound")
    lb.add_argument("--n-list", type=int, nargs="+", required=True)
    _model_args(lb)
    lb.set_defaults(func=cmd_lower_bound)

    mom = sub.add_parser("moments", help="truncated E[X_7(T)^q] integrals")
    mom.add_argument("--q-list", type=float, nargs="+", required=True)
    mom.add_argument("--R", type=float, default=20.0)
    mom.add_argument("--p", type=float, default=2.0)
    mom.set_defaults(func=cmd_moments)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"pathsde: error: {exc}\n")
        return EXIT_USAGE
    except QuadratureError as exc:
        sys.stderr.write(f"pathsde: numerical failure: {exc}\n")
        return EXIT_INVARIANT


if __name__ == "__main__":
    raise SystemExit(main())
