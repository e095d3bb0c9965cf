"""Command-line interface: ``ougauss <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .errors import ConfigurationError, OUGaussError, ParameterDomainError
from .harness import (
    Experiment,
    ExperimentConfig,
    default_output_dir,
    fmt,
    load_configs,
    parse_params,
    reproduce_all,
    run_experiment,
    write_csv,
)
from .kernels import kernel

EXIT_USAGE = 2
EXIT_FAIL = 1


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="experiment configuration file")
    p.add_argument("--seed", type=int, help="base seed (overrides the config)")
    p.add_argument("--workers", type=int, default=1, help="worker threads for replications")
    p.add_argument("--out", type=Path, help="output directory (default $OUGAUSS_OUT or ./ougauss-out)")


def _kernel_args(p: argparse.ArgumentParser, required: bool = False) -> None:
    p.add_argument("--kernel", required=required, help="kernel family, e.g. FBm, SubFBm")
    p.add_argument("--params", default="", help="kernel parameters, e.g. 'H=0.7' or 'H=0.6;K=0.5'")


def _spec(args):
    return kernel(args.kernel, **parse_params(args.params)) if args.kernel else None


def _emit(header, rows, dest=None) -> None:
    if dest is None:
        w = csv.writer(sys.stdout)
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    else:
        write_csv(dest, header, rows)


def _out(args) -> Path:
    return args.out if args.out is not None else default_output_dir()


def cmd_simulate(args) -> int:
    from .simulate import TimeGrid, build_ou_path, sample_gaussian_path, write_path_csv

    grid = TimeGrid(args.n, args.delta)
    seed = 12345 if args.seed is None else args.seed
    g = sample_gaussian_path(_spec(args), grid, seed)
    path = build_ou_path(g, args.theta, rule=args.rule)
    out = _out(args)
    out.mkdir(parents=True, exist_ok=True)
    dest = out / f"path-{seed}.csv"
    write_path_csv(path, dest)
    print(dest)
    return 0


def cmd_estimate(args) -> int:
    from .estimators import continuous_lse, discrete_lse_check, discrete_lse_hat
    from .simulate import read_path_csv

    path = read_path_csv(args.path)
    results = [continuous_lse(path, args.rule), discrete_lse_hat(path), discrete_lse_check(path)]
    header = ["estimator", "theta", "T", "n", "delta", "denominator"]
    dest = None
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        dest = args.out / "estimates.csv"
    _emit(header, [[r.as_row()[h] for h in header] for r in results], dest)
    return 0


def cmd_check_hypothesis(args) -> int:
    from .hypothesis import canonical_examples, check_hypothesis

    specs = [_spec(args)] if args.kernel else canonical_examples()
    reports = [check_hypothesis(s, args.T, args.grid_n) for s in specs]
    header = ["family", "params", "cond1", "cond2", "cond3", "C_prime", "overall"]
    dest = None
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        dest = args.out / "hypothesis.csv"
    _emit(header, [[r.as_row()[h] for h in header] for r in reports], dest)
    if args.verbose:
        for r in reports:
            print(r.summary(), file=sys.stderr)
    return 0


def _configs_for(args, experiment: Experiment, build) -> list[ExperimentConfig]:
    if args.config is not None:
        cfgs = [c for c in load_configs(args.config, args.seed, args.out) if c.experiment is experiment]
        if not cfgs:
            raise ConfigurationError(f"{args.config} has no {experiment.value} section")
        return cfgs
    return [build()]


def _run(cfgs, workers) -> int:
    status = 0
    for cfg in cfgs:
        rec = run_experiment(cfg, workers)
        print(f"# {cfg.name} -> {rec.run_dir}" + (" (reused)" if rec.reused else ""))
        _emit(["key", "value"], list(rec.summary.items()) + [(f"verdict:{k}", v) for k, v in rec.verdicts.items()])
        status |= 0 if rec.ok else EXIT_FAIL
    return status


def cmd_cauchy(args) -> int:
    def build():
        if not args.kernel:
            raise ConfigurationError("give --kernel or --config")
        return ExperimentConfig("cauchy", Experiment.CauchyLaw, _spec(args), args.theta,
                                int(round(args.T / args.delta)), args.delta, (), args.n_reps,
                                12345 if args.seed is None else args.seed, _out(args))
    return _run(_configs_for(args, Experiment.CauchyLaw, build), args.workers)


def cmd_tightness(args) -> int:
    def build():
        if not args.kernel:
            raise ConfigurationError("give --kernel or --config")
        ns = [int(x) for x in args.schedule_n.split(",")]
        sched = tuple((n, float(n) ** args.exponent) for n in ns)
        return ExperimentConfig("tightness", Experiment.Tightness, _spec(args), args.theta, None, None,
                                sched, args.n_reps, 12345 if args.seed is None else args.seed, _out(args))
    return _run(_configs_for(args, Experiment.Tightness, build), args.workers)


def cmd_limits(args) -> int:
    from .asymptotics import asymptotic_constants, limit_variance_numeric

    spec = _spec(args)
    const = asymptotic_constants(spec, args.theta)
    Ts = [float(x) for x in args.T_values.split(",")]
    vals = [limit_variance_numeric(spec, args.theta, T) for T in Ts]
    out = _out(args)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "limits.csv", ["T", "limit_variance", "abs_error_estimate", "sigma_G_sq"],
              [(T, v.value, v.abs_error_estimate, const.sigma_G**2) for T, v in zip(Ts, vals)])
    write_csv(out / "limits-plot.csv", ["x", "y"], [(T, v.value) for T, v in zip(Ts, vals)])
    _emit(["key", "value"], [("sigma_G", const.sigma_G), ("E_Zinf_sq", const.E_Zinf_sq),
                             ("cauchy_scale", const.cauchy_scale), ("truncation_T", const.truncation_T),
                             ("quadrature_error", const.quadrature_error)])
    return 0


def cmd_lemmas(args) -> int:
    def build():
        return ExperimentConfig("lemmas", Experiment.LemmaSuite, None,
                                base_seed=12345 if args.seed is None else args.seed, output_dir=_out(args))
    return _run(_configs_for(args, Experiment.LemmaSuite, build), args.workers)


def cmd_reproduce_all(args) -> int:
    return reproduce_all(_out(args), args.seed, force=args.force)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ougauss", description="Drift estimation for explosive Gaussian OU models")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="sample one OU path and write it as CSV")
    _common(s)
    _kernel_args(s, required=True)
    s.add_argument("--theta", type=float, default=1.0)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--rule", choices=("left", "midpoint"), default="left")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("estimate", help="estimate theta from a path CSV with t and X columns")
    _common(s)
    s.add_argument("path", type=Path)
    s.add_argument("--rule", choices=("trapezoid", "exponential"), default="trapezoid")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("check-hypothesis", help="certify kernels against the covariance hypothesis")
    _common(s)
    _kernel_args(s)
    s.add_argument("--T", type=float, default=10.0)
    s.add_argument("--grid-n", type=int, default=64)
    s.add_argument("--verbose", action="store_true")
    s.set_defaults(func=cmd_check_hypothesis)

    s = sub.add_parser("cauchy-test", help="KS test of the normalized continuous-estimator error")
    _common(s)
    _kernel_args(s)
    s.add_argument("--theta", type=float, default=1.0)
    s.add_argument("--T", type=float, default=10.0)
    s.add_argument("--delta", type=float, default=0.01)
    s.add_argument("--n-reps", type=int, default=1000)
    s.set_defaults(func=cmd_cauchy)

    s = sub.add_parser("tightness", help="quantiles of discrete-estimator errors along a schedule")
    _common(s)
    _kernel_args(s)
    s.add_argument("--theta", type=float, default=0.5)
    s.add_argument("--schedule-n", default="1000,2000,4000")
    s.add_argument("--exponent", type=float, default=-0.6, help="delta = n ** exponent")
    s.add_argument("--n-reps", type=int, default=500)
    s.set_defaults(func=cmd_tightness)

    s = sub.add_parser("limits", help="limit constants and the limit-variance convergence table")
    _common(s)
    _kernel_args(s, required=True)
    s.add_argument("--theta", type=float, default=1.0)
    s.add_argument("--T-values", default="5,10,20")
    s.set_defaults(func=cmd_limits)

    s = sub.add_parser("lemmas", help="numerical checks of the increment, limit and inequality lemmas")
    _common(s)
    s.set_defaults(func=cmd_lemmas)

    s = sub.add_parser("reproduce-all", help="run the acceptance suite and write manifest.csv")
    _common(s)
    s.add_argument("--force", action="store_true", help="recompute finished criteria")
    s.set_defaults(func=cmd_reproduce_all)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigurationError, ParameterDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OUGaussError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
