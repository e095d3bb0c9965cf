"""Experiment configuration, dispatch and CSV persistence.

A configuration file holds one experiment per section::

    [cauchy]
    experiment = CauchyLaw
    kernel = FBm
    params = H=0.75
    theta = 1
    n = 1000
    delta = 0.01
    n_reps = 1000
    base_seed = 12345

Outputs of an experiment go to ``<output_dir>/<section>-<hash>/`` where the
hash covers every field that influences the numbers.  An existing directory
with a complete ``summary.csv`` is reused, which makes interrupted runs
resumable without changing their results.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigurationError, OUGaussError
from .kernels import KernelSpec, kernel

__all__ = [
    "Experiment",
    "ExperimentConfig",
    "RunRecord",
    "load_configs",
    "run_experiment",
    "reproduce_all",
    "default_output_dir",
    "write_csv",
    "fmt",
]

OUTPUT_ENV = "OUGAUSS_OUT"


class Experiment(str, Enum):
    Consistency = "Consistency"
    CauchyLaw = "CauchyLaw"
    Tightness = "Tightness"
    HypothesisCheck = "HypothesisCheck"
    LemmaSuite = "LemmaSuite"


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "ougauss-out"))


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def parse_params(text: str) -> dict[str, float]:
    out = {}
    for item in filter(None, (p.strip() for p in text.replace(",", ";").split(";"))):
        if "=" not in item:
            raise ConfigurationError(f"kernel parameter {item!r} is not of the form name=value")
        k, v = item.split("=", 1)
        out[k.strip()] = float(v)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    experiment: Experiment
    kernel: KernelSpec | None
    theta: float = 1.0
    n: int | None = None
    delta: float | None = None
    schedule: tuple[tuple[int, float], ...] = ()
    n_reps: int = 200
    base_seed: int = 12345
    output_dir: Path = field(default_factory=default_output_dir)

    def __post_init__(self):
        if not self.theta > 0:
            raise ConfigurationError("theta must be positive")
        if self.n_reps < 1:
            raise ConfigurationError("n_reps must be at least 1")
        if self.delta is not None and not self.delta > 0:
            raise ConfigurationError("delta must be positive")
        if self.n is not None and self.n < 1:
            raise ConfigurationError("n must be at least 1")
        needs_kernel = self.experiment not in (Experiment.HypothesisCheck, Experiment.LemmaSuite)
        if needs_kernel and self.kernel is None:
            raise ConfigurationError(f"{self.experiment.value} needs a kernel")
        if self.experiment in (Experiment.Consistency, Experiment.CauchyLaw):
            if self.n is None or self.delta is None:
                raise ConfigurationError(f"{self.experiment.value} needs n and delta")
        if self.experiment is Experiment.Tightness:
            from .asymptotics import check_schedule

            try:
                check_schedule(self.schedule)
            except OUGaussError as exc:
                raise ConfigurationError(f"invalid schedule: {exc}") from exc

    def key(self) -> dict:
        return {
            "experiment": self.experiment.value,
            "kernel": None if self.kernel is None else [self.kernel.family.value, list(map(list, self.kernel.params))],
            "theta": self.theta,
            "n": self.n,
            "delta": self.delta,
            "schedule": [list(r) for r in self.schedule],
            "n_reps": self.n_reps,
            "base_seed": self.base_seed,
            "version": __version__,
        }

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.key(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def run_dir(self) -> Path:
        return Path(self.output_dir) / f"{self.name}-{self.config_hash}"


def _parse_schedule(sec) -> tuple[tuple[int, float], ...]:
    if "schedule" in sec:
        rows = []
        for item in filter(None, (p.strip() for p in sec["schedule"].split(","))):
            n, d = item.split(":")
            rows.append((int(n), float(d)))
        return tuple(rows)
    if "schedule_n" in sec:
        e = float(sec.get("schedule_exponent", "-0.6"))
        return tuple((int(n), float(n) ** e) for n in sec["schedule_n"].split(","))
    return ()


def config_from_section(name: str, sec, seed: int | None = None, out: Path | None = None) -> ExperimentConfig:
    try:
        exp = Experiment(sec.get("experiment", "").strip())
    except ValueError:
        raise ConfigurationError(f"[{name}] unknown experiment {sec.get('experiment')!r}; "
                                 f"choose from {[e.value for e in Experiment]}") from None
    try:
        spec = kernel(sec["kernel"], **parse_params(sec.get("params", ""))) if "kernel" in sec else None
        cfg = ExperimentConfig(
            name=name,
            experiment=exp,
            kernel=spec,
            theta=float(sec.get("theta", "1")),
            n=int(sec["n"]) if "n" in sec else None,
            delta=float(sec["delta"]) if "delta" in sec else None,
            schedule=_parse_schedule(sec),
            n_reps=int(sec.get("n_reps", "200")),
            base_seed=int(seed if seed is not None else sec.get("base_seed", "12345")),
            output_dir=Path(out if out is not None else sec.get("output_dir", str(default_output_dir()))),
        )
    except ConfigurationError:
        raise
    except (OUGaussError, ValueError, KeyError) as exc:
        raise ConfigurationError(f"[{name}] {exc}") from exc
    return cfg


def load_configs(path: str | Path, seed: int | None = None, out: Path | None = None) -> list[ExperimentConfig]:
    cp = configparser.ConfigParser(interpolation=None)
    if not cp.read(path):
        raise ConfigurationError(f"cannot read config file {path}")
    return [config_from_section(s, cp[s], seed, out) for s in cp.sections()]


@dataclass
class RunRecord:
    config_hash: str
    version: str
    results: list[dict]
    summary: dict
    wall_clock: float
    verdicts: dict[str, bool]
    run_dir: Path | None = None
    reused: bool = False

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())


def _write_summary(run_dir: Path, summary: dict, verdicts: dict[str, bool]) -> None:
    rows = [(k, v) for k, v in summary.items()] + [(f"verdict:{k}", v) for k, v in verdicts.items()]
    write_csv(run_dir / "summary.csv", ["key", "value"], rows)


def _read_summary(run_dir: Path) -> tuple[dict, dict]:
    summary, verdicts = {}, {}
    with open(run_dir / "summary.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            if row["key"].startswith("verdict:"):
                verdicts[row["key"][8:]] = row["value"] == "true"
            else:
                summary[row["key"]] = row["value"]
    return summary, verdicts


def _read_results(run_dir: Path) -> list[dict]:
    p = run_dir / "results.csv"
    if not p.exists():
        return []
    with open(p, newline="") as fh:
        return list(csv.DictReader(fh))


def _ecdf(sample: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.sort(sample)
    return x, np.arange(1, len(x) + 1) / len(x)


def _run_consistency(cfg: ExperimentConfig, workers: int, run_dir: Path):
    from .asymptotics import simulate_estimates
    from .simulate import TimeGrid

    est = simulate_estimates(cfg.kernel, cfg.theta, TimeGrid(cfg.n, cfg.delta), cfg.n_reps,
                             cfg.base_seed, workers)
    names = ("theta_tilde", "theta_hat", "theta_check")
    rows = [(r, *(est[k][r] for k in names)) for r in range(cfg.n_reps)]
    write_csv(run_dir / "results.csv", ["replication", *names], rows)
    summary = {"degenerate": int(sum(~np.isfinite(est["theta_tilde"])))}
    for k, tol in zip(names, (0.05, 0.1, 0.1)):
        v = est[k][np.isfinite(est[k])]
        summary[f"mean_abs_error_{k}"] = float(np.mean(np.abs(v - cfg.theta)))
        summary[f"fraction_within_{tol:g}_{k}"] = float(np.mean(np.abs(v - cfg.theta) < tol))
    x, y = _ecdf(est["theta_tilde"][np.isfinite(est["theta_tilde"])])
    write_csv(run_dir / "plot.csv", ["x", "y"], zip(x, y))
    verdicts = {"theta_tilde_95pct_within_0.05": summary["fraction_within_0.05_theta_tilde"] >= 0.95}
    return summary, verdicts


def _run_cauchy(cfg: ExperimentConfig, workers: int, run_dir: Path):
    from .asymptotics import (asymptotic_constants, cauchy_limit_test, finite_horizon_median, ks_cauchy,
                              sign_test)

    const = asymptotic_constants(cfg.kernel, cfg.theta)
    res = cauchy_limit_test(cfg.kernel, cfg.theta, cfg.n * cfg.delta, cfg.delta, cfg.n_reps,
                            cfg.base_seed, workers, constants=const)
    power = ks_cauchy(res.sample, 3.0 * const.cauchy_scale)
    sgn = sign_test(res.sample)
    write_csv(run_dir / "results.csv", ["index", "normalized_error"], enumerate(res.sample))
    x, y = _ecdf(res.sample)
    write_csv(run_dir / "plot.csv", ["x", "y"], zip(x, y))
    summary = {
        "sigma_G": const.sigma_G, "E_Zinf_sq": const.E_Zinf_sq, "cauchy_scale": const.cauchy_scale,
        "ks_statistic": res.statistic, "ks_p_value": res.p_value,
        "ks_p_value_3x_scale": power.p_value, "median": float(np.median(res.sample)),
        "sign_test_p_value": sgn.p_value,
        "predicted_finite_T_median": finite_horizon_median(cfg.kernel, cfg.theta, cfg.n * cfg.delta),
        "degenerate": res.degenerate, "sample_size": res.sample_size,
    }
    verdicts = {"ks_p_above_0.01": res.p_value > 0.01, "power_p_below_0.01": power.p_value < 0.01}
    return summary, verdicts


def _run_tightness(cfg: ExperimentConfig, workers: int, run_dir: Path):
    from .asymptotics import tightness_probe

    rep = tightness_probe(cfg.kernel, cfg.theta, cfg.schedule, cfg.n_reps, cfg.base_seed, workers)
    header = ["n", "delta", "T", "hat_q01", "hat_q50", "hat_q99", "check_q01", "check_q50", "check_q99",
              "exp_q01", "exp_q50", "exp_q99", "ks_hat_vs_check", "degenerate"]
    write_csv(run_dir / "results.csv", header,
              [(r.n, r.delta, r.T, *r.hat_sqrtT, *r.check_sqrtT, *r.hat_exp, r.ks_hat_vs_check, r.degenerate)
               for r in rep.rows])
    write_csv(run_dir / "plot.csv", ["x", "y"], [(r.n, r.range_hat) for r in rep.rows])
    summary = {"sqrtT_range_ratio": rep.tight_ratio, "exp_range_ratio": rep.exp_ratio}
    verdicts = {"tight": rep.tight, "exp_range_grows_10x": rep.exp_ratio >= 10.0}
    return summary, verdicts


def _run_hypothesis(cfg: ExperimentConfig, workers: int, run_dir: Path):
    from .hypothesis import canonical_examples, check_hypothesis, expected_overall

    specs = [cfg.kernel] if cfg.kernel is not None else canonical_examples()
    T = cfg.n * cfg.delta if cfg.n and cfg.delta else 10.0
    reports = [check_hypothesis(s, T, 64) for s in specs]
    header = ["family", "params", "cond1", "cond2", "cond3", "C_prime", "overall"]
    write_csv(run_dir / "results.csv", header, [[r.as_row()[h] for h in header] for r in reports])
    matches = [r.overall is expected_overall(r.spec) for r in reports]
    summary = {"kernels": len(reports), "matching_expected": int(sum(matches))}
    return summary, {"classification_matches": all(matches)}


def _run_lemmas(cfg: ExperimentConfig, workers: int, run_dir: Path):
    from .acceptance import run_criterion

    results = [run_criterion(k, cfg.base_seed) for k in (2, 3, 4, 5, 6)]
    write_csv(run_dir / "results.csv", ["criterion", "name", "passed", "detail"],
              [(r.number, r.name, r.passed, r.detail) for r in results])
    return ({f"criterion_{r.number}": r.passed for r in results},
            {f"criterion_{r.number}": r.passed for r in results})


_DISPATCH = {
    Experiment.Consistency: _run_consistency,
    Experiment.CauchyLaw: _run_cauchy,
    Experiment.Tightness: _run_tightness,
    Experiment.HypothesisCheck: _run_hypothesis,
    Experiment.LemmaSuite: _run_lemmas,
}


def run_experiment(cfg: ExperimentConfig, workers: int = 1, force: bool = False) -> RunRecord:
    """Run one experiment, or reuse a finished run with the same hash."""
    run_dir = cfg.run_dir
    if not force and (run_dir / "summary.csv").exists():
        summary, verdicts = _read_summary(run_dir)
        return RunRecord(cfg.config_hash, __version__, _read_results(run_dir), summary, 0.0, verdicts,
                         run_dir, reused=True)
    run_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    summary, verdicts = _DISPATCH[cfg.experiment](cfg, workers, run_dir)
    summary = {"config_hash": cfg.config_hash, "version": __version__, **summary}
    write_csv(run_dir / "config.csv", ["key", "value"],
              [(k, json.dumps(v)) for k, v in sorted(cfg.key().items())])
    # summary.csv is written last; its presence marks the run complete
    _write_summary(run_dir, summary, verdicts)
    return RunRecord(cfg.config_hash, __version__, _read_results(run_dir), summary,
                     time.perf_counter() - t0, verdicts, run_dir)


def reproduce_all(output_dir: str | Path | None = None, seed: int | None = None,
                  criteria=None, force: bool = False, echo=print) -> int:
    """Run the acceptance suite, writing one CSV per criterion and ``manifest.csv``.

    Finished criteria are kept across interrupted runs; their files are keyed
    by a hash of the criterion number, seed and package version.
    """
    from .acceptance import ACCEPTANCE_SEED, CRITERIA, run_criterion

    out = Path(output_dir) if output_dir is not None else default_output_dir()
    seed = ACCEPTANCE_SEED if seed is None else seed
    acc = out / "acceptance"
    acc.mkdir(parents=True, exist_ok=True)
    rows = []
    for k in criteria or CRITERIA:
        h = hashlib.sha256(json.dumps([k, seed, __version__]).encode()).hexdigest()[:16]
        path = acc / f"criterion-{k:02d}-{h}.csv"
        if force or not path.exists():
            r = run_criterion(k, seed)
            tmp = path.with_suffix(".tmp")
            write_csv(tmp, ["criterion", "name", "verdict", "detail"],
                      [(r.number, r.name, "PASS" if r.passed else "FAIL", r.detail)])
            tmp.replace(path)
        with open(path, newline="") as fh:
            row = next(csv.DictReader(fh))
        rows.append((row["criterion"], row["name"], row["verdict"], row["detail"]))
        if echo:
            echo(f"{row['verdict']} [{row['criterion']}] {row['name']}: {row['detail']}")
    write_csv(out / "manifest.csv", ["criterion", "name", "verdict", "detail"], rows)
    return 0 if all(r[2] == "PASS" for r in rows) else 1
