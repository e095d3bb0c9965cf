"""Limit constants of the explosive OU model and Monte Carlo checks of the limit laws.

Under the covariance hypothesis

* ``e^{-theta T} int_0^T e^{theta s} dG_s`` has limiting variance
  ``sigma_G^2 = c h Gamma(2h) theta^(-2h)``, with ``c`` the kernel's fBm
  scale and ``h`` its effective exponent;
* ``e^{theta T}(theta_tilde_T - theta)`` converges in law to
  ``(2 sigma_G / sqrt(E Z_inf^2))`` times a standard Cauchy variable, where
  ``Z_inf = int_0^inf e^{-theta s} G_s ds``;
* ``sqrt(T_n)(theta_hat_n - theta)`` and ``sqrt(T_n)(theta_check_n - theta)``
  are tight when ``n delta^3 -> 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import gamma

from . import _quadrature as quad
from .errors import ConfigurationError, DataQualityError, IntegrationError, ParameterDomainError
from .estimators import batch_continuous_lse, batch_discrete_lse_check, batch_discrete_lse_hat
from .hilbert import BilinearResult, _density_density, exp_weight, indicator, inner_h, zeta_increment_variance
from .kernels import KernelSpec, eval_kernel
from .simulate import TimeGrid, ou_from_noise, sample_gaussian_paths

__all__ = [
    "sigma_G",
    "limit_variance_numeric",
    "cross_covariance",
    "E_Zinf_sq",
    "AsymptoticConstants",
    "asymptotic_constants",
    "DistributionTestResult",
    "ks_cauchy",
    "sign_test",
    "cauchy_limit_test",
    "finite_horizon_median",
    "simulate_estimates",
    "power_schedule",
    "TightnessRow",
    "TightnessReport",
    "tightness_probe",
    "check_schedule",
    "IndependenceReport",
    "asymptotic_independence_probe",
    "increment_ratio_max",
    "zeta_increment_ratios",
]

MAX_DEGENERATE_FRACTION = 0.01


def _check_exponent(h: float) -> None:
    if not 0.0 < h < 1.0 or h == 0.5:
        raise ParameterDomainError(f"effective exponent must lie in (0, 1) without 1/2, got {h}")


def sigma_G(theta: float, effective_H: float, scale: float = 1.0) -> float:
    """``sqrt(scale * H Gamma(2H) / theta^(2H))``."""
    if not theta > 0:
        raise ParameterDomainError("theta must be positive")
    _check_exponent(effective_H)
    if not scale > 0:
        raise ParameterDomainError("scale must be positive")
    H = effective_H
    return math.sqrt(scale * H * gamma(2 * H) / theta ** (2 * H))


def limit_variance_numeric(spec: KernelSpec, theta: float, T: float) -> BilinearResult:
    """``E[(e^{-theta T} int_0^T e^{theta s} dG_s)^2]`` as ``<f, f>`` with ``f = e^{-theta(T - .)}``."""
    if not theta > 0 or not T > 0:
        raise ParameterDomainError("theta and T must be positive")
    f = exp_weight(theta, 0.0, T, anchor=T)
    return inner_h(f, f, spec)


def cross_covariance(spec: KernelSpec, theta: float, s: float, T: float) -> BilinearResult:
    """``E[G_s e^{-theta T} int_0^T e^{theta r} dG_r]`` for ``0 <= s < T``."""
    if not 0.0 <= s < T:
        raise ParameterDomainError("need 0 <= s < T")
    if s == 0.0:
        return BilinearResult(0.0, 0.0, ("G_0 = 0",))
    f = exp_weight(theta, 0.0, T, anchor=T)
    return inner_h(f, indicator(0.0, s, T), spec)


def _z_moment(spec: KernelSpec, theta: float, L: float, order: int) -> float:
    seg = (0.0, L, lambda t: np.exp(-theta * t), 2.0 / theta)
    return _density_density(lambda s, t: eval_kernel(spec, s, t), seg, seg, order)


def E_Zinf_sq(spec: KernelSpec, theta: float, truncation_T: float | None = None,
              tolerance: float = 1e-9, max_doublings: int = 8) -> BilinearResult:
    """``E Z_inf^2 = int int e^{-theta(s+t)} R(s, t) ds dt`` over the quadrant.

    The quadrant is truncated to ``[0, L]^2`` and ``L`` doubled until the
    relative change drops below ``tolerance``.  The error estimate adds the
    last change to the order-12 versus order-7 quadrature difference.
    """
    if not theta > 0:
        raise ParameterDomainError("theta must be positive")
    L = truncation_T if truncation_T is not None else 20.0 / theta
    prev = _z_moment(spec, theta, L, quad.HIGH_ORDER)
    for k in range(max_doublings):
        L *= 2.0
        cur = _z_moment(spec, theta, L, quad.HIGH_ORDER)
        change = abs(cur - prev)
        if change <= tolerance * abs(cur):
            low = _z_moment(spec, theta, L, quad.LOW_ORDER)
            return BilinearResult(cur, change + abs(cur - low), (f"truncation_T={L:g}",))
        prev = cur
    raise IntegrationError(f"E Z_inf^2 did not settle within {max_doublings} doublings (L={L:g})")


@dataclass(frozen=True)
class AsymptoticConstants:
    sigma_G: float
    E_Zinf_sq: float
    cauchy_scale: float
    truncation_T: float
    quadrature_error: float


def asymptotic_constants(spec: KernelSpec, theta: float) -> AsymptoticConstants:
    sg = sigma_G(theta, spec.effective_H, spec.fbm_scale)
    ez = E_Zinf_sq(spec, theta)
    L = float(ez.diagnostics[0].split("=")[1])
    return AsymptoticConstants(sg, ez.value, 2.0 * sg / math.sqrt(ez.value), L, ez.abs_error_estimate)


def finite_horizon_median(spec: KernelSpec, theta: float, T: float) -> float:
    """Median of the leading term of ``e^{theta T}(theta_tilde_T - theta)`` at horizon ``T``.

    The normalized error is close to ``2 theta N / zeta_T`` with
    ``N = e^{-theta T} int_0^T e^{theta s} dG_s`` and ``zeta_T = int_0^T e^{-theta s} dG_s``.
    For a jointly Gaussian pair the ratio has median
    ``Cov(N, zeta_T) / Var(zeta_T)``; the covariance vanishes only as
    ``T -> inf``, so this is the finite-horizon shift of the Cauchy limit.
    """
    n = exp_weight(theta, 0.0, T, anchor=T)
    z = exp_weight(-theta, 0.0, T)
    return 2.0 * theta * inner_h(n, z, spec).value / inner_h(z, z, spec).value


@dataclass(frozen=True)
class DistributionTestResult:
    statistic: float
    p_value: float
    sample_size: int
    null_description: str
    sample: np.ndarray | None = field(default=None, repr=False, compare=False)
    degenerate: int = 0


def ks_cauchy(sample: np.ndarray, scale: float) -> DistributionTestResult:
    res = stats.kstest(sample, stats.cauchy(scale=scale).cdf)
    return DistributionTestResult(float(res.statistic), float(res.pvalue), len(sample),
                                  f"Cauchy(0, {scale:.6g})", sample)


def sign_test(sample: np.ndarray) -> DistributionTestResult:
    """Two-sided binomial test that the median is zero."""
    pos = int(np.sum(sample > 0))
    n = int(np.sum(sample != 0))
    res = stats.binomtest(pos, n, 0.5)
    return DistributionTestResult(pos / n, float(res.pvalue), n, "median 0 (sign test)", sample)


def simulate_estimates(spec: KernelSpec, theta: float, grid: TimeGrid, n_reps: int, base_seed: int,
                       workers: int = 1, batch: int = 250, rule: str = "trapezoid") -> dict[str, np.ndarray]:
    """All three estimators for replications ``0 .. n_reps - 1``; NaN marks degenerate paths."""
    out = {k: np.empty(n_reps) for k in ("theta_tilde", "theta_hat", "theta_check")}
    for start in range(0, n_reps, batch):
        m = min(batch, n_reps - start)
        G = sample_gaussian_paths(spec, grid, base_seed, m, start=start, workers=workers)
        X, _, _ = ou_from_noise(G, grid, theta)
        sl = slice(start, start + m)
        out["theta_tilde"][sl] = batch_continuous_lse(X, grid.delta, rule)
        out["theta_hat"][sl] = batch_discrete_lse_hat(X, grid.delta)
        out["theta_check"][sl] = batch_discrete_lse_check(X, grid.delta)
    return out


def _drop_degenerate(v: np.ndarray) -> tuple[np.ndarray, int]:
    bad = ~np.isfinite(v)
    if bad.mean() > MAX_DEGENERATE_FRACTION:
        raise DataQualityError(f"{bad.sum()} of {len(v)} replications were degenerate")
    return v[~bad], int(bad.sum())


def cauchy_limit_test(spec: KernelSpec, theta: float, T: float, delta: float, n_reps: int,
                      base_seed: int, workers: int = 1, scale_factor: float = 1.0,
                      rule: str = "trapezoid", constants: AsymptoticConstants | None = None
                      ) -> DistributionTestResult:
    """KS test of ``e^{theta T}(theta_tilde_T - theta)`` against the Cauchy limit.

    The null scale is ``scale_factor * 2 sigma_G / sqrt(E Z_inf^2)``; it is
    computed from the limit constants, never fitted to the sample.  The
    normalized errors are returned in ``sample`` for further tests.
    """
    if n_reps < 500:
        raise ParameterDomainError("the Cauchy test needs at least 500 replications")
    n = int(round(T / delta))
    if not math.isclose(n * delta, T, rel_tol=1e-9):
        raise ParameterDomainError("T must be a multiple of delta")
    const = constants or asymptotic_constants(spec, theta)
    est = simulate_estimates(spec, theta, TimeGrid(n, delta), n_reps, base_seed, workers, rule=rule)
    tilde, bad = _drop_degenerate(est["theta_tilde"])
    # e^{theta T} (theta_tilde - theta) in log space
    d = tilde - theta
    with np.errstate(divide="ignore"):
        err = np.sign(d) * np.exp(theta * T + np.log(np.abs(d)))
    res = ks_cauchy(err, scale_factor * const.cauchy_scale)
    return DistributionTestResult(res.statistic, res.p_value, res.sample_size, res.null_description,
                                  err, bad)


def check_schedule(schedule) -> list[tuple[int, float]]:
    """Validate that ``delta`` falls, ``n delta`` grows and ``n delta^3`` falls along the rows."""
    rows = [(int(n), float(d)) for n, d in schedule]
    if len(rows) < 2:
        raise ConfigurationError("a schedule needs at least two rows")
    for (n0, d0), (n1, d1) in zip(rows[:-1], rows[1:]):
        if not d1 < d0:
            raise ConfigurationError("delta must decrease along the schedule")
        if not n1 * d1 > n0 * d0:
            raise ConfigurationError("n * delta must increase along the schedule")
        if not n1 * d1**3 < n0 * d0**3:
            raise ConfigurationError("n * delta^3 must decrease along the schedule")
    return rows


def power_schedule(ns, exponent: float = -0.6) -> list[tuple[int, float]]:
    return [(int(n), float(n) ** exponent) for n in ns]


QUANTILES = (1.0, 50.0, 99.0)


@dataclass(frozen=True)
class TightnessRow:
    n: int
    delta: float
    T: float
    hat_sqrtT: tuple[float, float, float]
    check_sqrtT: tuple[float, float, float]
    hat_exp: tuple[float, float, float]
    ks_hat_vs_check: float
    degenerate: int

    @property
    def range_hat(self) -> float:
        return self.hat_sqrtT[2] - self.hat_sqrtT[0]

    @property
    def range_check(self) -> float:
        return self.check_sqrtT[2] - self.check_sqrtT[0]

    @property
    def range_exp(self) -> float:
        return self.hat_exp[2] - self.hat_exp[0]


@dataclass(frozen=True)
class TightnessReport:
    rows: tuple[TightnessRow, ...]
    tight_ratio: float
    exp_ratio: float
    threshold: float = 1.5

    @property
    def tight(self) -> bool:
        return self.tight_ratio <= self.threshold


def _exp_scaled(theta: float, T: float, d: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.sign(d) * np.exp(theta * T + np.log(np.abs(d)))


def tightness_probe(spec: KernelSpec, theta: float, schedule, n_reps: int, base_seed: int,
                    workers: int = 1) -> TightnessReport:
    """Quantiles of the normalized discrete-estimator errors along a schedule.

    ``tight_ratio`` is the 1%-99% range of ``sqrt(T)(theta_hat - theta)`` at
    the last row over that at the first; ``exp_ratio`` is the same for
    ``e^{theta T}(theta_hat - theta)``.
    """
    rows = []
    for n, d in check_schedule(schedule):
        grid = TimeGrid(n, d)
        est = simulate_estimates(spec, theta, grid, n_reps, base_seed, workers)
        ok = np.isfinite(est["theta_hat"]) & np.isfinite(est["theta_check"])
        bad = int((~ok).sum())
        if bad > MAX_DEGENERATE_FRACTION * n_reps:
            raise DataQualityError(f"{bad} of {n_reps} replications were degenerate at n={n}")
        hat, chk = est["theta_hat"][ok] - theta, est["theta_check"][ok] - theta
        sq = math.sqrt(grid.T)
        rows.append(TightnessRow(
            n, d, grid.T,
            tuple(np.percentile(sq * hat, QUANTILES)),
            tuple(np.percentile(sq * chk, QUANTILES)),
            tuple(np.percentile(_exp_scaled(theta, grid.T, hat), QUANTILES)),
            float(stats.ks_2samp(sq * hat, sq * chk).pvalue),
            bad,
        ))
    return TightnessReport(tuple(rows), rows[-1].range_hat / rows[0].range_hat,
                           rows[-1].range_exp / rows[0].range_exp)


@dataclass(frozen=True)
class IndependenceReport:
    T: tuple[float, ...]
    values: tuple[float, ...]
    errors: tuple[float, ...]

    @property
    def decreasing(self) -> bool:
        a = np.abs(self.values)
        return bool(np.all(np.diff(a) <= np.asarray(self.errors[1:]) + np.asarray(self.errors[:-1])))


def asymptotic_independence_probe(spec: KernelSpec, theta: float, s_fixed: float,
                                  T_schedule) -> IndependenceReport:
    Ts = tuple(float(T) for T in T_schedule)
    if s_fixed >= min(Ts):
        raise ParameterDomainError("s_fixed must be below every T in the schedule")
    res = [cross_covariance(spec, theta, s_fixed, T) for T in Ts]
    return IndependenceReport(Ts, tuple(r.value for r in res), tuple(r.abs_error_estimate for r in res))


def increment_ratio_max(spec: KernelSpec, T: float = 10.0, m: int = 50) -> tuple[float, tuple[float, float]]:
    """Max of ``E|G_t - G_s|^2 / |t - s|^(2h)`` over an ``m x m`` grid on ``(0, T]^2``.

    Returns the maximum and the ``(s, t)`` where it occurs.
    """
    x = T * np.arange(1, m + 1) / m
    S, U = np.meshgrid(x, x, indexing="ij")
    off = S < U
    s, t = S[off], U[off]
    inc = eval_kernel(spec, s, s) + eval_kernel(spec, t, t) - 2.0 * eval_kernel(spec, s, t)
    r = inc / (t - s) ** (2.0 * spec.effective_H)
    k = int(np.argmax(r))
    return float(r[k]), (float(s[k]), float(t[k]))


def zeta_increment_ratios(spec: KernelSpec, theta: float, delta: float, count: int = 50) -> np.ndarray:
    """``E[(zeta_{t_i} - zeta_{t_{i-1}})^2] / (delta^(2h) e^{-2 theta t_i})`` for ``i = 1..count``."""
    h = spec.effective_H
    i = np.arange(1, count + 1)
    v = np.array([zeta_increment_variance(spec, theta, int(k), delta) for k in i])
    return v / (delta ** (2 * h) * np.exp(-2.0 * theta * i * delta))
