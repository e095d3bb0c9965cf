import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ougauss.errors import DegeneratePathError, ParameterDomainError
from ougauss.estimators import (
    batch_continuous_lse,
    batch_discrete_lse_check,
    batch_discrete_lse_hat,
    continuous_lse,
    discrete_lse_check,
    discrete_lse_hat,
    integral_of_square,
)
from ougauss.asymptotics import simulate_estimates
from ougauss.kernels import kernel
from ougauss.simulate import OUPath, TimeGrid, build_ou_path, refine_path, sample_gaussian_path


def path_of(x, delta):
    x = np.asarray(x, dtype=float)
    return OUPath(TimeGrid(len(x) - 1, delta), x, None)


def test_continuous_on_linear_path():
    n = 2000
    p = path_of(np.linspace(0, 1, n + 1), 1 / n)
    assert continuous_lse(p).theta == pytest.approx(1.5, abs=1e-3)


def test_discrete_arithmetic():
    p = path_of([0.0, 1.0, 2.0], 1.0)
    assert discrete_lse_hat(p).theta == 1.0
    assert discrete_lse_check(p).theta == 2.0
    assert discrete_lse_hat(p).denominator == 1.0


@pytest.mark.parametrize("fn", [continuous_lse, discrete_lse_hat, discrete_lse_check])
def test_zero_path_is_degenerate(fn):
    with pytest.raises(DegeneratePathError):
        fn(path_of(np.zeros(10), 0.1))


def test_too_short_path():
    with pytest.raises(ParameterDomainError):
        discrete_lse_hat(path_of([0.0, 1.0], 1.0))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), c=st.floats(1e-3, 1e3) | st.floats(-1e3, -1e-3))
def test_scale_invariance(seed, c):
    x = np.cumsum(np.random.default_rng(seed).normal(size=30))
    x[0] = 0.0
    for fn in (continuous_lse, discrete_lse_hat, discrete_lse_check):
        a, b = fn(path_of(x, 0.1)).theta, fn(path_of(c * x, 0.1)).theta
        assert b == pytest.approx(a, rel=1e-12, abs=1e-12)


def test_order_matters_for_hat():
    x = np.array([0.0, 1.0, 3.0, 2.0, 5.0, 4.0])
    y = x.copy()
    y[[2, 3]] = y[[3, 2]]
    assert discrete_lse_hat(path_of(x, 0.1)).theta != discrete_lse_hat(path_of(y, 0.1)).theta


def test_exponential_rule_is_exact_on_exponential():
    t = np.linspace(0, 3, 31)
    x = np.exp(1.7 * t)
    exact = np.expm1(2 * 1.7 * 3) / (2 * 1.7)
    assert integral_of_square(x, 0.1, "exponential") == pytest.approx(exact, rel=1e-12)
    assert continuous_lse(path_of(x, 0.1), "exponential").theta == pytest.approx(1.7 / (1 - np.exp(-10.2)), rel=1e-12)
    with pytest.raises(ParameterDomainError):
        integral_of_square(x, 0.1, "simpson")


def test_batch_matches_single_and_flags_degenerate():
    rng = np.random.default_rng(0)
    X = np.cumsum(rng.normal(size=(4, 20)), axis=1)
    X[:, 0] = 0.0
    X[2] = 0.0
    bt, bh, bc = (batch_continuous_lse(X, 0.1), batch_discrete_lse_hat(X, 0.1), batch_discrete_lse_check(X, 0.1))
    for i in (0, 1, 3):
        p = path_of(X[i], 0.1)
        assert bt[i] == pytest.approx(continuous_lse(p).theta, rel=1e-13)
        assert bh[i] == pytest.approx(discrete_lse_hat(p).theta, rel=1e-13)
        assert bc[i] == pytest.approx(discrete_lse_check(p).theta, rel=1e-13)
    assert np.isnan(bt[2]) and np.isnan(bh[2]) and np.isnan(bc[2])


def test_hat_and_check_merge_under_refinement():
    g = sample_gaussian_path(kernel("FBm", H=0.7), TimeGrid(100, 0.1), 21)
    gaps = []
    for k in range(3):
        x = build_ou_path(g, 1.0)
        gaps.append(abs(discrete_lse_hat(x).theta - discrete_lse_check(x).theta))
        g = refine_path(g, 2, 50 + k)
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.6 * gaps[1]


def test_continuous_discretization_error_is_second_order():
    # the trapezoid error on a path growing like e^{theta t} is O(delta^2):
    # successive refinements shrink the change by about 4
    spec, ratios = kernel("FBm", H=0.7), []
    for seed in range(50):
        g = sample_gaussian_path(spec, TimeGrid(100, 0.05), seed)
        v = []
        for k in range(3):
            v.append(continuous_lse(build_ou_path(g, 1.0)).theta)
            g = refine_path(g, 2, 1000 + 10 * seed + k)
        ratios.append(abs(v[2] - v[1]) / abs(v[1] - v[0]))
    assert 0.15 <= np.median(ratios) <= 0.4


def test_subfbm_discrete_consistency():
    est = simulate_estimates(kernel("SubFBm", H=0.75), 1.0, TimeGrid(4000, 0.005), 200, 31)
    assert np.mean(np.abs(est["theta_hat"] - 1.0) < 0.1) >= 0.9


def test_fbm_continuous_consistency():
    est = simulate_estimates(kernel("FBm", H=0.7), 1.0, TimeGrid(1500, 0.01), 200, 32)
    assert np.mean(np.abs(est["theta_tilde"] - 1.0) < 0.05) >= 0.95


def test_result_row():
    r = continuous_lse(path_of([0.0, 1.0, 2.0], 0.5))
    assert list(r.as_row()) == ["estimator", "theta", "T", "n", "delta", "denominator"]
    assert r.diagnostics["quadrature"] == "trapezoid"
