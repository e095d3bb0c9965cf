import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ougauss.errors import ParameterDomainError
from ougauss.hilbert import (
    SmoothFactor,
    Piece,
    StepFunction,
    disjoint_support_bound,
    exp_weight,
    indicator,
    inner_h,
    inner_h1,
    inner_h2,
    random_step_function,
    verify_key_inequality,
    zeta_increment_variance,
)
from ougauss.hypothesis import check_hypothesis
from ougauss.kernels import eval_kernel, kernel
from ougauss.simulate import TimeGrid, sample_gaussian_paths

seeds = st.integers(0, 2**32 - 1)


def test_step_function_evaluation():
    f = indicator(0.0, 1.0, 5.0, 2.0) + exp_weight(-1.0, 2.0, 3.0, anchor=2.0, T=5.0)
    np.testing.assert_allclose(f(np.array([0.5, 1.5, 2.0, 2.5, 3.0])), [2.0, 0.0, 1.0, math.exp(-0.5), 0.0])
    g = 3.0 * f - f
    assert g(0.2) == pytest.approx(4.0)


def test_step_function_rejects_bad_interval():
    with pytest.raises((ParameterDomainError, ValueError)):
        StepFunction((Piece(2.0, 1.0, 1.0),), 3.0)


@pytest.mark.parametrize("H", [0.3, 0.75])
@pytest.mark.parametrize("a,b", [(0.4, 1.9), (2.0, 5.5)])
def test_h1_indicator_is_increment_variance(H, a, b):
    f = indicator(a, b, 6.0)
    assert inner_h1(f, f, H).value == pytest.approx((b - a) ** (2 * H), rel=1e-9)


def test_h1_unit_indicator():
    f = indicator(0.0, 1.0)
    assert inner_h1(f, f, 0.7).value == pytest.approx(1.0, rel=1e-10)


def test_h1_disjoint_closed_form():
    f, g = indicator(0.0, 1.0, 3.0), indicator(2.0, 3.0, 3.0)
    exact = 0.5 * (3**1.5 - 2 * 2**1.5 + 1)
    assert inner_h1(f, g, 0.75).value == pytest.approx(exact, rel=1e-10)
    assert exact == pytest.approx(0.269, abs=1e-3)


def test_h2_closed_form_and_zero_constant():
    f = indicator(0.0, 1.0)
    assert inner_h2(f, f, 0.75, 1.0).value == pytest.approx(1 / 0.75**2, rel=1e-10)
    g = exp_weight(0.3, 0.2, 0.9)
    assert inner_h2(f, g, 0.4, 0.0).value == 0.0


def test_h2_decays_for_exponential_weight():
    vals = []
    for T in (5.0, 10.0, 20.0):
        f = exp_weight(1.0, 0.0, T, anchor=T)
        vals.append(inner_h2(f, f, 0.75, 1.0).value)
    assert vals[0] > vals[1] > vals[2] > 0
    # O(T^{2H-2}) with the limit of int_0^T e^{-(T-t)} t^{H-1} dt ~ T^{H-1}
    assert vals[2] * 20**0.5 == pytest.approx(1.0, rel=0.15)


@pytest.mark.parametrize("spec", [kernel("SubFBm", H=0.75), kernel("BiFBm", H=0.6, K=0.5),
                                  kernel("TalarczykMax", gamma=0.6), kernel("FBm", H=0.3)],
                         ids=lambda s: s.label)
def test_indicator_isometry(spec):
    for s, t in [(1.0, 1.0), (0.7, 2.4), (3.0, 1.1)]:
        val = inner_h(indicator(0.0, t, 4.0), indicator(0.0, s, 4.0), spec).value
        assert val == pytest.approx(eval_kernel(spec, s, t), rel=1e-6)


def test_subfbm_increment_variance():
    spec = kernel("SubFBm", H=0.75)
    f = indicator(1.0, 2.0)
    R = lambda s, t: eval_kernel(spec, s, t)
    assert inner_h(f, f, spec).value == pytest.approx(R(2, 2) - 2 * R(1, 2) + R(1, 1), rel=1e-8)


@settings(max_examples=8, deadline=None)
@given(seed=seeds, H=st.sampled_from([0.3, 0.75]))
def test_fbm_form_equals_reference_form(seed, H):
    rng = np.random.default_rng(seed)
    f, g = random_step_function(rng, 5.0), random_step_function(rng, 5.0)
    a = inner_h(f, g, kernel("FBm", H=H)).value
    b = inner_h1(f, g, H).value
    assert a == pytest.approx(b, abs=1e-6)


@settings(max_examples=6, deadline=None)
@given(seed=seeds, alpha=st.floats(-3, 3), beta=st.floats(-3, 3))
def test_bilinearity(seed, alpha, beta):
    spec = kernel("SubFBm", H=0.3)
    rng = np.random.default_rng(seed)
    f, f2, g = (random_step_function(rng, 4.0) for _ in range(3))
    lhs = inner_h(alpha * f + beta * f2, g, spec).value
    rhs = alpha * inner_h(f, g, spec).value + beta * inner_h(f2, g, spec).value
    scale = abs(alpha * inner_h(f, g, spec).value) + abs(beta * inner_h(f2, g, spec).value) + 1e-12
    assert abs(lhs - rhs) <= 1e-8 * scale


@settings(max_examples=6, deadline=None)
@given(seed=seeds)
def test_symmetry_and_cauchy_schwarz(seed):
    spec = kernel("BiFBm", H=0.6, K=0.5)
    rng = np.random.default_rng(seed)
    f, g = random_step_function(rng, 6.0), random_step_function(rng, 6.0)
    fg, gf = inner_h(f, g, spec), inner_h(g, f, spec)
    assert fg.value == pytest.approx(gf.value, abs=1e-9 + fg.abs_error_estimate + gf.abs_error_estimate)
    ff, gg = inner_h(f, f, spec).value, inner_h(g, g, spec).value
    assert ff >= 0 and gg >= 0
    assert fg.value**2 <= ff * gg * (1 + 1e-6) + 1e-15


def test_monte_carlo_variance_of_exponential_integral():
    spec, theta, T = kernel("SubFBm", H=0.75), 1.0, 5.0
    grid = TimeGrid(500, 0.01)
    G = sample_gaussian_paths(spec, grid, 99, 10_000)
    mid = grid.points[:-1] + 0.5 * grid.delta
    Y = np.diff(G, axis=1) @ np.exp(-theta * (T - mid))
    f = exp_weight(theta, 0.0, T, anchor=T)
    exact = inner_h(f, f, spec).value
    var = np.mean(Y**2)
    se = exact * math.sqrt(2.0 / len(Y))
    assert abs(var - exact) < 3 * se


def test_key_inequality_fbm_has_zero_left_side():
    rng = np.random.default_rng(5)
    f, g = random_step_function(rng, 4.0), random_step_function(rng, 4.0)
    res = verify_key_inequality(kernel("FBm", H=0.75), f, g, C_prime=0.0)
    assert res.lhs < 1e-9
    assert res.satisfied


@pytest.mark.parametrize("H", [0.75, 0.3])
def test_key_inequality_random_pairs_subfbm(H):
    spec = kernel("SubFBm", H=H)
    C = check_hypothesis(spec, 10.0, 64).estimated_C_prime
    rng = np.random.default_rng(1000 + int(100 * H))
    for _ in range(50):
        f, g = random_step_function(rng, 10.0), random_step_function(rng, 10.0)
        res = verify_key_inequality(spec, f, g, C)
        assert res.satisfied, (res.lhs, res.rhs, res.error)


def test_key_inequality_estimates_constant_when_missing():
    spec = kernel("SubFBm", H=0.75)
    f, g = indicator(0.5, 2.0, 3.0), indicator(1.0, 3.0, 3.0)
    assert verify_key_inequality(spec, f, g).satisfied


def test_zeta_increment_ratio_bounded():
    spec, theta, delta = kernel("SubFBm", H=0.75), 1.0, 0.1
    ratios = [zeta_increment_variance(spec, theta, i, delta) / (delta**1.5 * math.exp(-2 * theta * i * delta))
              for i in range(1, 51)]
    assert np.all(np.isfinite(ratios))
    assert max(ratios) < 2.0


def test_zeta_increment_halving_scales_like_power():
    spec, theta = kernel("FBm", H=0.7), 1.0
    v1 = zeta_increment_variance(spec, theta, 5, 0.02)  # [0.08, 0.10)
    v2 = zeta_increment_variance(spec, theta, 9, 0.01)  # [0.08, 0.09)
    assert v2 / v1 == pytest.approx(2 ** -1.4, rel=0.2)


def test_zeta_increment_small_theta_limit():
    spec = kernel("SubFBm", H=0.3)
    assert zeta_increment_variance(spec, 1e-6, 1, 0.1) == pytest.approx(eval_kernel(spec, 0.1, 0.1), rel=1e-5)


def test_disjoint_support_bound():
    spec = kernel("SubFBm", H=0.75)
    C = check_hypothesis(spec, 5.0, 64).estimated_C_prime
    f, g = indicator(0.2, 1.0, 5.0), exp_weight(-0.5, 2.0, 4.5, T=5.0)
    bound = disjoint_support_bound(f, g, spec, C)
    assert abs(inner_h(f, g, spec).value) <= bound.value + bound.abs_error_estimate
    assert bound.diagnostics == ()
    touching = disjoint_support_bound(indicator(0.0, 1.0, 3.0), indicator(1.0, 2.0, 3.0), spec, C)
    assert touching.diagnostics and "share" in touching.diagnostics[0]
    with pytest.raises(ParameterDomainError):
        disjoint_support_bound(indicator(0.0, 2.0, 3.0), indicator(1.0, 3.0, 3.0), spec, C)


def test_power_factor_piece():
    # f(t) = t on [0, 1): the measure is dt on [0,1) minus an atom at 1
    f = StepFunction((Piece(0.0, 1.0, 1.0, SmoothFactor.powerlaw(1.0)),), 1.0)
    spec = kernel("FBm", H=0.75)
    direct = inner_h(f, f, spec).value
    # integration by parts: int t dG = G_1 - int_0^1 G_t dt
    R = lambda a, b: eval_kernel(spec, a, b)
    n = 400
    u = (np.arange(n) + 0.5) / n
    EGG = np.mean(R(u[:, None], u[None, :]))
    EG1 = np.mean(R(1.0, u))
    expected = R(1.0, 1.0) - 2 * EG1 + EGG
    assert direct == pytest.approx(expected, rel=1e-4)
