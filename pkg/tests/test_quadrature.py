import math

import numpy as np
import pytest

from ougauss import _quadrature as quad


def test_rule_integrates_polynomials():
    x, w = quad.graded_rule()
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.dot(w, x**5) == pytest.approx(1 / 6, abs=1e-14)


@pytest.mark.parametrize("alpha", [0.6, -0.3, 1.4])
def test_endpoint_power_singularity(alpha):
    val = quad.integrate_1d(lambda t: t**alpha, 0.0, 2.0)
    assert val == pytest.approx(2 ** (alpha + 1) / (alpha + 1), rel=1e-9)


def test_interior_kink_with_break():
    val = quad.integrate_1d(lambda t: np.abs(t - 1.3) ** 0.4, 0.0, 3.0, breaks=(1.3,))
    exact = (1.3**1.4 + 1.7**1.4) / 1.4
    assert val == pytest.approx(exact, rel=1e-12)


def test_fast_exponential_uses_mid_panels():
    val = quad.integrate_1d(np.exp, 0.0, 20.0, scale=2.0)
    assert val == pytest.approx(math.expm1(20.0), rel=1e-13)


def test_error_estimate_small_on_smooth_integrand():
    val, err = quad.integrate_1d_with_error(np.cos, 0.0, 3.0)
    assert val == pytest.approx(math.sin(3.0), abs=1e-14)
    assert err < 1e-12


def test_segments_and_panels():
    assert quad.segments(0.0, 3.0, (1.0, 5.0, 2.0, 2.0)) == [(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)]
    assert quad.mid_panels(10.0, 2.0) == 8
    assert quad.mid_panels(1e9, 1e-3) == quad.MAX_MID
