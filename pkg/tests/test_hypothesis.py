import numpy as np
import pytest

from ougauss.errors import ParameterDomainError
from ougauss.hypothesis import (
    Overall,
    Verdict,
    canonical_examples,
    check_hypothesis,
    classify_all_examples,
    expected_overall,
)
from ougauss.kernels import CONFORMING_FAMILIES, kernel


@pytest.fixture(scope="module")
def reports():
    return classify_all_examples(T=10.0, grid_n=64)


@pytest.mark.parametrize("H", [0.2, 0.3, 0.75, 0.9])
def test_fbm_conforming_with_zero_constant(H):
    rep = check_hypothesis(kernel("FBm", H=H), 10.0, 64)
    assert rep.overall is Overall.Conforming
    assert rep.estimated_C_prime == 0.0


def test_subfbm_conforming_finite_constant():
    rep = check_hypothesis(kernel("SubFBm", H=0.75), 10.0, 64)
    assert rep.overall is Overall.Conforming
    assert np.isfinite(rep.estimated_C_prime)
    # sup of H(2H-1)(s+t)^{2H-2}(st)^{1-H} is attained on the diagonal: H(2H-1) 2^{2H-2}
    assert rep.estimated_C_prime == pytest.approx(0.375 * 2**-0.5, rel=1e-3)


def test_weighted_fbm_rejected():
    rep = check_hypothesis(kernel("WeightedFBm", a=0.5, b=0.25), 10.0, 64)
    assert rep.overall is Overall.NonConforming
    assert rep.cond3_phi_bound is Verdict.FAIL
    assert rep.diagnostics


def test_bifbm_near_half_conforming():
    assert check_hypothesis(kernel("BiFBm", H=0.6, K=0.9), 10.0, 64).overall is Overall.Conforming


def test_classification_split(reports):
    for rep in reports:
        assert rep.overall is expected_overall(rep.spec), rep.summary()
    conforming = {r.spec.family for r in reports if r.overall is Overall.Conforming}
    assert conforming == set(CONFORMING_FAMILIES)


def test_report_invariant(reports):
    for rep in reports:
        all_pass = all(v is Verdict.PASS for v in
                       (rep.cond1_R_s0_zero, rep.cond2_dR_dt_integrable, rep.cond3_phi_bound))
        assert (rep.overall is Overall.Conforming) == (all_pass and np.isfinite(rep.estimated_C_prime))


def test_row_and_summary(reports):
    row = reports[3].as_row()
    assert list(row) == ["family", "params", "cond1", "cond2", "cond3", "C_prime", "overall"]
    assert row["family"] == "SubFBm" and row["params"] == "H=0.75"
    assert "overall" in reports[3].summary()


@pytest.mark.parametrize("spec", [s for s in canonical_examples() if s.family in CONFORMING_FAMILIES],
                         ids=lambda s: s.label)
def test_constant_does_not_depend_on_horizon(spec):
    a = check_hypothesis(spec, 10.0, 64).estimated_C_prime
    b = check_hypothesis(spec, 20.0, 64).estimated_C_prime
    assert b == pytest.approx(a, rel=0.1, abs=1e-12)


@pytest.mark.parametrize("spec", [kernel("SubFBm", H=0.3), kernel("BiFBm", H=0.6, K=0.5),
                                  kernel("HoudreMixed", H=0.6, K=0.5)], ids=lambda s: s.label)
def test_constant_monotone_in_nested_grid(spec):
    # logspace with 2n-1 points contains the n-point grid
    a = check_hypothesis(spec, 10.0, 64).estimated_C_prime
    b = check_hypothesis(spec, 10.0, 127).estimated_C_prime
    assert b >= a * (1 - 1e-12)


def test_deterministic():
    spec = kernel("GenSubFBm", H=0.5, K=1.5)
    assert check_hypothesis(spec, 10.0, 64) == check_hypothesis(spec, 10.0, 64)


def test_domain_errors():
    with pytest.raises(ParameterDomainError):
        check_hypothesis(kernel("FBm", H=0.5), 10.0, 64)
    with pytest.raises(ValueError):
        check_hypothesis(kernel("FBm", H=0.3), 10.0, 16)
    with pytest.raises(ValueError):
        check_hypothesis(kernel("FBm", H=0.3), -1.0, 64)
